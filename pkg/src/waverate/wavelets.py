"""Compactly supported orthonormal Daubechies wavelets on dyadic grids.

Filters are built by spectral factorization of the Daubechies binomial
polynomial with minimal-phase (extremal-phase) root selection, which
reproduces the classical published coefficient tables.  The scaling
function and mother wavelet are realized as sampled values on a dyadic
grid via the cascade refinement iteration, seeded with the exact values
at the integers so that the iteration reaches the dyadic fixed point in
``resolution`` steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb

import numpy as np

SQRT2 = math.sqrt(2.0)

MAX_VM = 12


class UnsupportedOrderError(ValueError):
    """Requested number of vanishing moments is outside the supported range."""


def _binomial_roots(vm: int) -> np.ndarray:
    """Roots of P(y) = sum_{k<vm} C(vm-1+k, k) y^k, Newton-polished."""
    coeffs = np.array([float(comb(vm - 1 + k, k)) for k in range(vm)])
    roots = np.roots(coeffs[::-1])
    deriv = coeffs[1:] * np.arange(1, vm)
    for _ in range(3):
        p = np.polyval(coeffs[::-1], roots)
        dp = np.polyval(deriv[::-1], roots)
        roots = roots - p / dp
    return roots


def _daubechies_taps(vm: int) -> np.ndarray:
    if vm == 1:
        return np.array([1.0, 1.0]) / SQRT2
    # z-domain roots: each root y of the binomial polynomial yields the
    # quadratic z^2 - (2 - 4y) z + 1; the factor inside the unit disk is kept.
    poly = np.array([1.0 + 0.0j])
    for y in _binomial_roots(vm):
        b = 2.0 - 4.0 * y
        disc = np.sqrt(b * b - 4.0 + 0.0j)
        z = (b - disc) / 2.0
        if abs(z) > 1.0:
            z = (b + disc) / 2.0
        poly = np.convolve(poly, np.array([-z, 1.0]))
    for _ in range(vm):
        poly = np.convolve(poly, np.array([0.5, 0.5]))
    h = np.real(poly)
    h *= SQRT2 / h.sum()
    if abs(h[0]) < abs(h[-1]):
        h = h[::-1]
    return h


@dataclass(frozen=True)
class FilterPair:
    """Orthonormal lowpass/highpass filter taps for ``vm`` vanishing moments.

    ``h`` holds the 2*vm lowpass taps, ``g`` the quadrature-mirror highpass
    taps ``g[k] = (-1)^k h[2*vm - 1 - k]``.
    """

    vm: int
    h: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        self.h.setflags(write=False)
        self.g.setflags(write=False)

    @property
    def length(self) -> int:
        return 2 * self.vm

    def sum_defect(self) -> float:
        """|sum(h) - sqrt(2)|."""
        return abs(math.fsum(self.h) - SQRT2)

    def orthogonality_defect(self) -> float:
        """Worst |<h, h(. - 2m)> - delta_{m0}| over all even shifts."""
        worst = abs(math.fsum(self.h * self.h) - 1.0)
        for m in range(1, self.vm):
            dot = math.fsum(self.h[: -2 * m] * self.h[2 * m :])
            worst = max(worst, abs(dot))
        return worst

    def moment_defect(self, r: int, normalized: bool = True) -> float:
        """|sum_k k^r g_k|, optionally divided by sum_k k^r |g_k|.

        The raw sum cancels catastrophically for large r (terms grow like
        (2*vm-1)^r), so the normalized form is the meaningful one beyond
        vm ~ 6; it lies in [0, 1] and is ~1e-15 for a correct filter.
        """
        k = np.arange(self.length, dtype=float)
        terms = k**r * self.g
        raw = abs(math.fsum(terms))
        if not normalized:
            return raw
        scale = math.fsum(np.abs(terms))
        return raw / scale if scale > 0 else raw


def daubechies_filter(vm: int) -> FilterPair:
    """Minimal-phase Daubechies filter with ``vm`` vanishing moments.

    Raises
    ------
    UnsupportedOrderError
        If ``vm`` is not in 1..12.
    """
    if not isinstance(vm, (int, np.integer)) or not 1 <= vm <= MAX_VM:
        raise UnsupportedOrderError(
            f"vm must be an integer in 1..{MAX_VM}, got {vm!r}"
        )
    h = _daubechies_taps(int(vm))
    g = ((-1.0) ** np.arange(2 * vm)) * h[::-1]
    return FilterPair(vm=int(vm), h=h, g=g)


def _integer_values(h: np.ndarray) -> np.ndarray:
    """Exact scaling-function values at the integers 0..2N-1.

    For N >= 2 these form the eigenvector (eigenvalue 1) of the refinement
    matrix at the interior integers, normalized to sum to one.  The Haar
    case is the right-continuous unit-interval indicator.
    """
    n = len(h)
    if n == 2:
        return np.array([1.0, 0.0])
    interior = n - 2
    a = np.zeros((interior, interior))
    for i in range(1, n - 1):
        for j in range(1, n - 1):
            idx = 2 * i - j
            if 0 <= idx < n:
                a[i - 1, j - 1] = SQRT2 * h[idx]
    eigvals, eigvecs = np.linalg.eig(a)
    pick = int(np.argmin(np.abs(eigvals - 1.0)))
    v = eigvecs[:, pick]
    v = v / v.sum()
    return np.concatenate([[0.0], v.real, [0.0]])


@dataclass(frozen=True)
class DyadicTable:
    """Sampled scaling function and mother wavelet on a dyadic grid.

    The scaling function is supported on [0, 2N-1] and the wavelet on
    [1-N, N], each sampled with step 2**-resolution.  All values are exact
    at dyadic points once the cascade iteration has converged.
    """

    vm: int
    resolution: int
    phi_values: np.ndarray
    psi_values: np.ndarray
    sup_diffs: tuple = field(repr=False, default=())
    converged: bool = True

    def __post_init__(self):
        self.phi_values.setflags(write=False)
        self.psi_values.setflags(write=False)

    @property
    def step(self) -> float:
        return 2.0 ** (-self.resolution)

    @property
    def phi_support(self) -> tuple:
        return (0.0, float(2 * self.vm - 1))

    @property
    def psi_support(self) -> tuple:
        return (float(1 - self.vm), float(self.vm))

    @property
    def smoothness_ok(self) -> bool:
        # Twice continuous differentiability requires at least 8 taps;
        # shorter filters are still built for exact hand-checkable tests.
        return self.vm >= 4

    def _support(self, kind: str) -> tuple:
        if kind == "phi":
            return self.phi_support
        if kind == "psi":
            return self.psi_support
        raise ValueError(f"kind must be 'phi' or 'psi', got {kind!r}")

    def _values(self, kind: str) -> np.ndarray:
        return self.phi_values if kind == "phi" else self.psi_values

    def lookup(self, kind: str, t):
        """Linear interpolation of phi or psi at ``t``; zero off support."""
        lo, hi = self._support(kind)
        values = self._values(kind)
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        out = np.zeros_like(t)
        inside = (t >= lo) & (t <= hi)
        if np.any(inside):
            pos = (t[inside] - lo) * 2.0**self.resolution
            i0 = np.floor(pos).astype(np.int64)
            i0 = np.minimum(i0, len(values) - 2)
            frac = pos - i0
            out[inside] = (1.0 - frac) * values[i0] + frac * values[i0 + 1]
        return float(out[0]) if scalar else out

    def evaluate(self, kind: str, j: int, k: int, x):
        """2^{j/2} * (phi or psi)(2^j x - k) with table lookup."""
        if j < 0:
            raise ValueError("level j must be nonnegative")
        return 2.0 ** (j / 2.0) * self.lookup(kind, np.asarray(x, float) * 2.0**j - k)

    # -- quadrature on the grid ------------------------------------------
    def _grid_quad(self, integrand: np.ndarray) -> float:
        # Left endpoint sum.  Identical to the trapezoid rule whenever the
        # boundary samples vanish (every vm >= 2), and exact for the
        # piecewise-constant Haar functions.
        return self.step * float(np.sum(integrand[:-1]))

    def phi_mass_defect(self) -> float:
        """|integral of phi - 1| on the table."""
        return abs(self._grid_quad(self.phi_values) - 1.0)

    def psi_mass_defect(self) -> float:
        """|integral of psi| on the table."""
        return abs(self._grid_quad(self.psi_values))

    def partition_of_unity_defect(self) -> float:
        """max_x |sum_k phi(x - k) - 1| over one half-open period of the grid."""
        per = 2**self.resolution
        acc = np.zeros(per)
        for m in range(2 * self.vm - 1):
            acc += self.phi_values[m * per : (m + 1) * per]
        return float(np.max(np.abs(acc - 1.0)))

    def orthonormality_defect(self, max_shift: int | None = None) -> float:
        """Worst |<phi, phi(. - k)> - delta_{k0}| by grid quadrature."""
        if max_shift is None:
            max_shift = 2 * self.vm - 2
        per = 2**self.resolution
        worst = abs(self._grid_quad(self.phi_values * self.phi_values) - 1.0)
        for k in range(1, max_shift + 1):
            prod = self.phi_values[k * per :] * self.phi_values[: -k * per]
            worst = max(worst, abs(self.step * float(np.sum(prod[:-1]))))
        return worst


def cascade(filt: FilterPair, resolution: int = 10, iterations: int = 12) -> DyadicTable:
    """Realize the filter's scaling function and wavelet on a dyadic grid.

    Runs the two-scale refinement iteration at grid step 2**-resolution,
    seeded from the exact integer values, and records the sup-norm change
    per sweep.  A final change above 1e-4 marks the table non-converged
    (carried as a flag, not an error).
    """
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    n = filt.length
    per = 2**resolution
    npts = (n - 1) * per + 1

    ints = _integer_values(np.asarray(filt.h))
    grid = np.arange(npts) / per
    phi = np.interp(grid, np.arange(n, dtype=float), ints)

    def refine(values: np.ndarray, taps: np.ndarray) -> np.ndarray:
        out = np.zeros_like(values)
        for k in range(n):
            off = k * per
            i_lo = (off + 1) // 2
            i_hi = min(npts - 1, (npts - 1 + off) // 2)
            if i_lo > i_hi:
                continue
            src = slice(2 * i_lo - off, 2 * i_hi - off + 1, 2)
            out[i_lo : i_hi + 1] += SQRT2 * taps[k] * values[src]
        return out

    sup_diffs = []
    for _ in range(iterations):
        new = refine(phi, np.asarray(filt.h))
        sup_diffs.append(float(np.max(np.abs(new - phi))))
        phi = new

    # psi(x) = sqrt(2) sum_k g_k phi(2x - k + 2N - 2), supported on [1-N, N]
    psi = np.zeros(npts)
    g = np.asarray(filt.g)
    for k in range(n):
        off = k * per
        i_lo = (off + 1) // 2
        i_hi = min(npts - 1, (npts - 1 + off) // 2)
        if i_lo > i_hi:
            continue
        src = slice(2 * i_lo - off, 2 * i_hi - off + 1, 2)
        psi[i_lo : i_hi + 1] += SQRT2 * g[k] * phi[src]

    return DyadicTable(
        vm=filt.vm,
        resolution=resolution,
        phi_values=phi,
        psi_values=psi,
        sup_diffs=tuple(sup_diffs),
        converged=sup_diffs[-1] <= 1e-4,
    )


@dataclass(frozen=True)
class FourierDecayReport:
    """Finite-grid verdict on |ghat(u)| <= c / (1 + u^2)."""

    kind: str
    u_max: float
    grid: int
    constant: float
    growth_ratio: float
    bounded: bool


def _table_fourier(table: DyadicTable, kind: str, us: np.ndarray) -> np.ndarray:
    vals = table._values(kind)[:-1]
    lo, _ = table._support(kind)
    xs = lo + np.arange(len(vals)) * table.step
    out = np.empty(len(us), dtype=complex)
    for i in range(0, len(us), 256):
        blk = us[i : i + 256]
        out[i : i + 256] = np.exp(-1j * np.outer(blk, xs)) @ vals * table.step
    return out


DECAY_GROWTH_LIMIT = 1.10


def fourier_decay_diagnostic(
    table: DyadicTable, kind: str = "phi", u_max: float = 200.0, grid: int = 2001
) -> FourierDecayReport:
    """Empirical constant sup |ghat(u)| (1 + u^2) and its domain-doubling growth.

    A constant that stays put when the frequency window doubles supports
    the quadratic decay bound numerically; growth beyond 10% per doubling
    marks the table as too rough for it.  A finite-grid verdict, not a
    proof.
    """
    us = np.linspace(0.0, 2.0 * u_max, 2 * grid - 1)
    weighted = np.abs(_table_fourier(table, kind, us)) * (1.0 + us * us)
    c_half = float(np.max(weighted[:grid]))
    c_full = float(np.max(weighted))
    growth = c_full / c_half if c_half > 0 else math.inf
    return FourierDecayReport(
        kind=kind,
        u_max=float(u_max),
        grid=int(grid),
        constant=c_full,
        growth_ratio=growth,
        bounded=growth <= DECAY_GROWTH_LIMIT,
    )


def vanishing_moment_defect(table: DyadicTable, r: int) -> float:
    """|integral of x^r psi(x) dx| by quadrature on the table."""
    if not 0 <= r <= 2 * table.vm:
        raise ValueError(f"moment order r must be in 0..{2 * table.vm}")
    lo, _ = table.psi_support
    x = lo + np.arange(len(table.psi_values)) * table.step
    return abs(table._grid_quad(x**r * table.psi_values))


def default_resolution(vm: int) -> int:
    """Dyadic grid exponent: finer for Haar, whose jump cells smear
    interpolated evaluations over a 2**-resolution neighbourhood."""
    return 12 if vm == 1 else 10


@lru_cache(maxsize=32)
def build_table(vm: int, resolution: int | None = None, iterations: int | None = None) -> DyadicTable:
    """Cached filter construction + cascade for the given parameters."""
    if resolution is None:
        resolution = default_resolution(vm)
    if iterations is None:
        iterations = resolution + 2
    return cascade(daubechies_filter(vm), resolution=resolution, iterations=iterations)
