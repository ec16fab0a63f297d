"""Causal linear processes: coefficient sequences, innovations, sample paths.

A path is the truncated moving average X_t = sum_{i<T} a_i e_{t-i} of
i.i.d. innovations.  Coefficient kinds cover the fractional sequence
a_i = Gamma(i+d) / (Gamma(d) Gamma(i+1)), geometric decay, and explicit
tap lists.  Innovation samplers are built on uniform draws from Philox
streams only, so paths are bit-reproducible everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import stream

DEFAULT_TRUNCATION = 100_001

_COEFF_KINDS = ("fractional", "geometric", "ma", "custom")
_INNOVATION_KINDS = ("gaussian", "cauchy", "stable", "chi_squared", "gamma")


@dataclass(frozen=True)
class CoefficientSeq:
    """Coefficient sequence of the moving average, truncated to ``truncation`` terms."""

    kind: str
    d: float | None = None
    rho: float | None = None
    taps: tuple = ()
    truncation: int = DEFAULT_TRUNCATION

    def __post_init__(self):
        if self.kind not in _COEFF_KINDS:
            raise ValueError(f"unknown coefficient kind {self.kind!r}")
        if self.kind == "fractional":
            if self.d is None or not math.isfinite(self.d) or not self.d < 0.5:
                raise ValueError("fractional requires d < 1/2")
            if float(self.d) == int(self.d):
                raise ValueError("fractional requires non-integer d")
        elif self.kind == "geometric":
            if self.rho is None or not abs(self.rho) < 1.0:
                raise ValueError("geometric requires |rho| < 1")
        else:
            if len(self.taps) == 0 or self.taps[0] == 0.0:
                raise ValueError("tap list must be nonempty with nonzero leading tap")
            object.__setattr__(self, "truncation", len(self.taps))
        if self.truncation < 1:
            raise ValueError("truncation must be positive")

    @classmethod
    def fractional(cls, d: float, truncation: int = DEFAULT_TRUNCATION) -> "CoefficientSeq":
        return cls(kind="fractional", d=float(d), truncation=int(truncation))

    @classmethod
    def geometric(cls, rho: float, truncation: int = DEFAULT_TRUNCATION) -> "CoefficientSeq":
        return cls(kind="geometric", rho=float(rho), truncation=int(truncation))

    @classmethod
    def ma(cls, taps) -> "CoefficientSeq":
        return cls(kind="ma", taps=tuple(float(t) for t in taps))

    @classmethod
    def custom(cls, taps) -> "CoefficientSeq":
        return cls(kind="custom", taps=tuple(float(t) for t in taps))

    @property
    def n_terms(self) -> int:
        return self.truncation

    @property
    def nonzero_count(self) -> float:
        """Number of nonzero coefficients; inf for the infinite kinds."""
        if self.kind in ("ma", "custom"):
            return int(np.count_nonzero(self.taps))
        return math.inf

    def array(self) -> np.ndarray:
        """The retained coefficients a_0 .. a_{T-1}."""
        if self.kind == "fractional":
            # a_0 = 1, a_i = a_{i-1} (i - 1 + d) / i; avoids Gamma overflow
            i = np.arange(1, self.truncation, dtype=float)
            return np.concatenate(([1.0], np.cumprod((i - 1.0 + self.d) / i)))
        if self.kind == "geometric":
            return self.rho ** np.arange(self.truncation, dtype=float)
        return np.asarray(self.taps, dtype=float)


def coeff(seq: CoefficientSeq, i: int) -> float:
    """Single coefficient a_i of the sequence."""
    if i < 0:
        raise ValueError("index must be nonnegative")
    if i >= seq.truncation:
        raise IndexError(
            f"index {i} outside the retained range (truncation {seq.truncation})"
        )
    if seq.kind == "fractional":
        a = 1.0
        for m in range(1, i + 1):
            a *= (m - 1.0 + seq.d) / m
        return a
    if seq.kind == "geometric":
        return float(seq.rho**i)
    return float(seq.taps[i])


def sum_abs_pow(seq: CoefficientSeq, p: float, gamma: float | None = None) -> float:
    """sum_{i<T} |a_i|^p, accumulated with compensated summation.

    ``gamma`` optionally records the summability exponent the caller is
    targeting; ``p`` must then be at least ``gamma``.
    """
    if gamma is not None:
        if not 0.0 < gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if p < gamma:
            raise ValueError("p must be >= gamma")
    return math.fsum(np.abs(seq.array()) ** p)


def closed_form_A2(d: float) -> float:
    """Gamma(1-2d) / Gamma(1-d)^2, the exact sum of squared fractional coefficients."""
    if not d < 0.5:
        raise ValueError("d must be < 1/2")
    if float(d) == int(d):
        raise ValueError("d must not be an integer")
    return math.exp(math.lgamma(1.0 - 2.0 * d) - 2.0 * math.lgamma(1.0 - d))


@dataclass(frozen=True)
class InnovationDist:
    """Innovation distribution of the linear process."""

    kind: str
    mu: float = 0.0
    sigma: float = 1.0
    scale: float = 1.0
    alpha: float = 2.0
    df: int = 1
    shape: float = 1.0
    theta: float = 1.0

    def __post_init__(self):
        if self.kind not in _INNOVATION_KINDS:
            raise ValueError(f"unknown innovation kind {self.kind!r}")
        if self.kind == "gaussian" and self.sigma <= 0:
            raise ValueError("gaussian requires sigma > 0")
        if self.kind in ("cauchy", "stable") and self.scale <= 0:
            raise ValueError("scale must be positive")
        if self.kind == "stable" and not 0.0 < self.alpha <= 2.0:
            raise ValueError("stable requires alpha in (0, 2]")
        if self.kind == "chi_squared" and (self.df != int(self.df) or self.df < 1):
            raise ValueError("chi_squared requires a positive integer df")
        if self.kind == "gamma" and (self.shape <= 0 or self.theta <= 0):
            raise ValueError("gamma requires shape > 0 and theta > 0")

    @classmethod
    def gaussian(cls, mu: float = 0.0, sigma: float = 1.0) -> "InnovationDist":
        return cls(kind="gaussian", mu=float(mu), sigma=float(sigma))

    @classmethod
    def cauchy(cls, scale: float = 1.0) -> "InnovationDist":
        return cls(kind="cauchy", scale=float(scale))

    @classmethod
    def stable(cls, alpha: float, scale: float = 1.0) -> "InnovationDist":
        return cls(kind="stable", alpha=float(alpha), scale=float(scale))

    @classmethod
    def chi_squared(cls, df: int) -> "InnovationDist":
        return cls(kind="chi_squared", df=int(df))

    @classmethod
    def gamma(cls, shape: float, theta: float = 1.0) -> "InnovationDist":
        return cls(kind="gamma", shape=float(shape), theta=float(theta))

    @property
    def smoothness_exponent(self) -> float:
        """Exponent usable in the variance-of-phase bound for this kind."""
        if self.kind == "gaussian":
            return 1.0
        if self.kind == "stable":
            return self.alpha / 2.0
        if self.kind == "cauchy":
            return 0.5
        return 0.5


@dataclass(frozen=True)
class ProcessConfig:
    """Coefficients + innovations + warm-up defining the simulated process."""

    coeffs: CoefficientSeq
    innovation: InnovationDist
    burn_in: int | None = None

    def __post_init__(self):
        if self.burn_in is not None and self.burn_in < 0:
            raise ValueError("burn_in must be nonnegative")
        if (
            self.burn_in is not None
            and self.coeffs.kind in ("fractional", "geometric")
            and self.burn_in < self.coeffs.truncation
        ):
            raise ValueError(
                "burn_in must cover the truncated memory "
                f"(need >= {self.coeffs.truncation})"
            )

    @property
    def resolved_burn_in(self) -> int:
        if self.burn_in is not None:
            return self.burn_in
        return self.coeffs.n_terms


@dataclass(frozen=True)
class SamplePath:
    """A generated path together with everything needed to regenerate it."""

    values: np.ndarray
    seed: int
    config: ProcessConfig
    stream_path: tuple = ()

    def __post_init__(self):
        self.values.setflags(write=False)

    def __len__(self) -> int:
        return len(self.values)


# -- samplers (uniform draws only, for cross-version reproducibility) -----


def _normals(gen: np.random.Generator, count: int) -> np.ndarray:
    m = (count + 1) // 2
    u1 = 1.0 - gen.random(m)  # in (0, 1]
    u2 = gen.random(m)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2)])
    return z[:count]


def _cauchy(gen: np.random.Generator, count: int, scale: float) -> np.ndarray:
    return scale * np.tan(np.pi * (gen.random(count) - 0.5))


def _stable(gen: np.random.Generator, count: int, alpha: float, scale: float) -> np.ndarray:
    # Chambers-Mallows-Stuck transform, symmetric case
    u = np.pi * (gen.random(count) - 0.5)
    w = -np.log(1.0 - gen.random(count))
    if alpha == 1.0:
        return scale * np.tan(u)
    x = (np.sin(alpha * u) / np.cos(u) ** (1.0 / alpha)) * (
        np.cos(u - alpha * u) / w
    ) ** ((1.0 - alpha) / alpha)
    return scale * x


def _gamma_variates(
    gen: np.random.Generator, count: int, shape: float, scale: float
) -> np.ndarray:
    # Marsaglia-Tsang squeeze; the shape < 1 case is boosted from shape + 1
    boost = None
    a = shape
    if a < 1.0:
        boost = gen.random(count) ** (1.0 / a)
        a = a + 1.0
    d = a - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    out = np.empty(count)
    filled = 0
    while filled < count:
        need = count - filled
        x = _normals(gen, need)
        u = gen.random(need)
        v = (1.0 + c * x) ** 3
        with np.errstate(divide="ignore", invalid="ignore"):
            accept = (v > 0.0) & (np.log(u) < 0.5 * x * x + d * (1.0 - v + np.log(v)))
        hits = d * v[accept]
        out[filled : filled + hits.size] = hits
        filled += hits.size
    out *= scale
    if boost is not None:
        out *= boost
    return out


def _draw(dist: InnovationDist, count: int, gen: np.random.Generator) -> np.ndarray:
    if dist.kind == "gaussian":
        return dist.mu + dist.sigma * _normals(gen, count)
    if dist.kind == "cauchy":
        return _cauchy(gen, count, dist.scale)
    if dist.kind == "stable":
        return _stable(gen, count, dist.alpha, dist.scale)
    if dist.kind == "chi_squared":
        return _gamma_variates(gen, count, dist.df / 2.0, 2.0)
    return _gamma_variates(gen, count, dist.shape, dist.theta)


def sample_innovations(dist: InnovationDist, count: int, seed: int) -> np.ndarray:
    """``count`` i.i.d. draws from the innovation distribution."""
    if count < 1:
        raise ValueError("count must be >= 1")
    return _draw(dist, count, stream(seed))


def gen_path(
    config: ProcessConfig, n: int, seed: int, stream_path: tuple = ()
) -> SamplePath:
    """Simulate n observations of the truncated linear process.

    The moving average is evaluated by direct convolution over the retained
    coefficients; the first ``burn_in`` outputs are discarded so every
    reported observation has a fully generated innovation window.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    a = config.coeffs.array()
    burn = config.resolved_burn_in
    gen = stream(seed, *stream_path)
    eps = _draw(config.innovation, burn + n, gen)
    t = len(a)
    if burn >= t - 1:
        # every output uses a full coefficient window
        y = np.correlate(eps, a[::-1], mode="valid")
        x = y[burn - t + 1 : burn - t + 1 + n]
    else:
        # warm-up shorter than the memory: missing history is zero-padded
        x = np.convolve(eps, a)[burn : burn + n]
    return SamplePath(values=x, seed=int(seed), config=config, stream_path=tuple(stream_path))
