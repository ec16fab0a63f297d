"""Monte Carlo integrated-squared-error experiments and rate verification.

An experiment plan names a scenario (process + reference density), a list
of sample sizes, and a replication count.  Each (size, replication) cell
draws its path from an independent random stream, fits the estimator with
the auto-selected truncation level, and integrates the squared deviation
from the reference density.  A log-log least squares fit of mean ISE
against sample size checks the predicted decay exponent
-2 M beta / (2 M beta + 1).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .chf import SCENARIOS, RefDensity, reference_density, scenario_process
from .estimator import (
    DensityEstimate,
    check_moment_budget,
    evaluate_estimate,
    fit_density,
    select_jn,
)
from .processes import ProcessConfig, gen_path
from .wavelets import DyadicTable, build_table

THREADS_ENV = "WAVERATE_THREADS"


@dataclass(frozen=True)
class QuadSpec:
    """Domain half-width and node count of the error quadrature."""

    L_eval: float = 25.0
    grid: int = 2**13 + 1


@dataclass(frozen=True)
class ExperimentPlan:
    name: str
    scenario: str
    ns: tuple
    reps: int
    seed: int
    vm: int = 4
    M: int = 1
    beta: float = 4.0
    gamma: float = 1.0
    quad: QuadSpec = QuadSpec()
    truncation: int | None = None
    theorem_applies: bool = True
    k_margin: int = 1
    resolution: int | None = None
    iterations: int | None = None
    process_config: ProcessConfig | None = None
    ref_density: RefDensity | None = None

    def __post_init__(self):
        ns = tuple(int(n) for n in self.ns)
        object.__setattr__(self, "ns", ns)
        if len(ns) == 0 or any(b <= a for a, b in zip(ns, ns[1:])):
            raise ValueError("ns must be strictly increasing and nonempty")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.scenario == "custom" and (
            self.process_config is None or self.ref_density is None
        ):
            raise ValueError(
                "a custom scenario needs explicit process_config and ref_density"
            )

    def process(self) -> ProcessConfig:
        if self.process_config is not None:
            return self.process_config
        return scenario_process(self.scenario, self.truncation)

    def ref(self) -> RefDensity:
        if self.ref_density is not None:
            return self.ref_density
        return reference_density(self.scenario)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "scenario": self.scenario,
            "ns": list(self.ns),
            "reps": self.reps,
            "seed": self.seed,
            "vm": self.vm,
            "M": self.M,
            "beta": self.beta,
            "gamma": self.gamma,
            "L_eval": self.quad.L_eval,
            "grid": self.quad.grid,
            "truncation": self.truncation,
            "theorem_applies": self.theorem_applies,
        }


def ise(target, ref: RefDensity, L_eval: float = 25.0, grid: int = 2**13 + 1) -> float:
    """Trapezoid integral of (fhat - f)^2 over [-L_eval, L_eval].

    ``target`` is either a fitted estimator (anything with evaluate_grid)
    or a plain callable density.
    """
    xs = np.linspace(-L_eval, L_eval, grid)
    if hasattr(target, "evaluate_grid"):
        fhat = target.evaluate_grid(xs)
    else:
        fhat = np.asarray(target(xs), dtype=float)
    diff = fhat - ref(xs)
    return float(np.trapezoid(diff * diff, xs))


def _ise_of_estimate(
    est: DensityEstimate, table: DyadicTable, ref: RefDensity, quad: QuadSpec
) -> float:
    xs = np.linspace(-quad.L_eval, quad.L_eval, quad.grid)
    diff = evaluate_estimate(est, table, xs) - ref(xs)
    return float(np.trapezoid(diff * diff, xs))


@dataclass(frozen=True)
class ImseResult:
    """Per-cell integrated squared errors with per-size aggregates."""

    plan: ExperimentPlan
    ises: np.ndarray  # shape (len(ns), reps)
    mean_ise: np.ndarray
    stderr_ise: np.ndarray
    monotone_ok: tuple

    def __post_init__(self):
        self.ises.setflags(write=False)
        self.mean_ise.setflags(write=False)
        self.stderr_ise.setflags(write=False)

    def rows(self):
        """(n, rep, ise) triples in canonical order."""
        for ni, n in enumerate(self.plan.ns):
            for rep in range(self.plan.reps):
                yield n, rep, float(self.ises[ni, rep])


def _worker_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return os.cpu_count() or 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _aggregate(plan: ExperimentPlan, ises: np.ndarray) -> ImseResult:
    mean = ises.mean(axis=1)
    if plan.reps > 1:
        stderr = ises.std(axis=1, ddof=1) / math.sqrt(plan.reps)
    else:
        stderr = np.zeros(len(plan.ns))
    monotone = []
    for i in range(len(plan.ns) - 1):
        slack = 2.0 * math.hypot(stderr[i], stderr[i + 1])
        monotone.append(bool(mean[i + 1] <= mean[i] + slack))
    return ImseResult(
        plan=plan,
        ises=ises,
        mean_ise=mean,
        stderr_ise=stderr,
        monotone_ok=tuple(monotone),
    )


def run_imse(plan: ExperimentPlan, task_order=None) -> ImseResult:
    """Run the Monte Carlo plan; deterministic for a fixed plan.

    Every cell draws from the stream keyed by (seed, size index,
    replication), so results do not depend on execution order or worker
    count.  ``task_order`` permutes execution for testing that claim.
    """
    check_moment_budget(plan.vm, plan.M, plan.beta)
    if plan.beta < plan.gamma:
        raise ValueError("beta must be at least the scenario's gamma exponent")
    process = plan.process()
    ref = plan.ref()
    table = build_table(plan.vm, plan.resolution, plan.iterations)

    tasks = [(ni, rep) for ni in range(len(plan.ns)) for rep in range(plan.reps)]
    if task_order is not None:
        tasks = [tasks[i] for i in task_order]

    def one(cell):
        ni, rep = cell
        n = plan.ns[ni]
        path = gen_path(process, n, plan.seed, stream_path=(ni, rep))
        jn = select_jn(n, plan.M, plan.beta)
        est = fit_density(path.values, table, jn, plan.k_margin)
        return ni, rep, _ise_of_estimate(est, table, ref, plan.quad)

    workers = _worker_count()
    ises = np.empty((len(plan.ns), plan.reps))
    if workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for ni, rep, value in pool.map(one, tasks):
                ises[ni, rep] = value
    else:
        for cell in tasks:
            ni, rep, value = one(cell)
            ises[ni, rep] = value
    return _aggregate(plan, ises)


@dataclass(frozen=True)
class RateFit:
    """Least squares slope of log2(mean ISE) against log2(n)."""

    slope: float
    intercept: float
    r_squared: float
    theoretical_slope: float
    deviation: float
    ns_used: tuple
    ns_excluded: tuple

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "theoretical_slope": self.theoretical_slope,
            "deviation": self.deviation,
            "ns_used": list(self.ns_used),
            "ns_excluded": list(self.ns_excluded),
        }


RELATIVE_STDERR_CUTOFF = 0.25


def fit_rate_arrays(ns, mean_ise, stderr_ise, M: int, beta: float) -> RateFit:
    """Rate fit from raw aggregates; see fit_rate."""
    ns = np.asarray(ns, dtype=float)
    mean_ise = np.asarray(mean_ise, dtype=float)
    stderr_ise = np.asarray(stderr_ise, dtype=float)
    if len(ns) < 3:
        raise ValueError("at least 3 distinct n values are required")
    if np.any(mean_ise <= 0):
        raise ValueError("rate fit requires strictly positive mean ISE values")
    keep = np.ones(len(ns), dtype=bool)
    # the smallest size is dropped when too noisy to stabilize the slope
    if stderr_ise[0] > RELATIVE_STDERR_CUTOFF * mean_ise[0] and len(ns) > 3:
        keep[0] = False
    x = np.log2(ns[keep])
    y = np.log2(mean_ise[keep])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    mb = M * beta
    theo = -2.0 * mb / (2.0 * mb + 1.0)
    return RateFit(
        slope=float(slope),
        intercept=float(intercept),
        r_squared=r2,
        theoretical_slope=theo,
        deviation=float(slope - theo),
        ns_used=tuple(int(n) for n in ns[keep]),
        ns_excluded=tuple(int(n) for n in ns[~keep]),
    )


def fit_rate(result: ImseResult, M: int, beta: float) -> RateFit:
    """Fitted log-log decay of mean ISE with the theoretical slope echo."""
    return fit_rate_arrays(result.plan.ns, result.mean_ise, result.stderr_ise, M, beta)


# -- error decomposition ----------------------------------------------------


def _true_coeffs_dense(
    ref: RefDensity,
    table: DyadicTable,
    kind: str,
    j: int,
    k_lo: int,
    k_hi: int,
    nodes_per_support: int,
) -> np.ndarray:
    """Quadrature of f against every basis function of one level.

    Uses a shared uniform grid whose spacing puts ``nodes_per_support``
    trapezoid nodes inside each basis support.
    """
    s_lo, s_hi = table._support(kind)
    width = int(round(s_hi - s_lo))
    x_lo = (k_lo + s_lo) / 2**j
    x_hi = (k_hi + s_hi) / 2**j
    n_nodes = int(round((x_hi - x_lo) * 2**j / width * nodes_per_support)) + 1
    out = np.zeros(k_hi - k_lo + 1)
    scale = 2.0 ** (j / 2.0)
    chunk = 1 << 20
    xs_full = np.linspace(x_lo, x_hi, n_nodes)
    h = xs_full[1] - xs_full[0]
    for lo in range(0, n_nodes, chunk):
        xs = xs_full[lo : lo + chunk]
        w = np.full(len(xs), h)
        if lo == 0:
            w[0] = h / 2.0
        if lo + chunk >= n_nodes:
            w[-1] = h / 2.0
        fw = ref(xs) * w
        t = xs * float(2**j)
        base = np.ceil(t - s_hi).astype(np.int64)
        for m in range(width + 1):
            k = base + m
            vals = table.lookup(kind, t - k) * (scale * fw)
            idx = k - k_lo
            ok = (idx >= 0) & (idx <= k_hi - k_lo)
            out += np.bincount(idx[ok], weights=vals[ok], minlength=len(out))
    return out


def _dense_from_sparse(ks, vals, k_lo: int, k_hi: int) -> np.ndarray:
    out = np.zeros(k_hi - k_lo + 1)
    ok = (ks >= k_lo) & (ks <= k_hi)
    out[ks[ok] - k_lo] = vals[ok]
    return out


@dataclass(frozen=True)
class Decomposition:
    """Single-replication analogue of the three-term error split."""

    i1: float
    i2: float
    i3: float
    ise: float
    jn: int
    j_tail: int

    @property
    def total(self) -> float:
        return self.i1 + self.i2 + self.i3

    @property
    def residual(self) -> float:
        return abs(self.total - self.ise)

    @property
    def relative_residual(self) -> float:
        return self.residual / self.ise if self.ise > 0 else 0.0


def decompose_error(
    est: DensityEstimate,
    table: DyadicTable,
    ref: RefDensity,
    j_tail: int,
    quad: QuadSpec = QuadSpec(),
    nodes_per_support: int = 2**12,
) -> Decomposition:
    """Split the ISE into coefficient-error and tail-bias parts.

    The first part sums squared scaling-coefficient errors, the second
    squared detail-coefficient errors up to the fitted level, the third
    squared true detail coefficients for levels above it up to ``j_tail``.
    By orthonormality the three parts should reproduce the quadrature ISE
    up to the clipped domain and the tail beyond ``j_tail``.
    """
    jn = est.jn
    if j_tail <= jn:
        raise ValueError("j_tail must exceed the fitted level")
    L = quad.L_eval

    def level_range(kind, j, ks):
        s_lo, s_hi = table._support(kind)
        k_lo = math.ceil(-L * 2**j - s_hi)
        k_hi = math.floor(L * 2**j - s_lo)
        if len(ks):
            k_lo = min(k_lo, int(ks[0]))
            k_hi = max(k_hi, int(ks[-1]))
        return k_lo, k_hi

    k_lo, k_hi = level_range("phi", 0, est.alpha_ks)
    alpha_true = _true_coeffs_dense(ref, table, "phi", 0, k_lo, k_hi, nodes_per_support)
    alpha_hat = _dense_from_sparse(est.alpha_ks, est.alpha, k_lo, k_hi)
    i1 = float(np.sum((alpha_hat - alpha_true) ** 2))

    i2 = 0.0
    for j in range(jn + 1):
        k_lo, k_hi = level_range("psi", j, est.beta_ks[j])
        beta_true = _true_coeffs_dense(ref, table, "psi", j, k_lo, k_hi, nodes_per_support)
        beta_hat = _dense_from_sparse(est.beta_ks[j], est.betas[j], k_lo, k_hi)
        i2 += float(np.sum((beta_hat - beta_true) ** 2))

    i3 = 0.0
    for j in range(jn + 1, j_tail + 1):
        k_lo, k_hi = level_range("psi", j, np.array([], dtype=np.int64))
        beta_true = _true_coeffs_dense(ref, table, "psi", j, k_lo, k_hi, nodes_per_support)
        i3 += float(np.sum(beta_true**2))

    ise_val = _ise_of_estimate(est, table, ref, quad)
    return Decomposition(i1=i1, i2=i2, i3=i3, ise=ise_val, jn=jn, j_tail=j_tail)


# -- scenario presets -------------------------------------------------------

FULL_N = 2**16
DESK_NS = (2**10, 2**11, 2**12, 2**13, 2**14)

_SCENARIO_PARAMS = {
    "gauss_d05": dict(M=1, beta=4.0, gamma=1.0, theorem_applies=True, quad=QuadSpec()),
    "gauss_d15": dict(M=1, beta=4.0, gamma=1.0, theorem_applies=True, quad=QuadSpec()),
    "cauchy_d05": dict(M=1, beta=4.0, gamma=0.5, theorem_applies=False, quad=QuadSpec()),
    "cauchy_d15": dict(M=1, beta=4.0, gamma=0.5, theorem_applies=True, quad=QuadSpec()),
    "chisq_ma4": dict(
        M=4, beta=1.0, gamma=0.5, theorem_applies=True, quad=QuadSpec(L_eval=80.0, grid=2**14 + 1)
    ),
}


def scenario_presets() -> tuple:
    """Five full-size plans (n = 2^16) plus five desk-scaled variants."""
    plans = []
    for i, scenario in enumerate(SCENARIOS):
        params = _SCENARIO_PARAMS[scenario]
        plans.append(
            ExperimentPlan(
                name=scenario,
                scenario=scenario,
                ns=(FULL_N,),
                reps=3,
                seed=1101 + i,
                vm=4,
                **params,
            )
        )
    for i, scenario in enumerate(SCENARIOS):
        params = _SCENARIO_PARAMS[scenario]
        plans.append(
            ExperimentPlan(
                name=f"{scenario}_desk",
                scenario=scenario,
                ns=DESK_NS,
                reps=10,
                seed=2201 + i,
                vm=4,
                **params,
            )
        )
    return tuple(plans)


def preset_by_name(name: str) -> ExperimentPlan:
    for plan in scenario_presets():
        if plan.name == name:
            return plan
    raise KeyError(f"no preset named {name!r}")
