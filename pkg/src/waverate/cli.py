"""Command-line entry point: simulation, fitting, experiments, audits.

All stochastic subcommands print the effective seed, and every output file
starts with a comment header carrying the tool version, a hash of the
effective configuration, and the seed, so identical invocations produce
byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

import numpy as np

from . import __version__
from .chf import SCENARIOS, audit_gamma_condition, audit_integrability
from .estimator import WaveletDensityEstimator
from .experiments import (
    ExperimentPlan,
    QuadSpec,
    fit_rate_arrays,
    preset_by_name,
    run_imse,
    scenario_presets,
)
from .processes import CoefficientSeq, InnovationDist, ProcessConfig, gen_path
from .wavelets import (
    build_table,
    daubechies_filter,
    fourier_decay_diagnostic,
    vanishing_moment_defect,
)


class CliValidationError(Exception):
    """Bad flags or configuration; exits with status 1."""


class ConfigError(CliValidationError):
    """Config file violates the schema; carries every detected problem."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliValidationError(f"{message}\n{self.format_usage()}")


# -- configuration loading --------------------------------------------------

_SECTION_KEYS = {
    "process": {"kind", "d", "rho", "taps", "truncation", "burn_in"},
    "innovation": {"kind", "mu", "sigma", "scale", "alpha", "df", "shape", "theta"},
    "wavelet": {"vm", "resolution", "iterations"},
    "estimator": {"jn", "M", "beta", "k_margin"},
    "experiment": {
        "preset",
        "scenario",
        "ns",
        "reps",
        "seed",
        "L_eval",
        "grid",
        "truncation",
        "theorem_applies",
        "gamma",
    },
}


class RunConfig:
    """Validated configuration document."""

    def __init__(self, raw: dict, process_config, wavelet: dict, estimator: dict, experiment: dict):
        self.raw = raw
        self.process_config = process_config
        self.wavelet = wavelet
        self.estimator = estimator
        self.experiment = experiment

    def digest(self) -> str:
        return config_hash(self.raw)


def config_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def _check_finite(errors, section, data):
    for key, value in data.items():
        if isinstance(value, bool):
            continue
        if isinstance(value, (int, float)) and not math.isfinite(value):
            errors.append(f"[{section}] {key} must be finite, got {value!r}")
        if isinstance(value, list):
            for item in value:
                if isinstance(item, (int, float)) and not math.isfinite(item):
                    errors.append(f"[{section}] {key} contains non-finite {item!r}")


def _build_process(errors, proc: dict, innov: dict):
    coeffs = None
    innovation = None
    kind = proc.get("kind")
    try:
        if kind == "fractional":
            coeffs = CoefficientSeq.fractional(
                proc.get("d", -0.5), proc.get("truncation", 100_001)
            )
        elif kind == "geometric":
            coeffs = CoefficientSeq.geometric(
                proc.get("rho", 0.5), proc.get("truncation", 100_001)
            )
        elif kind == "ma":
            coeffs = CoefficientSeq.ma(proc.get("taps", ()))
        elif kind == "custom":
            coeffs = CoefficientSeq.custom(proc.get("taps", ()))
        elif kind is not None:
            errors.append(f"[process] unknown kind {kind!r}")
        elif proc:
            errors.append("[process] kind is required")
    except ValueError as exc:
        errors.append(f"[process] {exc}")

    ikind = innov.get("kind")
    try:
        if ikind == "gaussian":
            innovation = InnovationDist.gaussian(innov.get("mu", 0.0), innov.get("sigma", 1.0))
        elif ikind == "cauchy":
            innovation = InnovationDist.cauchy(innov.get("scale", 1.0))
        elif ikind == "stable":
            innovation = InnovationDist.stable(innov.get("alpha", 2.0), innov.get("scale", 1.0))
        elif ikind == "chi_squared":
            innovation = InnovationDist.chi_squared(innov.get("df", 1))
        elif ikind == "gamma":
            innovation = InnovationDist.gamma(innov.get("shape", 1.0), innov.get("theta", 1.0))
        elif ikind is not None:
            errors.append(f"[innovation] unknown kind {ikind!r}")
        elif innov:
            errors.append("[innovation] kind is required")
    except ValueError as exc:
        errors.append(f"[innovation] {exc}")

    if coeffs is None or innovation is None:
        return None
    try:
        return ProcessConfig(coeffs, innovation, proc.get("burn_in"))
    except ValueError as exc:
        errors.append(f"[process] {exc}")
        return None


def parse_config(text: str) -> RunConfig:
    """Parse and validate a TOML configuration, collecting every error."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"TOML syntax error: {exc}"]) from exc
    errors = []
    for section, data in raw.items():
        if section not in _SECTION_KEYS:
            errors.append(f"unknown section [{section}]")
            continue
        if not isinstance(data, dict):
            errors.append(f"[{section}] must be a table")
            continue
        unknown = set(data) - _SECTION_KEYS[section]
        for key in sorted(unknown):
            errors.append(f"[{section}] unknown key {key!r}")
        _check_finite(errors, section, data)

    proc = raw.get("process", {})
    innov = raw.get("innovation", {})
    process_config = _build_process(errors, proc, innov) if (proc or innov) else None
    if (proc and not innov) or (innov and not proc):
        errors.append("[process] and [innovation] must be given together")

    wavelet = {
        "vm": raw.get("wavelet", {}).get("vm", 4),
        "resolution": raw.get("wavelet", {}).get("resolution"),
        "iterations": raw.get("wavelet", {}).get("iterations"),
    }
    if not 1 <= wavelet["vm"] <= 12:
        errors.append("[wavelet] vm must be in 1..12")

    estimator = dict(raw.get("estimator", {}))
    if "jn" not in estimator and {"M", "beta"} <= set(estimator):
        need = math.ceil(estimator["M"] * estimator["beta"])
        if wavelet["vm"] < need:
            errors.append(
                f"[estimator] wavelet vm >= ceil(M*beta) required (need {need})"
            )

    experiment = dict(raw.get("experiment", {}))
    ns = experiment.get("ns")
    if ns is not None:
        if not isinstance(ns, list) or any(
            b <= a for a, b in zip(ns, ns[1:])
        ) or len(ns) == 0:
            errors.append("[experiment] ns must be a strictly increasing list")
    if "reps" in experiment and experiment["reps"] < 1:
        errors.append("[experiment] reps must be >= 1")

    if errors:
        raise ConfigError(errors)
    return RunConfig(raw, process_config, wavelet, estimator, experiment)


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise CliValidationError(f"cannot read config {path}: {exc}") from exc


# -- output helpers ----------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _header(digest: str, seed) -> str:
    seed_txt = "none" if seed is None else str(seed)
    return f"# waverate {__version__} config={digest} seed={seed_txt}"


def write_csv(path: str, columns, rows, digest: str, seed=None) -> None:
    lines = [_header(digest, seed), ",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_json(path: str, payload: dict, digest: str, seed=None) -> None:
    payload = dict(payload)
    payload["_meta"] = {
        "tool": "waverate",
        "version": __version__,
        "config": digest,
        "seed": seed,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_csv_columns(path: str, expected_last: int | None = None):
    """Rows of floats from a CSV file, skipping comments and headers."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                continue  # header line
    if not rows:
        raise CliValidationError(f"no numeric rows found in {path}")
    if expected_last is not None and any(len(r) < expected_last for r in rows):
        raise CliValidationError(f"{path}: expected at least {expected_last} columns")
    return rows


def _parse_dist(spec: str) -> InnovationDist:
    kind, _, rest = spec.partition(":")
    args = [float(a) for a in rest.split(",") if a] if rest else []
    try:
        if kind == "gaussian":
            return InnovationDist.gaussian(*args)
        if kind == "cauchy":
            return InnovationDist.cauchy(*args)
        if kind == "stable":
            return InnovationDist.stable(*args)
        if kind == "chi_squared":
            return InnovationDist.chi_squared(int(args[0]) if args else 1)
        if kind == "gamma":
            return InnovationDist.gamma(*args)
    except (ValueError, TypeError) as exc:
        raise CliValidationError(f"bad distribution spec {spec!r}: {exc}") from exc
    raise CliValidationError(
        f"unknown distribution kind {kind!r}; expected gaussian, cauchy, stable, chi_squared or gamma"
    )


def _parse_grid(spec: str):
    try:
        lo, hi, steps = spec.split(":")
        lo, hi, steps = float(lo), float(hi), int(steps)
    except ValueError as exc:
        raise CliValidationError(f"grid must be lo:hi:steps, got {spec!r}") from exc
    if steps < 2 or hi <= lo:
        raise CliValidationError("grid needs hi > lo and steps >= 2")
    return np.linspace(lo, hi, steps)


# -- subcommands -------------------------------------------------------------


def cmd_filters(args) -> int:
    filt = daubechies_filter(args.vm)
    report = {
        "vm": filt.vm,
        "h": list(filt.h),
        "g": list(filt.g),
        "sum_defect": filt.sum_defect(),
        "orthogonality_defect": filt.orthogonality_defect(),
        "moment_defects": [filt.moment_defect(r) for r in range(filt.vm)],
    }
    if args.resolution is not None:
        table = build_table(args.vm, args.resolution)
        report["cascade"] = {
            "resolution": table.resolution,
            "converged": table.converged,
            "final_sup_diff": table.sup_diffs[-1],
            "partition_of_unity_defect": table.partition_of_unity_defect(),
            "phi_mass_defect": table.phi_mass_defect(),
            "psi_mass_defect": table.psi_mass_defect(),
            "orthonormality_defect": table.orthonormality_defect(),
            "moment_defects": [
                vanishing_moment_defect(table, r) for r in range(filt.vm)
            ],
            "smoothness_ok": table.smoothness_ok,
            "fourier_decay": {
                kind: {
                    "constant": rep.constant,
                    "growth_ratio": rep.growth_ratio,
                    "bounded": rep.bounded,
                }
                for kind, rep in (
                    (k, fourier_decay_diagnostic(table, k)) for k in ("phi", "psi")
                )
            },
        }
    print(json.dumps(report, indent=2))
    return 0


def cmd_gen(args) -> int:
    config = load_config(args.config)
    if config.process_config is None:
        raise CliValidationError("config must define [process] and [innovation]")
    print(f"effective seed: {args.seed}")
    path = gen_path(config.process_config, args.n, args.seed)
    rows = ((i, float(v)) for i, v in enumerate(path.values))
    write_csv(args.out, ["index", "value"], rows, config.digest(), seed=args.seed)
    return 0


def cmd_fit(args) -> int:
    if args.jn is None and (args.M is None or args.beta is None):
        raise CliValidationError("either --jn or both --M and --beta are required")
    rows = read_csv_columns(args.infile)
    sample = np.array([r[-1] for r in rows])
    est = WaveletDensityEstimator(
        vm=args.vm, jn=args.jn, M=args.M, beta=args.beta
    ).fit(sample)
    xs = _parse_grid(args.grid)
    fhat = est.evaluate_grid(xs)
    digest = config_hash(
        {"vm": args.vm, "jn": args.jn, "M": args.M, "beta": args.beta, "grid": args.grid}
    )
    write_csv(args.out, ["x", "fhat"], zip(xs, fhat), digest)
    print(f"fitted jn: {est.jn_}")
    return 0


def _plan_from_config(config: RunConfig) -> ExperimentPlan:
    exp = config.experiment
    if not exp:
        raise CliValidationError("plan must contain an [experiment] section")
    if "preset" in exp:
        try:
            plan = preset_by_name(exp["preset"])
        except KeyError as exc:
            raise CliValidationError(str(exc)) from exc
        overrides = {}
        if "ns" in exp:
            overrides["ns"] = tuple(exp["ns"])
        if "reps" in exp:
            overrides["reps"] = exp["reps"]
        if "seed" in exp:
            overrides["seed"] = exp["seed"]
        if overrides:
            from dataclasses import replace

            plan = replace(plan, **overrides)
        return plan
    required = {"scenario", "ns", "reps", "seed"}
    missing = required - set(exp)
    if missing:
        raise CliValidationError(
            f"[experiment] missing keys: {', '.join(sorted(missing))}"
        )
    if exp["scenario"] not in SCENARIOS:
        raise CliValidationError(
            f"[experiment] scenario must be one of {', '.join(SCENARIOS)}"
        )
    quad = QuadSpec(
        L_eval=float(exp.get("L_eval", 25.0)), grid=int(exp.get("grid", 2**13 + 1))
    )
    est = config.estimator
    return ExperimentPlan(
        name=exp["scenario"],
        scenario=exp["scenario"],
        ns=tuple(exp["ns"]),
        reps=int(exp["reps"]),
        seed=int(exp["seed"]),
        vm=int(config.wavelet["vm"]),
        M=int(est.get("M", 1)),
        beta=float(est.get("beta", 4.0)),
        gamma=float(exp.get("gamma", 0.5)),
        quad=quad,
        truncation=exp.get("truncation"),
        theorem_applies=bool(exp.get("theorem_applies", True)),
        k_margin=int(est.get("k_margin", 1)),
        resolution=config.wavelet["resolution"],
        iterations=config.wavelet["iterations"],
    )


def cmd_imse(args) -> int:
    config = load_config(args.plan)
    plan = _plan_from_config(config)
    print(f"effective seed: {plan.seed}")
    result = run_imse(plan)
    write_csv(args.out, ["n", "rep", "ise"], result.rows(), config_hash(plan.to_dict()), seed=plan.seed)
    for n, mean, err in zip(plan.ns, result.mean_ise, result.stderr_ise):
        print(f"n={n}: mean ISE {mean:.6g} (stderr {err:.2g})")
    return 0


def cmd_rate(args) -> int:
    rows = read_csv_columns(args.infile, expected_last=3)
    by_n = {}
    for n, _rep, ise_val in (r[:3] for r in rows):
        by_n.setdefault(int(n), []).append(ise_val)
    ns = sorted(by_n)
    means = [float(np.mean(by_n[n])) for n in ns]
    stderr = [
        float(np.std(by_n[n], ddof=1) / math.sqrt(len(by_n[n])))
        if len(by_n[n]) > 1
        else 0.0
        for n in ns
    ]
    if len(ns) < 3:
        raise ValueError("at least 3 distinct n values are required")
    rate = fit_rate_arrays(ns, means, stderr, args.M, args.beta)
    digest = config_hash({"M": args.M, "beta": args.beta, "in": args.infile})
    write_json(args.out, rate.to_dict(), digest)
    print(
        f"slope {rate.slope:.4f} (theoretical {rate.theoretical_slope:.4f}), "
        f"r^2 {rate.r_squared:.4f}"
    )
    return 0


def cmd_audit(args) -> int:
    dist = _parse_dist(args.dist)
    report = {
        "dist": args.dist,
        "integrability": audit_integrability(dist, args.beta).to_dict(),
        "gamma_condition": audit_gamma_condition(dist, args.gamma).to_dict(),
    }
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if args.out:
        write_json(args.out, report, config_hash(vars(args)))
    return 0


def cmd_scenarios(args) -> int:
    for plan in scenario_presets():
        flags = "" if plan.theorem_applies else "  [theorem_applies=false]"
        print(f"{plan.name}{flags}")
    return 0


_FIGURES = {
    "fig1": (("gauss_d05", "gauss_d15"), (-8.0, 8.0)),
    "fig2": (("cauchy_d05", "cauchy_d15"), (-20.0, 20.0)),
    "fig3": (("chisq_ma4",), (0.0, 64.0)),
}


def cmd_figure(args) -> int:
    scenarios, (x_lo, x_hi) = _FIGURES[args.name]
    n = 2**16 if args.scale == "full" else 2**14
    xs = np.linspace(x_lo, x_hi, args.points)
    written = []
    for scenario in scenarios:
        plan = preset_by_name(scenario)
        print(f"effective seed: {plan.seed} ({scenario})")
        path = gen_path(plan.process(), n, plan.seed, stream_path=(0, 0))
        est = WaveletDensityEstimator(vm=plan.vm, M=plan.M, beta=plan.beta).fit(path.values)
        fhat = est.evaluate_grid(xs)
        ftrue = plan.ref()(xs)
        out = args.out
        if len(scenarios) > 1:
            stem, dot, ext = args.out.rpartition(".")
            suffix = scenario.rsplit("_", 1)[-1]
            out = f"{stem}_{suffix}{dot}{ext}" if dot else f"{args.out}_{suffix}"
        digest = config_hash({"figure": args.name, "scenario": scenario, "n": n})
        write_csv(out, ["x", "fhat", "ftrue"], zip(xs, fhat, ftrue), digest, seed=plan.seed)
        written.append(out)
    print("wrote: " + ", ".join(written))
    return 0


# -- dispatch ----------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="waverate", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("filters", help="print filter taps and diagnostics as JSON")
    p.add_argument("--vm", type=int, required=True)
    p.add_argument("--resolution", type=int, default=None)
    p.set_defaults(fn=cmd_filters)

    p = sub.add_parser("gen", help="simulate a linear process path to CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("fit", help="fit the wavelet density estimator to a CSV sample")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--vm", type=int, default=4)
    p.add_argument("--jn", type=int, default=None)
    p.add_argument("--M", type=int, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--grid", required=True, help="lo:hi:steps evaluation grid")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_fit)

    p = sub.add_parser("imse", help="run a Monte Carlo ISE plan")
    p.add_argument("--plan", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_imse)

    p = sub.add_parser("rate", help="fit the log-log ISE decay rate")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_rate)

    p = sub.add_parser("audit", help="audit integrability and smoothness conditions")
    p.add_argument("--dist", required=True, help="e.g. gaussian:0,1 or chi_squared:6")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_audit)

    p = sub.add_parser("scenarios", help="list experiment presets")
    p.add_argument("--list", action="store_true")
    p.set_defaults(fn=cmd_scenarios)

    p = sub.add_parser("figure", help="emit (x, fhat, ftrue) triples for a figure")
    p.add_argument("--name", choices=sorted(_FIGURES), required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scale", choices=("full", "desk"), default="full")
    p.add_argument("--points", type=int, default=801)
    p.set_defaults(fn=cmd_figure)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "fn", None):
            raise CliValidationError(parser.format_usage())
        return args.fn(args)
    except CliValidationError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
