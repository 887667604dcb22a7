"""Experiment harness: each worked example as a reproducible command.

One process runs one command, selected with --command; results are written as
CSV (header row, 17-significant-digit decimals) or JSON ({config, rows,
verdicts, meta}).  Identical configurations, including the seed, reproduce
identical output bytes in single-worker mode; wall-clock time is kept on the
in-memory result only, never in the emitted file.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .algebra import stone_weierstrass_p0
from .excursion import ExcursionFunctional, empirical_lhs, step_indicator
from .fragmentation import block_uniform_state, g_p
from .levy import (
    LevyTriple,
    RandomMeasureLaw,
    default_m_schedule,
    f_phi_family,
    finite_ground_space,
    laplace_functional,
    levy_family,
    levy_ground_space,
    psi_exponent,
    recover_C,
    recover_b,
    recover_b_measure,
)
from .measures import AtomicMeasure, integrate, prohorov_distance, prohorov_distance_bruteforce, weak_sharp_report

COMMAND_HELP = {
    "levy-recover": "Levy-Khintchine triple recovery: drift and covariance from a synthetic characteristic exponent.",
    "levy-converge": "Weak#-convergence of Levy measures delta_{1+1/n} -> delta_1 under sampled F_u*F_v products.",
    "random-measure": "Laplace-functional product identity and drift-measure recovery for infinitely divisible random measures.",
    "excursion": "Ito excursion measure tail: (1/eps) P_eps(lifetime > t) against sqrt(2/(pi t)) for killed Brownian motion.",
    "fragmentation": "Fragmentation power sums, including the G_1 discontinuity witness on uniform block states.",
    "sw-approx": "Stone-Weierstrass weighted approximation on the cube by polynomials vanishing on the first-coordinate face.",
    "prohorov-oracle": "Prokhorov distance between small atomic measures against subset-enumeration brute force.",
}
COMMANDS = tuple(COMMAND_HELP)
STOCHASTIC_COMMANDS = ("excursion", "prohorov-oracle")
FORMATS = ("csv", "json")


class UsageError(ValueError):
    """Invalid configuration; the message names the failing field."""


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    seed: int | None = None
    eps: float = 0.01
    dt: float = 1e-4
    n_paths: int = 100_000
    m_max: float = 1e3
    dim: int = 2
    max_p: int = 5
    tol: float = 1e-2
    out: str | None = None
    format: str = "csv"
    workers: int = 1

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise UsageError(f"command: must be one of {', '.join(COMMANDS)}")
        if self.format not in FORMATS:
            raise UsageError(f"format: must be one of {', '.join(FORMATS)}")
        if self.command in STOCHASTIC_COMMANDS and self.seed is None:
            raise UsageError(f"seed: required for stochastic command {self.command!r}")
        if self.seed is not None and not (0 <= self.seed < 2**64):
            raise UsageError("seed: must be an unsigned 64-bit integer")
        for name, value, low in (
            ("eps", self.eps, 0.0),
            ("dt", self.dt, 0.0),
            ("m-max", self.m_max, 0.0),
            ("tol", self.tol, 0.0),
        ):
            if not value > low:
                raise UsageError(f"{name}: must be positive")
        for name, value in (("n-paths", self.n_paths), ("dim", self.dim), ("max-p", self.max_p), ("workers", self.workers)):
            if value < 1:
                raise UsageError(f"{name}: must be at least 1")

    def echo(self) -> dict:
        return {
            "command": self.command,
            "seed": self.seed,
            "eps": self.eps,
            "dt": self.dt,
            "n_paths": self.n_paths,
            "m_max": self.m_max,
            "dim": self.dim,
            "max_p": self.max_p,
            "tol": self.tol,
            "format": self.format,
            "workers": self.workers,
        }


@dataclass
class ExperimentResult:
    config: dict
    rows: list[dict]
    verdicts: dict[str, bool]
    wall_clock_s: float
    version: str = __version__

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())


# ---------------------------------------------------------------------------
# Command implementations
# ---------------------------------------------------------------------------


def _run_levy_recover(cfg: ExperimentConfig):
    space = levy_ground_space(2)
    mu = AtomicMeasure.from_atoms(space, [((1.5, -0.4), 0.8), ((0.3, 0.2), 0.5), ((4.0, 1.0), 0.2)])
    triple = LevyTriple(np.array([0.5, -0.25]), np.array([[2.0, 1.0], [1.0, 3.0]]), mu)
    schedule = default_m_schedule(cfg.m_max)
    psi = lambda u: psi_exponent(triple, u)
    C_hat = recover_C(psi, 2, schedule)
    b_hat = recover_b(psi, C_hat, 2, schedule, compensator_moment=triple.compensator_moment())
    rows = []
    for k in range(2):
        for j in range(2):
            rows.append({"entry": f"C[{k},{j}]", "true": triple.C[k, j], "recovered": C_hat[k, j],
                         "abs_err": abs(triple.C[k, j] - C_hat[k, j])})
    for k in range(2):
        rows.append({"entry": f"b[{k}]", "true": triple.b[k], "recovered": b_hat[k],
                     "abs_err": abs(triple.b[k] - b_hat[k])})
    worst = max(r["abs_err"] for r in rows)
    return rows, {"recovered_within_tol": worst < cfg.tol}


def _run_levy_converge(cfg: ExperimentConfig):
    rng = np.random.default_rng(cfg.seed if cfg.seed is not None else 0)
    pairs = [(rng.uniform(-1, 1, 1), rng.uniform(-1, 1, 1)) for _ in range(20)]
    fam = levy_family(1, pairs)
    space = fam.space
    ns = [1, 10, 100, 1000, 10_000]
    seq = [AtomicMeasure.dirac(space, 1.0 + 1.0 / n) for n in ns]
    report = weak_sharp_report(seq, AtomicMeasure.dirac(space, 1.0), fam, tol=1e-3)
    max_gaps = [max(g[i] for _, g in report.member_gaps) for i in range(len(ns))]
    rows = [{"n": n, "max_gap": g} for n, g in zip(ns, max_gaps)]
    return rows, {"gaps_below_1e-3_at_n_1e4": report.converged}


def _run_random_measure(cfg: ExperimentConfig):
    labels = ("a", "b", "c")
    ground = finite_ground_space(labels)
    nu1 = AtomicMeasure.from_atoms(ground, [("a", 0.7), ("b", 0.4)])
    nu2 = AtomicMeasure.from_atoms(ground, [("c", 1.1)])
    law = RandomMeasureLaw(
        labels,
        AtomicMeasure.from_atoms(ground, [("a", 0.5), ("c", 2.0)]),
        AtomicMeasure.from_atoms(finite_ground_space(labels), [(nu1, 0.6), (nu2, 0.9)]),
    )
    rng = np.random.default_rng(0)
    fam = f_phi_family(labels, [])
    worst_identity = 0.0
    for _ in range(200):
        phi_v, psi_v = rng.uniform(0, 2, (2, len(labels)))
        nu = AtomicMeasure.from_atoms(ground, [(e, w) for e, w in zip(labels, rng.uniform(0.1, 2, len(labels)))])
        fp = 1 - math.exp(-integrate(nu, lambda e: phi_v[labels.index(e)]).real)
        fq = 1 - math.exp(-integrate(nu, lambda e: psi_v[labels.index(e)]).real)
        fpq = 1 - math.exp(-integrate(nu, lambda e: (phi_v + psi_v)[labels.index(e)]).real)
        worst_identity = max(worst_identity, abs(fp * fq - (fp + fq - fpq)))
    schedule = [200.0, 400.0, 800.0, 1600.0]
    b_hat = recover_b_measure(lambda f: laplace_functional(law, f), labels, schedule)
    recovered = {e: 0.0 for e in labels}
    recovered.update({e: w for e, w in b_hat.atoms})
    truth = {e: 0.0 for e in labels}
    truth.update({e: w for e, w in law.b.atoms})
    rows = [{"label": e, "true_b": truth[e], "recovered_b": recovered[e],
             "abs_err": abs(truth[e] - recovered[e])} for e in labels]
    rows.append({"label": "product-identity", "true_b": 0.0, "recovered_b": worst_identity,
                 "abs_err": worst_identity})
    ok_b = max(abs(truth[e] - recovered[e]) for e in labels) < 1e-3
    return rows, {"product_identity_1e-12": worst_identity < 1e-12, "b_recovered_1e-3": ok_b, "family_size_ok": len(fam) == 0}


def _run_excursion(cfg: ExperimentConfig):
    rows = []
    ok = True
    for i, t in enumerate((0.5, 1.0, 2.0)):
        F = ExcursionFunctional(h=step_indicator(t), h_constant_after=t)
        lhs, se = empirical_lhs(
            F, cfg.eps, cfg.n_paths, cfg.dt, horizon=t + 1.0,
            seed=cfg.seed + i, workers=cfg.workers,
        )
        target = math.sqrt(2.0 / (math.pi * t))
        rows.append({"t": t, "lhs": lhs, "se": se, "target": target, "ratio": lhs / target})
        ok = ok and abs(lhs - target) <= 3.0 * se
    return rows, {"tail_matches_within_3se": ok}


def _run_fragmentation(cfg: ExperimentConfig):
    rows = []
    all_one = True
    for n in (1, 2, 5, 10, 100, 1000):
        s = block_uniform_state(n)
        g1 = g_p(s, 1)
        rows.append({"n": n, "G_1": g1, "max_coordinate": 1.0 / n})
        all_one = all_one and g1 == 1.0
    return rows, {"G1_exactly_one": all_one}


def _run_sw_approx(cfg: ExperimentConfig):
    def ramp(u):
        return min(max(u, 0.0), 1.0)

    def g(x):
        return x[0] * ramp((x[0] - 0.25) / 0.25)

    eps = 0.05
    poly = stone_weierstrass_p0(g, delta=0.25, eps=eps, degree_budget=int(cfg.m_max), arity=1)
    grid = np.linspace(0.0, 1.0, 50)
    errs = np.array([abs(g((x,)) - poly.evaluate((x,))) - eps * x for x in grid])
    rows = [{"degree": poly.degree, "max_excess_over_bound": float(errs.max()),
             "in_p0": int(poly.in_p0())}]
    return rows, {"weighted_bound_holds": bool(np.all(errs <= 1e-12)), "in_p0": poly.in_p0()}


def _run_prohorov_oracle(cfg: ExperimentConfig):
    from .metric_core import real_line

    rng = np.random.default_rng(cfg.seed)
    space = real_line()
    n_instances = min(cfg.n_paths, 500)
    rows = []
    worst = 0.0
    for i in range(n_instances):
        def draw():
            k = int(rng.integers(1, 5))
            return AtomicMeasure.from_atoms(
                space, [(float(rng.uniform(-2, 2)), float(rng.uniform(0.1, 2))) for _ in range(k)]
            )
        nu1, nu2 = draw(), draw()
        fast = prohorov_distance(nu1, nu2)
        oracle = prohorov_distance_bruteforce(nu1, nu2)
        diff = abs(fast - oracle)
        worst = max(worst, diff)
        rows.append({"instance": i, "fast": fast, "oracle": oracle, "abs_diff": diff})
    return rows, {"matches_oracle_1e-4": worst < 1e-4}


_RUNNERS: dict[str, Callable] = {
    "levy-recover": _run_levy_recover,
    "levy-converge": _run_levy_converge,
    "random-measure": _run_random_measure,
    "excursion": _run_excursion,
    "fragmentation": _run_fragmentation,
    "sw-approx": _run_sw_approx,
    "prohorov-oracle": _run_prohorov_oracle,
}


def _as_python_scalar(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    return v


def run(config: ExperimentConfig) -> ExperimentResult:
    """Dispatch to the command implementation and wrap the result."""
    config.validate()
    start = time.perf_counter()
    try:
        rows, verdicts = _RUNNERS[config.command](config)
    except UsageError:
        raise
    except Exception as exc:
        raise RuntimeError(f"command {config.command!r} failed: {exc}") from exc
    elapsed = time.perf_counter() - start
    rows = [{k: _as_python_scalar(v) for k, v in row.items()} for row in rows]
    verdicts = {k: bool(v) for k, v in verdicts.items()}
    return ExperimentResult(config.echo(), rows, verdicts, elapsed)


def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def emit(result: ExperimentResult, fmt: str, path: str) -> str:
    """Write the result file; numeric records are byte-reproducible."""
    if fmt == "csv":
        lines = []
        if result.rows:
            keys = list(result.rows[0].keys())
            lines.append(",".join(keys))
            for row in result.rows:
                lines.append(",".join(_fmt_value(row[k]) for k in keys))
        else:
            lines.append("")
        payload = "\n".join(lines) + "\n"
    elif fmt == "json":
        doc = {
            "config": result.config,
            "rows": result.rows,
            "verdicts": result.verdicts,
            "meta": {"version": result.version},
        }
        payload = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    else:
        raise UsageError(f"format: unknown format {fmt!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(payload)
    return path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="measura",
        description="Numerical experiments on boundedly finite measures.",
        epilog="commands:\n" + "\n".join(f"  {c:<16} {h}" for c, h in COMMAND_HELP.items()),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--command", required=True, choices=COMMANDS, metavar="CMD",
                        help="experiment to run (see the list below)")
    parser.add_argument("--seed", type=int, default=None, help="root seed; required for stochastic commands")
    parser.add_argument("--eps", type=float, default=0.01, help="starting level for killed Brownian motion")
    parser.add_argument("--dt", type=float, default=1e-4, help="simulation step")
    parser.add_argument("--n-paths", type=int, default=100_000, help="Monte Carlo sample count / instance count")
    parser.add_argument("--m-max", type=float, default=1e3, help="largest argument in limit schedules / degree budget")
    parser.add_argument("--dim", type=int, default=2, help="ambient dimension where applicable")
    parser.add_argument("--max-p", type=int, default=5, help="largest power-sum exponent")
    parser.add_argument("--tol", type=float, default=1e-2, help="verdict tolerance")
    parser.add_argument("--out", default=None, help="output path (default: <command>.<format>)")
    parser.add_argument("--format", choices=FORMATS, default="csv")
    parser.add_argument("--workers", type=int, default=None,
                        help="worker threads (default: MEASURA_WORKERS or 1)")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    workers = args.workers
    if workers is None:
        workers = int(os.environ.get("MEASURA_WORKERS", "1"))
    return ExperimentConfig(
        command=args.command,
        seed=args.seed,
        eps=args.eps,
        dt=args.dt,
        n_paths=args.n_paths,
        m_max=args.m_max,
        dim=args.dim,
        max_p=args.max_p,
        tol=args.tol,
        out=args.out,
        format=args.format,
        workers=workers,
    )


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        result = run(config)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    path = config.out or f"{config.command}.{config.format}"
    emit(result, config.format, path)
    for name, ok in result.verdicts.items():
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    print(f"wrote {path} ({len(result.rows)} rows, {result.wall_clock_s:.2f}s, v{result.version})")
    return 0 if result.passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
