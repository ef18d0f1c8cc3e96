"""Command-line front end.

Every command resolves a :class:`RunConfig` from defaults, an optional flat
``key=value`` file and the command-line flags (in that order of
precedence), runs, and writes one table whose header echoes the resolved
configuration and its SHA-256 digest.

Exit status: 0 success or PASS, 1 verification FAIL, 2 usage error,
3 divergence before ``t_end``.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from itertools import product
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import analysis, io
from .errors import DivergenceError, HypothesisError, TransportError
from .modes import DEFAULT_GUARD, METHODS, IntegratorConfig, integrate
from .pseudospectral import extract_modes, grid_of, integrate_pde
from .spectrum import (
    InitialData,
    ModelParams,
    ModeState,
    ModeTrajectory,
    build_initial_data,
    explicit_initial_data,
    hypothesis_threshold,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DIVERGED = 0, 1, 2, 3

COMMANDS = (
    "simulate",
    "simulate-pde",
    "verify-bounds",
    "blowup-fit",
    "inequalities",
    "sweep",
    "compare",
)
DATA_FAMILIES = ("threshold", "power")
COMPARE_TOL = 1e-6
_SEED = 20240531


class UsageError(Exception):
    pass


def _floats(text: str) -> tuple[float, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(float(v) for v in text.split(","))


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run description.

    `kappas`, `alphas` and `deltas` are the sweep axes; ``None`` means the
    single value of the matching scalar.  `input` names a trajectory file
    read by ``verify-bounds`` and ``blowup-fit`` instead of integrating.
    """

    command: str = "simulate"
    case_a: int = 1
    case_b: int = 1
    kappa: float = 0.0
    alpha: float = 1.0
    delta: float = 1.0
    p: float = 5.0
    data: str = "threshold"
    n_modes: int = 32
    grid_points: int | None = None
    dt: float = 1e-2
    tol: float = 1e-10
    t_end: float = 0.4
    stride: int = 1
    method: str = "rk4"
    guard: float = DEFAULT_GUARD
    cfl: float | None = None
    out: str | None = None
    format: str = "csv"
    input: str | None = None
    kappas: tuple[float, ...] | None = None
    alphas: tuple[float, ...] | None = None
    deltas: tuple[float, ...] | None = None
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.format not in ("csv", "json"):
            raise UsageError(f"format must be csv or json, got {self.format!r}")
        if self.data not in DATA_FAMILIES:
            raise UsageError(f"data must be one of {DATA_FAMILIES}, got {self.data!r}")
        if self.method not in METHODS:
            raise UsageError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.stride < 1:
            raise UsageError("stride must be >= 1")
        if self.jobs < 1:
            raise UsageError("jobs must be >= 1")
        if not (self.dt > 0 and self.tol > 0 and self.t_end >= 0):
            raise UsageError("dt and tol must be positive and t_end nonnegative")

    def params(self, **over: Any) -> ModelParams:
        kw = dict(
            a=self.case_a,
            b=self.case_b,
            kappa=self.kappa,
            alpha=self.alpha,
            delta=self.delta,
            n_modes=self.n_modes,
            grid_points=self.grid_points,
        )
        kw.update(over)
        return ModelParams(**kw)

    def initial_data(self, delta: float | None = None, n_modes: int | None = None) -> InitialData:
        delta = self.delta if delta is None else delta
        n = self.n_modes if n_modes is None else n_modes
        if self.data == "power":
            return build_initial_data(delta, self.p, n)
        coeffs = hypothesis_threshold(np.arange(1, n + 1, dtype=float), delta)
        return explicit_initial_data(coeffs, delta)

    def sample_times(self) -> tuple[float, ...]:
        k = max(1, int(round(self.t_end / self.dt)))
        ts = [min(self.t_end, self.t_end * j / k) for j in range(1, k + 1)]
        return tuple(ts)

    def integrator(self, t_end: float | None = None, t_eval=None) -> IntegratorConfig:
        return IntegratorConfig(
            dt=self.dt,
            method=self.method,
            tol=self.tol,
            t_end=self.t_end if t_end is None else t_end,
            t_eval=self.sample_times() if t_eval is None else t_eval,
            guard=self.guard,
        )

    def echo(self) -> dict[str, Any]:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out


_TYPES = {
    "command": str,
    "case_a": int,
    "case_b": int,
    "kappa": float,
    "alpha": float,
    "delta": float,
    "p": float,
    "data": str,
    "n_modes": int,
    "grid_points": int,
    "dt": float,
    "tol": float,
    "t_end": float,
    "stride": int,
    "method": str,
    "guard": float,
    "cfl": float,
    "out": str,
    "format": str,
    "input": str,
    "kappas": _floats,
    "alphas": _floats,
    "deltas": _floats,
    "jobs": int,
}
_NULLABLE = {"grid_points", "cfl", "out", "input", "kappas", "alphas", "deltas"}


def _convert(key: str, raw: str) -> Any:
    if key in _NULLABLE and raw.strip().lower() in ("none", "null"):
        return None
    try:
        return _TYPES[key](raw.strip())
    except ValueError:
        raise UsageError(f"bad value for {key}: {raw!r}") from None


def read_config_file(path: str | Path) -> dict[str, Any]:
    """Parse a flat ``key=value`` file; ``#`` starts a comment.

    Keys may use dashes or underscores.  Unknown keys raise
    :class:`UsageError` naming the key.
    """
    out: dict[str, Any] = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror}") from None
    for i, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{i}: expected key=value")
        key = key.strip().replace("-", "_")
        if key not in _TYPES:
            raise UsageError(f"unknown config key: {key}")
        out[key] = _convert(key, raw)
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="periodic-transport",
        description="Mode-hierarchy and collocation runs with blow-up diagnostics.",
    )
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="flat key=value file; flags override it")
    ap.add_argument("--case-a", type=int, choices=(0, 1))
    ap.add_argument("--case-b", type=int, choices=(0, 1))
    ap.add_argument("--kappa", type=float)
    ap.add_argument("--alpha", type=float)
    ap.add_argument("--delta", type=float)
    ap.add_argument("--p", type=float, help="decay exponent of the power family")
    ap.add_argument("--data", choices=DATA_FAMILIES, help="initial coefficients")
    ap.add_argument("--n-modes", type=int)
    ap.add_argument("--grid-points", type=int)
    ap.add_argument("--dt", type=float, help="largest step and sampling interval")
    ap.add_argument("--tol", type=float)
    ap.add_argument("--t-end", type=float)
    ap.add_argument("--stride", type=int, help="keep every stride-th sample")
    ap.add_argument("--method", choices=METHODS)
    ap.add_argument("--guard", type=float)
    ap.add_argument("--cfl", type=float)
    ap.add_argument("--out")
    ap.add_argument("--format", choices=("csv", "json"))
    ap.add_argument("--input", help="trajectory file to analyse instead of integrating")
    ap.add_argument("--kappas", type=_floats, help="comma-separated sweep axis")
    ap.add_argument("--alphas", type=_floats)
    ap.add_argument("--deltas", type=_floats)
    ap.add_argument("--jobs", type=int)
    return ap


def resolve_config(argv: Sequence[str]) -> RunConfig:
    ap = build_parser()
    try:
        ns = ap.parse_args(list(argv))
    except SystemExit as exc:
        if exc.code == 0:
            raise
        raise UsageError("invalid command line") from None
    values: dict[str, Any] = {}
    if ns.config:
        values.update(read_config_file(ns.config))
    for key, val in vars(ns).items():
        if key != "config" and val is not None:
            values[key] = val
    return RunConfig(**values)


# ---------------------------------------------------------------- outputs


def _out_path(cfg: RunConfig) -> Path:
    return Path(cfg.out or f"{cfg.command}.{cfg.format}")


def _emit(cfg: RunConfig, header, rows, summary) -> Path:
    path = _out_path(cfg)
    io.write_table(path, cfg.format, header, rows, cfg.echo(), summary)
    return path


def _report(summary: dict[str, Any]) -> None:
    for k, v in summary.items():
        print(f"{k}: {io.format_value(v)}")


def _strided(samples: Sequence, stride: int) -> list:
    keep = list(samples[::stride])
    if keep[-1] is not samples[-1]:
        keep.append(samples[-1])
    return keep


def _trajectory_rows(samples: Sequence[ModeState]):
    for s in samples:
        for n, w in enumerate(s.w, 1):
            yield s.t, n, float(w)


def load_trajectory(path: str | Path, params: ModelParams, init: InitialData) -> ModeTrajectory:
    """Rebuild a trajectory from a ``t,n,w`` table."""
    table = io.read_table(path)
    if tuple(table["header"]) != io.TRAJECTORY_HEADER:
        raise UsageError(f"{path} is not a trajectory table")
    by_t: dict[float, dict[int, float]] = {}
    for t, n, w in table["rows"]:
        by_t.setdefault(float(t), {})[int(n)] = float(w)
    if not by_t:
        raise UsageError(f"{path} holds no samples")
    samples = []
    for t in sorted(by_t):
        modes = by_t[t]
        samples.append(ModeState(t, [modes[n] for n in range(1, max(modes) + 1)]))
    n_modes = samples[0].n_modes
    return ModeTrajectory(
        dataclasses.replace(params, n_modes=n_modes, grid_points=None),
        init.truncated(n_modes),
        tuple(samples),
    )


def _mode_run(cfg: RunConfig, params: ModelParams | None = None, init=None):
    """Integrate the hierarchy; returns (trajectory, diverged_at or None)."""
    params = cfg.params() if params is None else params
    init = cfg.initial_data(params.delta, params.n_modes) if init is None else init
    try:
        return integrate(init, params, cfg.integrator()), None
    except DivergenceError as exc:
        return exc.partial, exc.t_last


def _trajectory_for(cfg: RunConfig):
    params = cfg.params()
    init = cfg.initial_data()
    if cfg.input:
        return load_trajectory(cfg.input, params, init), None
    return _mode_run(cfg, params, init)


# ---------------------------------------------------------------- commands


def cmd_simulate(cfg: RunConfig) -> int:
    traj, t_div = _mode_run(cfg)
    summary = {"status": "diverged" if t_div is not None else "complete"}
    if t_div is not None:
        summary["t_diverged"] = t_div
    summary["samples"] = len(traj.samples)
    _emit(cfg, io.TRAJECTORY_HEADER, _trajectory_rows(_strided(traj.samples, cfg.stride)), summary)
    _report(summary)
    return EXIT_DIVERGED if t_div is not None else EXIT_OK


def cmd_simulate_pde(cfg: RunConfig) -> int:
    params = cfg.params()
    init = cfg.initial_data()
    t_div = None
    try:
        snaps = integrate_pde(init, params, cfg.integrator(), cfl=cfg.cfl)
    except DivergenceError as exc:
        snaps, t_div = exc.partial, exc.t_last
    x = grid_of(snaps[0])

    def rows():
        for f in _strided(snaps, cfg.stride):
            for xj, uj in zip(x, f.values()):
                yield f.t, float(xj), float(uj)

    summary = {"status": "diverged" if t_div is not None else "complete"}
    if t_div is not None:
        summary["t_diverged"] = t_div
    summary["grid_points"] = params.grid_points
    _emit(cfg, io.FIELD_HEADER, rows(), summary)
    _report(summary)
    return EXIT_DIVERGED if t_div is not None else EXIT_OK


def cmd_verify_bounds(cfg: RunConfig) -> int:
    traj, t_div = _trajectory_for(cfg)
    try:
        rep = analysis.verify_bounds(traj, cfg.tol)
    except HypothesisError as exc:
        print(f"FAIL: {exc}", file=sys.stderr)
        return EXIT_FAIL
    violation = rep.first_violation
    summary = {
        "verdict": "PASS" if rep.passed else "FAIL",
        "min_margin": rep.min_margin,
        "tol_bound": rep.tol_bound,
        "regime": rep.regime,
        "first_violation": "none" if violation is None else f"t={violation[0]!r} n={violation[1]}",
    }
    if t_div is not None:
        summary["t_diverged"] = t_div
    _emit(cfg, io.BOUND_HEADER, rep.rows(), summary)
    _report(summary)
    if t_div is not None:
        return EXIT_DIVERGED
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_blowup_fit(cfg: RunConfig) -> int:
    traj, t_div = _trajectory_for(cfg)
    fit = analysis.estimate_blowup_time(traj)
    summary = {
        "verdict": fit.verdict,
        "T_fit": fit.T_fit,
        "bound": fit.bound,
        "tol_fit": fit.tol_fit,
        "check": "PASS" if fit.passed else "FAIL",
    }
    if t_div is not None:
        summary["t_diverged"] = t_div
    rows = ((f.t, f.rho, f.gamma, f.C, f.residual) for f in fit.fits)
    _emit(cfg, io.FIT_HEADER, rows, summary)
    _report(summary)
    if t_div is not None:
        return EXIT_DIVERGED
    return EXIT_OK if fit.passed else EXIT_FAIL


def inequality_checks(cfg: RunConfig) -> list[tuple[str, Any, bool]]:
    """Auxiliary inequalities at the configured parameters."""
    d, k, a = cfg.delta, cfg.kappa, cfg.alpha
    kc = analysis.critical_kappa(d)
    checks: list[tuple[str, Any, bool]] = [("critical_kappa", kc, True)]
    if k > 0:
        above = float(analysis.g_func(1.0 / k, d, k)) > 1.0
        checks.append(("g(1/kappa)>1 iff kappa<critical", above, above == (k < kc)))
        cross = analysis.g_crossings(d, k)
        # g(1/kappa) > 1 forces a crossing before 1/kappa
        ok = bool(cross) and cross[0] <= 1.0 / k if above else True
        checks.append(("first g=1 crossing", cross[0] if cross else None, ok))
    ratio = analysis.minorant_term_ratio(cfg.t_end, d, k, cfg.n_modes)
    checks.append(("minorant term ratio at t_end", ratio, True))
    checks.append(
        ("minorant partial sum at t_end", analysis.minorant_partial_sum(cfg.t_end, d, k, cfg.n_modes), True)
    )
    if 0 < a < 1 and k > 0:
        ts = np.linspace(0.0, cfg.t_end, 21)
        h_min = min(analysis.h_func(n, float(t), k, a, d) for n in range(2, 17) for t in ts)
        checks.append(("min h over n<=16, t<=t_end", h_min, h_min >= -1e-10))
    rng = np.random.default_rng(_SEED)
    amgm_ok = True
    for _ in range(1000):
        n = int(rng.integers(2, 33))
        amgm_ok &= analysis.amgm_rearrangement_check(rng.random(n - 1), n)[2]
    checks.append(("AM-GM rearrangement (1000 draws)", bool(amgm_ok), bool(amgm_ok)))
    n_sys = min(cfg.n_modes, 16)
    params = ModelParams(kappa=k, alpha=a, delta=d, n_modes=n_sys)
    init = cfg.initial_data(d, n_sys)
    icfg = cfg.integrator()
    try:
        hi = analysis.integrate_asymmetric(init, params, icfg).modes()
        lo = analysis.integrate_asymmetric(init, params, icfg, symmetrized=True).modes()
        gap = float(np.min(hi - lo))
        checks.append(("asymmetric minus symmetrized (min)", gap, gap >= -cfg.tol))
    except DivergenceError as exc:
        checks.append(("asymmetric vs symmetrized", f"diverged at t={exc.t_last!r}", False))
    return checks


def cmd_inequalities(cfg: RunConfig) -> int:
    checks = inequality_checks(cfg)
    ok = all(c[2] for c in checks)
    summary = {"verdict": "PASS" if ok else "FAIL"}
    _emit(cfg, io.CHECK_HEADER, checks, summary)
    for name, value, passed in checks:
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {io.format_value(value)}")
    return EXIT_OK if ok else EXIT_FAIL


def _in_theorem_range(kappa: float, alpha: float, delta: float) -> bool:
    if kappa == 0:
        return True
    return alpha <= 1 and kappa < analysis.critical_kappa(delta)


def sweep_row(cfg: RunConfig, kappa: float, alpha: float, delta: float) -> tuple:
    """One sweep row; failures are reported in the ``pass`` column."""
    c = dataclasses.replace(cfg, kappa=kappa, alpha=alpha, delta=delta)
    try:
        params = c.params()
        bound = analysis.theorem_blowup_bound(params)
        traj, _ = _mode_run(c, params)
        fit = analysis.estimate_blowup_time(traj)
    except (TransportError, ValueError) as exc:
        return kappa, alpha, delta, None, None, f"ERROR:{type(exc).__name__}"
    if not _in_theorem_range(kappa, alpha, delta):
        status = "INFO"
    else:
        status = "PASS" if fit.passed else "FAIL"
    return kappa, alpha, delta, fit.T_fit, bound, status


def _sweep_row_args(args):
    return sweep_row(*args)


def sweep(cfg: RunConfig) -> list[tuple]:
    """Rows for every (kappa, alpha, delta) combination, sorted by that key."""
    ks = (cfg.kappa,) if cfg.kappas is None else cfg.kappas
    al = (cfg.alpha,) if cfg.alphas is None else cfg.alphas
    ds = (cfg.delta,) if cfg.deltas is None else cfg.deltas
    grid = sorted(set(product(ks, al, ds)))
    jobs = [(cfg, *g) for g in grid]
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            return list(pool.map(_sweep_row_args, jobs))
    return [sweep_row(*j) for j in jobs]


def cmd_sweep(cfg: RunConfig) -> int:
    rows = sweep(cfg)
    bad = sum(1 for r in rows if r[5] in ("FAIL",) or r[5].startswith("ERROR"))
    summary = {"rows": len(rows), "failed": bad}
    _emit(cfg, io.SWEEP_HEADER, rows, summary)
    for r in rows:
        print(",".join(io.format_value(v) for v in r))
    return EXIT_FAIL if bad else EXIT_OK


def compare_solvers(cfg: RunConfig) -> tuple[list[tuple], float]:
    """Modes at ``t_end`` from both solvers and their relative gaps.

    The collocation run keeps the band ``n <= n_modes`` and compares the
    first ``n_modes // 2`` modes.
    """
    params = cfg.params()
    if params.case != (1, 1):
        raise UsageError("compare needs (a, b) = (1, 1)")
    init = cfg.initial_data()
    icfg = IntegratorConfig(
        dt=cfg.dt, method=cfg.method, tol=cfg.tol, t_end=cfg.t_end, t_eval=(cfg.t_end,), guard=cfg.guard
    )
    ref = integrate(init, params, icfg).final.w
    pde = integrate_pde(init, params, icfg, cfl=cfg.cfl)[-1]
    n_cmp = max(1, params.n_modes // 2)
    w_pde, _ = extract_modes(pde, n_cmp)
    rows = []
    worst = 0.0
    for n in range(1, n_cmp + 1):
        a, b = float(ref[n - 1]), float(w_pde.w[n - 1])
        rel = abs(a - b) / max(abs(a), np.finfo(float).tiny)
        worst = max(worst, rel)
        rows.append((n, a, b, rel))
    return rows, worst


def cmd_compare(cfg: RunConfig) -> int:
    try:
        rows, worst = compare_solvers(cfg)
    except DivergenceError as exc:
        print(f"diverged at t={exc.t_last!r}", file=sys.stderr)
        return EXIT_DIVERGED
    ok = worst < COMPARE_TOL
    summary = {"max_rel_diff": worst, "verdict": "PASS" if ok else "FAIL"}
    _emit(cfg, io.COMPARE_HEADER, rows, summary)
    _report(summary)
    return EXIT_OK if ok else EXIT_FAIL


_DISPATCH = {
    "simulate": cmd_simulate,
    "simulate-pde": cmd_simulate_pde,
    "verify-bounds": cmd_verify_bounds,
    "blowup-fit": cmd_blowup_fit,
    "inequalities": cmd_inequalities,
    "sweep": cmd_sweep,
    "compare": cmd_compare,
}


def run(cfg: RunConfig) -> int:
    try:
        return _DISPATCH[cfg.command](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TransportError, ValueError) as exc:
        # invalid parameter combinations surface here from the library
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = resolve_config(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TypeError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
