"""``pdk``: solve, check, simulate and sweep from a JSON config or a preset name.

Exit codes: 0 success, 1 configuration or validation error, 2 numerical
failure (including a failed optimality check).
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .barrier import b_star
from .errors import DomainError, ModelError, NumericalError
from .levy import PRESETS, ProblemSpec, preset
from .scale import bases
from .simulate import SimConfig, discounted_dividends, sample_path, simulate_value, block_rng
from .sweeps import FIGURE_GRIDS, Table, dominance_panel, h_curve, paper_figure, sensitivity
from .value import value_function
from .verify import hjb_check

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


class ConfigError(Exception):
    pass


def _range(text: str) -> np.ndarray:
    try:
        a, b, n = text.split(":")
        n = int(n)
        lo, hi = float(a), float(b)
    except ValueError as exc:
        raise ConfigError(f"expected a:b:n, got {text!r}") from exc
    if n < 1 or not hi >= lo:
        raise ConfigError(f"bad range {text!r}")
    return np.linspace(lo, hi, n)


def _barrier(text: str) -> float:
    return math.inf if text.lower() in ("inf", "+inf", "infinity") else float(text)


def load_spec(source: str, overrides: dict | None = None) -> ProblemSpec:
    path = Path(source)
    if path.is_file():
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{source}: invalid JSON: {exc}") from exc
        spec = ProblemSpec.from_dict(doc)
    elif source in PRESETS:
        spec = preset(source)
    else:
        raise ConfigError(f"{source}: no such file or preset (presets: {', '.join(PRESETS)})")
    kw = {k: v for k, v in (overrides or {}).items() if v is not None}
    return spec.replace(**kw) if kw else spec


def _emit(payload: dict):
    print(json.dumps(payload, sort_keys=True))


def _note(args, msg: str):
    if not args.quiet:
        print(msg, file=sys.stderr)


def cmd_solve(args, spec: ProblemSpec) -> int:
    sol = b_star(spec)
    out = {k: getattr(sol, k) for k in
           ("b_star", "b_bar", "phi_q", "phi_qr", "positive_criterion", "smooth_fit_residual")}
    if args.dump_basis:
        bq, bqr = bases(spec)
        out["basis"] = {"q": bq.to_dict(), "q_plus_r": bqr.to_dict()}
    if args.values:
        xs = _range(args.values)
        v = value_function(spec, sol.b_star)
        table = Table(("x", "v", "v_prime"),
                      [(float(x), float(v(x)), float(v(x, 1))) for x in xs])
        table.to_csv(args.csv)
        out["values_csv"] = str(args.csv)
        _note(args, f"wrote {len(xs)} rows to {args.csv}")
    _emit(out)
    return EXIT_OK


def cmd_check(args, spec: ProblemSpec) -> int:
    grid = np.geomspace(1e-3, args.grid_max, args.grid_points) if args.grid_max else None
    report = hjb_check(spec, grid=grid, barrier=args.force_b)
    doc = report.to_dict()
    if not args.details:
        doc["details"] = [d for d in doc["details"] if not d["ok"]]
    _emit(doc)
    _note(args, f"{'PASS' if report.passed else 'FAIL'}: barrier {report.barrier:.6g}, "
                f"max HJB slack {report.max_hjb_slack:.3e}")
    return EXIT_OK if report.passed else EXIT_NUMERIC


def cmd_simulate(args, spec: ProblemSpec) -> int:
    b = b_star(spec).b_star if args.b is None else args.b
    cfg = SimConfig(n_paths=args.paths, horizon_t=args.horizon, dt=args.dt, seed=args.seed,
                    antithetic=args.antithetic, threads=max(args.threads, 1))
    est = simulate_value(spec, b, args.x0, cfg)
    analytic = 0.0 if args.x0 < 0 else (None if math.isinf(b) else float(value_function(spec, b)(args.x0)))
    z = None
    if analytic is not None:
        z = 0.0 if est.std_error == 0 else (est.mean - analytic) / est.std_error
    _emit({**est.to_dict(), "b": b if math.isfinite(b) else "inf", "x0": args.x0,
           "analytic": analytic, "z": z})
    if args.dump_paths:
        # a stream key no estimation block uses
        rng = block_rng(args.seed, 2**32)
        with open(args.dump_file, "w") as fh:
            for i in range(args.dump_paths):
                log = sample_path(spec, b, args.x0, rng, cfg.horizon_t)
                fh.write(json.dumps({"path": i, "dividends": discounted_dividends(log, spec.q),
                                     "events": [e.to_dict() for e in log]}) + "\n")
        _note(args, f"wrote {args.dump_paths} event logs to {args.dump_file}")
    return EXIT_OK


def cmd_sweep(args, spec: ProblemSpec) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.paper_figure is not None:
        paths = paper_figure(args.paper_figure, out, threads=args.threads)
        _emit({"figure": args.paper_figure, "files": [str(p) for p in paths]})
        return EXIT_OK
    if args.kind == "h":
        grid = _range(args.grid) if args.grid else None
        table, name = h_curve(spec, None if grid is None else grid[grid > 0]), "h_curve.csv"
    elif args.kind == "dominance":
        table, name = dominance_panel(spec), "dominance.csv"
    else:
        if args.param is None:
            raise ConfigError("sensitivity sweeps need --param")
        grid = _range(args.grid) if args.grid else FIGURE_GRIDS[args.param]
        table = sensitivity(spec, args.param, grid, threads=args.threads)
        name = f"sensitivity_{args.param}.csv"
    path = out / name
    table.to_csv(path)
    _emit({"file": str(path), "rows": len(table.rows),
           "skipped": [{"value": v, "reason": r} for v, r in table.skipped]})
    return EXIT_OK


def _env_threads() -> int:
    try:
        return max(int(os.environ.get("PDK_THREADS", "1")), 1)
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pdk", description="Periodic dividend barriers for "
                                "spectrally negative Levy processes with hyperexponential jumps.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", nargs="?", default="case1p",
                        help="JSON config file or preset name (default case1p)")
    common.add_argument("--quiet", action="store_true", help="print only the JSON payload")
    common.add_argument("--threads", type=int, default=_env_threads(),
                        help="worker threads (default $PDK_THREADS or 1)")
    for name in ("sigma", "c", "kappa", "lambda", "q", "r"):
        common.add_argument(f"--set-{name}", type=float, dest=f"set_{name}",
                            help=f"override {name} in the config")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", parents=[common], help="optimal barrier and value function")
    s.add_argument("--values", metavar="XMIN:XMAX:N")
    s.add_argument("--csv", default="value_function.csv")
    s.add_argument("--dump-basis", action="store_true")

    s = sub.add_parser("check", parents=[common], help="verify the optimality conditions")
    s.add_argument("--force-b", type=float)
    s.add_argument("--grid-points", type=int, default=64)
    s.add_argument("--grid-max", type=float)
    s.add_argument("--details", action="store_true", help="include passing grid points")

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo estimate of v_b(x0)")
    s.add_argument("--b", type=_barrier, help="barrier (default b*; 'inf' for no dividends)")
    s.add_argument("--x0", type=float, default=2.0)
    s.add_argument("--paths", type=int, default=200_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--dt", type=float, default=1e-3)
    s.add_argument("--horizon", type=float)
    s.add_argument("--antithetic", action="store_true")
    s.add_argument("--dump-paths", type=int, default=0, metavar="N")
    s.add_argument("--dump-file", default="paths.ndjson")

    s = sub.add_parser("sweep", parents=[common], help="write sweep CSVs")
    s.add_argument("--kind", choices=("sensitivity", "h", "dominance"), default="sensitivity")
    s.add_argument("--param", choices=("c", "kappa", "lambda", "r"))
    s.add_argument("--grid", metavar="A:B:N")
    s.add_argument("--paper-figure", type=int, choices=range(1, 7))
    s.add_argument("--out", default="sweeps")
    return p


COMMANDS = {"solve": cmd_solve, "check": cmd_check, "simulate": cmd_simulate, "sweep": cmd_sweep}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    overrides = {"sigma": args.set_sigma, "c": args.set_c, "kappa": args.set_kappa,
                 "lam": args.set_lambda, "q": args.set_q, "r": args.set_r}
    try:
        spec = load_spec(args.config, overrides)
        return COMMANDS[args.command](args, spec)
    except (ConfigError, ModelError, DomainError, OSError) as exc:
        print(f"pdk: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, ArithmeticError, ValueError, RuntimeError) as exc:
        print(f"pdk: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
