"""Command line front end: simulate, converge, bench, energy.

Exit codes: 0 on success (including runs that end in material failure,
which is a physical outcome, not an error), 1 for bad usage or bad
configuration, 2 for unexpected internal errors.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .config import ConfigError, RunConfig, parse_config
from .driver import (QuadraticRamp, RunReport, TimeGrid, benchmark_complexity,
                     convergence_order, relative_error, simulate, strain_at)
from .energy import free_energy_trajectory, psi_quadratic_exact

__all__ = ["main"]

_CSV_HEADER = "step,t,eps,eps_ve,eps_vp,alpha,tau,D,Y_ve,f_trial"
_DEFAULT_SIZES = "256,512,1024,2048,4096"


def _g(x: float) -> str:
    return format(float(x), ".17g")


def _resolve_mode(mode: str, n: int) -> str:
    if mode == "auto":
        return "fft" if n > 256 else "direct"
    return mode


def _output_path(args, config: RunConfig) -> str:
    if getattr(args, "out", None):
        return args.out
    if config.output_path:
        return config.output_path
    raise ConfigError(
        "no output path: pass --out or set output_path in [run]")


def _write_history_csv(path: str, report: RunReport) -> None:
    h = report.history
    dt = report.grid.dt
    cols = (h.eps_total, h.eps_ve, h.eps_vp, h.alpha, h.tau, h.D,
            h.Y_ve, h.f_trial)
    lines = [_CSV_HEADER]
    for k in range(len(h)):
        row = [str(k), _g(k * dt)] + [_g(c[k]) for c in cols]
        lines.append(",".join(row))
    lines.append("")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines))


def _write_summary(path: str, report: RunReport) -> None:
    lines = [
        "[result]",
        f"status = {report.status}",
        f"steps_completed = {len(report.history) - 1}",
        f"final_damage = {_g(report.final_damage)}",
        f"wall_time_s = {_g(report.wall_time)}",
    ]
    if report.failed_step is not None:
        lines.append(f"failed_at_step = {report.failed_step}")
    lines.append("")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines))


def cmd_simulate(args) -> int:
    config = parse_config(args.config)
    out = _output_path(args, config)
    report = simulate(config.material, config.grid, config.load,
                      energy_mode=config.energy_mode)
    _write_history_csv(out, report)
    _write_summary(out + ".summary", report)
    print(f"status: {report.status}")
    print(f"steps completed: {len(report.history) - 1} of {config.grid.N}")
    print(f"final damage: {report.final_damage:.6g}")
    print(f"wall time: {report.wall_time:.3f} s")
    print(f"wrote {out} and {out}.summary")
    return 0


def _tau_series(task) -> np.ndarray:
    """Run one simulation and return its stress series (worker-safe)."""
    material, grid, load, energy_mode = task
    report = simulate(material, grid, load, energy_mode=energy_mode)
    if report.failed_step is not None:
        raise RuntimeError(
            f"material failed at step {report.failed_step} on the "
            f"N={grid.N} grid; a convergence study needs completed runs")
    return np.array(report.history.tau)


def _worker_count() -> int:
    raw = os.environ.get("FRACPLAST_WORKERS", "")
    if not raw:
        return 1
    try:
        return max(int(raw), 1)
    except ValueError:
        print(f"warning: ignoring non-integer FRACPLAST_WORKERS={raw!r}",
              file=sys.stderr)
        return 1


def _stress_errors(config: RunConfig, grids: list[TimeGrid]) -> list[float]:
    ref_grid = TimeGrid(T=config.grid.T, N=grids[-1].N * 8)
    tasks = [(config.material, g, config.load, config.energy_mode)
             for g in grids + [ref_grid]]
    workers = _worker_count()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as ex:
            series = list(ex.map(_tau_series, tasks))
    else:
        series = [_tau_series(t) for t in tasks]
    ref = series[-1]
    return [relative_error(ref, s) for s in series[:-1]]


def _energy_errors(config: RunConfig, grids: list[TimeGrid]) -> list[float]:
    load = config.load
    if not isinstance(load, QuadraticRamp):
        raise ConfigError(
            "the energy observable has an analytic reference only for the "
            "quadratic_ramp program")
    if load.T != config.grid.T:
        raise ConfigError(
            "the energy observable needs the ramp horizon to equal the "
            f"grid horizon (got ramp T={load.T!r}, grid T={config.grid.T!r})")
    if load.T != 1.0:
        print("warning: the analytic energy reference is calibrated for "
              "T = 1; orders for other horizons are indicative only",
              file=sys.stderr)
    params = config.material
    errs = []
    for g in grids:
        t = g.times()
        eps = strain_at(load, t)
        mode = _resolve_mode(config.energy_mode, g.N)
        psi = free_energy_trajectory(eps, params.beta_E, params.E_pseudo,
                                     g.dt, mode=mode)
        exact = np.array([psi_quadratic_exact(tk, load.T, params.E_pseudo,
                                              params.beta_E) for tk in t])
        scale = float(np.max(np.abs(exact)))
        errs.append(float(np.max(np.abs(exact - psi))) / scale)
    return errs


def cmd_converge(args) -> int:
    if args.levels < 2:
        print("error: --levels must be at least 2 to measure an order",
              file=sys.stderr)
        return 1
    config = parse_config(args.config)
    grids = [TimeGrid(T=config.grid.T, N=config.grid.N * 2 ** j)
             for j in range(args.levels)]
    if args.observable == "stress":
        errs = _stress_errors(config, grids)
    else:
        errs = _energy_errors(config, grids)
    orders = [float("nan")] + [convergence_order(errs[j - 1], errs[j])
                               for j in range(1, len(errs))]
    print(f"observable: {args.observable}")
    print(f"{'N':>10} {'dt':>14} {'error':>14} {'order':>8}")
    rows = []
    for g, err, order in zip(grids, errs, orders):
        otext = "--" if math.isnan(order) else f"{order:.3f}"
        print(f"{g.N:>10} {g.dt:>14.6e} {err:>14.6e} {otext:>8}")
        rows.append((g.N, g.dt, err, order))
    if args.out:
        lines = ["N,dt,error,order"]
        lines += [f"{n},{_g(dt)},{_g(err)},{_g(order)}"
                  for n, dt, err, order in rows]
        lines.append("")
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines))
        print(f"wrote {args.out}")
    return 0


def cmd_bench(args) -> int:
    try:
        sizes = [int(tok) for tok in args.sizes.split(",") if tok.strip()]
    except ValueError:
        print(f"error: --sizes must be comma-separated integers, "
              f"got {args.sizes!r}", file=sys.stderr)
        return 1
    if not sizes or any(n < 1 for n in sizes) \
            or any(b <= a for a, b in zip(sizes, sizes[1:])):
        print("error: --sizes must be strictly ascending positive integers",
              file=sys.stderr)
        return 1
    if args.trials < 1:
        print("error: --trials must be at least 1", file=sys.stderr)
        return 1
    modes = ("direct", "fft") if args.mode == "auto" else (args.mode,)
    results = {m: benchmark_complexity(sizes, m, trials=args.trials)
               for m in modes}

    header = f"{'N':>10}" + "".join(f"{m + '_s':>14}" for m in modes)
    print(header)
    for i, n in enumerate(sizes):
        row = f"{n:>10}"
        for m in modes:
            row += f"{results[m].median_seconds[i]:>14.6e}"
        print(row)
    for m in modes:
        slope = results[m].slope
        if slope is None:
            print(f"{m} slope: omitted (single size)")
        else:
            print(f"{m} slope: {slope:.3f}")
    if len(modes) == 2:
        direct_t = results["direct"].median_seconds
        fft_t = results["fft"].median_seconds
        crossover = next((n for n, d, f in zip(sizes, direct_t, fft_t)
                          if f < d), None)
        if crossover is None:
            print("break-even: direct route faster at every tested size")
        else:
            print(f"break-even: fft route faster from N={crossover}")
    return 0


def cmd_energy(args) -> int:
    config = parse_config(args.config)
    out = _output_path(args, config)
    params = config.material
    grid = config.grid
    mode = _resolve_mode(args.mode or config.energy_mode, grid.N)
    t = grid.times()
    eps = strain_at(config.load, t)
    psi = free_energy_trajectory(eps, params.beta_E, params.E_pseudo,
                                 grid.dt, mode=mode)
    load = config.load
    has_exact = isinstance(load, QuadraticRamp) and grid.T <= load.T
    lines = ["t,psi,psi_exact,abs_err"]
    for k, tk in enumerate(t):
        if has_exact:
            exact = psi_quadratic_exact(tk, load.T, params.E_pseudo,
                                        params.beta_E)
            err = abs(psi[k] - exact)
            lines.append(f"{_g(tk)},{_g(psi[k])},{_g(exact)},{_g(err)}")
        else:
            lines.append(f"{_g(tk)},{_g(psi[k])},nan,nan")
    lines.append("")
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines))
    print(f"mode: {mode}")
    print(f"final free energy: {psi[-1]:.12g}")
    if has_exact:
        final_exact = psi_quadratic_exact(t[-1], load.T, params.E_pseudo,
                                          params.beta_E)
        print(f"final abs error vs closed form: {abs(psi[-1] - final_exact):.6e}")
    print(f"wrote {out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracplast",
        description="Fractional visco-elasto-plasticity with damage: "
                    "run simulations, convergence studies, and benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate",
                       help="run one simulation and write the history CSV")
    p.add_argument("--config", required=True, help="INI run configuration")
    p.add_argument("--out", help="output CSV path (overrides the config)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("converge",
                       help="measure the observed convergence order over "
                            "a ladder of step halvings")
    p.add_argument("--config", required=True,
                   help="INI run configuration; its grid is the coarsest "
                        "level")
    p.add_argument("--levels", type=int, default=5,
                   help="number of grids, each halving dt (default 5)")
    p.add_argument("--observable", choices=("stress", "energy"),
                   default="stress",
                   help="series to measure errors on (default stress)")
    p.add_argument("--out", help="optional CSV path for the table")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("bench",
                       help="time free-energy trajectories and fit the "
                            "cost scaling exponent")
    p.add_argument("--sizes", default=_DEFAULT_SIZES,
                   help=f"comma-separated ascending step counts "
                        f"(default {_DEFAULT_SIZES})")
    p.add_argument("--mode", choices=("direct", "fft", "auto"),
                   default="auto",
                   help="evaluation route; auto times both (default auto)")
    p.add_argument("--trials", type=int, default=3,
                   help="timed repetitions per size (default 3)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("energy",
                       help="write the free-energy trajectory for the "
                            "configured load program")
    p.add_argument("--config", required=True, help="INI run configuration")
    p.add_argument("--out", help="output CSV path (overrides the config)")
    p.add_argument("--mode", choices=("auto", "direct", "fft"),
                   help="evaluation route (default: the config's setting)")
    p.set_defaults(func=cmd_energy)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
