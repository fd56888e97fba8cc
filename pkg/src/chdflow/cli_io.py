"""Config parsing, CSV writers, and the command-line front end.

Config files are `key = value` lines with `#` comments.  Unknown keys are a
hard error so physical parameters cannot be silently misspelled.  All
writers emit deterministic plain-text CSV at full double precision.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .analysis import Regime, TimeSeries, classify_regime, extract_period, spectrum
from .compact import SchemeOrder
from .ddc import HISTORY_COLUMNS, DdcConfig, RunResult, SolverError, run
from .grid import ConservedState, Grid, PhysicalParams, ScalarField, make_grid
from .poisson import PoissonSettings, PoissonStrategy
from .verification import (BurgersSolution, ConvergenceReport, run_burgers,
                           run_cd1d, run_cd2d)

FLOAT_FMT = "%.17g"


class ConfigError(ValueError):
    """Malformed, unknown, or out-of-range configuration input."""


# (key, type, default); REQUIRED means the key must be present.
REQUIRED = object()
CONFIG_KEYS = {
    "pr": (float, 1.0),
    "le": (float, 2.0),
    "ra": (float, REQUIRED),
    "lambda": (float, 1.0),
    "aspect": (float, 2.0),
    "nx": (int, REQUIRED),
    "ny": (int, REQUIRED),
    "scheme": (str, "chd4"),
    "cfl": (float, 0.4),
    "dt": (float, None),
    "t_end": (float, 5.0),
    "inner_tol": (float, 1e-8),
    "steady_tol": (float, 1e-10),
    "poisson.relax": (float, 1.8),
    "poisson.tol": (float, 1e-10),
    "poisson.strategy": (str, "multigrid"),
    "monitor.x": (float, None),
    "monitor.y": (float, None),
    "output.dir": (str, "."),
    "output.every": (int, 10),
}

SCHEMES = {"chd4": SchemeOrder.CHD4, "chd6": SchemeOrder.CHD6}
STRATEGIES = {"sor": PoissonStrategy.PLAIN_SOR,
              "multigrid": PoissonStrategy.MULTIGRID}


def _parse_scalar(key: str, raw: str, lineno: int):
    typ, _ = CONFIG_KEYS[key]
    try:
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        return raw.strip().lower()
    except ValueError as exc:
        raise ConfigError(f"line {lineno}: cannot parse {key!r} value {raw!r}") from exc


def parse_config_text(text: str) -> dict:
    """Raw key/value map with defaults applied and requiredness enforced."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_scalar(key, raw, lineno)
    for key, (_, default) in CONFIG_KEYS.items():
        if key not in values:
            if default is REQUIRED:
                raise ConfigError(f"missing required key {key!r}")
            values[key] = default
    if values["scheme"] not in SCHEMES:
        raise ConfigError(f"scheme must be chd4 or chd6, got {values['scheme']!r}")
    if values["poisson.strategy"] not in STRATEGIES:
        raise ConfigError(
            f"poisson.strategy must be sor or multigrid, got "
            f"{values['poisson.strategy']!r}")
    return values


def config_from_values(values: dict) -> DdcConfig:
    params = PhysicalParams(prandtl=values["pr"], lewis=values["le"],
                            rayleigh=values["ra"],
                            buoyancy_ratio=values["lambda"],
                            aspect=values["aspect"])
    monitor = None
    if values["monitor.x"] is not None or values["monitor.y"] is not None:
        mx = values["monitor.x"] if values["monitor.x"] is not None else 0.5
        my = values["monitor.y"] if values["monitor.y"] is not None else 0.5 * params.aspect
        monitor = (mx, my)
    poisson = PoissonSettings(relaxation=values["poisson.relax"],
                              tolerance=values["poisson.tol"],
                              strategy=STRATEGIES[values["poisson.strategy"]])
    return DdcConfig.create(params, values["nx"], values["ny"],
                            order=SCHEMES[values["scheme"]],
                            t_end=values["t_end"], cfl=values["cfl"],
                            dt_override=values["dt"],
                            inner_tolerance=values["inner_tol"],
                            steady_tolerance=values["steady_tol"],
                            monitor=monitor, poisson=poisson,
                            output_every=values["output.every"])


def parse_config(text: str) -> DdcConfig:
    """Validated cavity-run configuration from `key = value` text."""
    return config_from_values(parse_config_text(text))


def serialize_config(values: dict) -> str:
    """Canonical text form; parse(serialize(v)) == v."""
    lines = []
    for key in CONFIG_KEYS:
        v = values[key]
        if v is None:
            continue
        if isinstance(v, float):
            lines.append(f"{key} = {v!r}")
        else:
            lines.append(f"{key} = {v}")
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# Writers
# ----------------------------------------------------------------------

def write_snapshot(state: ConservedState, path) -> None:
    """Node-ordered field dump: x,y,psi,omega,T,C,u,v (row-major over j then i)."""
    g = state.grid
    xs, ys = g.x_nodes(), g.y_nodes()
    cols = [state.psi, state.omega, state.temperature, state.concentration,
            state.u, state.v]
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("x,y,psi,omega,T,C,u,v\n")
            for j in range(g.ny + 1):
                for i in range(g.nx + 1):
                    row = [xs[i], ys[j]] + [c.values[i, j] for c in cols]
                    fh.write(",".join(FLOAT_FMT % v for v in row) + "\n")
    except OSError as exc:
        raise IOError(f"cannot write snapshot to {path}: {exc}") from exc


def read_snapshot(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def write_timeseries(result: RunResult, path) -> None:
    """History CSV with the fixed monitor/diagnostic column schema."""
    write_history_array(result.history, path)


def write_history_array(history: np.ndarray, path) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(HISTORY_COLUMNS) + "\n")
            for row in np.atleast_2d(history):
                if row.size:
                    fh.write(",".join(FLOAT_FMT % v for v in row) + "\n")
    except OSError as exc:
        raise IOError(f"cannot write time series to {path}: {exc}") from exc


def read_timeseries(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def write_report_csv(report: ConvergenceReport, path) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("n,l2,l2_order,linf,linf_order,runtime_s\n")
            for r in report.rows:
                fh.write(",".join([
                    str(r.n), FLOAT_FMT % r.l2,
                    "" if r.l2_order is None else FLOAT_FMT % r.l2_order,
                    FLOAT_FMT % r.linf,
                    "" if r.linf_order is None else FLOAT_FMT % r.linf_order,
                    FLOAT_FMT % r.runtime]) + "\n")
    except OSError as exc:
        raise IOError(f"cannot write report to {path}: {exc}") from exc


def format_report(report: ConvergenceReport) -> str:
    head = (f"{report.case_name}  [{report.order.name}]\n"
            f"{'n':>6} {'L2-error':>12} {'rate':>6} {'Linf-error':>12} {'rate':>6}")
    lines = [head]
    for r in report.rows:
        l2o = f"{r.l2_order:6.2f}" if r.l2_order is not None else "     -"
        lio = f"{r.linf_order:6.2f}" if r.linf_order is not None else "     -"
        lines.append(f"{r.n:>6} {r.l2:>12.3e} {l2o} {r.linf:>12.3e} {lio}")
    return "\n".join(lines)


def write_spectrum_csv(freqs: np.ndarray, amps: np.ndarray, path) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("frequency,amplitude\n")
            for f, a in zip(freqs, amps):
                fh.write(f"{FLOAT_FMT % f},{FLOAT_FMT % a}\n")
    except OSError as exc:
        raise IOError(f"cannot write spectrum to {path}: {exc}") from exc


# ----------------------------------------------------------------------
# CLI
# ----------------------------------------------------------------------

def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chdflow",
                                 description="Compact Hermite convection-diffusion solver")
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run a convergence study")
    v.add_argument("case", choices=["cd1d", "burgers-sine", "burgers-similar", "cd2d"])
    v.add_argument("--scheme", choices=sorted(SCHEMES), default="chd4")
    v.add_argument("--n", type=_int_list, required=True,
                   help="comma-separated interval counts")
    v.add_argument("--t-end", type=float, default=None)
    v.add_argument("--eps", type=float, default=0.01)
    v.add_argument("--gamma", type=float, default=2.0)
    v.add_argument("--re", type=float, default=1.0)
    v.add_argument("--dt", type=float, default=None, help="fixed time step")
    v.add_argument("--out", type=Path, default=None, help="CSV output path")

    d = sub.add_parser("ddc", help="run one cavity simulation")
    d.add_argument("--config", type=Path, required=True)

    s = sub.add_parser("sweep", help="run one config with a varied parameter")
    s.add_argument("--config", type=Path, required=True)
    s.add_argument("--vary", required=True, help="config key to vary")
    s.add_argument("--values", type=_float_list, required=True)
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--out", type=Path, default=None)

    a = sub.add_parser("analyze", help="classify a saved monitor series")
    a.add_argument("--series", type=Path, required=True)
    a.add_argument("--column", default="u_mon")
    a.add_argument("--out", type=Path, default=None, help="spectrum CSV path")
    return ap


def _cmd_verify(args) -> int:
    scheme = SCHEMES[args.scheme]
    if args.case == "cd1d":
        report = run_cd1d(scheme, args.n, t_end=args.t_end if args.t_end is not None else 1.0)
    elif args.case == "burgers-sine":
        report = run_burgers(scheme, BurgersSolution.SINE_FRACTION, args.eps,
                             args.n, args.t_end if args.t_end is not None else 1.0,
                             gamma=args.gamma, dt_fixed=args.dt)
    elif args.case == "burgers-similar":
        report = run_burgers(scheme, BurgersSolution.SELF_SIMILAR, args.eps,
                             args.n, args.t_end if args.t_end is not None else 2.0,
                             dt_fixed=args.dt)
    else:
        report = run_cd2d(scheme, args.re, args.n,
                          t_end=args.t_end if args.t_end is not None else 0.5)
    print(format_report(report))
    out = args.out or Path(f"{report.case_name}_{args.scheme}.csv")
    write_report_csv(report, out)
    print(f"wrote {out}")
    return 0


def _cmd_ddc(args) -> int:
    cfg_text = args.config.read_text(encoding="utf-8")
    values = parse_config_text(cfg_text)
    config = config_from_values(values)
    result = run(config)
    outdir = Path(values["output.dir"])
    outdir.mkdir(parents=True, exist_ok=True)
    stem = args.config.stem
    write_timeseries(result, outdir / f"{stem}_history.csv")
    write_snapshot(result.final_state, outdir / f"{stem}_final.csv")
    tail = result.history[-1]
    print(f"t={tail[0]:.6g} steady={result.steady} steps={result.steps} "
          f"nu_av={tail[3]:.6g} sh_av={tail[4]:.6g} "
          f"wall_clock={result.wall_clock:.1f}s")
    print(f"wrote {outdir / (stem + '_history.csv')} and {outdir / (stem + '_final.csv')}")
    return 0


def _sweep_one(argpack):
    values, key, val = argpack
    local = dict(values)
    local[key] = val
    config = config_from_values(local)
    result = run(config)
    tail = result.history[-1]
    n = result.history.shape[0]
    series = TimeSeries(result.history[:, 0], result.history[:, 1])
    try:
        regime = classify_regime(series).regime.value
    except Exception:
        regime = "steady" if result.steady else "unresolved"
    return (val, tail[3], tail[4], regime, result.steady)


def _cmd_sweep(args) -> int:
    cfg_text = args.config.read_text(encoding="utf-8")
    values = parse_config_text(cfg_text)
    if args.vary not in CONFIG_KEYS:
        raise ConfigError(f"unknown sweep key {args.vary!r}")
    typ, _ = CONFIG_KEYS[args.vary]
    packs = [(values, args.vary, typ(v)) for v in args.values]
    workers = args.workers or min(len(packs), 4)
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_one, packs))
    else:
        rows = [_sweep_one(p) for p in packs]
    rows.sort(key=lambda r: args.values.index(r[0]))
    out = args.out or Path(f"sweep_{args.vary}.csv")
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{args.vary},nu_av,sh_av,regime,steady\n")
        for val, nu, sh, regime, steady in rows:
            fh.write(f"{FLOAT_FMT % val},{FLOAT_FMT % nu},{FLOAT_FMT % sh},"
                     f"{regime},{int(steady)}\n")
    print(f"wrote {out}")
    return 0


def _cmd_analyze(args) -> int:
    data = read_timeseries(args.series)
    try:
        col = HISTORY_COLUMNS.index(args.column)
    except ValueError:
        raise ConfigError(f"unknown history column {args.column!r}")
    series = TimeSeries(data[:, 0], data[:, col])
    verdict = classify_regime(series)
    if verdict.regime is Regime.PERIODIC:
        period = extract_period(series)
        print(f"regime=periodic ff={verdict.fundamental_frequency:.6g} "
              f"period={period:.6g} peak_to_floor={verdict.peak_to_floor_ratio:.3g}")
    else:
        print(f"regime={verdict.regime.value} "
              f"peak_to_floor={verdict.peak_to_floor_ratio:.3g}")
    freqs, amps = spectrum(series)
    out = args.out or args.series.with_name(args.series.stem + "_spectrum.csv")
    write_spectrum_csv(freqs, amps, out)
    print(f"wrote {out}")
    return 0


def cli_dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """Exit code 0 on success, 1 on solver failure, 2 on usage/config error."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "ddc":
            return _cmd_ddc(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        return _cmd_analyze(args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, FloatingPointError, IOError) as exc:
        print(f"solver-error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_dispatch())


if __name__ == "__main__":
    main()
