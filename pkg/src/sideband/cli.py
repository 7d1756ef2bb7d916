"""Command-line front end.

    sideband presets
    sideband cooling-curve --preset well-doppler --out curve.csv --meta run.json
    sideband populations --config run.json --delta -0.7
    sideband spectrum --preset well-doppler --out spec.csv --peaks peaks.json
    sideband verify all

Exit status: 0 on success, 2 for configuration errors, 3 for numerical
failures (including failed self-checks).
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import logging
import math
import platform
import sys
import warnings
from importlib import metadata as _md

import numpy as np
import scipy

from . import presets as P
from .cooling import (SteadyStateError, converge_truncation, cooling_curve, optimal_detuning,
                      populations)
from .internal import LaserParams, verify_internal
from .oracle import verify_oracle
from .spectrum import sideband_spectrum, validate_regime

log = logging.getLogger("sideband")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class NumericalFailure(RuntimeError):
    pass


# argument parsing ---------------------------------------------------------------

def _common(parser: argparse.ArgumentParser):
    g = parser.add_argument_group("configuration")
    g.add_argument("--preset", choices=sorted(P.PRESETS), help="start from a named parameter set")
    g.add_argument("--config", help="JSON config file (or metadata JSON from a previous run)")
    g.add_argument("--potential", choices=P.POTENTIALS)
    g.add_argument("--nu", type=float, help="trap frequency scale nu/gamma")
    g.add_argument("--a", type=float, help="Morse parameter a")
    g.add_argument("--n-levels", type=int, help="fixed basis truncation")
    g.add_argument("--delta", type=float, help="detuning delta/gamma")
    g.add_argument("--omega", type=float, help="Rabi frequency omega/gamma")
    g.add_argument("--cos-phi", type=float)
    g.add_argument("--cos-psi", type=float)
    g.add_argument("--eta", type=float, help="Lamb-Dicke parameter")
    g.add_argument("--alpha", type=float, help="second moment of the emission pattern")
    g.add_argument("--delta-start", type=float)
    g.add_argument("--delta-stop", type=float)
    g.add_argument("--delta-points", type=int)
    o = parser.add_argument_group("output")
    o.add_argument("--out", help="CSV output path (default: stdout)")
    o.add_argument("--meta", help="write run metadata JSON here")
    o.add_argument("--gnuplot", help="write a gnuplot script that plots the CSV")
    o.add_argument("--threads", type=int, help="worker threads (also SIDEBAND_THREADS)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sideband", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("presets", help="list the named parameter sets")
    p.add_argument("--json", action="store_true", help="print full configurations as JSON")

    for name, helptext in (("cooling-curve", "mean occupation against detuning"),
                           ("populations", "steady-state motional populations")):
        _common(sub.add_parser(name, help=helptext))

    p = sub.add_parser("spectrum", help="motional sideband spectrum")
    _common(p)
    p.add_argument("--mode", choices=("full", "low_intensity"))
    p.add_argument("--psi-average", action="store_true", default=None,
                   help="average over the detection direction")
    p.add_argument("--omega-start", type=float)
    p.add_argument("--omega-stop", type=float)
    p.add_argument("--omega-points", type=int)
    p.add_argument("--peaks", help="write the peak table as JSON here")

    p = sub.add_parser("verify", help="self-checks against independent evaluation paths")
    p.add_argument("which", choices=("internal", "oracle", "all"))
    p.add_argument("--out", help="write the JSON report here (default: stdout)")
    return parser


def _load_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise P.ConfigError("--config", str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise P.ConfigError("--config", f"invalid JSON: {exc}") from exc
    if isinstance(data, dict) and "config" in data and "software" in data:
        data = data["config"]  # metadata written by a previous run
    return data


def resolve_config(args, task: str) -> dict:
    """Defaults, then preset, then config file, then command-line flags."""
    cfg = P.merge(P.DEFAULTS, {})
    if args.preset:
        cfg = P.preset(args.preset)
    if args.config:
        cfg = P.merge(cfg, _load_config_file(args.config))
    flags = {
        ("potential", "kind"): args.potential, ("potential", "nu"): args.nu,
        ("potential", "a"): args.a, ("potential", "n_levels"): args.n_levels,
        ("laser", "delta"): args.delta, ("laser", "omega"): args.omega,
        ("laser", "cos_phi"): args.cos_phi, ("laser", "cos_psi"): args.cos_psi,
        ("laser", "eta"): args.eta, ("laser", "alpha"): args.alpha,
        ("delta_grid", "start"): args.delta_start, ("delta_grid", "stop"): args.delta_stop,
        ("delta_grid", "points"): args.delta_points,
    }
    if task == "spectrum":
        flags[("spectrum", "mode")] = args.mode
        flags[("spectrum", "psi_average")] = args.psi_average
        if any(v is not None for v in (args.omega_start, args.omega_stop, args.omega_points)):
            grid = dict(cfg["spectrum"].get("grid") or {})
            for key, val in (("start", args.omega_start), ("stop", args.omega_stop),
                             ("points", args.omega_points)):
                if val is not None:
                    grid[key] = val
            cfg["spectrum"]["grid"] = grid
    for (section, key), val in flags.items():
        if val is not None:
            cfg[section][key] = val
    cfg["task"] = task
    return P.validate_config(cfg)


# output helpers ------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))  # shortest string that round-trips


def write_csv(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not JSON serializable: {type(o)}")


def _dump(obj, path):
    text = json.dumps(obj, indent=2, default=_json_default, allow_nan=True) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _software():
    try:
        version = _md.version("artifact")
    except _md.PackageNotFoundError:
        version = "unknown"
    return {"package": version, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}


def write_meta(path, cfg, results):
    if not path:
        return
    meta = {"config": cfg, "software": _software(),
            "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            "results": results}
    _dump(meta, path)


def write_gnuplot(path, csv_path, xlabel, ylabel, logscale=False):
    if not path:
        return
    lines = ["set datafile separator ','", f"set xlabel '{xlabel}'", f"set ylabel '{ylabel}'"]
    if logscale:
        lines.append("set logscale y")
    lines.append(f"plot '{csv_path}' every ::1 using 1:2 with lines notitle")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# tasks ------------------------------------------------------------------------

def _basis(cfg):
    factory, n = P.build_basis_factory(cfg)
    if n is not None:
        return factory(n), {"n_levels": n, "adaptive": False}
    tr = cfg["truncation"]
    res = converge_truncation(factory, P.laser_params(cfg), n_start=min(10, tr["max"]),
                              step=tr["step"], tol=tr["tol"], n_max=tr["max"])
    info = {"n_levels": res.basis.n_levels, "adaptive": True, "converged": res.converged,
            "history": [list(h) for h in res.history]}
    if not res.converged:
        log.warning("truncation did not converge to %g within %d levels (last change %.3g)",
                    tr["tol"], tr["max"], abs(res.history[-1][1] - res.history[-2][1]))
    return res.basis, info


def run_cooling_curve(cfg, args) -> dict:
    basis, trunc = _basis(cfg)
    curve = cooling_curve(basis, P.laser_params(cfg), P.delta_grid(cfg), threads=args.threads)
    if not curve.ok.any():
        raise NumericalFailure("every point of the cooling curve failed: "
                               + next(iter(curve.errors.values())))
    trunc_ok = trunc.get("converged", True)
    rows = [(d, m, t, c and trunc_ok) for d, m, t, c in curve.rows()]
    write_csv(args.out, ["delta_over_gamma", "mbar", "top_level_mass", "converged_flag"], rows)
    write_gnuplot(args.gnuplot, args.out, "detuning / gamma", "mean occupation", logscale=True)
    results = {"truncation": trunc, "failed_points": curve.errors}
    finite = np.isfinite(curve.mbar).sum()
    if finite >= 3:
        opt = optimal_detuning(curve)
        results["optimum"] = {"delta": opt.delta, "mbar": opt.mbar, "boundary": opt.boundary,
                              "refined": opt.refined}
        print(f"optimum: delta = {opt.delta:.6g} gamma, mbar = {opt.mbar:.6g}"
              + (" (at grid boundary)" if opt.boundary else ""), file=sys.stderr)
    return results


def run_populations(cfg, args) -> dict:
    basis, trunc = _basis(cfg)
    p = P.laser_params(cfg)
    try:
        pops = populations(basis, p)
    except SteadyStateError as exc:
        raise NumericalFailure(str(exc)) from exc
    rows = [(n, e, pn) for n, (e, pn) in enumerate(zip(basis.energies, pops.p))]
    write_csv(args.out, ["n", "energy_over_gamma", "population"], rows)
    write_gnuplot(args.gnuplot, args.out, "level n", "population", logscale=True)
    print(f"mbar = {pops.mbar:.10g}, top-level mass = {pops.top_level_mass:.3g}", file=sys.stderr)
    return {"truncation": trunc, "mbar": pops.mbar, "top_level_mass": pops.top_level_mass}


def run_spectrum(cfg, args) -> dict:
    basis, trunc = _basis(cfg)
    p = P.laser_params(cfg)
    try:
        pops = populations(basis, p)
        report = validate_regime(basis, p, pops.mbar)
        curve, peaks = sideband_spectrum(basis, p, pops, P.spectrum_grid(cfg),
                                         mode=cfg["spectrum"]["mode"],
                                         psi_average=cfg["spectrum"]["psi_average"])
    except (SteadyStateError, ArithmeticError) as exc:
        raise NumericalFailure(str(exc)) from exc
    write_csv(args.out, ["omega_over_gamma", "S_value"], zip(curve.omega_grid, curve.values))
    write_gnuplot(args.gnuplot, args.out, "(omega - omega_L) / gamma", "S")
    if args.peaks:
        _dump([pk.to_dict() for pk in peaks], args.peaks)
    return {"truncation": trunc, "mbar": pops.mbar, "n_peaks": len(peaks),
            "regime": {"ratio": report.ratio, "occupancy_proxy": report.occupancy_proxy,
                       "ok": report.ok, "messages": list(report.messages)}}


def run_verify(which, out) -> int:
    report, ok = {}, True
    if which in ("internal", "all"):
        rng = np.random.default_rng(20240611)
        params = [LaserParams(delta=rng.uniform(-3, 3), omega=rng.uniform(0.05, 2.0),
                              cos_phi=rng.uniform(-1, 1), cos_psi=rng.uniform(-1, 1),
                              eta=rng.uniform(0.01, 0.2)) for _ in range(10)]
        dev = verify_internal(params)
        passed = dev["r"] < 1e-10 and dev["s"] < 1e-10 and dev["trace_defect"] == 0.0
        report["internal"] = dict(dev, passed=passed,
                                  note="q: the rational closed form is not used; its deviation "
                                       "from the resolvent form is reported for reference")
        ok &= passed
    if which in ("oracle", "all"):
        rep = verify_oracle()
        report["oracle"] = rep
        ok &= rep["passed"]
    _dump(report, out)
    return EXIT_OK if ok else EXIT_NUMERIC


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if not args.verbose:
        warnings.simplefilter("ignore", RuntimeWarning)

    if args.command == "presets":
        if args.json:
            _dump({name: cfg for name, _, cfg in P.presets()}, None)
        else:
            for name, desc, _ in P.presets():
                print(f"{name:16s} {desc}")
        return EXIT_OK
    if args.command == "verify":
        return run_verify(args.which, args.out)

    try:
        cfg = resolve_config(args, args.command)
        if args.gnuplot and not args.out:
            raise P.ConfigError("--gnuplot", "needs --out so the script can reference the CSV")
        runner = {"cooling-curve": run_cooling_curve, "populations": run_populations,
                  "spectrum": run_spectrum}[args.command]
        results = runner(cfg, args)
        write_meta(args.meta, cfg, results)
    except P.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
