"""Command-line interface: ``ddbench {list,schedule,simulate,analyze,filter,theory}``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Optional

import numpy as np

from .. import seqlib
from ..analysis import (
    AnalysisError, fit_decay, postselect_and_fold, quartile_summary, time_averaged_fidelity,
)
from ..dynamics import DynamicsError
from ..metrics import (
    THEORY_KINDS, MetricsError, QuadratureError, SpectralDensity, cdd_level_interval,
    cdd_optimal_level, coherence_chi, filter_function, theory_eta,
)
from ..scheduler import ScheduleError, dense, render, validate
from ..seqlib import PHYSICAL
from .device import ConfigError, DeviceSpec
from .experiments import (
    DEFAULT_DELTA, DEFAULT_T_MAX, ExperimentConfig, default_time_grid, prepare_sequence,
    run_haar_interval_experiment, run_pauli_experiment,
)
from .io import FormatError, dumps_curves, dumps_haar, dumps_schedule, loads_config, loads_curves

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def _write(text: str, out: Optional[str]):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _table(rows: list, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=1) + "\n"
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(float(v)) if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()


def _sequence(args):
    name = args.seq
    if args.n is not None or args.m is not None:
        return seqlib.build(name, args.n, args.m)
    return prepare_sequence(name, getattr(args, "z_mode", "physical"))


# ---------------------------------------------------------------------------
# verbs

def cmd_list(args) -> int:
    rows = []
    for name in seqlib.catalog():
        s = seqlib.build(name)
        rows.append({"id": name, "family": s.family, "pulses": s.n_pulses,
                     "free_periods": s.free_periods, "uniform": s.uniform})
    if args.format == "json":
        _write(_table(rows, "json"), args.out)
    else:
        _write(_table(rows, "csv"), args.out)
    return EXIT_OK


def cmd_schedule(args) -> int:
    seq = _sequence(args)
    if args.reps is None:
        sched = dense(seq, args.T, args.delta, args.d, args.sym)
    else:
        sched = render(seq, args.T, args.delta, args.d, args.sym, args.reps)
    problems = validate(sched)
    if problems:
        print(f"schedule invalid: {problems[0]}", file=sys.stderr)
        return EXIT_VALIDATION
    _write(dumps_schedule(sched), args.out)
    return EXIT_OK


def _config_from_args(args) -> ExperimentConfig:
    if args.config:
        with open(args.config) as fh:
            cfg = loads_config(fh.read())
    else:
        cfg = ExperimentConfig()
    kw = {}
    if args.seq:
        kw["sequences"] = tuple(s for item in args.seq for s in item.split(",") if s)
    if args.states:
        kw["states"] = args.states
    if args.T is not None:
        kw["T"] = args.T
        kw["times"] = default_time_grid(args.T, args.points or 12)
    elif args.points is not None:
        kw["times"] = default_time_grid(cfg.T, args.points)
    for name in ("delta", "shots", "seed", "calibrations", "workers"):
        v = getattr(args, name)
        if v is not None:
            kw[name] = v
    if args.eps_r is not None:
        kw["eps_r"] = args.eps_r
    if args.z_mode:
        kw["z_mode"] = args.z_mode
    if args.sym:
        kw["symmetries"] = (args.sym,)
    if args.model:
        with open(args.model) as fh:
            try:
                kw["device"] = DeviceSpec.from_dict(json.load(fh))
            except json.JSONDecodeError as exc:
                raise FormatError(f"{args.model} line {exc.lineno}: {exc.msg}") from None
    return cfg.with_(**kw) if kw else cfg


def cmd_simulate(args) -> int:
    if args.experiment == "haar" and not args.states and not args.config:
        args.states = "haar:25"
    cfg = _config_from_args(args)
    if args.experiment == "pauli":
        res = run_pauli_experiment(cfg)
        for sk in res.skipped:
            print(f"skipped {sk['sequence']} cal={sk['calibration']} t={sk['time_s']!r}: "
                  f"{sk['reason']}", file=sys.stderr)
        _write(dumps_curves(res.curves), args.out)
    else:
        res = run_haar_interval_experiment(cfg)
        _write(dumps_haar(res.rows), args.out)
    return EXIT_OK


def cmd_analyze(args) -> int:
    with open(args.input) as fh:
        curves = loads_curves(fh.read())
    rows = []
    if args.mode in ("ita", "boxstats"):
        per = []
        for c in curves:
            T = args.T if args.T is not None else c.times[-1]
            per.append({"sequence": c.sequence_label, "state": c.state_label,
                        "calibration": c.calibration_id, "T": T,
                        "ita": time_averaged_fidelity(c, T, args.method)})
        if args.mode == "ita":
            rows = per
        else:
            for seq in sorted({r["sequence"] for r in per}):
                box = quartile_summary([r["ita"] for r in per if r["sequence"] == seq])
                rows.append({"sequence": seq, **box._asdict()})
    else:
        for c in curves:
            _, sig = c.bootstrap(args.resamples, args.seed)
            sig = np.maximum(sig, 1.0 / c.shots[0])
            dt = args.dt if args.dt is not None else (c.times[-1] - c.times[0]) / (len(c.times) - 1)
            fits = fit_decay(c, sig, dt=dt)
            sel = postselect_and_fold(fits, dt)
            row = {"sequence": c.sequence_label, "state": c.state_label,
                   "calibration": c.calibration_id, "accepted": sel.best is not None}
            if sel.best is not None:
                b = sel.best
                row.update(lam=b.lam, gamma=b.gamma, alpha=b.alpha, lam_hw=b.half_width[0],
                           gamma_hw=b.half_width[1], alpha_hw=b.half_width[2], aicc=b.aicc)
            else:
                row.update(dict.fromkeys(("lam", "gamma", "alpha", "lam_hw", "gamma_hw",
                                          "alpha_hw", "aicc")))
            rows.append(row)
    _write(_table(rows, args.format), args.out)
    return EXIT_OK


def cmd_filter(args) -> int:
    seq = _sequence(args)
    sched = render(seq, args.T, 0.0, 0.0, "a", args.reps or 1)
    times = [e.t_start for e in sched.events if e.pulse.kind == PHYSICAL]
    if args.chi:
        S = SpectralDensity(args.spectrum, amplitude=args.amplitude,
                            cutoff=args.cutoff if args.cutoff else math.inf,
                            omega_min=args.omega_min if args.spectrum == "one_over_f" else 0.0)
        chi = coherence_chi(S, times, args.T)
        rows = [{"sequence": seq.name, "T": args.T, "chi": chi, "coherence": math.exp(-chi)}]
    else:
        w = np.linspace(args.omega_min, args.omega_max, args.points)
        F = filter_function(times, len(times), args.T, w)
        rows = [{"omega": float(a), "F": float(b)} for a, b in zip(w, F)]
    _write(_table(rows, args.format), args.out)
    return EXIT_OK


def cmd_theory(args) -> int:
    if args.nopt is not None:
        lvl = cdd_optimal_level(args.nopt)
        lo, hi = cdd_level_interval(lvl.level)
        rows = [{"x": args.nopt, "n_opt": lvl.level, "interval_lo": lo, "interval_hi": hi,
                 "warning": lvl.warning or ""}]
    else:
        eta = theory_eta(args.kind, args.J, args.eps, args.tau, args.delta, args.c, args.level)
        rows = [{"kind": args.kind, "eta": eta}]
    _write(_table(rows, args.format), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser

def _add_seq(p, required=True):
    p.add_argument("--seq", required=required, help="catalog id, e.g. xy4, cdd3, uddx7, qdd2_4")
    p.add_argument("--n", type=int, default=None, help="order (families that take one)")
    p.add_argument("--m", type=int, default=None, help="inner order for QDD")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ddbench", description="Dynamical decoupling benchmarks.")
    sub = p.add_subparsers(dest="verb", required=True)

    sp = sub.add_parser("list", help="list catalog sequences")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_list)

    sp = sub.add_parser("schedule", help="render a schedule to JSON")
    _add_seq(sp)
    sp.add_argument("--T", type=float, required=True, help="total duration (s)")
    sp.add_argument("--delta", type=float, default=DEFAULT_DELTA, help="pulse width (s)")
    sp.add_argument("--d", type=float, default=0.0, help="extra delay after each pulse (s)")
    sp.add_argument("--sym", choices=("a", "s"), default="a")
    sp.add_argument("--reps", type=int, default=None, help="repetitions (default: as many as fit)")
    sp.add_argument("--z-mode", choices=("physical", "virtual"), default="physical")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_schedule)

    sp = sub.add_parser("simulate", help="run the Pauli or Haar experiment")
    sp.add_argument("--experiment", choices=("pauli", "haar"), default="pauli")
    sp.add_argument("--config", help="experiment config JSON")
    sp.add_argument("--seq", action="append", help="sequence ids (comma separated, repeatable)")
    sp.add_argument("--states", help="pauli6 or haar:K")
    sp.add_argument("--T", type=float, default=None, help=f"final time (s), default {DEFAULT_T_MAX}")
    sp.add_argument("--points", type=int, default=None, help="time points after t=0 (default 12)")
    sp.add_argument("--delta", type=float, default=None)
    sp.add_argument("--sym", choices=("a", "s"), default=None, help="restrict the Haar sweep")
    sp.add_argument("--shots", type=int, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--calibrations", type=int, default=None)
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--eps-r", type=float, default=None, help="relative flip-angle error")
    sp.add_argument("--model", help="device JSON (DeviceSpec fields)")
    sp.add_argument("--z-mode", choices=("physical", "virtual"), default=None)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("analyze", help="analyze a curve CSV")
    sp.add_argument("mode", choices=("ita", "boxstats", "fit"))
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--T", type=float, default=None)
    sp.add_argument("--method", choices=("hermite3", "cubic_spline"), default="hermite3")
    sp.add_argument("--dt", type=float, default=None, help="sample spacing for the Nyquist fold")
    sp.add_argument("--resamples", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("filter", help="filter function or coherence decay")
    _add_seq(sp)
    sp.add_argument("--T", type=float, required=True)
    sp.add_argument("--reps", type=int, default=None)
    sp.add_argument("--omega-min", type=float, default=0.0)
    sp.add_argument("--omega-max", type=float, default=None)
    sp.add_argument("--points", type=int, default=1000)
    sp.add_argument("--chi", action="store_true", help="print chi(T) instead of F(omega)")
    sp.add_argument("--spectrum", choices=("white", "ohmic", "lorentzian", "one_over_f"),
                    default="lorentzian")
    sp.add_argument("--amplitude", type=float, default=1.0)
    sp.add_argument("--cutoff", type=float, default=None)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_filter)

    sp = sub.add_parser("theory", help="closed-form error bounds and optimal CDD level")
    sp.add_argument("--kind", choices=THEORY_KINDS, default="xy4")
    sp.add_argument("--J", type=float, default=1.0)
    sp.add_argument("--eps", type=float, default=1.0)
    sp.add_argument("--tau", type=float, default=1e-3)
    sp.add_argument("--delta", type=float, default=0.0)
    sp.add_argument("--c", type=float, default=1.0)
    sp.add_argument("--level", type=int, default=1)
    sp.add_argument("--nopt", type=float, default=None, help="c*eps*tau for the optimal CDD level")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_theory)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verb == "filter" and not args.chi and args.omega_max is None:
        args.omega_max = 20 * math.pi / args.T
    try:
        return args.func(args)
    except (DynamicsError, QuadratureError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, FormatError, ScheduleError, AnalysisError, MetricsError, ValueError,
            KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
