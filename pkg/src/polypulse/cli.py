"""Command-line interface: ``polypulse <subcommand> ...``.

Every subcommand writes deterministic JSON or CSV (12 significant digits,
fixed column order, trailing newline) to stdout or ``--output``.
Exit codes: 0 success, 2 usage error, 3 numerical-validity error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from .errors import InvalidArgument, NumericalValidityError
from .infidelity import (
    METRICS,
    BusMoments,
    EnvironmentRates,
    assemble_zeta,
    assemble_zeta_printed,
    improvement_R,
    infidelity,
)
from .operators import coherent_cutoff, coherent_state, thermal_cutoff, thermal_state
from .oracle import zeta_oracle
from .pulses import monochromatic_pulse, optimal_pulse, solve_lambda, trajectory
from .simulate import SimConfig, improvement_RE, propagate_ground

EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    v = float(x)
    return "0" if v == 0 else f"{v:.12g}"


def _num(x):
    if x is None or isinstance(x, (bool, int, str)):
        return x
    v = float(f"{float(x):.12g}")
    return 0.0 if v == 0 else v


def int_range(text: str) -> list[int]:
    """'3', '2:8' (inclusive) or '2,3,5'."""
    try:
        if ":" in text:
            lo, hi = text.split(":")
            return list(range(int(lo), int(hi) + 1))
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer range: {text!r}")


def float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a float list: {text!r}")


def _pulse(kind: str, m: int, omega: float):
    return optimal_pulse(m, omega) if kind == "optimal" else monochromatic_pulse(m, omega)


def _rates(args, m: int) -> EnvironmentRates:
    """Rates entered in units of delta = m omega unless --rate-units omega."""
    scale = m * args.omega if args.rate_units == "delta" else args.omega
    return EnvironmentRates(
        args.gamma_plus * scale, args.gamma_minus * scale, args.gamma_dephase * scale
    )


def _bus_moments(args, nbar=None) -> BusMoments:
    if args.bus == "ground":
        return BusMoments.ground()
    if args.bus == "thermal":
        return BusMoments.thermal(args.nbar if nbar is None else nbar)
    return BusMoments.coherent(complex(args.alpha))


def _bus_density(args):
    if args.bus == "ground":
        return thermal_state(0.0, 2)
    if args.bus == "thermal":
        return thermal_state(args.nbar, thermal_cutoff(args.nbar))
    alpha = complex(args.alpha)
    return coherent_state(alpha, coherent_cutoff(alpha))


def _check_positive(name, value):
    if value <= 0:
        raise InvalidArgument(f"{name} must be positive")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("POLYPULSE_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, items):
    items = list(items)
    n = _threads()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


# subcommands -----------------------------------------------------------


def cmd_design(args) -> str:
    _check_positive("--omega", args.omega)
    ms = args.m
    if args.kind == "optimal" and min(ms) < 2:
        raise InvalidArgument("optimal pulses need m >= 2")
    pulses = [(m, _pulse(args.kind, m, args.omega)) for m in ms]
    if args.format == "json":
        docs = [p.to_dict() for _, p in pulses]
        return _json_text(docs[0] if len(docs) == 1 else docs)
    rows = []
    for m, p in pulses:
        lam = solve_lambda(m).lam if args.kind == "optimal" else math.nan
        for j, c in p.components:
            rows.append((m, lam, j, c.real, c.imag))
    return _csv_text(("m", "lambda", "harmonic", "re", "im"), rows)


def cmd_trajectory(args) -> str:
    _check_positive("--omega", args.omega)
    if args.samples < 2:
        raise InvalidArgument("--samples must be >= 2")
    p = _pulse(args.kind, args.m, args.omega)
    pts = trajectory(p, args.samples)
    if args.format == "json":
        return _json_text({
            "pulse": p.to_dict(),
            "points": [
                {"t": _num(q.t), "f_re": _num(q.f_re), "f_im": _num(q.f_im), "g": _num(q.g)}
                for q in pts
            ],
        })
    return _csv_text(("t", "f_re", "f_im", "g"), [(q.t, q.f_re, q.f_im, q.g) for q in pts])


def cmd_zeta(args) -> str:
    _check_positive("--omega", args.omega)
    p = _pulse(args.kind, args.m, args.omega)
    rates = _rates(args, args.m)
    if args.variant == "printed":
        z = assemble_zeta_printed(p, args.ions, rates, _bus_moments(args))
    elif args.variant == "reconciled":
        z = assemble_zeta(p, args.ions, rates, _bus_moments(args))
    else:
        z = zeta_oracle(p, args.ions, rates, _bus_density(args))
    doc = z.to_dict()
    doc["metric"] = args.metric
    doc["infidelity"] = _num(infidelity(z, args.metric))
    if z.residual is not None:
        doc["projection_residual"] = _num(z.residual)
    return _json_text(doc)


SWEEP_HEADER = (
    "m", "N", "gamma_plus", "gamma_minus", "gamma_dephase",
    "nbar", "metric", "I_mono", "I_poly", "R",
)


def cmd_sweep(args) -> str:
    _check_positive("--omega", args.omega)
    if args.bus == "coherent":
        raise InvalidArgument("sweeps support ground and thermal bus states")
    if min(args.m) < 2:
        raise InvalidArgument("--m must be >= 2")
    if min(args.ions) < 1:
        raise InvalidArgument("--ions must be >= 1")
    nbars = args.nbar_list if args.vary == "nbar" else [args.nbar if args.bus == "thermal" else 0.0]
    if args.vary == "nbar" and args.bus != "thermal":
        raise InvalidArgument("--vary nbar needs --bus thermal")
    grid = [(m, n, nb) for m in args.m for n in args.ions for nb in nbars]

    def point(key):
        m, n, nb = key
        rates = _rates(args, m)
        bus = BusMoments.thermal(nb) if args.bus == "thermal" else BusMoments.ground()
        i_m, i_p, r = improvement_R(m, n, rates, bus, args.metric, args.variant)
        return (m, n, rates.gamma_plus, rates.gamma_minus, rates.gamma_dephase,
                nb, args.metric, i_m, i_p, r)

    rows = sorted(_map(point, grid), key=lambda row: (row[0], row[1], row[5]))
    if args.format == "json":
        return _json_text([dict(zip(SWEEP_HEADER, map(_num, row))) for row in rows])
    return _csv_text(SWEEP_HEADER, rows)


def _sim_config(args, m, nbar=0.0) -> SimConfig:
    base = SimConfig.default_for(m, args.ions, nbar)
    return SimConfig(
        args.ions,
        args.cutoff if args.cutoff is not None else base.fock_cutoff,
        args.steps if args.steps is not None else base.steps,
    )


def cmd_simulate(args) -> str:
    _check_positive("--omega", args.omega)
    p = _pulse(args.kind, args.m, args.omega)
    rates = _rates(args, args.m)
    cfg = _sim_config(args, args.m)
    res = propagate_ground(p, rates, cfg, bus_level=args.bus_level,
                           max_cutoff=cfg.fock_cutoff if args.cutoff is not None else 80)
    used = res.final_state.fock_cutoff
    doc = {
        "pulse": p.to_dict(),
        "rates": rates.to_dict(),
        "config": SimConfig(cfg.n_qubits, used, cfg.steps, cfg.leakage_threshold).to_dict(),
        "gate_fidelity": _num(res.gate_fidelity),
        "concurrence": _num(res.concurrence),
        "eof": _num(res.eof),
        "leakage": _num(res.leakage),
    }
    return _json_text(doc)


def cmd_compare_eof(args) -> str:
    _check_positive("--omega", args.omega)
    if min(args.m) < 2:
        raise InvalidArgument("--m must be >= 2")
    grid = [(m, g) for m in args.m for g in args.gamma]

    def point(key):
        m, g = key
        gg = g * m * args.omega
        cfg = SimConfig.default_for(m)
        if args.steps is not None:
            cfg = SimConfig(2, cfg.fock_cutoff, args.steps)
        e_m, e_p, r = improvement_RE(m, EnvironmentRates(gg, gg, gg), cfg)
        return (m, g, e_m, e_p, r)

    rows = sorted(_map(point, grid), key=lambda row: (row[1], row[0]))
    header = ("m", "gamma_over_delta", "E_mono", "E_poly", "R_E")
    if args.format == "json":
        return _json_text([dict(zip(header, map(_num, row))) for row in rows])
    return _csv_text(header, rows)


# parser ----------------------------------------------------------------


def _add_common(p, *, fmt_default="json"):
    p.add_argument("--omega", type=float, default=1.0,
                   help="fundamental angular frequency (default 1)")
    p.add_argument("--format", choices=("json", "csv"), default=fmt_default,
                   help=f"output format (default {fmt_default})")
    p.add_argument("--output", "-o", default=None, help="write to this path instead of stdout")


def _add_rates(p):
    p.add_argument("--gamma-plus", type=float, default=0.0, help="heating rate (default 0)")
    p.add_argument("--gamma-minus", type=float, default=0.0, help="cooling rate (default 0)")
    p.add_argument("--gamma-dephase", type=float, default=0.0, help="dephasing rate (default 0)")
    p.add_argument("--rate-units", choices=("delta", "omega"), default="delta",
                   help="rates are in units of delta = m*omega (default) or omega")


def _add_bus(p):
    p.add_argument("--bus", choices=("ground", "thermal", "coherent"), default="ground",
                   help="bus-mode state (default ground)")
    p.add_argument("--nbar", type=float, default=0.0, help="thermal occupation (default 0)")
    p.add_argument("--alpha", type=complex, default=0.5,
                   help="coherent amplitude, Python complex syntax (default 0.5)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="polypulse",
        description="Polychromatic Molmer-Sorensen pulses under bus-mode dissipation.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="optimal (or single-tone) pulse amplitudes")
    p.add_argument("--m", type=int_range, required=True, help="number of harmonics, e.g. 3 or 2:8")
    p.add_argument("--kind", choices=("optimal", "mono"), default="optimal")
    _add_common(p)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("trajectory", help="phase-space trajectory f(t), g(t)")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--kind", choices=("optimal", "mono"), default="optimal")
    p.add_argument("--samples", type=int, default=201, help="points over [0, T] (default 201)")
    _add_common(p, fmt_default="csv")
    p.set_defaults(func=cmd_trajectory)

    p = sub.add_parser("zeta", help="first-order error matrix in the xi basis")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--ions", type=int, default=2, help="number of ions N (default 2)")
    p.add_argument("--kind", choices=("optimal", "mono"), default="optimal")
    p.add_argument("--variant", choices=("reconciled", "printed", "oracle"), default="reconciled")
    p.add_argument("--metric", choices=METRICS, default="frobenius")
    _add_rates(p)
    _add_bus(p)
    _add_common(p)
    p.set_defaults(func=cmd_zeta)

    p = sub.add_parser("sweep", help="improvement R over a grid of m, N or nbar")
    p.add_argument("--vary", choices=("m", "N", "nbar"), required=True)
    p.add_argument("--m", type=int_range, default=[5], help="harmonics, e.g. 2:8 (default 5)")
    p.add_argument("--ions", type=int_range, default=[2], help="ion numbers, e.g. 2:50 (default 2)")
    p.add_argument("--nbar-list", type=float_list, default=[0.0],
                   help="comma-separated thermal occupations for --vary nbar")
    p.add_argument("--metric", choices=METRICS, default="frobenius")
    p.add_argument("--variant", choices=("reconciled", "printed"), default="reconciled")
    _add_rates(p)
    p.add_argument("--bus", choices=("ground", "thermal"), default="ground")
    p.add_argument("--nbar", type=float, default=0.0, help="thermal occupation (default 0)")
    _add_common(p, fmt_default="csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="exact master-equation run from |0..0> x |n>")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--kind", choices=("optimal", "mono"), default="optimal")
    p.add_argument("--ions", type=int, default=2, help="number of ions (default 2)")
    p.add_argument("--bus-level", type=int, default=0, help="initial Fock level (default 0)")
    p.add_argument("--cutoff", type=int, default=None,
                   help="Fock cutoff; default 12, raised automatically on leakage")
    p.add_argument("--steps", type=int, default=None, help="RK4 steps (default 400*m)")
    _add_rates(p)
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare-eof", help="entanglement-of-formation improvement R_E")
    p.add_argument("--m", type=int_range, default=list(range(2, 7)), help="harmonics (default 2:6)")
    p.add_argument("--gamma", type=float_list, default=[1e-3],
                   help="gamma_+ = gamma_- = gamma_d in units of delta, comma list (default 1e-3)")
    p.add_argument("--steps", type=int, default=None, help="RK4 steps (default 400*m)")
    _add_common(p, fmt_default="csv")
    p.set_defaults(func=cmd_compare_eof)
    return ap


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if hasattr(args, "kind") and args.kind == "optimal" and isinstance(getattr(args, "m", None), int) and args.m < 2:
        parser.error("optimal pulses need --m >= 2")
    try:
        text = args.func(args)
    except InvalidArgument as err:
        print(f"polypulse: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalValidityError as err:
        print(f"polypulse: numerical error: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
