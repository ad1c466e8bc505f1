"""Command-line interface: ``bic <subcommand> ...``.

Structured results are written as JSON objects ``{"manifest": ..., "results": ...}``;
sweeps are written as CSV with a units header.  The run manifest of a CSV
goes to ``<out>.manifest.json`` next to the file, or to stderr when the
CSV is written to stdout.

Exit codes: 0 success, 2 usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import platform
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__, oracle, poles, spectrum
from .errors import AccuracyError, ContinuationError, ConvergenceError, DomainError
from .params import EmitterArrayParams, Sector, Sheet

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3
UNITS = "energies in units of m; lengths in units of 1/m; gamma in units of m^2"


class UsageError(Exception):
    pass


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, (Sector, Sheet)):
        return obj.value
    return obj


def _manifest(args, tolerances=None) -> dict:
    params = {k: v for k, v in vars(args).items() if k not in ("func", "out", "command")}
    return {
        "command": args.command,
        "params": _jsonable(params),
        "tolerances": tolerances or {},
        "library_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "units": UNITS,
    }


def _write_json(args, results, tolerances=None):
    doc = {"manifest": _manifest(args, tolerances), "results": _jsonable(results)}
    text = json.dumps(doc, indent=2, sort_keys=False) + "\n"
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _write_csv(args, header, rows, tolerances=None):
    buf = io.StringIO()
    buf.write(f"# {UNITS}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    manifest = json.dumps(_manifest(args, tolerances), indent=2) + "\n"
    if args.out in (None, "-"):
        sys.stdout.write(buf.getvalue())
        sys.stderr.write(manifest)
    else:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(buf.getvalue())
        with open(args.out + ".manifest.json", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(manifest)


def _params(args, epsilon=None):
    try:
        return EmitterArrayParams(n=args.n, epsilon=epsilon if epsilon is not None else 1.0,
                                  d=args.d, gamma=args.gamma)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _sector(value):
    if value is None:
        return None
    try:
        return Sector.parse(value)
    except ValueError:
        raise UsageError(f"unknown sector {value!r}") from None


# ----------------------------------------------------------------------------
# subcommands


def cmd_find(args):
    if args.emax <= 1.0:
        raise UsageError("--emax must exceed 1 (the continuum threshold)")
    if args.emin >= args.emax:
        raise UsageError("--emin must be below --emax")
    mode = {"markov": spectrum.LARGE_SPACING, "large-spacing": spectrum.LARGE_SPACING,
            "full": spectrum.FULL}[args.mode]
    params = _params(args)
    states = spectrum.solve_bic(params, sector=_sector(args.sector), mode=mode,
                                e_min=args.emin, e_max=args.emax, per_pi=args.grid)
    _write_json(args, [s.to_dict() for s in states],
                {"singular_rtol": spectrum.SINGULAR_RTOL, "grid_per_pi": args.grid})


def cmd_lines(args):
    if args.dmin <= 0 or args.dmax <= args.dmin:
        raise UsageError("need 0 < --dmin < --dmax")
    if args.emax <= 1.0:
        raise UsageError("--emax must exceed 1")
    ds = np.linspace(args.dmin, args.dmax, args.points)
    rows, gaps = spectrum.spectral_lines(args.n, args.gamma, ds, e_max=args.emax, sector=_sector(args.sector))
    for d, lab in gaps:
        sys.stderr.write(f"branch {lab} missing at d={d:.17g}\n")
    _write_csv(args, ["d", "E", "sector", "nu", "chi"], rows, {"singular_rtol": spectrum.SINGULAR_RTOL})


def cmd_resonant_eps(args):
    if args.nu < 1:
        raise UsageError("--nu must be a positive integer")
    _params(args)
    out = []
    for item in spectrum.exact_resonant_epsilons(args.n, args.nu, args.d, args.gamma):
        out.append({
            "sector": item.sector.value,
            "hermitian": item.hermitian,
            "epsilon": [complex(e) if not item.hermitian else float(e.real) for e in item.epsilons],
            "chi": [complex(c) if not item.hermitian else float(c.real) for c in item.chis],
            "amplitudes": [[float(x) for x in np.real(a)] for a in item.amplitudes],
        })
    _write_json(args, {"E": spectrum.resonant_energy(args.nu, args.d), "sectors": out})


def cmd_field(args):
    try:
        with open(args.state, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read state file: {exc}") from None
    if isinstance(data, dict) and "results" in data:
        data = data["results"]
    if isinstance(data, list):
        if not data:
            raise UsageError("state file holds no states")
        if args.index >= len(data):
            raise UsageError(f"--index {args.index} out of range ({len(data)} states)")
        data = data[args.index]
    state = spectrum.BoundStateInContinuum.from_dict(data)
    if args.points < 2 or args.xmax <= args.xmin:
        raise UsageError("need --points >= 2 and --xmax > --xmin")
    grid = np.linspace(args.xmin, args.xmax, args.points)
    sample = spectrum.field_wavefunction(state, grid)
    rows = [(x, v.real, v.imag, abs(v) ** 2) for x, v in zip(sample.grid, sample.values)]
    _write_csv(args, ["x", "re_xi", "im_xi", "abs_xi_sq"], rows)


def cmd_prob(args):
    params = _params(args)
    labels = {3: {"sym": Sector.SYMMETRIC, "anti": Sector.ANTISYMMETRIC}}
    try:
        p_approx = spectrum.probability_approximant(args.n, args.cls, args.nu, args.d, args.gamma,
                                                    cut=args.cut)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    E_nu = spectrum.resonant_energy(args.nu, args.d)
    lo = spectrum.resonant_energy(args.nu - 1, args.d) if args.nu > 1 else 1.0
    hi = spectrum.resonant_energy(args.nu + 1, args.d)
    states = [s for s in spectrum.solve_bic(params, e_min=0.5 * (lo + E_nu), e_max=0.5 * (E_nu + hi))
              if s.nu_nearest == args.nu]
    want = labels.get(args.n, {}).get(args.cls)
    if want is not None:
        states = [s for s in states if s.sector is want]
    # closest state by probability among those in the sector
    best = min(states, key=lambda s: abs(s.p - p_approx)) if states else None
    _write_json(args, {
        "p_approx": p_approx,
        "p_exact": None if best is None else best.p,
        "E": None if best is None else best.E,
        "epsilon": None if best is None else best.epsilon,
        "candidates": [{"E": s.E, "p": s.p, "sector": s.sector.value} for s in states],
    })


def cmd_poles(args):
    if args.eps_min <= 1.0 or args.eps_max <= args.eps_min:
        raise UsageError("need 1 < --eps-min < --eps-max")
    sheet = Sheet.parse(args.sheet)
    if sheet is Sheet.FIRST:
        raise UsageError("poles live on sheet II or III")
    params = _params(args, epsilon=args.eps_min)
    eps = np.linspace(args.eps_min, args.eps_max, args.points)
    rows = []
    sectors = [_sector(args.sector)] if args.sector else [Sector.SYMMETRIC, Sector.ANTISYMMETRIC]
    for sec in sectors:
        branches = ["+"] if (args.n == 3 and sec is Sector.ANTISYMMETRIC) else ["+", "-"]
        if args.n not in (3, 4):
            branches = ["+"]
        for br in branches:
            traj, _ = poles.pole_trajectory(params, sec, eps, vary="epsilon", sheet=sheet, branch=br)
            for v, res in traj:
                rows.append((v, res.z_p.real, res.z_p.imag, sec.value, br))
    rows.sort(key=lambda r: (r[3], r[4], r[0]))
    _write_csv(args, ["epsilon", "re_z", "im_z", "sector", "branch"], rows)


def cmd_critical(args):
    if args.n < 3:
        raise UsageError("--n must be at least 3")
    cp = poles.critical_distance(args.n, args.gamma, nu_window=(args.window, args.window + 1),
                                 d_start=args.d_start)
    if cp is None:
        raise ConvergenceError("no nonperturbative pair found in the window")
    _write_json(args, {
        "n": cp.n, "d_c": cp.d_c, "E_c": cp.E_c, "nu_window": list(cp.nu_window),
        "epsilon_c": cp.epsilon_c, "bracket": list(cp.bracket),
    }, {"d_tol": 1e-7})


def cmd_oracle(args):
    params = _params(args, epsilon=args.epsilon)
    half = args.halfwidth
    e_lo, e_hi = args.emin, args.emax
    if e_lo is None:
        e_lo = max(1.0, args.epsilon - half)
    if e_hi is None:
        e_hi = args.epsilon + half
    try:
        model = oracle.build_hamiltonian(params, args.L, args.modes, e_max=e_hi)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    states = oracle.find_bic_candidates(model, e_lo, e_hi, args.confinement)
    _write_json(args, [s.to_dict() for s in states], {"confinement": args.confinement, "M": model.M})


# ----------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bic", description="Bound states in the continuum of emitter arrays in 1D.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, d=True, gamma=True):
        p.add_argument("--n", type=int, required=True, help="number of emitters")
        if d:
            p.add_argument("--d", type=float, required=True, help="emitter spacing")
        if gamma:
            p.add_argument("--gamma", type=float, required=True, help="squared coupling")
        p.add_argument("--out", "-o", default=None, help="output file (default stdout)")

    p = sub.add_parser("find", help="bound states in an energy window")
    common(p)
    p.add_argument("--emin", type=float, default=1.0)
    p.add_argument("--emax", type=float, required=True)
    p.add_argument("--sector", choices=["s", "a"], default=None)
    p.add_argument("--mode", choices=["full", "markov", "large-spacing"], default="full")
    p.add_argument("--grid", type=int, default=64, help="scan points per pi of phase")
    p.set_defaults(func=cmd_find)

    p = sub.add_parser("lines", help="spectral lines over a spacing sweep (CSV)")
    common(p, d=False)
    p.add_argument("--dmin", type=float, required=True)
    p.add_argument("--dmax", type=float, required=True)
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--emax", type=float, required=True)
    p.add_argument("--sector", choices=["s", "a"], default=None)
    p.set_defaults(func=cmd_lines)

    p = sub.add_parser("resonant-eps", help="excitation energies that keep E_nu exact")
    common(p)
    p.add_argument("--nu", type=int, required=True)
    p.set_defaults(func=cmd_resonant_eps)

    p = sub.add_parser("field", help="field wavefunction of a stored state (CSV)")
    p.add_argument("--state", required=True, help="JSON file from 'bic find'")
    p.add_argument("--index", type=int, default=0, help="which state when the file holds a list")
    p.add_argument("--xmin", type=float, required=True)
    p.add_argument("--xmax", type=float, required=True)
    p.add_argument("--points", type=int, default=1001)
    p.add_argument("--out", "-o", default=None)
    p.set_defaults(func=cmd_field)

    p = sub.add_parser("prob", help="exact and closed-form atomic probability")
    common(p)
    p.add_argument("--class", dest="cls", required=True,
                   help="sym|anti for n=3; golden+|golden-|shifted|numerical for n=4")
    p.add_argument("--nu", type=int, default=1)
    p.add_argument("--cut", choices=["closed-form", "diagonal"], default="closed-form",
                   help="cut correction in the approximant")
    p.set_defaults(func=cmd_prob)

    p = sub.add_parser("poles", help="pole trajectories over an epsilon sweep (CSV)")
    common(p)
    p.add_argument("--eps-min", type=float, required=True)
    p.add_argument("--eps-max", type=float, required=True)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--sheet", choices=["II", "III"], default="II")
    p.add_argument("--sector", choices=["s", "a"], default=None)
    p.set_defaults(func=cmd_poles)

    p = sub.add_parser("critical", help="critical spacing of the nonperturbative pair")
    common(p, d=False)
    p.add_argument("--window", type=int, default=1, help="lower resonance index nu of (E_nu, E_nu+1)")
    p.add_argument("--d-start", type=float, default=1.0)
    p.set_defaults(func=cmd_critical)

    p = sub.add_parser("oracle", help="finite-box diagonalization")
    common(p)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--L", type=float, default=400.0)
    p.add_argument("--modes", type=int, default=None, help="mode count M (default: cutoff 100)")
    p.add_argument("--emin", type=float, default=None)
    p.add_argument("--emax", type=float, default=None)
    p.add_argument("--halfwidth", type=float, default=0.02)
    p.add_argument("--confinement", type=float, default=0.99)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"bic: error: {exc}\n")
        return EXIT_USAGE
    except (ConvergenceError, AccuracyError, ContinuationError, DomainError, np.linalg.LinAlgError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
        traj = getattr(exc, "trajectory", None)
        if traj:
            err["seeds"] = _jsonable([complex(z) if isinstance(z, complex) else z for z in traj])
        sys.stdout.write(json.dumps({"manifest": _manifest(args), "error": err}, indent=2) + "\n")
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
