"""Command-line front end.

Exit codes: 0 success, 1 invalid input, 2 numerical failure, 3 a ``verify``
inequality failed, 64 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from . import scale_fn as sf
from . import value_engine as ve
from .errors import Chapter11Error, DomainError, ModelValidationError, NumericalError, UnsupportedModelError
from .model_io import file_digest, load_model

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC, EXIT_VERIFY, EXIT_USAGE = 0, 1, 2, 3, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _num(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return v


class Output:
    """Collects one table plus metadata and writes it as CSV or JSON."""

    def __init__(self, args, command):
        self.args = args
        self.command = command
        self.meta = {"command": command, "version": __version__}

    def table(self, header, rows):
        fmt = getattr(self.args, "format", "csv")
        stream = open(self.args.output, "w", newline="") if getattr(self.args, "output", None) else sys.stdout
        try:
            if fmt == "json":
                recs = [dict(zip(header, r)) for r in rows]
                json.dump({"meta": self.meta, "rows": recs}, stream, indent=2, default=_json_default)
                stream.write("\n")
            else:
                buf = io.StringIO(newline="")
                buf.write("# " + " ".join(f"{k}={_num(v)}" for k, v in self.meta.items()) + "\r\n")
                w = csv.writer(buf, lineterminator="\r\n")
                w.writerow(header)
                for r in rows:
                    w.writerow(["" if x is None else _num(x) for x in r])
                stream.write(buf.getvalue())
        finally:
            if stream is not sys.stdout:
                stream.close()


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(type(o))


def _grid(args):
    if args.steps < 1:
        raise DomainError("--steps must be at least 1")
    return np.linspace(args.x_from, args.x_to, args.steps + 1) if args.steps > 1 else np.array([args.x_from])


def _model(args, out):
    m = load_model(args.model)
    out.meta["model"] = args.model
    out.meta["sha256"] = file_digest(args.model)
    return m


def _barrier(m, args):
    sol = ve.optimal_barrier(m)
    y = getattr(args, "barrier", None)
    return sol, (sol.d_star if y is None else y)


# ---------------------------------------------------------------------------
# subcommands


def cmd_model_validate(args):
    m = load_model(args.model)
    case = ve.regime_case(m)
    print(f"OK {args.model}: c={m.c:g} q={m.q:g} lambda={m.lam:g} case={case.value}")
    return EXIT_OK


def cmd_scale(args):
    out = Output(args, "scale")
    m = _model(args, out)
    proc = m.solvent if args.process == "solvent" else m.insolvent
    q = m.q if args.q is None else args.q
    theta = m.phi_tilde() if args.theta is None else args.theta
    basis = sf.scale_basis(proc, q)
    xs = _grid(args)
    out.meta.update(process=args.process, q=q, theta=theta, phi=basis.phi)
    rows = zip(xs, sf.w(basis, xs), sf.w_prime(basis, xs), sf.z(basis, xs, theta), sf.z_prime(basis, xs, theta))
    out.table(["x", "W", "W_prime", "Z", "Z_prime"], list(rows))
    return EXIT_OK


def _closed_form(m):
    try:
        return ve.cl_closed_form_barrier(m)
    except UnsupportedModelError:
        return None


def cmd_barrier(args):
    out = Output(args, "barrier")
    m = _model(args, out)
    sol = ve.optimal_barrier(m)
    cf = _closed_form(m)
    delta = None if cf is None else abs(cf - sol.d_star)
    row = [sol.d_star, sol.regime_case.value, sol.ell_prime_at_barrier, sol.value_at_barrier,
           m.phi_tilde(), cf, delta]
    out.table(["d_star", "regime_case", "ell_prime_d_star", "V_d_star", "phi_tilde", "closed_form_d_star",
               "closed_form_delta"], [row])
    return EXIT_OK


def cmd_value(args):
    out = Output(args, "value")
    m = _model(args, out)
    sol, y = _barrier(m, args)
    xs = _grid(args)
    out.meta.update(barrier=y, d_star=sol.d_star)
    rows = []
    for x in xs:
        vt = float(ve.value_insolvent(sol, x, y)) if x < m.c else None
        rows.append([x, float(ve.value_solvent(sol, x, y)), vt])
    out.table(["x", "V", "V_tilde"], rows)
    return EXIT_OK


def cmd_moments(args):
    out = Output(args, "moments")
    m = _model(args, out)
    sol, y = _barrier(m, args)
    xs = _grid(args) if args.x is None else np.array([args.x])
    out.meta.update(barrier=y, state=args.state, n_max=args.n)
    rows = [[n, x, ve.moment(m, n, x, y, args.state)] for x in xs for n in range(1, args.n + 1)]
    out.table(["n", "x", "moment"], rows)
    return EXIT_OK


def cmd_exit(args):
    out = Output(args, "exit")
    m = _model(args, out)
    xs = _grid(args)
    out.meta.update(z=args.z, state=args.state)
    out.table(["x", "exit_transform"], [[x, ve.exit_transform(m, x, args.z, args.state)] for x in xs])
    return EXIT_OK


def _analytic(m, args, y):
    """Analytic counterpart of a simulated quantity, if the engine has one."""
    state = "solvent" if args.state == "solvent" else "insolvent"
    if args.quantity == "value":
        return ve.moment(m, 1, args.x0, y, state)
    if args.quantity == "moment":
        return ve.moment(m, args.n, args.x0, y, state)
    if args.quantity == "exit":
        if args.no_regime_switching:
            b = sf.scale_basis(m.solvent, m.q)
            return float(ve.classical_exit_up(b, args.x0, args.z))
        return ve.exit_transform(m, args.x0, args.z, state)
    return None


def cmd_simulate(args):
    from . import simulator as sim

    out = Output(args, "simulate")
    m = _model(args, out)
    sol, y = _barrier(m, args)
    i0 = 0 if args.state == "solvent" else 1
    cfg = sim.SimConfig(args.n_paths, args.seed, args.eps_trunc, args.scheme, args.dt,
                        not args.no_regime_switching, args.workers)
    out.meta.update(seed=args.seed, n_paths=args.n_paths, scheme=args.scheme, dt=args.dt,
                    eps_trunc=args.eps_trunc, regime_switching=cfg.regime_switching,
                    quantity=args.quantity, x0=args.x0, state=args.state)
    if args.quantity == "bankruptcy":
        s = sim.simulate_bankruptcy(m, y, args.x0, i0, cfg)
        out.meta["barrier"] = y
        rows = [["n", s.n], ["frac_bankrupt", s.frac_bankrupt], ["frac_truncated", s.frac_truncated],
                ["mean_time", s.mean_time], ["mean_spells", s.mean_spells],
                ["spell_bankrupt_fraction", s.spell_bankrupt_fraction]]
        rows += [[f"quantile_{k:g}", v] for k, v in s.quantiles.items()]
        out.table(["statistic", "value"], rows)
        return EXIT_OK
    if args.dt_halving:
        res = sim.dt_halving(m, y, args.x0, i0, cfg, args.dt_halving)
        ref = _analytic(m, args, y)
        rows = [[dt, e.mean, e.std_err, ref, None if ref is None else e.z_score(ref)] for dt, e in res]
        out.table(["dt", "mean", "std_err", "analytic", "z_score"], rows)
        return EXIT_OK
    if args.quantity == "exit":
        out.meta["z"] = args.z
        mode = sim.kernels.MODE_EXIT
        est = sim.simulate_exit(m, args.z, args.x0, i0, cfg)
        batch_kw = dict(z=args.z, mode=mode)
    else:
        out.meta["barrier"] = y
        n = 1 if args.quantity == "value" else args.n
        est = sim.simulate_moment(m, n, y, args.x0, i0, cfg)
        batch_kw = dict(d=y)
    ref = _analytic(m, args, y)
    row = [est.mean, est.std_err, est.ci95[0], est.ci95[1], est.n, est.truncation_bias_bound,
           ref, None if ref is None else est.z_score(ref)]
    out.table(["mean", "std_err", "ci95_low", "ci95_high", "n", "truncation_bias_bound", "analytic", "z_score"],
              [row])
    if args.paths_csv:
        b = sim.run_paths(m, args.x0, i0, cfg, **batch_kw)
        with open(args.paths_csv, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(["path", "status", "T_D", "payoff"])
            names = {sim.BANKRUPT: "bankrupt", sim.TRUNCATED: "truncated", sim.REACHED: "reached",
                     sim.RUINED: "ruined"}
            for i in range(b.payoff.size):
                w.writerow([i, names[int(b.status[i])], _num(float(b.t_end[i])), _num(float(b.payoff[i]))])
    return EXIT_OK


def cmd_verify(args):
    from . import hjb_verify as hv

    out = Output(args, "verify")
    m = _model(args, out)
    sol, y = _barrier(m, args)
    grid = hv.GridSpec(args.n_interior, args.n_above, args.n_insolvent, args.width, args.width)
    rep = hv.verify_solution(sol, grid, y=y, workers=args.workers or 1)
    out.meta.update(barrier=y, d_star=sol.d_star, n_interior=grid.n_interior, n_above=grid.n_above,
                    n_insolvent=grid.n_insolvent, width=args.width)
    out.table(["check", "value", "tolerance", "status", "n_points"],
              [[c.name, c.value, c.tolerance, c.status, c.n_points] for c in rep.checks])
    if args.residuals_csv:
        with open(args.residuals_csv, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(["region", "x", "residual"])
            for region, x, r in rep.rows:
                w.writerow([region, _num(x), _num(r)])
    return EXIT_OK if rep.passed else EXIT_VERIFY


SWEEP_FIELDS = {"c": "c", "lambda": "lam", "q": "q"}


def cmd_sweep(args):
    out = Output(args, "sweep")
    m = _model(args, out)
    vals = _grid(args)
    out.meta.update(param=args.param)
    rows = []
    for v in vals:
        mv = m.replace(**{SWEEP_FIELDS[args.param]: float(v)})
        sol = ve.optimal_barrier(mv)
        rows.append([v, sol.d_star, sol.d_star - mv.c, sol.regime_case.value, sol.ell_prime_at_barrier,
                     sol.value_at_barrier])
    out.table([args.param, "d_star", "d_star_minus_c", "regime_case", "ell_prime_d_star", "V_d_star"], rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("model", help="model JSON file")
    common.add_argument("-o", "--output", help="write the table here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    def grid_args(p, lo, hi, steps):
        p.add_argument("--from", dest="x_from", type=float, default=lo)
        p.add_argument("--to", dest="x_to", type=float, default=hi)
        p.add_argument("--steps", type=int, default=steps)

    parser = _Parser(prog="chapter11", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    pm = sub.add_parser("model", help="model file utilities")
    msub = pm.add_subparsers(dest="model_command", required=True, parser_class=_Parser)
    pv = msub.add_parser("validate", help="check a model file")
    pv.add_argument("model")
    pv.set_defaults(func=cmd_model_validate)

    p = sub.add_parser("scale", parents=[common], help="tabulate W_q and Z_q")
    grid_args(p, 0.0, 5.0, 50)
    p.add_argument("--process", choices=("solvent", "insolvent"), default="solvent")
    p.add_argument("--q", type=float)
    p.add_argument("--theta", type=float, help="Z_q parameter (default phi_tilde)")
    p.set_defaults(func=cmd_scale)

    p = sub.add_parser("barrier", parents=[common], help="optimal barrier and regime case")
    p.set_defaults(func=cmd_barrier)

    p = sub.add_parser("value", parents=[common], help="value functions on a grid")
    grid_args(p, -2.0, 10.0, 60)
    p.add_argument("--barrier", type=float)
    p.set_defaults(func=cmd_value)

    p = sub.add_parser("moments", parents=[common], help="moments of discounted dividends")
    grid_args(p, 0.5, 5.0, 9)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--x", type=float, help="single evaluation point (overrides the grid)")
    p.add_argument("--state", choices=("solvent", "insolvent"), default="solvent")
    p.add_argument("--barrier", type=float)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("exit", parents=[common], help="two-sided exit transform")
    grid_args(p, 0.1, 3.0, 29)
    p.add_argument("--z", type=float, required=True)
    p.add_argument("--state", choices=("solvent", "insolvent"), default="solvent")
    p.set_defaults(func=cmd_exit)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo estimate")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n-paths", type=int, default=100_000)
    p.add_argument("--quantity", choices=("value", "moment", "exit", "bankruptcy"), default="value")
    p.add_argument("--x0", type=float, required=True)
    p.add_argument("--state", choices=("solvent", "insolvent"), default="solvent")
    p.add_argument("--barrier", type=float)
    p.add_argument("--n", type=int, default=2, help="moment order")
    p.add_argument("--z", type=float, help="exit level")
    p.add_argument("--eps-trunc", type=float, default=1e-9)
    p.add_argument("--scheme", choices=("exact_bv", "euler"), default="exact_bv")
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--no-regime-switching", action="store_true")
    p.add_argument("--workers", type=int)
    p.add_argument("--paths-csv", help="per-path output file")
    p.add_argument("--dt-halving", type=int, metavar="LEVELS", help="euler estimates at dt, dt/2, ...")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", parents=[common], help="HJB residual certification")
    p.add_argument("--barrier", type=float)
    p.add_argument("--n-interior", type=int, default=200)
    p.add_argument("--n-above", type=int, default=50)
    p.add_argument("--n-insolvent", type=int, default=100)
    p.add_argument("--width", type=float, default=10.0)
    p.add_argument("--workers", type=int)
    p.add_argument("--residuals-csv")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", parents=[common], help="barrier as one parameter varies")
    p.add_argument("--param", choices=tuple(SWEEP_FIELDS), required=True)
    grid_args(p, 0.5, 6.0, 12)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as err:
        print(err, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as err:  # --help / --version
        return int(err.code or 0)
    if args.command == "simulate":
        if args.quantity == "exit" and args.z is None:
            print("chapter11 simulate: error: --z is required for --quantity exit", file=sys.stderr)
            return EXIT_USAGE
    try:
        return args.func(args)
    except ModelValidationError as err:
        print(f"invalid model: {err}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DomainError, UnsupportedModelError) as err:
        print(f"invalid input: {err}", file=sys.stderr)
        return EXIT_INVALID
    except Chapter11Error as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
