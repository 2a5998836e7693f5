"""Command-line front end.

Subcommands: condense, simulate, surface, unravel, recover.  Problem files
are sectioned key-value text; matrices are rows of whitespace-separated
numbers with `;` separating rows, and simple fractions like 4/3 are allowed.

Exit codes: 0 ok, 2 parse error, 3 numerical error, 4 controller failure,
5 wrong mode (e.g. surface on a non-planar problem), 6 degenerate recovery
(all regions saturated).
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np

from . import lcp, pwa
from .condenser import MpcProblem, LtiSystem, condense
from .errors import ControllerFailure, MpcNetError, NotFound, UnstableRegion
from .implicit import build_implicit
from .simulate import CONTROLLERS, ORACLE, SimulationConfig, control_surface, simulate
from .textio import fmt, write_blocks, write_csv
from .unravel import UnravelConfig, unravel

EXIT_PARSE = 2
EXIT_NUMERIC = 3
EXIT_CONTROLLER = 4
EXIT_MODE = 5
EXIT_RECOVERY = 6


class ProblemFileError(Exception):
    def __init__(self, line_no, message):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def _number(tok, line_no):
    try:
        if "/" in tok:
            return float(Fraction(tok))
        return float(tok)
    except (ValueError, ZeroDivisionError):
        raise ProblemFileError(line_no, f"bad number {tok!r}") from None


def _parse_matrix(value, line_no):
    rows = [r.strip() for r in value.split(";")]
    data = [[_number(t, line_no) for t in r.split()] for r in rows if r]
    if not data or any(len(r) != len(data[0]) for r in data):
        raise ProblemFileError(line_no, "ragged or empty matrix")
    return np.array(data)


def parse_problem_text(text) -> MpcProblem:
    """Parse the sectioned problem format into an MpcProblem."""
    sections = {}
    section = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            sections.setdefault(section, {})
            continue
        if section is None:
            raise ProblemFileError(line_no, "entry before any [section] header")
        if "=" not in line:
            raise ProblemFileError(line_no, "expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        sections[section][key.lower()] = (value, line_no)

    def need(section, key):
        try:
            return sections[section][key]
        except KeyError:
            ln = len(text.splitlines())
            raise ProblemFileError(ln, f"missing [{section}] {key}") from None

    A = _parse_matrix(*need("system", "a"))
    B = _parse_matrix(*need("system", "b"))
    sys_ = LtiSystem(A=A, B=B)
    N_val, N_line = need("horizon", "n")
    N = int(_number(N_val, N_line))
    Q = _parse_matrix(*need("cost", "q"))
    R = _parse_matrix(*need("cost", "r"))
    P = _parse_matrix(*need("cost", "p"))
    convention = sections.get("cost", {}).get("convention", ("standard", 0))[0]

    cons = sections.get("constraints", {})
    if "input_bounds" in cons:
        value, line_no = cons["input_bounds"]
        toks = value.split()
        if len(toks) != 2:
            raise ProblemFileError(line_no, "input_bounds expects: lo hi")
        lo, hi = (_number(t, line_no) for t in toks)
        from .presets import box_input_constraints

        G, _, w = box_input_constraints(N, sys_.m, lo, hi)
        S_u = np.zeros((G.shape[0], sys_.n))
    else:
        G = _parse_matrix(*need("constraints", "g"))
        w = _parse_matrix(*need("constraints", "w")).reshape(-1)
        if "s_u" in cons:
            S_u = _parse_matrix(*cons["s_u"])
        else:
            S_u = np.zeros((G.shape[0], sys_.n))
    return MpcProblem(
        sys=sys_, N=N, Q=Q, R=R, P=P, G=G, S_u=S_u, w=w, input_cost_convention=convention
    )


def load_problem(path) -> MpcProblem:
    with open(path) as fh:
        return parse_problem_text(fh.read())


def _vector_arg(text):
    return np.array([float(t) for t in text.split(",")])


def _map_fn():
    workers = int(os.environ.get("MPCNET_THREADS", "1"))
    if workers > 1:
        pool = ThreadPoolExecutor(max_workers=workers)
        return pool.map
    return map


def cmd_condense(args):
    p = load_problem(args.problem)
    qp = condense(p)
    write_blocks(
        args.out,
        {"n": qp.n, "m": qp.m, "N": qp.N, "n_c": qp.n_c},
        [("H", qp.H), ("F", qp.F), ("S", qp.S)],
    )
    return 0


def _sim_config(args, controller):
    return SimulationConfig(
        x0=_vector_arg(args.x0),
        steps=args.steps,
        controller=controller,
        unravel=UnravelConfig(K=args.K, J=args.J, tol=args.tol),
        warm_start=args.warm_start,
    )


def _write_trace(path, trace, n, m):
    cols = ["k"] + [f"x{i + 1}" for i in range(n)] + [f"u{i + 1}" for i in range(m)] + [
        "iterations",
        "residual",
    ]
    rows = []
    for k in range(trace.steps):
        rows.append(
            [k, *trace.states[k], *trace.inputs[k], int(trace.iterations[k]), trace.residuals[k]]
        )
    write_csv(path, cols, rows)


def cmd_simulate(args):
    p = load_problem(args.problem)
    try:
        trace = simulate(p, _sim_config(args, args.controller))
    except ControllerFailure as err:
        _write_trace(args.out, err.trace, p.n, p.m)
        print(f"controller failure: {err}", file=sys.stderr)
        return EXIT_CONTROLLER
    _write_trace(args.out, trace, p.n, p.m)
    max_u = float(np.max(np.abs(trace.inputs), initial=0.0))
    final_x = float(np.linalg.norm(trace.states[-1]))
    max_res = float(np.max(trace.residuals, initial=0.0))
    print(f"max|u| {fmt(max_u)} final||x|| {fmt(final_x)} max residual {fmt(max_res)}")
    return 0


def cmd_surface(args):
    p = load_problem(args.problem)
    if p.n != 2:
        print(f"surface mode needs a 2-state problem, got n={p.n}", file=sys.stderr)
        return EXIT_MODE
    lo, hi = (float(t) for t in args.bounds.split(","))
    cfg = SimulationConfig(controller=args.controller, unravel=UnravelConfig(K=args.K, J=args.J, tol=args.tol))
    points, us = control_surface(
        p, bounds=(lo, hi), resolution=args.res, controller=args.controller, cfg=cfg, map_fn=_map_fn()
    )
    write_csv(args.out, ["x1", "x2", "u"], [[pt[0], pt[1], u[0]] for pt, u in zip(points, us)])
    if args.controller != ORACLE:
        _, us_oracle = control_surface(p, bounds=(lo, hi), resolution=args.res, controller=ORACLE)
        diff = float(np.nanmax(np.abs(us - us_oracle), initial=0.0))
        print(f"max abs difference vs oracle {fmt(diff)}")
    return 0


def cmd_unravel(args):
    p = load_problem(args.problem)
    qp = condense(p)
    net = build_implicit(qp)
    x = _vector_arg(args.x0)
    gains = [float(t) for t in args.K.split(",")]
    traces = [unravel(net, x, UnravelConfig(K=g, J=args.J, tol=0.0)) for g in gains]
    depth = max(t.depth for t in traces)
    cols = ["layer"] + [f"K={fmt(g)}" for g in gains]
    rows = []
    for j in range(depth + 1):
        row = [j]
        for t in traces:
            row.append(t.residuals[min(j, t.depth)])
        rows.append(row)
    write_csv(args.out, cols, rows)
    return 0


def _load_regions_csv(path, n, m):
    regions = []
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("region_id"):
            raise ProblemFileError(1, "not a region report CSV")
        for line in fh:
            cells = line.strip().split(",")
            if len(cells) != 6:
                continue
            _, active, saturated, e_flat, omega, _ = cells
            sig = tuple(int(t) for t in active.split("|")) if active != "-" else ()
            E = np.array([float(t) for t in e_flat.split(";")]).reshape(m, n)
            regions.append(
                pwa.PwaRegion(
                    active_set=sig,
                    E=E,
                    omega=np.array([float(t) for t in omega.split(";")]),
                    E_full=E,
                    omega_full=np.array([float(t) for t in omega.split(";")]),
                    witnesses=[],
                    saturated=bool(int(saturated)),
                )
            )
    return regions


def cmd_recover(args):
    p = load_problem(args.problem)
    qp = condense(p)
    if args.regions:
        regions = _load_regions_csv(args.regions, p.n, p.m)
    else:
        lo, hi = (float(t) for t in args.bounds.split(","))
        axes = [np.linspace(lo, hi, args.res)] * p.n
        grid = np.stack([g.reshape(-1) for g in np.meshgrid(*axes, indexing="ij")], axis=1)
        regions = pwa.extract_pwa(qp, grid)
    region_rows = []
    for rid, r in enumerate(regions):
        region_rows.append(
            [
                rid,
                "|".join(str(i) for i in r.active_set) or "-",
                int(r.saturated),
                ";".join(fmt(v) for v in r.E.reshape(-1)),
                ";".join(fmt(v) for v in r.omega),
                len(r.witnesses),
            ]
        )
    write_csv(args.out, ["region_id", "active_set", "saturated", "E_row_major", "omega", "witness_count"], region_rows)
    if not pwa.unsaturated(regions):
        print("NOT-FOUND all regions saturated", file=sys.stderr)
        return EXIT_RECOVERY
    q_grid = [float(t) for t in args.q_grid.split(",")]
    r_grid = [float(t) for t in args.r_grid.split(",")]
    try:
        cand = pwa.search_cost(p.sys, regions, q_grid, r_grid, margin=args.margin)
    except (NotFound, UnstableRegion) as err:
        print(f"NOT-FOUND {err}")
        return 0
    verdicts, _ = pwa.verify_cost_lmi(p.sys, pwa.unsaturated(regions), cand, margin=args.margin)
    by_id = {r.active_set: rid for rid, r in enumerate(regions)}
    write_csv(
        args.verdicts,
        ["region_id", "max_eig", "holds"],
        [[by_id[r.active_set], eig, int(ok)] for r, eig, ok in verdicts],
    )
    print(f"feasible q {fmt(cand.Q[0, 0])} r {fmt(cand.R[0, 0])}")
    return 0


def build_parser():
    ap = argparse.ArgumentParser(
        prog="mpcnet",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("--problem", required=True, help="problem definition file")
        if out:
            sp.add_argument("--out", required=True, help="output file")

    sp = sub.add_parser("condense", help="write H, F, S of the condensed QP")
    common(sp)
    sp.set_defaults(fn=cmd_condense)

    sp = sub.add_parser("simulate", help="closed-loop run, trace CSV")
    common(sp)
    sp.add_argument("--controller", choices=CONTROLLERS, default=ORACLE)
    sp.add_argument("--x0", required=True, help="comma-separated initial state")
    sp.add_argument("--steps", type=int, default=30)
    sp.add_argument("--K", type=float, default=-0.9, help="scalar gain, expands to K*I")
    sp.add_argument("--J", type=int, default=1000)
    sp.add_argument("--tol", type=float, default=1e-12)
    sp.add_argument("--warm-start", dest="warm_start", action="store_true", default=True)
    sp.add_argument("--no-warm-start", dest="warm_start", action="store_false")
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("surface", help="control surface over a state grid, CSV")
    common(sp)
    sp.add_argument("--controller", choices=CONTROLLERS, default=ORACLE)
    sp.add_argument("--bounds", default="-300,300")
    sp.add_argument("--res", type=int, default=25)
    sp.add_argument("--K", type=float, default=-0.9)
    sp.add_argument("--J", type=int, default=1000)
    sp.add_argument("--tol", type=float, default=1e-12)
    sp.set_defaults(fn=cmd_surface)

    sp = sub.add_parser("unravel", help="per-layer residuals for a list of gains")
    common(sp)
    sp.add_argument("--x0", required=True)
    sp.add_argument("--K", default="-0.9,0,0.2", help="comma-separated scalar gains")
    sp.add_argument("--J", type=int, default=1000)
    sp.set_defaults(fn=cmd_unravel)

    sp = sub.add_parser("recover", help="extract PWA regions and search stage costs")
    common(sp)
    sp.add_argument("--verdicts", required=True, help="verdict CSV path")
    sp.add_argument("--regions", default=None, help="load a region report CSV instead of sampling")
    sp.add_argument("--bounds", default="-300,300")
    sp.add_argument("--res", type=int, default=25)
    sp.add_argument("--q-grid", default="0.01,0.1,1,10,100")
    sp.add_argument("--r-grid", default="0.01,0.1,1,10,100")
    sp.add_argument("--margin", type=float, default=1e-6)
    sp.set_defaults(fn=cmd_recover)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ProblemFileError, OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_PARSE
    except ControllerFailure as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONTROLLER
    except MpcNetError as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
