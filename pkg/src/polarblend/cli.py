"""Command-line interface.

Exit status: 0 when everything passes, 1 when a check or constraint
fails, 2 on usage, parse or input-format errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import Any, Sequence

import numpy as np

from .criteria import g_blend_pair, g_feas
from .datasets import load_material
from .discrete import DesignVector, DiscreteConfig, solve_discrete
from .errors import DatasetIntegrityError, PolarBlendError
from .io import (
    format_stack_table,
    read_edges,
    read_panels,
    read_stacks,
    read_targets,
    write_panels,
    write_stacks,
)
from .notation import format_stack, parse_stack
from .polar import PolarQuad, laminate_homogenized, panel_from_laminate, polar_from_quad
from .recovery.blending import adjacency_scheme, is_blended, read_scheme, write_scheme
from .recovery.residuals import TargetPolar, residuals
from .recovery.search import SearchConfig, recover

OK, FAILED, USAGE = 0, 1, 2


def _emit(data: Any, fmt: str, rows: list[dict] | None = None, text: str | None = None) -> None:
    if fmt == "json":
        print(json.dumps(data, indent=2, default=_jsonable))
    elif fmt == "csv" and rows is not None:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]) if rows else [], lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        print(buf.getvalue(), end="")
    else:
        print(text if text is not None else json.dumps(data, indent=2, default=_jsonable))


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, PolarQuad):
        return _polar_dict(o)
    raise TypeError(type(o).__name__)


def _polar_dict(p: PolarQuad) -> dict:
    return {"T0": p.T0, "T1": p.T1, "R0": p.R0, "R1": p.R1, "Phi0": p.Phi0, "Phi1": p.Phi1,
            "degenerate0": p.degenerate0, "degenerate1": p.degenerate1}


def _stack_arg(args) -> dict:
    if getattr(args, "stack", None):
        return {"stack": parse_stack(args.stack)}
    if getattr(args, "stack_file", None):
        return read_stacks(args.stack_file)
    raise argparse.ArgumentTypeError("give a stack with --stack or a stack file")


def _target(args, N: int) -> TargetPolar | None:
    if not args.target:
        return None
    try:
        vals = [float(v) for v in args.target.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError("--target expects rho0K,rho1[,phi1]") from None
    if len(vals) not in (2, 3):
        raise argparse.ArgumentTypeError("--target expects rho0K,rho1[,phi1]")
    return TargetPolar.from_signed(vals[0], vals[1], vals[2] if len(vals) == 3 else 0.0, N)


# commands -------------------------------------------------------------

def cmd_analyze(args) -> int:
    m = load_material(args.material)
    out, rows, lines = {}, [], []
    for key, s in _stack_arg(args).items():
        L = laminate_homogenized(s, m)
        p = panel_from_laminate(L, m, check=False)
        K, dev = L.polar_A.orthotropy_offset()
        rec = {
            "stack": format_stack(s), "N": s.N,
            "Astar": L.Astar, "Bstar": L.Bstar, "Dstar": L.Dstar, "Cstar": L.Cstar, "Hstar": L.Hstar,
            "polar_A": L.polar_A, "polar_B": L.polar_B, "polar_D": L.polar_D, "polar_C": L.polar_C,
            "polar_H": {"T": L.polar_H.T, "R": L.polar_H.R, "Phi": L.polar_H.Phi,
                        "degenerate": L.polar_H.degenerate},
            "panel": {"n0": p.n0, "rho0K": p.rho0K, "rho1": p.rho1, "phi1": p.phi1, "degenerate": p.degenerate},
            "orthotropy_offset_deg": dev,
        }
        t = _target(args, s.N)
        row = {"id": key, "N": s.N, "n0": p.n0, "rho0K": p.rho0K, "rho1": p.rho1, "phi1": p.phi1,
               "degenerate": p.degenerate}
        lines.append(f"{key}: N={s.N} n0={p.n0:.4f} rho0K={p.rho0K:.6f} rho1={p.rho1:.6f} phi1={p.phi1:.6f}"
                     + (" [degenerate angle]" if p.degenerate else ""))
        for name in ("Astar", "Bstar", "Dstar", "Cstar"):
            lines.append(f"  {name} = " + np.array2string(getattr(L, name), precision=3, suppress_small=True)
                         .replace("\n", "\n" + " " * (len(name) + 5)))
        pa = L.polar_A
        lines.append(f"  polar A*: T0={pa.T0:.3f} T1={pa.T1:.3f} R0={pa.R0:.3f} R1={pa.R1:.3f} "
                     f"Phi0={pa.Phi0:.3f} Phi1={pa.Phi1:.3f}")
        if t is not None:
            b = residuals(s, m, t, args.norm)
            rec["residual"] = {"terms": list(b.terms), "total": b.total}
            row["residual"] = b.total
            lines.append(f"  residual {b.total:.3e} (terms " + ", ".join(f"{r:.2e}" for r in b.terms) + ")")
        out[str(key)] = rec
        rows.append(row)
    _emit(out, args.format, rows, "\n".join(lines))
    return OK


def cmd_polar(args) -> int:
    if args.matrix:
        try:
            vals = [float(v) for v in args.matrix.replace(";", ",").split(",")]
        except ValueError:
            raise argparse.ArgumentTypeError("--matrix expects 9 comma-separated numbers") from None
        if len(vals) != 9:
            raise argparse.ArgumentTypeError("--matrix expects 9 comma-separated numbers")
        p = polar_from_quad(np.array(vals).reshape(3, 3))
    else:
        m = load_material(args.material)
        if args.stack:
            p = laminate_homogenized(parse_stack(args.stack), m).polar_A
        else:
            p = m.polar_Q
    d = _polar_dict(p)
    _emit(d, args.format, [d], " ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in d.items()))
    return OK


def cmd_feasibility(args) -> int:
    panels, _, _ = read_panels(args.input)
    rows = [{"id": k, "g_feas": g_feas(p).g, "feasible": g_feas(p).g <= args.tolerance} for k, p in panels.items()]
    worst = max(rows, key=lambda r: r["g_feas"])
    data = {"max": worst["g_feas"], "at": worst["id"], "panels": rows}
    text = "\n".join(f"{r['id']}: {r['g_feas']:.4f}" for r in rows) + f"\nmax {worst['g_feas']:.4f} at {worst['id']}"
    _emit(data, args.format, rows, text)
    return OK if all(r["feasible"] for r in rows) else FAILED


def cmd_blend_check(args) -> int:
    edges = read_edges(args.adjacency)
    rows = []
    if args.stacks:
        stacks = read_stacks(args.stacks)
        for a, b in edges:
            sa, sb = stacks[a], stacks[b]
            thick, thin = (sa, sb) if sa.N >= sb.N else (sb, sa)
            r = is_blended(thick, thin, args.mode, args.covering)
            rows.append({"p": a, "q": b, "blended": r.blended, "reason": r.reason})
    else:
        panels, _, N_ref = read_panels(args.panels)
        N_ref = N_ref or load_material(args.material).N_ref
        for a, b in edges:
            pair = g_blend_pair(panels[a], panels[b], N_ref)
            ok = pair.worst / N_ref**2 <= args.tolerance
            rows.append({"p": a, "q": b, "g0": pair.g0, "g1": pair.g1, "blended": ok, "reason": ""})
    text = "\n".join(f"{r['p']}-{r['q']}: {'ok' if r['blended'] else 'NOT blended'}"
                     + (f" ({r['reason']})" if r["reason"] else "") for r in rows)
    _emit({"edges": rows}, args.format, rows, text)
    return OK if all(r["blended"] for r in rows) else FAILED


def cmd_discretize(args) -> int:
    panels, areas, N_ref = read_panels(args.input)
    N_ref = args.nref or N_ref or load_material(args.material).N_ref
    edges = read_edges(args.adjacency)
    res = solve_discrete(DesignVector.from_mapping(panels, N_ref), edges,
                         DiscreteConfig(N_ref=N_ref, dn_min=args.dnmin, budget=args.budget or 2000,
                                        seed=args.seed, tolerance=args.tolerance))
    if args.output:
        write_panels(args.output, res.design.as_dict(), N_ref, areas)
    rows = [{"id": k, "N": res.design.plies[k], "n0": p.n0, "rho0K": p.rho0K, "rho1": p.rho1}
            for k, p in res.design.as_dict().items()]
    viol = [{"constraint": r.name, "where": list(r.where), "value": r.value} for r in res.violations]
    data = {"objective": res.objective, "feasible": res.feasible, "panels": rows, "violations": viol,
            "evaluations": res.evaluations}
    text = "\n".join(f"{r['id']}: N={r['N']} rho0K={r['rho0K']:.4f} rho1={r['rho1']:.4f}" for r in rows)
    text += f"\nobjective {res.objective:.6g}; " + ("all constraints satisfied" if res.feasible
                                                    else f"{len(viol)} violated constraints: {viol}")
    _emit(data, args.format, rows, text)
    return OK if res.feasible else FAILED


def cmd_recover(args) -> int:
    m = load_material(args.material)
    targets = read_targets(args.targets)
    if args.scheme:
        scheme = read_scheme(args.scheme)
    elif args.adjacency:
        scheme = adjacency_scheme({k: t.N for k, t in targets.items()}, read_edges(args.adjacency), args.covering)
    else:
        scheme = None
    cfg = SearchConfig(step=args.step, budget=1_000_000 if args.budget is None else args.budget, seed=args.seed,
                       restarts=args.restarts, workers=args.workers, norm=args.norm)
    res = recover(targets, m, scheme, cfg)
    if args.output:
        write_stacks(args.output, res.stacks, res.breakdowns)
    if args.save_scheme and scheme is not None:
        write_scheme(scheme, args.save_scheme)
    rows = [{"id": k, "N": s.N, "stack": format_stack(s), "residual": res.breakdowns[k].total}
            for k, s in res.stacks.items()]
    data = {"total": res.total, "evaluations": res.evaluations, "panels": rows}
    text = format_stack_table(res.stacks, res.breakdowns) + f"total {res.total:.6e} after {res.evaluations} evaluations"
    _emit(data, args.format, rows, text)
    ok = args.tolerance is None or res.total <= args.tolerance
    return OK if ok else FAILED


def cmd_pipeline(args) -> int:
    from .pipeline import ProjectConfig, cmd_pipeline as run

    cfg = ProjectConfig.from_file(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.budget is not None:
        cfg.recovery_budget = args.budget
        cfg.discrete_budget = min(cfg.discrete_budget, args.budget) if args.budget else 0
    art = run(cfg)
    data = {"summary": art.summary, "files": {k: str(v) for k, v in art.files.items()}}
    text = "\n".join(f"{k}: {v}" for k, v in art.summary.items())
    _emit(data, args.format, [art.summary], text)
    return OK if art.ok else FAILED


def cmd_verify_paper(args) -> int:
    from .verify import run_all

    rep = run_all()
    rows = [{"name": c.name, "computed": c.computed, "reference": c.reference, "tolerance": c.tolerance,
             "passed": c.passed, "hard": c.hard, "source": c.source} for c in rep.checks]
    _emit(rep.to_dict(), args.format, rows, rep.text())
    return OK if rep.passed else FAILED


# parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--budget", type=int, default=None)
    common.add_argument("--tolerance", type=float, default=None)
    common.add_argument("--format", choices=("json", "csv", "text"), default="text")
    common.add_argument("--material", default="t300_5208", help="bundled material name or JSON file")

    p = argparse.ArgumentParser(prog="polarblend", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[common], help="homogenized matrices and polar sets of stacks")
    a.add_argument("stack_file", nargs="?")
    a.add_argument("--stack")
    a.add_argument("--target", help="rho0K,rho1[,phi1]: also print the residual")
    a.add_argument("--norm", choices=("frobenius", "polar"), default="frobenius")
    a.set_defaults(func=cmd_analyze)

    a = sub.add_parser("polar", parents=[common], help="polar parameters of a matrix, stack or material")
    a.add_argument("--matrix", help="9 comma-separated entries of a 3x3 Voigt matrix, row-major")
    a.add_argument("--stack")
    a.set_defaults(func=cmd_polar)

    a = sub.add_parser("feasibility", parents=[common], help="laminate feasibility of a panel file")
    a.add_argument("--input", required=True)
    a.set_defaults(func=cmd_feasibility)

    a = sub.add_parser("blend-check", parents=[common], help="blending of adjacent panels or stacks")
    a.add_argument("--adjacency", required=True)
    g = a.add_mutually_exclusive_group(required=True)
    g.add_argument("--stacks", help="stack table: checks that thinner stacks drop plies of thicker ones")
    g.add_argument("--panels", help="panel file: checks the blending constraint on polar parameters")
    a.add_argument("--mode", choices=("general", "scheme"), default="general")
    a.add_argument("--covering", type=int, default=2)
    a.set_defaults(func=cmd_blend_check)

    a = sub.add_parser("discretize", parents=[common], help="round a panel design to integer ply counts")
    a.add_argument("--input", required=True)
    a.add_argument("--adjacency", required=True)
    a.add_argument("--dnmin", type=int, default=4)
    a.add_argument("--nref", type=int, default=None)
    a.add_argument("--output")
    a.set_defaults(func=cmd_discretize)

    a = sub.add_parser("recover", parents=[common], help="search blended stacking sequences for targets")
    a.add_argument("--targets", required=True)
    a.add_argument("--scheme")
    a.add_argument("--adjacency", help="build the default scheme from this adjacency when no scheme is given")
    a.add_argument("--covering", type=int, default=2)
    a.add_argument("--step", type=int, default=1)
    a.add_argument("--restarts", type=int, default=1)
    a.add_argument("--workers", type=int, default=1)
    a.add_argument("--norm", choices=("frobenius", "polar"), default="frobenius")
    a.add_argument("--output")
    a.add_argument("--save-scheme")
    a.set_defaults(func=cmd_recover)

    a = sub.add_parser("pipeline", parents=[common], help="discretize, recover and re-check a project")
    a.add_argument("--config", required=True)
    a.set_defaults(func=cmd_pipeline, seed=None)

    a = sub.add_parser("verify-paper", parents=[common], help="reproduce the bundled reference results")
    a.set_defaults(func=cmd_verify_paper)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else OK
    if args.tolerance is None:
        args.tolerance = 1e-3 if args.command not in ("recover",) else None
    try:
        return args.func(args)
    except DatasetIntegrityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return FAILED
    except (PolarBlendError, argparse.ArgumentTypeError, ValueError, KeyError, FileNotFoundError,
            json.JSONDecodeError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
