"""End-to-end run: discretize panel design, recover stacks, re-check constraints."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .criteria import delta_n_gap, g_blend_pair, g_buck, g_disp, g_feas
from .datasets import load_material
from .discrete import (
    DesignVector,
    DiscreteConfig,
    constraint_report,
    discrete_objective,
    round_up_plies,
    solve_discrete,
)
from .errors import InputFormatError, PolarBlendError
from .io import read_edges, read_panels, read_response, write_panels, write_stacks
from .polar import PanelVars, laminate_homogenized, panel_from_laminate
from .recovery.blending import adjacency_scheme, is_blended, read_scheme, write_scheme
from .recovery.residuals import TargetPolar
from .recovery.search import SearchConfig, recover


class PipelineError(PolarBlendError):
    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")


@dataclass
class ProjectConfig:
    panels: Path
    adjacency: Path
    output: Path
    material: str = "t300_5208"
    scheme: Path | None = None
    response: Path | None = None
    seed: int = 0
    dn_min: int = 4
    discrete_budget: int = 2000
    recovery_budget: int = 100_000
    step: int = 1
    covering: int = 2
    tolerance: float = 1e-3
    b_semi_span: float | None = None  # needed to turn a tip displacement into a constraint value

    @classmethod
    def from_file(cls, path: str | Path) -> "ProjectConfig":
        path = Path(path)
        data = json.loads(path.read_text())
        base = path.parent

        def rel(key):
            v = data.get(key)
            return None if v is None else (base / v if not Path(v).is_absolute() else Path(v))

        for key in ("panels", "adjacency", "output"):
            if key not in data:
                raise InputFormatError(f"{path}: missing field {key!r}")
        cfg = cls(
            panels=rel("panels"), adjacency=rel("adjacency"), output=rel("output"),
            material=data.get("material", "t300_5208"), scheme=rel("scheme"), response=rel("response"),
            seed=int(data.get("seed", 0)), dn_min=int(data.get("dn_min", 4)),
            discrete_budget=int(data.get("discrete_budget", 2000)),
            recovery_budget=int(data.get("recovery_budget", 100_000)),
            step=int(data.get("step", 1)), covering=int(data.get("covering", 2)),
            tolerance=float(data.get("tolerance", 1e-3)), b_semi_span=data.get("b_semi_span"),
        )
        mat = Path(cfg.material)
        if mat.suffix == ".json" and not mat.is_absolute():
            cfg.material = str(base / mat)
        for p in (cfg.panels, cfg.adjacency, cfg.scheme, cfg.response):
            if p is not None and not p.exists():
                raise InputFormatError(f"{path}: referenced file {p} does not exist")
        return cfg


@dataclass
class PipelineArtifacts:
    files: dict[str, Path]
    summary: dict[str, Any] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return bool(self.summary.get("all_constraints_satisfied"))


def _stage(name):
    def wrap(fn):
        def inner(*a, **k):
            try:
                return fn(*a, **k)
            except PipelineError:
                raise
            except Exception as exc:  # label every failure with its stage
                raise PipelineError(name, exc) from exc
        return inner
    return wrap


@_stage("discretize")
def _discretize(cfg: ProjectConfig, panels: dict, edges: list, N_ref: int):
    xi_c = DesignVector.from_mapping(panels, N_ref)
    if cfg.discrete_budget == 0:
        # initial point only: ceiling-rounded counts, moduli kept at their continuous values
        lo = int(np.ceil(0.2 * N_ref - 1e-9))
        rounded = {}
        for k, p in panels.items():
            N = max(lo, int(round(round_up_plies(p.n0, N_ref) * N_ref)))
            rounded[k] = PanelVars(N / N_ref, p.rho0K, p.rho1, p.phi1)
        xi_d = DesignVector.from_mapping(rounded, N_ref, "discrete")
        report = constraint_report(xi_d, edges, cfg.dn_min, cfg.tolerance)
        return xi_d, discrete_objective(xi_d, xi_c), report
    res = solve_discrete(xi_c, edges, DiscreteConfig(N_ref=N_ref, dn_min=cfg.dn_min, budget=cfg.discrete_budget,
                                                     seed=cfg.seed, tolerance=cfg.tolerance))
    return res.design, res.objective, res.report


@_stage("recover")
def _recover(cfg: ProjectConfig, m, xi_d: DesignVector, edges: list):
    plies = xi_d.plies
    targets = {k: TargetPolar.from_panel(p, xi_d.N_ref) for k, p in zip(xi_d.ids, xi_d.panels)}
    scheme = read_scheme(cfg.scheme) if cfg.scheme else adjacency_scheme(plies, edges, cfg.covering)
    res = recover(targets, m, scheme, SearchConfig(step=cfg.step, budget=cfg.recovery_budget, seed=cfg.seed))
    return scheme, res


@_stage("recheck")
def _recheck(cfg: ProjectConfig, m, res, edges: list, N_ref: int) -> dict:
    rows = []
    panels = {}
    for k, s in res.stacks.items():
        L = laminate_homogenized(s, m)
        p = panel_from_laminate(L, m, N_ref, check=False)
        panels[k] = p
        K, dev = L.polar_A.orthotropy_offset()
        g = g_feas(p).g
        rows.append({"constraint": "feasibility", "where": [k], "value": g, "satisfied": g <= cfg.tolerance})
        # diagnostic only: short stacks on a coarse grid are rarely exactly orthotropic
        rows.append({"constraint": "orthotropy_offset_deg", "where": [k], "value": dev,
                     "satisfied": abs(dev) <= 0.5, "informational": True})
    for a, b in edges:
        pair = g_blend_pair(panels[a], panels[b], N_ref)
        sa, sb = res.stacks[a], res.stacks[b]
        thick, thin = (sa, sb) if sa.N >= sb.N else (sb, sa)
        meso = is_blended(thick, thin)
        gap = delta_n_gap(sa.N, sb.N, cfg.dn_min, N_ref)
        rows += [
            {"constraint": "blending_rho0", "where": [a, b], "value": pair.g0,
             "satisfied": pair.g0 / N_ref**2 <= cfg.tolerance},
            {"constraint": "blending_rho1", "where": [a, b], "value": pair.g1,
             "satisfied": pair.g1 / N_ref**2 <= cfg.tolerance},
            {"constraint": "ply_drop_gap", "where": [a, b], "value": gap, "satisfied": gap <= 0 or sa.N == sb.N},
            {"constraint": "stack_blended", "where": [a, b], "value": float(meso.blended),
             "satisfied": meso.blended},
        ]
    if cfg.response is not None:
        r = read_response(cfg.response)
        if r.lam is not None:
            g = g_buck(r.lam)
            rows.append({"constraint": "buckling", "where": [], "value": g, "satisfied": g <= cfg.tolerance})
        if r.u is not None and cfg.b_semi_span:
            g = g_disp(r.u, cfg.b_semi_span)
            rows.append({"constraint": "displacement", "where": [], "value": g, "satisfied": g <= cfg.tolerance})
    return {"rows": rows, "panels": panels}


def cmd_pipeline(cfg: ProjectConfig) -> PipelineArtifacts:
    try:
        m = load_material(cfg.material)
        panels, areas, N_ref = read_panels(cfg.panels)
        edges = read_edges(cfg.adjacency)
    except Exception as exc:
        raise PipelineError("load", exc) from exc
    N_ref = N_ref or m.N_ref
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)

    xi_d, objective, report = _discretize(cfg, panels, edges, N_ref)
    files = {"discrete_panels": out / "discrete_panels.json"}
    write_panels(files["discrete_panels"], xi_d.as_dict(), N_ref, areas)
    files["discrete_report"] = out / "discrete_report.json"
    files["discrete_report"].write_text(json.dumps({
        "objective": objective,
        "feasible": all(r.satisfied for r in report),
        "constraints": [{"constraint": r.name, "where": list(r.where), "value": r.value, "satisfied": r.satisfied}
                        for r in report],
    }, indent=2) + "\n")

    scheme, res = _recover(cfg, m, xi_d, edges)
    files["scheme"] = out / "scheme.json"
    write_scheme(scheme, files["scheme"])
    files["stacks"] = out / "stacks.csv"
    write_stacks(files["stacks"], res.stacks, res.breakdowns)

    chk = _recheck(cfg, m, res, edges, N_ref)
    files["recheck"] = out / "recheck.json"
    files["recheck"].write_text(json.dumps({"constraints": chk["rows"]}, indent=2) + "\n")

    summary = {
        "discrete_objective": objective,
        "discrete_feasible": all(r.satisfied for r in report),
        "recovery_total": res.total,
        "recovery_evaluations": res.evaluations,
        "independent_variables": scheme.independent_count,
        "unblended_edges": [list(e) for e in scheme.unblended_edges(edges)],
        "all_constraints_satisfied": all(r["satisfied"] for r in chk["rows"] if not r.get("informational")),
    }
    files["summary"] = out / "summary.json"
    files["summary"].write_text(json.dumps(summary, indent=2) + "\n")
    return PipelineArtifacts(files, summary)
