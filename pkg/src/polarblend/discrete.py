"""Rounding of a continuous panel design to integer ply counts.

The discrete design is the one closest (squared Euclidean distance on
``(n0, rho0K, rho1)``) to the continuous design among those with integer
ply counts that satisfy laminate feasibility, blending between adjacent
panels, and the minimum ply-drop rule.  The anisotropy moduli stay
continuous and ``phi1`` is held at its continuous value.

For fixed ply counts the remaining problem is convex, so it is solved to
optimality by SQP.  The ply counts are searched with a seeded
neighbourhood search.  Candidates are ranked by total violation of the
ply-drop rule first and by distance second.  Each candidate is scored
with its exact convex sub-problem.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import minimize

from .criteria import delta_n_gap, g_blend_pair, g_feas
from .polar import PanelVars

N0_MIN = 0.2
CONSTRAINT_TOL = 1e-3


def round_up_plies(n0: float, N_ref: int) -> float:
    """Ceiling rule ``ceil(n0 * N_ref) / N_ref`` (guarded against float noise)."""
    if not 0 < n0 <= 1:
        raise ValueError("n0 must lie in (0, 1]")
    x = n0 * N_ref
    N = round(x) if abs(x - round(x)) < 1e-9 else math.ceil(x)
    return N / N_ref


@dataclass(frozen=True)
class DesignVector:
    """Ordered panel variables of all optimisation regions."""

    ids: tuple
    panels: tuple[PanelVars, ...]
    N_ref: int
    role: str = "continuous"

    def __post_init__(self):
        if len(self.ids) != len(self.panels):
            raise ValueError("ids and panels must have the same length")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("panel ids must be unique")
        if self.role not in ("continuous", "discrete"):
            raise ValueError("role must be 'continuous' or 'discrete'")
        if self.role == "discrete":
            for p in self.panels:
                N = p.n0 * self.N_ref
                if abs(N - round(N)) > 1e-9 or round(N) < math.ceil(N0_MIN * self.N_ref - 1e-9):
                    raise ValueError(f"discrete n0 {p.n0} is not an admissible ply count")

    @classmethod
    def from_mapping(cls, panels: Mapping[Hashable, PanelVars], N_ref: int, role: str = "continuous"):
        return cls(tuple(panels), tuple(panels.values()), N_ref, role)

    def as_array(self) -> np.ndarray:
        return np.array([[p.n0, p.rho0K, p.rho1] for p in self.panels], dtype=float)

    @property
    def plies(self) -> dict:
        return {i: int(round(p.n0 * self.N_ref)) for i, p in zip(self.ids, self.panels)}

    def as_dict(self) -> dict:
        return dict(zip(self.ids, self.panels))

    def within_bounds(self, tol: float = 0.0) -> bool:
        return all(p.within_bounds(tol) for p in self.panels)


def discrete_objective(xi: DesignVector | np.ndarray, xi_c: DesignVector | np.ndarray) -> float:
    a = xi.as_array() if isinstance(xi, DesignVector) else np.asarray(xi, dtype=float)
    b = xi_c.as_array() if isinstance(xi_c, DesignVector) else np.asarray(xi_c, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"design vectors differ in shape: {a.shape} vs {b.shape}")
    return float(np.sum((a - b) ** 2))


@dataclass(frozen=True)
class DiscreteConfig:
    N_ref: int
    dn_min: int = 4
    budget: int = 2000  # sub-problem solves
    seed: int = 0
    radius: int | None = None  # largest single ply-count move; defaults to dn_min
    kicks: int = 100
    restarts: int = 1
    workers: int = 1
    tolerance: float = CONSTRAINT_TOL

    def __post_init__(self):
        if self.dn_min < 1 or self.budget < 1 or self.N_ref < 1:
            raise ValueError("dn_min, budget and N_ref must be >= 1")
        if self.restarts < 1 or self.workers < 1 or self.kicks < 0:
            raise ValueError("restarts and workers must be >= 1, kicks >= 0")

    @property
    def move_radius(self) -> int:
        return self.dn_min if self.radius is None else self.radius


@dataclass(frozen=True)
class ConstraintRow:
    name: str
    where: tuple
    value: float
    satisfied: bool


@dataclass
class DiscreteResult:
    design: DesignVector
    objective: float
    report: list[ConstraintRow]
    evaluations: int
    history: list = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return all(r.satisfied for r in self.report)

    @property
    def violations(self) -> list[ConstraintRow]:
        return [r for r in self.report if not r.satisfied]


class _Problem:
    """Continuous data plus the convex sub-problem for fixed ply counts."""

    def __init__(self, xi_c: DesignVector, edges: Sequence[tuple[int, int]], cfg: DiscreteConfig):
        self.c = xi_c.as_array()
        self.phi = np.array([p.phi1 for p in xi_c.panels])
        self.edges = list(edges)
        self.cfg = cfg
        self.P = len(self.c)
        self.lo = math.ceil(N0_MIN * cfg.N_ref - 1e-9)
        self.hi = cfg.N_ref

    def gap_violation(self, N: tuple) -> float:
        v = 0.0
        for p, q in self.edges:
            v += max(0.0, delta_n_gap(N[p], N[q], self.cfg.dn_min, self.cfg.N_ref))
        return v

    def n_distance(self, N: tuple) -> float:
        return float(np.sum((self.c[:, 0] - np.asarray(N) / self.cfg.N_ref) ** 2))

    def solve_moduli(self, N: tuple) -> tuple[np.ndarray, float]:
        """Closest (rho0K, rho1) for every panel given the ply counts."""
        P, c = self.P, self.c
        Nf = np.asarray(N, dtype=float)
        target = np.concatenate([c[:, 1], c[:, 2]])
        cons = []
        for k in range(P):
            cons.append({
                "type": "ineq",
                "fun": lambda z, k=k: 1 + z[k] - 2 * z[P + k] ** 2,
                "jac": lambda z, k=k: _unit(2 * P, k) - 4 * z[P + k] * _unit(2 * P, P + k),
            })
        for p, q in self.edges:
            dN = Nf[p] - Nf[q]
            for off, h in ((0, 4), (P, 2)):
                w = h * math.pi / 2
                ep = np.array([math.cos(w * self.phi[p]), math.sin(w * self.phi[p])]) * Nf[p]
                eq = np.array([math.cos(w * self.phi[q]), math.sin(w * self.phi[q])]) * Nf[q]
                ip, iq = off + p, off + q
                if dN == 0:
                    # equal counts force equal moduli vectors; keep independent rows only
                    rows = np.array([ep[r] * _unit(2 * P, ip) - eq[r] * _unit(2 * P, iq) for r in range(2)])
                    u, sv, vt = np.linalg.svd(rows, full_matrices=False)
                    for jac in vt[sv > 1e-12 * max(1.0, sv.max())]:
                        cons.append({"type": "eq", "fun": lambda z, j=jac: float(j @ z), "jac": lambda z, j=jac: j})
                else:
                    def fun(z, ep=ep, eq=eq, ip=ip, iq=iq, dN=dN):
                        d = ep * z[ip] - eq * z[iq]
                        return dN * dN - float(d @ d)

                    def jac(z, ep=ep, eq=eq, ip=ip, iq=iq):
                        d = ep * z[ip] - eq * z[iq]
                        g = np.zeros(2 * P)
                        g[ip] = -2 * float(d @ ep)
                        g[iq] = 2 * float(d @ eq)
                        return g

                    cons.append({"type": "ineq", "fun": fun, "jac": jac})
        bounds = [(-1.0, 1.0)] * P + [(0.0, 1.0)] * P
        best = None
        for z0 in (np.clip(target, [b[0] for b in bounds], [b[1] for b in bounds]), np.zeros(2 * P)):
            res = minimize(
                lambda z: float(np.sum((z - target) ** 2)),
                z0,
                jac=lambda z: 2 * (z - target),
                method="SLSQP",
                bounds=bounds,
                constraints=cons,
                options={"ftol": 1e-15, "maxiter": 1000},
            )
            z = np.clip(res.x, [b[0] for b in bounds], [b[1] for b in bounds])
            viol = _violation(z, cons)
            f = float(np.sum((z - target) ** 2))
            if best is None or (viol, f) < (best[2], best[1]):
                best = (z, f, viol)
            if res.success and viol < 1e-10:
                break
        z, f, _ = best
        return z.reshape(2, P).T, f


def _unit(n: int, k: int) -> np.ndarray:
    e = np.zeros(n)
    e[k] = 1.0
    return e


def _violation(z: np.ndarray, cons: list) -> float:
    v = 0.0
    for con in cons:
        val = con["fun"](z)
        v += abs(val) if con["type"] == "eq" else max(0.0, -val)
    return v


class _Search:
    def __init__(self, prob: _Problem, cfg: DiscreteConfig, budget: int, rng: np.random.Generator):
        self.prob, self.cfg, self.budget, self.rng = prob, cfg, budget, rng
        self.cache: dict[tuple, tuple[float, float, np.ndarray | None]] = {}
        self.used = 0
        self.best: tuple | None = None
        self.best_key = (math.inf, math.inf)
        self.history: list[tuple[int, float, float]] = []
        self.adj = [[] for _ in range(prob.P)]
        for p, q in prob.edges:
            self.adj[p].append(q)
            self.adj[q].append(p)

    def key(self, N: tuple) -> tuple[float, float] | None:
        """(violation, objective); None once the budget is spent."""
        if N in self.cache:
            v, f, _ = self.cache[N]
            return v, f
        v = self.prob.gap_violation(N)
        if v > 0:
            # infeasible ply counts are ranked by violation alone; no sub-problem needed
            f = self.prob.n_distance(N)
            self.cache[N] = (v, f, None)
        else:
            lower = self.prob.n_distance(N)
            if self.best_key[0] == 0 and lower >= self.best_key[1]:
                # cannot beat the incumbent; its bound still orders the descent
                return 0.0, lower
            if self.used >= self.budget:
                return None
            self.used += 1
            rho, fr = self.prob.solve_moduli(N)
            f = lower + fr
            self.cache[N] = (0.0, f, rho)
        k = self.cache[N][:2]
        if k < self.best_key:
            self.best_key, self.best = k, N
            self.history.append((self.used, k[0], k[1]))
        return k

    def neighbours(self, N: tuple) -> list[tuple]:
        P, lo, hi, r = self.prob.P, self.prob.lo, self.prob.hi, self.cfg.move_radius
        out = []
        seen = {N}

        def add(M):
            M = tuple(M)
            if M not in seen and all(lo <= m <= hi for m in M):
                seen.add(M)
                out.append(M)

        for i in range(P):
            for d in range(1, r + 1):
                for s in (-d, d):
                    M = list(N)
                    M[i] += s
                    add(M)
            # snap to a neighbour's count, or to a legal drop from it
            for j in self.adj[i]:
                for t in (N[j], N[j] - self.cfg.dn_min, N[j] + self.cfg.dn_min):
                    M = list(N)
                    M[i] = t
                    add(M)
            # shift the connected group of panels sharing panel i's count
            group, stack = {i}, [i]
            while stack:
                u = stack.pop()
                for v in self.adj[u]:
                    if v not in group and N[v] == N[i]:
                        group.add(v)
                        stack.append(v)
            if len(group) > 1:
                for d in range(1, r + 1):
                    for s in (-d, d):
                        M = list(N)
                        for g in group:
                            M[g] += s
                        add(M)
        return out

    def descend(self, N: tuple) -> tuple | None:
        cur = self.key(N)
        if cur is None:
            return None
        while True:
            best_M, best_k = None, cur
            for M in self.neighbours(N):
                k = self.key(M)
                if k is None:
                    return None
                if k < best_k:
                    best_M, best_k = M, k
            if best_M is None:
                return N
            N, cur = best_M, best_k

    def run(self, start: tuple) -> None:
        N = self.descend(start)
        if N is None:
            return
        P, lo, hi = self.prob.P, self.prob.lo, self.prob.hi
        for _ in range(self.cfg.kicks):
            M = list(self.best)
            m = int(self.rng.integers(1, P + 1))
            for i in self.rng.choice(P, size=m, replace=False):
                M[i] = int(np.clip(M[i] + self.rng.integers(-2 * self.cfg.dn_min, 2 * self.cfg.dn_min + 1), lo, hi))
            if self.descend(tuple(M)) is None:
                return


def _edge_index(ids: Sequence, adjacency: Iterable[tuple]) -> list[tuple[int, int]]:
    pos = {k: i for i, k in enumerate(ids)}
    edges = []
    for p, q in adjacency:
        if p not in pos or q not in pos:
            from .criteria import DanglingEdgeError
            raise DanglingEdgeError(f"edge ({p}, {q}) references an unknown panel")
        if p != q:
            edges.append((pos[p], pos[q]))
    return edges


def constraint_report(xi: DesignVector, adjacency: Iterable[tuple], dn_min: int,
                      tolerance: float = CONSTRAINT_TOL) -> list[ConstraintRow]:
    """Feasibility per panel, blending and ply-drop gap per edge."""
    rows = []
    for i, p in zip(xi.ids, xi.panels):
        g = g_feas(p).g
        rows.append(ConstraintRow("feasibility", (i,), g, g <= tolerance))
    lookup = xi.as_dict()
    for p, q in adjacency:
        pair = g_blend_pair(lookup[p], lookup[q], xi.N_ref)
        # blending values are in squared plies; the tolerance applies to the scaled value
        scale = xi.N_ref**2
        rows.append(ConstraintRow("blending_rho0", (p, q), pair.g0, pair.g0 / scale <= tolerance))
        rows.append(ConstraintRow("blending_rho1", (p, q), pair.g1, pair.g1 / scale <= tolerance))
        Np, Nq = xi.plies[p], xi.plies[q]
        gap = delta_n_gap(Np, Nq, dn_min, xi.N_ref)
        rows.append(ConstraintRow("ply_drop_gap", (p, q), gap, gap <= 0 or Np == Nq))
    return rows


def solve_discrete(xi_c: DesignVector, adjacency: Iterable[tuple], cfg: DiscreteConfig) -> DiscreteResult:
    """Closest admissible discrete design to ``xi_c``."""
    if cfg.N_ref != xi_c.N_ref:
        raise ValueError("configuration and design use different N_ref")
    if not xi_c.within_bounds(1e-12):
        raise ValueError("continuous design is out of bounds")
    adjacency = list(adjacency)
    prob = _Problem(xi_c, _edge_index(xi_c.ids, adjacency), cfg)
    start = tuple(int(np.clip(round(round_up_plies(p.n0, cfg.N_ref) * cfg.N_ref), prob.lo, prob.hi))
                  for p in xi_c.panels)
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)
    share = [cfg.budget // cfg.restarts + (r < cfg.budget % cfg.restarts) for r in range(cfg.restarts)]
    runs = [_Search(prob, cfg, max(1, share[r]), np.random.default_rng(seeds[r])) for r in range(cfg.restarts)]
    if cfg.workers > 1 and len(runs) > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            list(pool.map(lambda s: s.run(start), runs))
    else:
        for s in runs:
            s.run(start)
    k = min(range(len(runs)), key=lambda r: (runs[r].best_key, r))
    run = runs[k]
    N = run.best
    rho = run.cache[N][2]
    if rho is None:
        rho, _ = prob.solve_moduli(N)
    panels = tuple(
        PanelVars(N[i] / cfg.N_ref, float(rho[i, 0]), float(rho[i, 1]), float(prob.phi[i]))
        for i in range(prob.P)
    )
    xi_d = DesignVector(xi_c.ids, panels, cfg.N_ref, "discrete")
    return DiscreteResult(
        design=xi_d,
        objective=discrete_objective(xi_d, xi_c),
        report=constraint_report(xi_d, adjacency, cfg.dn_min, cfg.tolerance),
        evaluations=sum(r.used for r in runs),
        history=run.history,
    )
