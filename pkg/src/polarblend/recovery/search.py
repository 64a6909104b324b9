"""Stochastic search for recovery stacking sequences.

The search works on integer grid indices.  A kernel of the best distinct
candidates is kept; each generation samples new candidates around kernel
members (rank-weighted choice, per-variable spread taken from the kernel,
plus forced point mutations and ply swaps).  When progress stalls, the
best candidate is polished: each variable in turn is set to its best grid
value, then the best exchange of two plies is taken, until neither move
helps.  Later stalls polish a kicked copy of the best point instead.

The run is reproducible for a given seed, and the best residual found
within a budget never gets worse when the budget grows: the trajectory
does not depend on the budget, which only truncates it.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Hashable, Mapping, Sequence

import numpy as np

from ..errors import SchemeError
from ..polar import PlyMaterial, StackingSequence
from .blending import BlendingScheme, SchemeEntry, assemble_stacks
from .residuals import BatchEvaluator, Norm, ResidualBreakdown, TargetPolar, orientation_grid, residuals


@dataclass(frozen=True)
class SearchConfig:
    step: int = 1
    ants: int = 100
    kernel: int = 20
    budget: int = 1_000_000
    seed: int = 0
    restarts: int = 1
    workers: int = 1
    patience: int = 30
    tolerance: float = 0.0  # stop as soon as the total residual reaches this value
    norm: Norm = "frobenius"

    def __post_init__(self):
        if self.ants < 1 or self.kernel < 1 or self.restarts < 1 or self.workers < 1:
            raise ValueError("ants, kernel, restarts and workers must be >= 1")
        if self.budget < 0:
            raise ValueError("budget must be >= 0")
        orientation_grid(self.step)


@dataclass
class RecoveryResult:
    x: np.ndarray
    stacks: dict
    breakdowns: dict
    total: float
    evaluations: int
    history: list = field(default_factory=list)  # (evaluations, best total) at each improvement
    restart: int = 0

    @property
    def per_panel(self) -> dict:
        return {p: b.total for p, b in self.breakdowns.items()}


class _Stop(Exception):
    pass


class _Run:
    MAX_SWAPS = 2000

    def __init__(self, ev: BatchEvaluator, cfg: SearchConfig, budget: int, rng: np.random.Generator,
                 x0: np.ndarray | None):
        self.ev, self.cfg, self.budget, self.rng = ev, cfg, budget, rng
        self.G = len(ev.angles)
        self.n = ev.n_vars
        self.used = 0
        self.history: list[tuple[int, float]] = []
        self.best_x = None
        self.best_f = math.inf
        self.x0 = x0

    # evaluation accounting ------------------------------------------------
    def _accept_prefix(self, X: np.ndarray, f: np.ndarray) -> tuple[np.ndarray, np.ndarray, bool]:
        room = self.budget - self.used
        stop = len(f) >= room
        X, f = X[:room], f[:room]
        self.used += len(f)
        if len(f):
            k = int(np.argmin(f))
            if f[k] < self.best_f:
                self.best_f, self.best_x = float(f[k]), X[k].copy()
                self.history.append((self.used - len(f) + k + 1, self.best_f))
        if self.best_f <= self.cfg.tolerance:
            stop = True
        return X, f, stop

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        f = self.ev.totals(X)
        Xa, fa, stop = self._accept_prefix(X, f)
        if stop:
            raise _Stop
        return fa

    # kernel ---------------------------------------------------------------
    def _merge(self, KX, Kf, X, f):
        X = np.concatenate([KX, X])
        f = np.concatenate([Kf, f])
        order = np.lexsort((np.arange(len(f)), f))
        X, f = X[order], f[order]
        _, first = np.unique(X, axis=0, return_index=True)
        keep = np.sort(first)[: self.cfg.kernel]
        return X[keep], f[keep]

    def _sample(self, KX: np.ndarray) -> np.ndarray:
        cfg, rng, G, n = self.cfg, self.rng, self.G, self.n
        k = len(KX)
        w = np.arange(k, 0, -1, dtype=float)
        parents = rng.choice(k, size=cfg.ants, p=w / w.sum())
        P = KX[parents]
        diff = np.abs(((KX[None, :, :] - P[:, None, :]) + G // 2) % G - G // 2)
        sigma = 0.85 * diff.mean(axis=1)
        step = np.rint(rng.standard_normal(P.shape) * sigma).astype(np.int64)
        C = (P + step) % G
        n_mut = 1 + rng.poisson(1.0, size=cfg.ants)
        span = max(1, G // 4)
        # point mutations on n_mut random positions per ant
        rank = np.argsort(np.argsort(rng.random(C.shape), axis=1), axis=1)
        off = rng.integers(1, span + 1, size=C.shape) * rng.choice((-1, 1), size=C.shape)
        mutate = rank < n_mut[:, None]
        swap = rng.random(cfg.ants) < 0.3 if n > 1 else np.zeros(cfg.ants, dtype=bool)
        mutate[swap] = False
        C = np.where(mutate, (C + off) % G, C)
        if swap.any():
            a = np.flatnonzero(swap)
            i = rng.integers(0, n, size=len(a))
            j = (i + rng.integers(1, n, size=len(a))) % n
            C[a, i], C[a, j] = C[a, j], C[a, i]
        return C

    def _polish(self, x: np.ndarray, fx: float) -> tuple[np.ndarray, float]:
        ev, G = self.ev, self.G
        x = x.copy()
        base = ev.panel_totals(x)[0]
        improved = True
        while improved:
            improved = False
            for i in self.rng.permutation(self.n):
                affected = ev.panels_of_var[i]
                if not affected:
                    continue
                X = np.repeat(x[None, :], G, axis=0)
                X[:, i] = np.arange(G)
                part = ev.panel_totals(X, affected)
                f = base.sum() - base[affected].sum() + part.sum(axis=1)
                _, f_acc, stop = self._accept_prefix(X, f)
                g = int(np.argmin(f_acc)) if len(f_acc) else x[i]
                if len(f_acc) and f_acc[g] < fx - 1e-15 and g != x[i]:
                    x[i] = g
                    base[affected] = part[g]
                    fx = float(f_acc[g])
                    improved = True
                if stop:
                    raise _Stop
            x, fs = self._swaps(x, fx)
            if fs < fx:
                fx, improved = fs, True
                base = ev.panel_totals(x)[0]
        return x, fx

    def _swaps(self, x: np.ndarray, fx: float) -> tuple[np.ndarray, float]:
        # exchanging two plies keeps the membrane terms and reshuffles the coupling ones
        i, j = np.triu_indices(self.n, 1)
        keep = x[i] != x[j]
        i, j = i[keep], j[keep]
        if len(i) > self.MAX_SWAPS:
            pick = np.sort(self.rng.choice(len(i), size=self.MAX_SWAPS, replace=False))
            i, j = i[pick], j[pick]
        if not len(i):
            return x, fx
        X = np.repeat(x[None, :], len(i), axis=0)
        r = np.arange(len(i))
        X[r, i], X[r, j] = x[j], x[i]
        _, f, stop = self._accept_prefix(X, self.ev.totals(X))
        if len(f) and f.min() < fx - 1e-15:
            k = int(np.argmin(f))
            x, fx = X[k].copy(), float(f[k])
        if stop:
            raise _Stop
        return x, fx

    def run(self) -> None:
        cfg, rng, G, n = self.cfg, self.rng, self.G, self.n
        X = rng.integers(0, G, size=(cfg.kernel, n))
        if self.x0 is not None:
            X[0] = self.x0
        try:
            # the initial point is always reported, even with a zero budget
            f0 = self.ev.totals(X[:1])
            self.best_x, self.best_f = X[0].copy(), float(f0[0])
            self.history.append((0, self.best_f))
            if self.budget == 0 or self.best_f <= cfg.tolerance:
                return
            KX, Kf = self._merge(X[:0], np.empty(0), X, self.evaluate(X))
            stall = 0
            polished = None
            while True:
                C = self._sample(KX)
                before = self.best_f
                KX, Kf = self._merge(KX, Kf, C, self.evaluate(C))
                stall = 0 if self.best_f < before else stall + 1
                if stall < cfg.patience:
                    continue
                stall = 0
                if polished is None or self.best_f < polished:
                    start = self.best_x
                else:
                    # kick: reassign a few variables of the best point
                    start = self.best_x.copy()
                    m = int(rng.integers(2, max(3, n // 8) + 1)) if n > 1 else 1
                    idx = rng.choice(n, size=min(n, m), replace=False)
                    start[idx] = rng.integers(0, G, size=len(idx))
                xp, fp = self._polish(start, float(self.evaluate(start[None, :])[0]))
                polished = self.best_f
                KX, Kf = self._merge(KX, Kf, xp[None, :], np.array([fp]))
        except _Stop:
            return


def independent_scheme(targets: Mapping[Hashable, TargetPolar]) -> BlendingScheme:
    """Layout with no shared plies: every panel owns its whole stack."""
    return BlendingScheme(0, [SchemeEntry(p, t.N) for p, t in targets.items()])


def _to_grid(x: Sequence[int], angles: np.ndarray) -> np.ndarray:
    lookup = {int(a): i for i, a in enumerate(angles)}
    out = []
    for a in x:
        a = 90 if int(a) == -90 else int(a)
        if a not in lookup:
            raise ValueError(f"initial angle {a} is not on the search grid")
        out.append(lookup[a])
    return np.asarray(out, dtype=np.int64)


def recover(
    targets: Mapping[Hashable, TargetPolar],
    m: PlyMaterial,
    scheme: BlendingScheme | None = None,
    config: SearchConfig = SearchConfig(),
    x0: Sequence[int] | None = None,
) -> RecoveryResult:
    """Search stacking sequences for all ``targets`` laid out by ``scheme``."""
    if not targets:
        raise ValueError("no targets to recover")
    scheme = scheme or independent_scheme(targets)
    missing = set(targets) ^ set(scheme.panels)
    if missing:
        raise SchemeError(f"targets and scheme panels differ: {sorted(map(str, missing))}")
    angles = orientation_grid(config.step)
    panels = scheme.panels
    ev = BatchEvaluator(m, [targets[p] for p in panels], [scheme.index(p) for p in panels], angles, config.norm)
    if ev.n_vars != scheme.n_vars:
        raise SchemeError("scheme has design variables not used by any panel")
    g0 = None if x0 is None else _to_grid(x0, angles)
    if g0 is not None and g0.shape != (scheme.n_vars,):
        raise ValueError(f"initial point must have {scheme.n_vars} entries")

    seeds = np.random.SeedSequence(config.seed).spawn(config.restarts)
    share = [config.budget // config.restarts + (r < config.budget % config.restarts)
             for r in range(config.restarts)]
    runs = [_Run(ev, config, share[r], np.random.default_rng(seeds[r]), g0) for r in range(config.restarts)]
    if config.workers > 1 and len(runs) > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            list(pool.map(lambda r: r.run(), runs))
    else:
        for r in runs:
            r.run()
    k = min(range(len(runs)), key=lambda r: (runs[r].best_f, r))
    best = runs[k]
    x = angles[best.best_x]
    stacks = assemble_stacks(x, scheme)
    bds = {p: residuals(stacks[p], m, targets[p], config.norm) for p in panels}
    history, offset = [], 0
    for r, run in enumerate(runs):
        if r == k:
            history = [(offset + e, f) for e, f in run.history]
        offset += run.used
    return RecoveryResult(
        x=x,
        stacks=stacks,
        breakdowns=bds,
        total=float(sum(b.total for b in bds.values())),
        evaluations=sum(r.used for r in runs),
        history=history,
        restart=k,
    )


def recover_single(t: TargetPolar, m: PlyMaterial, config: SearchConfig = SearchConfig(),
                   x0: Sequence[int] | None = None) -> tuple[StackingSequence, ResidualBreakdown, RecoveryResult]:
    res = recover({0: t}, m, None, config, x0)
    return res.stacks[0], res.breakdowns[0], res
