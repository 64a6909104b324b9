"""Shared-ply layouts for blended stacking sequences.

Every stack starts with the same ``covering`` plies.  The rest of a stack
(its tail) is a block of plies owned by the panel followed by the last
``shared`` plies of its base panel's tail.  With ``shared`` equal to the
whole base tail, the base stack is obtained from the panel's stack by
dropping the owned plies, so the pair is blended by construction.

The design vector concatenates the covering plies and then the owned
blocks in scheme order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from ..errors import SchemeError
from ..polar import StackingSequence


@dataclass(frozen=True)
class SchemeEntry:
    panel: Hashable
    N: int
    base: Hashable | None = None
    shared: int = 0

    def own(self, covering: int) -> int:
        return self.N - covering - self.shared


@dataclass
class BlendingScheme:
    covering: int
    entries: list[SchemeEntry]
    _index: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        if self.covering < 0:
            raise SchemeError("covering ply count must be >= 0")
        tails: dict[Hashable, np.ndarray] = {}
        offset = self.covering
        cover = np.arange(self.covering, dtype=np.int64)
        for e in self.entries:
            if e.panel in tails:
                raise SchemeError(f"panel {e.panel!r} appears twice")
            if e.N < self.covering:
                raise SchemeError(f"panel {e.panel!r} has fewer plies than the covering")
            own = e.own(self.covering)
            if e.base is None:
                if e.shared:
                    raise SchemeError(f"panel {e.panel!r} shares plies without a base")
                base_tail = np.empty(0, dtype=np.int64)
            else:
                if e.base not in tails:
                    raise SchemeError(f"base {e.base!r} of panel {e.panel!r} must come earlier")
                base_tail = tails[e.base]
                if not 0 <= e.shared <= len(base_tail):
                    raise SchemeError(f"panel {e.panel!r} shares more plies than its base has")
            if own < 0:
                raise SchemeError(f"panel {e.panel!r} shares more plies than it has")
            tail = np.concatenate([np.arange(offset, offset + own), base_tail[len(base_tail) - e.shared:]])
            offset += own
            tails[e.panel] = tail.astype(np.int64)
            self._index[e.panel] = np.concatenate([cover, tails[e.panel]])
        self.n_vars = offset

    @property
    def panels(self) -> list:
        return [e.panel for e in self.entries]

    @property
    def independent_count(self) -> int:
        return self.n_vars

    def entry(self, panel) -> SchemeEntry:
        for e in self.entries:
            if e.panel == panel:
                return e
        raise KeyError(panel)

    def index(self, panel) -> np.ndarray:
        """Positions in the design vector of the plies of ``panel``'s stack."""
        return self._index[panel]

    def guaranteed_pairs(self) -> set[tuple]:
        """Unordered pairs that are blended for every design vector."""
        ok = set()
        tails = {p: self._index[p][self.covering:] for p in self.panels}
        for p in self.panels:
            for q in self.panels:
                tp, tq = tails[p], tails[q]
                if p != q and len(tq) <= len(tp) and np.array_equal(tp[len(tp) - len(tq):], tq):
                    ok.add(frozenset((p, q)))
        return ok

    def unblended_edges(self, adjacency: Iterable[tuple]) -> list[tuple]:
        ok = self.guaranteed_pairs()
        return [(p, q) for p, q in adjacency if frozenset((p, q)) not in ok]

    def to_dict(self) -> dict:
        return {
            "covering": self.covering,
            "entries": [
                {"panel": e.panel, "N": e.N, "base": e.base, "shared": e.shared} for e in self.entries
            ],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "BlendingScheme":
        try:
            entries = [SchemeEntry(e["panel"], int(e["N"]), e.get("base"), int(e.get("shared", 0)))
                       for e in d["entries"]]
            return cls(int(d["covering"]), entries)
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemeError(f"malformed blending scheme: {exc}") from None


def read_scheme(path: str | Path) -> BlendingScheme:
    return BlendingScheme.from_dict(json.loads(Path(path).read_text()))


def write_scheme(scheme: BlendingScheme, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scheme.to_dict(), indent=2) + "\n")


def assemble_stacks(x: Sequence[int], scheme: BlendingScheme) -> dict:
    """Design vector of ply angles -> {panel: StackingSequence}."""
    x = np.asarray(x)
    if x.shape != (scheme.n_vars,):
        raise SchemeError(f"design vector must have {scheme.n_vars} entries, got {x.shape}")
    return {p: StackingSequence(x[scheme.index(p)].tolist()) for p in scheme.panels}


def _common_suffix(a: Sequence, b: Sequence) -> int:
    n = 0
    while n < min(len(a), len(b)) and a[len(a) - 1 - n] == b[len(b) - 1 - n]:
        n += 1
    return n


def scheme_from_stacks(stacks: Mapping[Hashable, StackingSequence], covering: int = 2) -> tuple[BlendingScheme, np.ndarray]:
    """Tightest scheme reproducing given stacks, and its design vector.

    All stacks must start with the same covering plies.  Tails are inserted
    thickest first, each one reusing the longest suffix it has in common
    with an earlier tail, so the variable count equals the covering plus
    the number of nodes of the suffix trie of the tails.
    """
    items = list(stacks.items())
    if not items:
        raise SchemeError("no stacks given")
    cover = list(items[0][1].angles[:covering])
    for p, s in items:
        if len(s) < covering or list(s.angles[:covering]) != cover:
            raise SchemeError(f"stack of panel {p!r} does not start with the common covering plies")
    items.sort(key=lambda kv: -len(kv[1]))
    entries, x = [], list(cover)
    tails: dict = {}
    for p, s in items:
        tail = list(s.angles[covering:])
        best, shared = None, 0
        for q, tq in tails.items():
            k = _common_suffix(tail, tq)
            if k > shared:
                best, shared = q, k
        entries.append(SchemeEntry(p, len(s), best, shared))
        x.extend(tail[: len(tail) - shared])
        tails[p] = tail
    scheme = BlendingScheme(covering, entries)
    return scheme, np.asarray(x, dtype=np.int64)


def default_scheme(
    plies: Mapping[Hashable, int],
    adjacency: Iterable[tuple],
    covering: int = 2,
    single_chain: bool = False,
) -> BlendingScheme:
    """Scheme built thinnest first from the panel adjacency.

    Each panel extends the full tail of a thinner (or equal) neighbour so
    that all its already placed neighbours are nested inside it; panels
    without a placed neighbour extend the thickest placed panel of their
    connected component, or start a new root.  This branching layout can
    leave an edge unblended when two branches meet again.  With
    ``single_chain`` every panel extends the thickest placed panel of its
    component, so all stacks of a component are nested and every edge is
    blended, at the price of fewer independent variables.
    """
    adj: dict = {p: set() for p in plies}
    for p, q in adjacency:
        if p not in adj or q not in adj:
            raise SchemeError(f"edge ({p!r}, {q!r}) references an unknown panel")
        adj[p].add(q)
        adj[q].add(p)
    comp: dict = {}
    for start in adj:
        if start in comp:
            continue
        stack, comp[start] = [start], start
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in comp:
                    comp[v] = start
                    stack.append(v)
    order = sorted(plies, key=lambda p: (plies[p], str(p)))
    parent: dict = {}
    placed: list = []
    entries = []

    def ancestors(p):
        out = []
        while p is not None:
            out.append(p)
            p = parent[p]
        return out

    for p in order:
        near = [q for q in placed if q in adj[p]]
        base = None
        if near and not single_chain:
            for cand in sorted(near, key=lambda q: -plies[q]):
                chain = set(ancestors(cand))
                if all(q in chain for q in near):
                    base = cand
                    break
            if base is None:
                base = max(near, key=lambda q: plies[q])
        else:
            same = [q for q in placed if comp[q] == comp[p]]
            if same:
                base = max(same, key=lambda q: plies[q])
        parent[p] = base
        shared = 0 if base is None else plies[base] - covering
        if plies[p] < covering:
            raise SchemeError(f"panel {p!r} has fewer plies than the covering")
        entries.append(SchemeEntry(p, int(plies[p]), base, int(shared)))
        placed.append(p)
    return BlendingScheme(covering, entries)


def adjacency_scheme(plies: Mapping[Hashable, int], adjacency: Iterable[tuple], covering: int = 2) -> BlendingScheme:
    """Branching default scheme when it blends every edge, else the single chain."""
    edges = list(adjacency)
    scheme = default_scheme(plies, edges, covering)
    if scheme.unblended_edges(edges):
        scheme = default_scheme(plies, edges, covering, single_chain=True)
    return scheme


@dataclass(frozen=True)
class BlendCheck:
    blended: bool
    positions: tuple[int, ...] | None = None  # plies of the thicker stack kept by the thinner one
    reason: str = ""


def is_blended(
    parent: StackingSequence | Sequence[int],
    thinner: StackingSequence | Sequence[int],
    mode: str = "general",
    covering: int = 2,
) -> BlendCheck:
    """Whether ``thinner`` is obtained from ``parent`` by dropping plies.

    ``general`` accepts any subsequence; ``scheme`` additionally requires
    the shared covering plies and that the dropped plies form one block
    directly after the covering.
    """
    a = list(parent.angles if isinstance(parent, StackingSequence) else parent)
    b = list(thinner.angles if isinstance(thinner, StackingSequence) else thinner)
    if len(b) > len(a):
        return BlendCheck(False, None, "thinner stack has more plies than the parent")
    if mode == "general":
        pos, i = [], 0
        for k, angle in enumerate(a):
            if i < len(b) and angle == b[i]:
                pos.append(k)
                i += 1
        if i == len(b):
            return BlendCheck(True, tuple(pos))
        return BlendCheck(False, None, f"ply {i} ({b[i]}) of the thinner stack has no match")
    if mode == "scheme":
        if a[:covering] != b[:covering] or len(b) < covering:
            return BlendCheck(False, None, "covering plies differ")
        k = len(b) - covering
        if a[len(a) - k:] != b[covering:]:
            return BlendCheck(False, None, "tail of the thinner stack is not a suffix of the parent tail")
        return BlendCheck(True, tuple(range(covering)) + tuple(range(len(a) - k, len(a))))
    raise ValueError(f"unknown blending mode {mode!r}")
