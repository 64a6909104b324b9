"""Constraint functions and the mass objective of the panel-level problem.

Structural responses (buckling eigenvalue, tip displacement, generalized
strains) come from an external finite-element analysis and are plain
inputs here.  Generalized strain vectors are ordered as
``(eps_xx, eps_yy, gamma_xy, k_xx, k_yy, k_xy, gamma_xz, gamma_yz)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import MissingStrengthData, PolarBlendError
from .polar import (
    PanelVars,
    PlyMaterial,
    StackingSequence,
    homogenize_quads,
    quad_from_polar,
    shear_from_polar,
)

STRENGTH_SAFETY = 1.33 * 1.5**2
BUCKLING_SAFETY = 1.5 * 1.1
DISPLACEMENT_FRACTION = 0.15


class DanglingEdgeError(PolarBlendError, KeyError):
    pass


@dataclass(frozen=True)
class FeasibilityValue:
    g: float
    gradient: tuple[float, float]  # (d/d rho0K, d/d rho1)


def g_feas(p: PanelVars) -> FeasibilityValue:
    """Laminate feasibility in the (rho0K, rho1) plane; feasible iff g <= 0."""
    return FeasibilityValue(2 * p.rho1**2 - 1 - p.rho0K, (-1.0, 4 * p.rho1))


@dataclass(frozen=True)
class BlendingPair:
    g0: float
    g1: float
    # rows: panel p, panel q; columns: (n0, rho, phi1) with rho = rho0K for g0, rho1 for g1
    grad0: np.ndarray = field(repr=False)
    grad1: np.ndarray = field(repr=False)

    @property
    def worst(self) -> float:
        return max(self.g0, self.g1)


def _blend_term(Np, Nq, rp, rq, ap, aq, harmonic, N_ref):
    # ap, aq: phi1 values; the harmonic angle is harmonic * Phi1 = harmonic * phi1 * pi/2
    w = harmonic * math.pi / 2
    cp, sp = math.cos(w * ap), math.sin(w * ap)
    cq, sq = math.cos(w * aq), math.sin(w * aq)
    up, uq = Np * rp, Nq * rq
    dc = up * cp - uq * cq
    ds = up * sp - uq * sq
    dN = Np - Nq
    g = dc * dc + ds * ds - dN * dN
    grad = np.array([
        [N_ref * (2 * dc * rp * cp + 2 * ds * rp * sp - 2 * dN),
         2 * dc * Np * cp + 2 * ds * Np * sp,
         2 * w * up * (-dc * sp + ds * cp)],
        [N_ref * (-2 * dc * rq * cq - 2 * ds * rq * sq + 2 * dN),
         -2 * dc * Nq * cq - 2 * ds * Nq * sq,
         -2 * w * uq * (-dc * sq + ds * cq)],
    ])
    return g, grad


def g_blend_pair(p: PanelVars, q: PanelVars, N_ref: int) -> BlendingPair:
    """Blending pair values for adjacent panels with N = n0 * N_ref plies."""
    Np, Nq = p.n0 * N_ref, q.n0 * N_ref
    g0, gr0 = _blend_term(Np, Nq, p.rho0K, q.rho0K, p.phi1, q.phi1, 4, N_ref)
    g1, gr1 = _blend_term(Np, Nq, p.rho1, q.rho1, p.phi1, q.phi1, 2, N_ref)
    return BlendingPair(g0, g1, gr0, gr1)


def blend_aggregate(
    panels: Mapping[object, PanelVars],
    adjacency: Iterable[tuple[object, object]],
    N_ref: int,
) -> float:
    """Worst blending value over all edges; ``-inf`` when there are no edges."""
    worst = -math.inf
    for p, q in adjacency:
        for key in (p, q):
            if key not in panels:
                raise DanglingEdgeError(f"edge ({p}, {q}) references unknown panel {key!r}")
        worst = max(worst, g_blend_pair(panels[p], panels[q], N_ref).worst)
    return worst


def g_disp(u: float, b: float, fraction: float = DISPLACEMENT_FRACTION) -> float:
    if b <= 0:
        raise ValueError("semi-span b must be positive")
    return u / (fraction * b) - 1


def g_buck(lam: float, safety: float = BUCKLING_SAFETY) -> float:
    if not lam > 0:
        raise ValueError(f"buckling eigenvalue must be positive, got {lam}")
    return 1 - lam / safety


@dataclass(frozen=True)
class LaminateStrength:
    """Thickness-normalized strength blocks built like A*, B*, D*, H*."""

    GA: np.ndarray
    GB: np.ndarray
    GD: np.ndarray
    GH: np.ndarray
    h: float

    def generalized(self, h: float | None = None) -> np.ndarray:
        """8x8 laminate strength matrix acting on generalized strains."""
        h = self.h if h is None else h
        G = np.zeros((8, 8))
        G[:3, :3] = h * self.GA
        G[:3, 3:6] = G[3:6, :3] = 0.5 * h**2 * self.GB
        G[3:6, 3:6] = h**3 / 12 * self.GD
        G[6:, 6:] = h * self.GH
        return G


def laminate_strength_matrix(s: StackingSequence | Sequence[int], m: PlyMaterial) -> LaminateStrength:
    if not m.has_strength:
        raise MissingStrengthData(f"material {m.name!r} has no strength polar parameters")
    if not isinstance(s, StackingSequence):
        s = StackingSequence(s)
    if s.N == 0:
        raise ValueError("stacking sequence has no plies")
    Gs = np.array([quad_from_polar(m.polar_G, th) for th in s.angles])
    GA, GB, GD, _ = homogenize_quads(Gs)
    GH = np.mean([shear_from_polar(m.polar_Ghat, th) for th in s.angles], axis=0)
    return LaminateStrength(GA, GB, GD, GH, s.N * m.t_ply)


@dataclass(frozen=True)
class TsaiHillValue:
    g: float
    argmax: int
    indices: np.ndarray = field(repr=False)


def g_tsai_hill(
    strains: Sequence[Sequence[float]],
    G: Sequence[np.ndarray],
    h: Sequence[float],
    safety: float = STRENGTH_SAFETY,
) -> TsaiHillValue:
    """Thickness-averaged Tsai-Hill index over a set of checked elements."""
    if len(strains) == 0:
        raise ValueError("no elements to check")
    if not len(strains) == len(G) == len(h):
        raise ValueError("strains, G and h must have one entry per element")
    idx = np.array([
        float(np.asarray(e) @ np.asarray(Ge) @ np.asarray(e)) / he
        for e, Ge, he in zip(strains, G, h)
    ])
    k = int(np.argmax(idx))
    return TsaiHillValue(safety * idx[k] - 1, k, idx)


def mass_objective(
    n0: Sequence[float],
    areas: Sequence[float],
    m0: float,
    m_ref: float,
    m: PlyMaterial,
) -> tuple[float, np.ndarray]:
    """Dimensionless structural mass (both wing halves) and its n0 gradient."""
    n0 = np.asarray(n0, dtype=float)
    areas = np.asarray(areas, dtype=float)
    if n0.shape != areas.shape:
        raise ValueError("n0 and areas must have the same length")
    if np.any(areas < 0) or m_ref <= 0:
        raise ValueError("areas must be >= 0 and m_ref > 0")
    k = m.N_ref * m.t_ply * m.rho_ply
    value = 2.0 / m_ref * (m0 + k * float(areas @ n0))
    return value, 2.0 * k * areas / m_ref


def delta_n_gap(N_p: int, N_q: int, dn_min: int, N_ref: int) -> float:
    """Minimum ply-drop constraint; <= 0 iff the counts are equal or differ by >= dn_min."""
    d = abs(N_p - N_q) / N_ref
    return d * (dn_min / N_ref - d)


@dataclass(frozen=True)
class StructuralResponse:
    """Externally computed responses of one analysis case."""

    lam: float | None = None
    u: float | None = None
    eps_gen: np.ndarray | None = None
    source: str = ""

    def __post_init__(self):
        if self.lam is not None and not self.lam > 0:
            raise ValueError("buckling eigenvalue must be positive")
        if self.eps_gen is not None:
            eps = np.atleast_2d(np.asarray(self.eps_gen, dtype=float))
            if eps.shape[1] != 8 or not np.all(np.isfinite(eps)):
                raise ValueError("eps_gen rows must hold 8 finite components")
            object.__setattr__(self, "eps_gen", eps)
