"""Distance of a stacking sequence from target membrane properties.

Six terms measure coupling (B*), inhomogeneity (C*), departure from the
target orthotropy class, and the errors on rho0, rho1 and phi1.  The total
residual is the sum of their squares; a stack with zero total is a
recovery stacking sequence for the target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from ..polar import (
    DEGENERACY_RTOL,
    LaminateHomog,
    PanelVars,
    PlyMaterial,
    PolarQuad,
    StackingSequence,
    circular_distance,
    laminate_homogenized,
    polar_from_quad,
    stacking_weights,
)

Norm = Literal["frobenius", "polar"]


def split_target(rho0K: float) -> tuple[int, float]:
    """Signed anisotropy -> (orthotropy class K, rho0 >= 0)."""
    if abs(rho0K) > 1:
        raise ValueError("rho0K must lie in [-1, 1]")
    if rho0K >= 0:
        return 0, float(rho0K)
    return 1, float(-rho0K)


@dataclass(frozen=True)
class TargetPolar:
    K: int
    rho0: float
    rho1: float
    phi1: float
    N: int

    def __post_init__(self):
        if self.K not in (0, 1):
            raise ValueError("K must be 0 or 1")
        if self.rho0 < 0 or not 0 <= self.rho1 <= 1 + 1e-12:
            raise ValueError("rho0 must be >= 0 and rho1 in [0, 1]")
        # values extracted from a laminate can exceed 1 by rounding
        object.__setattr__(self, "rho1", min(self.rho1, 1.0))
        if self.N < 1:
            raise ValueError("target ply count must be >= 1")

    @property
    def rho0K(self) -> float:
        return (-1) ** self.K * self.rho0

    @classmethod
    def from_signed(cls, rho0K: float, rho1: float, phi1: float, N: int) -> "TargetPolar":
        K, rho0 = split_target(rho0K)
        return cls(K, rho0, rho1, phi1, int(N))

    @classmethod
    def from_panel(cls, p: PanelVars, N_ref: int) -> "TargetPolar":
        return cls.from_signed(p.rho0K, p.rho1, p.phi1, int(round(p.n0 * N_ref)))


@dataclass(frozen=True)
class ResidualBreakdown:
    R1: float
    R2: float
    R3: float
    R4: float
    R5: float
    R6: float
    M: float
    degenerate_phi1: bool = False
    degenerate_phi0: bool = False

    @property
    def terms(self) -> tuple[float, ...]:
        return (self.R1, self.R2, self.R3, self.R4, self.R5, self.R6)

    @property
    def total(self) -> float:
        return float(sum(r * r for r in self.terms))


def tensor_norm(L: np.ndarray, norm: Norm = "frobenius") -> float:
    if norm == "frobenius":
        return float(np.linalg.norm(L))
    if norm == "polar":
        return polar_from_quad(L).moduli_norm()
    raise ValueError(f"unknown tensor norm {norm!r}")


def _angle_terms(rho0: float, rho1: float, phi0: float, phi1: float, deg0: bool, deg1: bool,
                 t: TargetPolar) -> tuple[float, float]:
    if deg0:
        r3 = 0.0
    elif deg1:
        # no reference axis: test the 45 degree offset of Phi0 alone
        r3 = circular_distance(2 * phi0 - t.K, 2.0)
    else:
        r3 = circular_distance(2 * (phi0 - phi1) - t.K, 2.0)
    r6 = 0.0 if deg1 else circular_distance(phi1 - t.phi1, 2.0)
    return r3, r6


def residuals(
    s: StackingSequence | Sequence[int] | LaminateHomog,
    m: PlyMaterial,
    t: TargetPolar,
    norm: Norm = "frobenius",
) -> ResidualBreakdown:
    lam = s if isinstance(s, LaminateHomog) else laminate_homogenized(s, m)
    M = m.residual_norm
    pa: PolarQuad = lam.polar_A
    rho0 = pa.R0 / m.polar_Q.R0
    rho1 = pa.R1 / m.polar_Q.R1
    phi0, phi1 = pa.Phi0 / 90.0, pa.Phi1 / 90.0
    r3, r6 = _angle_terms(rho0, rho1, phi0, phi1, pa.degenerate0, pa.degenerate1, t)
    return ResidualBreakdown(
        R1=tensor_norm(lam.Bstar, norm) / M,
        R2=tensor_norm(lam.Cstar, norm) / M,
        R3=r3,
        R4=abs(rho0 - t.rho0),
        R5=abs(rho1 - t.rho1),
        R6=r6,
        M=M,
        degenerate_phi1=pa.degenerate1,
        degenerate_phi0=pa.degenerate0,
    )


def orientation_grid(step: int) -> np.ndarray:
    """Admissible orientations (-90, 90] on a regular grid of ``step`` degrees."""
    if step < 1 or 180 % step:
        raise ValueError("grid step must be a positive divisor of 180")
    return np.arange(-90 + step, 91, step, dtype=np.int64)


def _circ2(x: np.ndarray) -> np.ndarray:
    return np.abs(np.mod(x + 1.0, 2.0) - 1.0)


class BatchEvaluator:
    """Vectorized residual totals for many candidates sharing one layout.

    Candidates are integer arrays of grid indices into ``angles``; panel
    ``j`` reads its plies from columns ``index[j]`` of the candidate.
    """

    def __init__(
        self,
        m: PlyMaterial,
        targets: Sequence[TargetPolar],
        index: Sequence[np.ndarray],
        angles: np.ndarray,
        norm: Norm = "frobenius",
    ):
        if len(targets) != len(index):
            raise ValueError("one index array per target is required")
        if norm not in ("frobenius", "polar"):
            raise ValueError(f"unknown tensor norm {norm!r}")
        self.m = m
        self.targets = list(targets)
        self.index = [np.asarray(ix, dtype=np.int64) for ix in index]
        self.angles = np.asarray(angles)
        self.norm = norm
        q = m.polar_Q
        th = np.radians(self.angles.astype(float))
        self._e4 = q.R0 * np.exp(4j * (th + math.radians(q.Phi0)))
        self._e2 = q.R1 * np.exp(2j * (th + math.radians(q.Phi1)))
        self._M = m.residual_norm
        self._weights = []
        for ix, t in zip(self.index, self.targets):
            N = len(ix)
            if N != t.N:
                raise ValueError(f"panel layout has {N} plies but target expects {t.N}")
            b, d, c = stacking_weights(N)
            self._weights.append(np.stack([np.full(N, 1.0 / N), b / N**2, c / N**3], axis=1))
        self._tscale = max(abs(q.T0), abs(q.T1))
        self.panels_of_var: list[list[int]] = [[] for _ in range(self.n_vars)]
        for j, ix in enumerate(self.index):
            for v in set(ix.tolist()):
                self.panels_of_var[v].append(j)

    @property
    def n_vars(self) -> int:
        return int(max((ix.max() for ix in self.index if len(ix)), default=-1)) + 1

    def _norm_sq(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        # tensors with zero isotropic part: only the harmonic coefficients survive
        if self.norm == "frobenius":
            return 5 * a.real**2 + 4 * a.imag**2 + 32 * b.real**2 + 16 * b.imag**2
        return np.abs(a) ** 2 + 4 * np.abs(b) ** 2

    def panel_terms(self, X: np.ndarray, j: int) -> np.ndarray:
        """Residual terms (P, 6) of panel ``j`` for candidates ``X`` (P, n_vars)."""
        X = np.atleast_2d(X)
        sub = X[:, self.index[j]]
        W = self._weights[j]
        z4 = self._e4[sub] @ W
        z2 = self._e2[sub] @ W
        q, t = self.m.polar_Q, self.targets[j]
        r1 = np.sqrt(self._norm_sq(z4[:, 1], z2[:, 1])) / self._M
        r2 = np.sqrt(self._norm_sq(z4[:, 2], z2[:, 2])) / self._M
        aA, bA = z4[:, 0], z2[:, 0]
        R0A, R1A = np.abs(aA), np.abs(bA)
        # same threshold as polar_from_quad applied to A*
        eps = DEGENERACY_RTOL * np.maximum(np.maximum(R0A, R1A), self._tscale)
        deg0 = R0A < eps
        deg1 = R1A < eps
        phi0 = np.where(deg0, 0.0, np.angle(aA) / (2 * np.pi))
        phi1 = np.where(deg1, 0.0, np.angle(bA) / np.pi)
        ref = np.where(deg1, 0.0, phi1)
        r3 = np.where(deg0, 0.0, _circ2(2 * (phi0 - ref) - t.K))
        r6 = np.where(deg1, 0.0, _circ2(phi1 - t.phi1))
        r4 = np.abs(R0A / q.R0 - t.rho0)
        r5 = np.abs(R1A / q.R1 - t.rho1)
        return np.stack([r1, r2, r3, r4, r5, r6], axis=1)

    def panel_totals(self, X: np.ndarray, panels: Sequence[int] | None = None) -> np.ndarray:
        """Per-panel residual totals, shape (P, len(panels))."""
        panels = range(len(self.index)) if panels is None else panels
        X = np.atleast_2d(X)
        out = np.empty((X.shape[0], len(panels)))
        for col, j in enumerate(panels):
            out[:, col] = np.sum(self.panel_terms(X, j) ** 2, axis=1)
        return out

    def totals(self, X: np.ndarray) -> np.ndarray:
        return self.panel_totals(X).sum(axis=1)
