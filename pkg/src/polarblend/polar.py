"""Laminate homogenization and the polar representation of plane tensors.

Angles are stored in degrees everywhere; trigonometry is done in radians.
Fourth-order tensors are handled as 3x3 Voigt matrices with the tensorial
shear component in the (2, 2) slot, i.e. ``L[2, 2] = L1212`` and
``L[0, 2] = L1112``, which is the usual reduced-stiffness layout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EmptyStackError, InvalidMaterialError, OrthotropyViolation

DEGENERACY_RTOL = 1e-9
ORTHOTROPY_TOL_DEG = 0.5


def wrap_angle(angle: float, period: float) -> float:
    """Wrap ``angle`` into the half-open interval ``(-period/2, period/2]``."""
    half = 0.5 * period
    w = math.fmod(angle + half, period)
    if w <= 0.0:
        w += period
    return w - half


def circular_distance(x: float, period: float) -> float:
    """Distance of ``x`` from the nearest integer multiple of ``period``."""
    return abs(wrap_angle(x, period))


@dataclass(frozen=True)
class PolarQuad:
    """Polar parameters of a fourth-order elasticity-like plane tensor (MPa, deg)."""

    T0: float
    T1: float
    R0: float
    R1: float
    Phi0: float = 0.0
    Phi1: float = 0.0
    degenerate0: bool = False
    degenerate1: bool = False

    def __post_init__(self):
        if self.R0 < 0 or self.R1 < 0:
            raise ValueError("anisotropic moduli R0, R1 must be non-negative")

    @property
    def is_isotropic(self) -> bool:
        return self.degenerate0 and self.degenerate1

    def moduli_norm(self) -> float:
        return math.sqrt(self.T0**2 + 2 * self.T1**2 + self.R0**2 + 4 * self.R1**2)

    def orthotropy_offset(self) -> tuple[int, float]:
        """Nearest orthotropy class ``K`` and the deviation (deg) from it."""
        diff = wrap_angle(self.Phi0 - self.Phi1, 90.0)
        # diff in (-45, 45]: K=0 near 0, K=1 near +-45
        if abs(diff) <= 22.5:
            return 0, diff
        return 1, diff - math.copysign(45.0, diff)


@dataclass(frozen=True)
class PolarShear:
    """Polar parameters of a symmetric second-order plane tensor (MPa, deg)."""

    T: float
    R: float
    Phi: float = 0.0
    degenerate: bool = False

    def __post_init__(self):
        if self.R < 0:
            raise ValueError("deviatoric modulus R must be non-negative")


@dataclass(frozen=True)
class PlyMaterial:
    """Elementary layer data; polar sets are ingested, not derived."""

    name: str
    E1: float
    E2: float
    G12: float
    G23: float
    G13: float
    nu12: float
    nu23: float
    nu13: float
    polar_Q: PolarQuad
    polar_Qhat: PolarShear
    rho_ply: float
    t_ply: float
    N_ref: int
    polar_G: PolarQuad | None = None
    polar_Ghat: PolarShear | None = None
    X: float | None = None
    Y: float | None = None
    S12: float | None = None
    S23: float | None = None
    S13: float | None = None

    def __post_init__(self):
        for key in ("E1", "E2", "G12", "G23", "G13", "rho_ply", "t_ply"):
            if not getattr(self, key) > 0:
                raise InvalidMaterialError(f"{key} must be positive")
        if not 0 < self.nu12 < math.sqrt(self.E1 / self.E2):
            raise InvalidMaterialError("nu12 must lie in (0, sqrt(E1/E2))")
        if self.N_ref < 1:
            raise InvalidMaterialError("N_ref must be >= 1")
        if not (self.polar_Q.T0 > 0 and self.polar_Q.T1 > 0):
            raise InvalidMaterialError("polar T0, T1 must be positive")

    @property
    def has_strength(self) -> bool:
        return self.polar_G is not None and self.polar_Ghat is not None

    @property
    def residual_norm(self) -> float:
        """Normalizing modulus sqrt(T0^2 + 2 T1^2 + R0^2 + 4 R1^2) of the ply."""
        return self.polar_Q.moduli_norm()


@dataclass(frozen=True)
class StackingSequence:
    angles: tuple[int, ...]

    def __init__(self, angles: Sequence[int]):
        norm = []
        for a in angles:
            if a != int(a):
                raise ValueError(f"ply angle {a} is not an integer")
            a = int(a)
            if not -90 <= a <= 90:
                raise ValueError(f"ply angle {a} outside [-90, 90]")
            norm.append(90 if a == -90 else a)
        object.__setattr__(self, "angles", tuple(norm))

    @property
    def N(self) -> int:
        return len(self.angles)

    def __len__(self) -> int:
        return len(self.angles)

    def __iter__(self):
        return iter(self.angles)

    def reversed(self) -> "StackingSequence":
        return StackingSequence(self.angles[::-1])

    def __str__(self) -> str:
        return "/".join(str(a) for a in self.angles)


def ply_reduced_stiffness(m: PlyMaterial) -> np.ndarray:
    """Plane-stress reduced stiffness Q of the ply in its material frame."""
    nu21 = m.nu12 * m.E2 / m.E1
    den = 1.0 - m.nu12 * nu21
    if den <= 0:
        raise InvalidMaterialError("1 - nu12*nu21 must be positive")
    Q11 = m.E1 / den
    Q22 = m.E2 / den
    Q12 = m.nu12 * m.E2 / den
    return np.array([[Q11, Q12, 0.0], [Q12, Q22, 0.0], [0.0, 0.0, m.G12]])


def polar_from_quad(L: np.ndarray) -> PolarQuad:
    L = np.asarray(L, dtype=float)
    T0 = float(L[0, 0] + L[1, 1] - 2 * L[0, 1] + 4 * L[2, 2]) / 8
    T1 = float(L[0, 0] + L[1, 1] + 2 * L[0, 1]) / 8
    z0 = complex(L[0, 0] + L[1, 1] - 2 * L[0, 1] - 4 * L[2, 2], 4 * (L[0, 2] - L[1, 2])) / 8
    z1 = complex(L[0, 0] - L[1, 1], 2 * (L[0, 2] + L[1, 2])) / 8
    R0, R1 = abs(z0), abs(z1)
    scale = max(abs(T0), abs(T1), R0, R1, 1e-300)
    deg0 = bool(R0 < DEGENERACY_RTOL * scale)
    deg1 = bool(R1 < DEGENERACY_RTOL * scale)
    Phi0 = 0.0 if deg0 else wrap_angle(math.degrees(math.atan2(z0.imag, z0.real)) / 4, 90.0)
    Phi1 = 0.0 if deg1 else wrap_angle(math.degrees(math.atan2(z1.imag, z1.real)) / 2, 180.0)
    return PolarQuad(T0, T1, R0, R1, Phi0, Phi1, deg0, deg1)


def quad_from_polar(p: PolarQuad, rotation: float = 0.0) -> np.ndarray:
    """Cartesian components of ``p`` in a frame turned by ``rotation`` degrees."""
    a0 = math.radians(p.Phi0 + rotation)
    a1 = math.radians(p.Phi1 + rotation)
    c4, s4 = p.R0 * math.cos(4 * a0), p.R0 * math.sin(4 * a0)
    c2, s2 = p.R1 * math.cos(2 * a1), p.R1 * math.sin(2 * a1)
    L11 = p.T0 + 2 * p.T1 + c4 + 4 * c2
    L22 = p.T0 + 2 * p.T1 + c4 - 4 * c2
    L12 = -p.T0 + 2 * p.T1 - c4
    L66 = p.T0 - c4
    L16 = s4 + 2 * s2
    L26 = -s4 + 2 * s2
    return np.array([[L11, L12, L16], [L12, L22, L26], [L16, L26, L66]])


def shear_from_polar(p: PolarShear, rotation: float = 0.0) -> np.ndarray:
    a = math.radians(p.Phi + rotation)
    c, s = p.R * math.cos(2 * a), p.R * math.sin(2 * a)
    return np.array([[p.T + c, s], [s, p.T - c]])


def polar_from_shear(Z: np.ndarray) -> PolarShear:
    Z = np.asarray(Z, dtype=float)
    T = 0.5 * float(Z[0, 0] + Z[1, 1])
    z = complex(0.5 * (Z[0, 0] - Z[1, 1]), Z[0, 1])
    R = abs(z)
    deg = bool(R < DEGENERACY_RTOL * max(abs(T), R, 1e-300))
    Phi = 0.0 if deg else wrap_angle(math.degrees(math.atan2(z.imag, z.real)) / 2, 180.0)
    return PolarShear(T, R, Phi, deg)


def stacking_coefficients(k: int, N: int) -> tuple[int, int, int]:
    """Position weights (b_k, d_k, c_k) of ply ``k`` (1-based) in an ``N``-ply stack."""
    if N < 1 or not 1 <= k <= N:
        raise IndexError(f"ply index {k} out of range for N={N}")
    b = 2 * k - N - 1
    d = 12 * k * (k - N - 1) + 4 + 3 * N * (N + 2)
    c = -2 * N * N - 12 * k * (k - N - 1) - 4 - 6 * N
    return b, d, c


def stacking_weights(N: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized (b, d, c) for k = 1..N as integer arrays."""
    k = np.arange(1, N + 1, dtype=np.int64)
    b = 2 * k - N - 1
    d = 12 * k * (k - N - 1) + 4 + 3 * N * (N + 2)
    c = -2 * N * N - 12 * k * (k - N - 1) - 4 - 6 * N
    return b, d, c


@dataclass(frozen=True)
class LaminateHomog:
    Astar: np.ndarray
    Bstar: np.ndarray
    Dstar: np.ndarray
    Cstar: np.ndarray
    Hstar: np.ndarray
    h: float
    N: int
    polar_A: PolarQuad = field(repr=False)
    polar_B: PolarQuad = field(repr=False)
    polar_D: PolarQuad = field(repr=False)
    polar_C: PolarQuad = field(repr=False)
    polar_H: PolarShear = field(repr=False)


def _paired_sum(w: np.ndarray, Qs: np.ndarray, odd: bool) -> np.ndarray:
    """Sum of w_k Q_k taken over mirror pairs (k, N+1-k).

    Even weights (w_k = w_{N+1-k}) act on Q_k + Q_{N+1-k}, odd ones on
    Q_k - Q_{N+1-k}.  Both are exact under swapping the pair, so reversing
    the stack leaves A*, D*, C* bit-identical and flips the sign of B*.
    """
    N = Qs.shape[0]
    h = N // 2
    top, bot = Qs[:h], Qs[::-1][:h]
    pair = top - bot if odd else top + bot
    out = np.zeros(Qs.shape[1:])
    for k in range(h):
        out = out + w[k] * pair[k]
    if N % 2 and not odd:
        out = out + w[h] * Qs[h]
    return out


def homogenize_quads(Qs: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """A*, B*, D*, C* from per-ply Voigt matrices ``Qs`` of shape (N, 3, 3)."""
    Qs = np.asarray(Qs, dtype=float)
    N = Qs.shape[0]
    b, d, c = stacking_weights(N)
    A = _paired_sum(np.ones(N), Qs, False) / N
    B = _paired_sum(b.astype(float), Qs, True) / N**2
    D = _paired_sum(d.astype(float), Qs, False) / N**3
    C = _paired_sum(c.astype(float), Qs, False) / N**3
    return A, B, D, C


def laminate_homogenized(s: StackingSequence | Sequence[int], m: PlyMaterial) -> LaminateHomog:
    if not isinstance(s, StackingSequence):
        s = StackingSequence(s)
    if s.N == 0:
        raise EmptyStackError("stacking sequence has no plies")
    Qs = np.array([quad_from_polar(m.polar_Q, th) for th in s.angles])
    A, B, D, C = homogenize_quads(Qs)
    Hs = np.array([shear_from_polar(m.polar_Qhat, th) for th in s.angles])
    H = _paired_sum(np.ones(s.N), Hs, False) / s.N
    return LaminateHomog(
        Astar=A, Bstar=B, Dstar=D, Cstar=C, Hstar=H,
        h=s.N * m.t_ply, N=s.N,
        polar_A=polar_from_quad(A), polar_B=polar_from_quad(B),
        polar_D=polar_from_quad(D), polar_C=polar_from_quad(C),
        polar_H=polar_from_shear(H),
    )


@dataclass(frozen=True)
class PanelVars:
    """Dimensionless first-level design variables of one panel."""

    n0: float
    rho0K: float
    rho1: float
    phi1: float = 0.0
    degenerate: bool = False

    @property
    def K(self) -> int:
        return 0 if self.rho0K >= 0 else 1

    def N(self, N_ref: int) -> float:
        return self.n0 * N_ref

    def within_bounds(self, tol: float = 0.0) -> bool:
        return (0.2 - tol <= self.n0 <= 1 + tol and -1 - tol <= self.rho0K <= 1 + tol
                and -tol <= self.rho1 <= 1 + tol)


def panel_from_laminate(
    L: LaminateHomog,
    m: PlyMaterial,
    N_ref: int | None = None,
    tolerance_deg: float = ORTHOTROPY_TOL_DEG,
    check: bool = True,
) -> PanelVars:
    """Extract (n0, rho0K, rho1, phi1) from the membrane polar set of ``L``.

    With ``check=False`` the orthotropy class is taken from the nearest
    multiple of 45 deg without raising.
    """
    N_ref = m.N_ref if N_ref is None else N_ref
    pa = L.polar_A
    rho0 = pa.R0 / m.polar_Q.R0
    rho1 = pa.R1 / m.polar_Q.R1 if m.polar_Q.R1 > 0 else 0.0
    if pa.degenerate0:
        return PanelVars(L.N / N_ref, 0.0, rho1, pa.Phi1 / 90.0, degenerate=pa.degenerate1)
    if pa.degenerate1:
        sign = 1.0 if math.cos(math.radians(4 * (pa.Phi0 - pa.Phi1))) >= 0 else -1.0
        return PanelVars(L.N / N_ref, sign * rho0, 0.0, 0.0, degenerate=True)
    K, offset = pa.orthotropy_offset()
    if check and abs(offset) > tolerance_deg:
        raise OrthotropyViolation(offset, tolerance_deg)
    return PanelVars(L.N / N_ref, (-1) ** K * rho0, rho1, pa.Phi1 / 90.0)
