"""Independent reference implementations used as test oracles."""

from __future__ import annotations

import itertools
import math

import numpy as np


def rotated_stiffness(Q11, Q22, Q12, Q66, theta_deg):
    """Classical transformed reduced stiffness (Qbar) of a rotated ply."""
    t = math.radians(theta_deg)
    c, s = math.cos(t), math.sin(t)
    c2, s2 = c * c, s * s
    Qb11 = Q11 * c2 * c2 + 2 * (Q12 + 2 * Q66) * s2 * c2 + Q22 * s2 * s2
    Qb22 = Q11 * s2 * s2 + 2 * (Q12 + 2 * Q66) * s2 * c2 + Q22 * c2 * c2
    Qb12 = (Q11 + Q22 - 4 * Q66) * s2 * c2 + Q12 * (s2 * s2 + c2 * c2)
    Qb66 = (Q11 + Q22 - 2 * Q12 - 2 * Q66) * s2 * c2 + Q66 * (s2 * s2 + c2 * c2)
    Qb16 = (Q11 - Q12 - 2 * Q66) * s * c2 * c + (Q12 - Q22 + 2 * Q66) * s2 * s * c
    Qb26 = (Q11 - Q12 - 2 * Q66) * s2 * s * c + (Q12 - Q22 + 2 * Q66) * s * c2 * c
    return np.array([[Qb11, Qb12, Qb16], [Qb12, Qb22, Qb26], [Qb16, Qb26, Qb66]])


def ply_data(T0, T1, R0, R1):
    """Principal-axis stiffness of an orthotropic ply (Phi0 = Phi1 = 0) from its polar moduli."""
    return {
        "Q11": T0 + 2 * T1 + R0 + 4 * R1,
        "Q22": T0 + 2 * T1 + R0 - 4 * R1,
        "Q12": -T0 + 2 * T1 - R0,
        "Q66": T0 - R0,
        "T0": T0, "T1": T1, "R0": R0, "R1": R1,
        "M": math.sqrt(T0**2 + 2 * T1**2 + R0**2 + 4 * R1**2),
    }


def abd_residual(angles, ply, target):
    """Residual total via classical lamination theory.

    Builds A, B, D from Qbar and ply z-coordinates (unit ply thickness),
    normalizes to A*, B* = 2B/h^2, D* = 12D/h^3 and takes C* = A* - D*.
    ``target`` is (K, rho0, rho1, phi1).
    """
    N = len(angles)
    h = float(N)
    z = np.linspace(-h / 2, h / 2, N + 1)
    A = np.zeros((3, 3))
    B = np.zeros((3, 3))
    D = np.zeros((3, 3))
    Q = (ply["Q11"], ply["Q22"], ply["Q12"], ply["Q66"])
    for k, a in enumerate(angles):
        Qb = rotated_stiffness(*Q, a)
        A += Qb * (z[k + 1] - z[k])
        B += Qb * (z[k + 1] ** 2 - z[k] ** 2) / 2
        D += Qb * (z[k + 1] ** 3 - z[k] ** 3) / 3
    As, Bs, Ds = A / h, 2 * B / h**2, 12 * D / h**3
    Cs = As - Ds
    L11, L22, L12, L66, L16, L26 = As[0, 0], As[1, 1], As[0, 1], As[2, 2], As[0, 2], As[1, 2]
    a4 = complex(L11 + L22 - 2 * L12 - 4 * L66, 4 * (L16 - L26)) / 8
    a2 = complex(L11 - L22, 2 * (L16 + L26)) / 8
    rho0, rho1 = abs(a4) / ply["R0"], abs(a2) / ply["R1"]
    K, r0t, r1t, phi1t = target
    eps = 1e-9 * max(ply["T0"], ply["T1"], abs(a4), abs(a2))
    if abs(a4) < eps:
        r3 = 0.0
    else:
        ph1 = 0.0 if abs(a2) < eps else math.atan2(a2.imag, a2.real) / math.pi
        ph0 = math.atan2(a4.imag, a4.real) / (2 * math.pi)
        x = 2 * (ph0 - ph1) - K
        r3 = abs((x + 1) % 2 - 1)
    if abs(a2) < eps:
        r6 = 0.0
    else:
        x = math.atan2(a2.imag, a2.real) / math.pi - phi1t
        r6 = abs((x + 1) % 2 - 1)
    M = ply["M"]
    terms = [np.linalg.norm(Bs) / M, np.linalg.norm(Cs) / M, r3, abs(rho0 - r0t), abs(rho1 - r1t), r6]
    return float(sum(t * t for t in terms))


def exhaustive_recovery(ply, target, N, grid):
    """Smallest residual over every stack of N plies drawn from ``grid``."""
    best = math.inf
    for stack in itertools.product(grid, repeat=N):
        best = min(best, abd_residual(stack, ply, target))
    return best


def brute_force_discrete(c, phi, edges, N_ref, dn_min):
    """Exact optimum of the discretization problem by enumeration + conic solves."""
    import cvxpy as cp

    P = len(c)
    lo = math.ceil(0.2 * N_ref - 1e-9)
    best = math.inf
    combos = sorted(
        itertools.product(range(lo, N_ref + 1), repeat=P),
        key=lambda N: sum((c[i][0] - N[i] / N_ref) ** 2 for i in range(P)),
    )
    for N in combos:
        nd = sum((c[i][0] - N[i] / N_ref) ** 2 for i in range(P))
        if nd >= best:
            break
        if any(N[p] != N[q] and abs(N[p] - N[q]) < dn_min for p, q in edges):
            continue
        r0 = cp.Variable(P)
        r1 = cp.Variable(P)
        cons = [r0 >= -1, r0 <= 1, r1 >= 0, r1 <= 1, 2 * cp.square(r1) - 1 - r0 <= 0]
        for p, q in edges:
            dN = abs(N[p] - N[q])
            for var, h in ((r0, 4), (r1, 2)):
                w = h * math.pi / 2
                vec = cp.hstack([
                    N[p] * math.cos(w * phi[p]) * var[p] - N[q] * math.cos(w * phi[q]) * var[q],
                    N[p] * math.sin(w * phi[p]) * var[p] - N[q] * math.sin(w * phi[q]) * var[q],
                ])
                cons.append(cp.norm(vec, 2) <= dN)
        obj = cp.sum_squares(r0 - np.array([x[1] for x in c])) + cp.sum_squares(r1 - np.array([x[2] for x in c]))
        prob = cp.Problem(cp.Minimize(obj), cons)
        prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12)
        best = min(best, nd + prob.value)
    return best
