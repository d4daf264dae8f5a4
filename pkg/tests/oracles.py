"""Brute-force reference implementations built directly from the model
formulas, sharing no code with the package beyond the parameter record."""

import math

import numpy as np


def full_blocks(p, th5):
    m = math.sqrt(1.5) * p.M
    d0 = 1.5 * p.M**2 - p.L_r * (p.L_s + p.M_s)
    c, s = math.cos(th5), math.sin(th5)
    G = np.zeros((6, 6))
    G[2, 2] = G[3, 3] = -p.L_r
    G[4, 4] = G[5, 5] = -p.L_s - p.M_s
    G[2, 4], G[2, 5], G[3, 4], G[3, 5] = m * c, -m * s, m * s, m * c
    G[4, 2], G[4, 3], G[5, 2], G[5, 3] = m * c, m * s, -m * s, m * c
    G /= d0
    dG = np.zeros((6, 6))
    dG[2, 4], dG[2, 5], dG[3, 4], dG[3, 5] = -m * s, -m * c, m * c, -m * s
    dG[4, 2], dG[4, 3], dG[5, 2], dG[5, 3] = -m * s, m * c, -m * c, -m * s
    dG /= d0
    KL = np.zeros((6, 6))
    for i, j in ((0, 2), (1, 3)):
        KL[i, i] = KL[j, j] = 1 / p.L
        KL[i, j] = KL[j, i] = -1 / p.L
    KR = np.diag([1 / p.R, 1 / p.R, 0, 0, 1 / p.R_f, 1 / p.R_q])
    return KL, KR, G, dG


def stiffness(p):
    K = np.zeros((6, 6))
    for i, k in enumerate(p.K):
        K[i, i] += k
        K[i + 1, i + 1] += k
        K[i, i + 1] -= k
        K[i + 1, i] -= k
    return K


def source_full(p, t):
    return np.array([p.U_s / p.R * math.cos(p.omega_s * t), p.U_s / p.R * math.sin(p.omega_s * t), 0, 0,
                     p.U_f / p.R_f, 0])


def pc_step(p, xE, xM, t, h, corrected):
    """One predictor-corrector step with plain dense solves."""
    I, Z = np.eye(6), np.zeros((6, 6))
    J = np.diag(p.J)
    K = stiffness(p)
    D = np.array(p.D)
    T = np.array([*p.T, 0, 0])

    def KE2(th5):
        KL, KR, G, _ = full_blocks(p, th5)
        return np.block([[KR, KL + G], [-I, Z]])

    def gM(psi, th5):
        _, _, _, dG = full_blocks(p, th5)
        g = np.concatenate([T, np.zeros(6)])
        g[4] -= 0.5 * psi @ dG @ psi
        return g

    KE1 = np.block([[Z, Z], [Z, I]])
    KM1 = np.block([[J, Z], [Z, I]])
    KM2 = np.block([[D, K], [-I, Z]])
    gE = lambda tt: np.concatenate([source_full(p, tt), np.zeros(6)])

    th_pred = xM[6:] + h * xM[:6]
    lhs = KE1 + h / 2 * KE2(th_pred[4])
    rhs = (KE1 - h / 2 * KE2(xM[10])) @ xE + h / 2 * (gE(t) + gE(t + h))
    xE1 = np.linalg.solve(lhs, rhs)
    g = gM(xE[6:], xM[10])
    if corrected:
        g = 0.5 * (g + gM(xE1[6:], th_pred[4]))
    xM1 = np.linalg.solve(KM1 + h / 2 * KM2, (KM1 - h / 2 * KM2) @ xM + h * g)
    return xE1, xM1, th_pred


def reduced_rhs(p, t, x):
    """Reduced ODE right-hand side with the algebraic variable eliminated."""
    m = math.sqrt(1.5) * p.M
    d1 = 1.5 * p.M**2 - p.L_r * (p.L_s + p.M_s + p.L)
    psi, om, th = x[0:4], x[4:10], x[10:16]
    c, s = math.cos(th[4]), math.sin(th[4])
    G = m / d1 * np.array([[0, 0, c, -s], [0, 0, s, c], [c, s, 0, 0], [-s, c, 0, 0]])
    dG = m / d1 * np.array([[0, 0, -s, -c], [0, 0, c, -s], [-s, c, 0, 0], [-c, -s, 0, 0]])
    KL = np.diag([-p.L_r, -p.L_r, -(p.L_s + p.M_s + p.L), -(p.L_s + p.M_s + p.L)]) / d1
    KR = np.array([1 / p.R, 1 / p.R, 1 / p.R_f, 1 / p.R_q])
    Is = np.array([p.U_s / p.R * math.cos(p.omega_s * t), p.U_s / p.R * math.sin(p.omega_s * t),
                   p.U_f / p.R_f, 0])
    y = (Is - (KL + G) @ psi) / KR
    tq = np.array([*p.T, 0, 0], dtype=float)
    tq[4] -= 0.5 * psi @ dG @ psi
    acc = (tq - stiffness(p) @ th - np.array(p.D) @ om) / np.array(p.J)
    return np.concatenate([y, acc, om]), y


def midpoint_fixed_point(p, t, x0, h, tol=1e-15, maxit=500):
    """Gauss(1) step by plain fixed-point iteration on the stage value."""
    X = x0.copy()
    for _ in range(maxit):
        F, Y = reduced_rhs(p, t + h / 2, X)
        Xn = x0 + h / 2 * F
        done = np.abs(Xn - X).max() <= tol * np.abs(Xn).max()
        X = Xn
        if done:
            break
    F, Y = reduced_rhs(p, t + h / 2, X)
    return x0 + h * F, Y
