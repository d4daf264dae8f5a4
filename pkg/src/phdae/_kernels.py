"""Compiled hot-path kernels for the reduced model.

``coef`` packs the scalar model data (see ``GeneratorModel._kernel_coef``):

    0 reduced prefactor * coupling scale      5 omega_s
    1 reduced prefactor * derivative scale    6 use frozen angle (0/1)
    2 U_s / R                                 7 frozen angle
    3 U_f / R_f                               8 use frozen time (0/1)
    4 has friction (0/1)                      9 frozen time
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def reduced_rhs(ts, X, KL, KRinv, Kmat, Jinv, T6, D, coef, F, Y):
    """Fill F (s, 16) and Y (s, 4) with the state-space right-hand side."""
    s = X.shape[0]
    k, kd = coef[0], coef[1]
    for i in range(s):
        t = coef[9] if coef[8] != 0.0 else ts[i]
        ang = coef[7] if coef[6] != 0.0 else X[i, 14]
        c, sn = math.cos(ang), math.sin(ang)
        a0, a1, b0, b1 = X[i, 0], X[i, 1], X[i, 2], X[i, 3]
        rb0 = c * b0 - sn * b1
        rb1 = sn * b0 + c * b1
        wt = coef[5] * t
        Y[i, 0] = (coef[2] * math.cos(wt) - KL[0] * a0 - k * rb0) * KRinv[0]
        Y[i, 1] = (coef[2] * math.sin(wt) - KL[1] * a1 - k * rb1) * KRinv[1]
        Y[i, 2] = (coef[3] - KL[2] * b0 - k * (c * a0 + sn * a1)) * KRinv[2]
        Y[i, 3] = (-KL[3] * b1 - k * (c * a1 - sn * a0)) * KRinv[3]
        for r in range(4):
            F[i, r] = Y[i, r]
        for r in range(6):
            acc = T6[r]
            # K has zero row sums; differencing the angles first avoids
            # cancellation between large unwrapped angles
            tr = X[i, 10 + r]
            for q in range(6):
                acc -= Kmat[r, q] * (X[i, 10 + q] - tr)
            if coef[4] != 0.0:
                for q in range(6):
                    acc -= D[r, q] * X[i, 4 + q]
            if r == 4:
                acc -= kd * (a1 * rb0 - a0 * rb1)
            F[i, 4 + r] = acc * Jinv[r]
            F[i, 10 + r] = X[i, 4 + r]


@njit(cache=True)
def reduced_jacobian(x, KL, KRinv, Kmat, Jinv, D, coef, Jac):
    """Fill Jac (16, 16) with d/dx of the state-space right-hand side."""
    k, kd = coef[0], coef[1]
    ang = coef[7] if coef[6] != 0.0 else x[14]
    c, sn = math.cos(ang), math.sin(ang)
    a0, a1, b0, b1 = x[0], x[1], x[2], x[3]
    Jac[:, :] = 0.0
    # Gamma~ and its first two angle derivatives, applied to psi_t
    G = np.zeros((4, 4))
    G[0, 2] = G[2, 0] = c
    G[0, 3] = G[3, 0] = -sn
    G[1, 2] = G[2, 1] = sn
    G[1, 3] = G[3, 1] = c
    G1 = np.zeros((4, 4))
    G1[0, 2] = G1[2, 0] = -sn
    G1[0, 3] = G1[3, 0] = -c
    G1[1, 2] = G1[2, 1] = c
    G1[1, 3] = G1[3, 1] = -sn
    p = np.array([a0, a1, b0, b1])
    g1p = kd * (G1 @ p)
    # second derivative of Gamma~ is -Gamma~
    tau2 = -0.5 * kd * (p @ (G @ p))
    for r in range(4):
        for q in range(4):
            Jac[r, q] = -KRinv[r] * (k * G[r, q] + (KL[r] if r == q else 0.0))
        Jac[r, 14] = -KRinv[r] * g1p[r]
    for r in range(6):
        for q in range(6):
            Jac[4 + r, 4 + q] = -Jinv[r] * D[r, q]
            Jac[4 + r, 10 + q] = -Jinv[r] * Kmat[r, q]
        Jac[10 + r, 4 + r] = 1.0
    for q in range(4):
        Jac[8, q] -= Jinv[4] * g1p[q]
    Jac[8, 14] -= Jinv[4] * tau2


@njit(cache=True)
def step_scales(t, x, y, KL, KRt, KRinv, Kmat, Jinv, T6, D, coef, out):
    """Magnitudes used by the stepper.

    out = [stage-derivative scale of psi_t, of theta_dot, of theta,
           largest term of g~, max |g~|, rounding floor of theta_dot rate]
    """
    k, kd = coef[0], coef[1]
    tt = coef[9] if coef[8] != 0.0 else t
    ang = coef[7] if coef[6] != 0.0 else x[14]
    c, sn = math.cos(ang), math.sin(ang)
    a0, a1, b0, b1 = x[0], x[1], x[2], x[3]
    rb0 = c * b0 - sn * b1
    rb1 = sn * b0 + c * b1
    wt = coef[5] * tt
    src = (coef[2] * math.cos(wt), coef[2] * math.sin(wt), coef[3], 0.0)
    mag = (KL[0] * a0 + k * rb0, KL[1] * a1 + k * rb1,
           KL[2] * b0 + k * (c * a0 + sn * a1), KL[3] * b1 + k * (c * a1 - sn * a0))
    w_psi = 0.0
    cscale = 0.0
    gmax = 0.0
    for r in range(4):
        w_psi = max(w_psi, KRinv[r] * (abs(src[r]) + abs(mag[r])))
        ky = KRt[r] * y[r]
        cscale = max(cscale, abs(ky), abs(mag[r]), abs(src[r]))
        gmax = max(gmax, abs(ky + mag[r] - src[r]))
    w_acc = 0.0
    w_vel = 0.0
    floor_acc = 0.0
    for r in range(6):
        # K has zero row sums, so use |K theta| rather than |K| |theta|
        kt = 0.0
        dw = 0.0
        rk = 0.0
        for q in range(6):
            kt += Kmat[r, q] * (x[10 + q] - x[10 + r])
            dw += abs(D[r, q] * x[4 + q])
            rk += abs(Kmat[r, q]) * abs(x[10 + q])
        f = abs(T6[r]) + abs(kt) + dw
        # rounding of the stored angles alone perturbs K theta by ~eps |K| |theta|
        floor_acc = max(floor_acc, 2.220446049250313e-16 * rk * Jinv[r])
        if r == 4:
            f += abs(kd * (a1 * rb0 - a0 * rb1))
        w_acc = max(w_acc, f * Jinv[r])
        w_vel = max(w_vel, abs(x[4 + r]))
    out[0] = w_psi
    out[1] = w_acc
    out[2] = w_vel
    out[3] = cscale
    out[4] = gmax
    out[5] = floor_acc


@njit(cache=True)
def newton_matrix(hA, Jac, out):
    """out = I - kron(hA, Jac)."""
    s = hA.shape[0]
    n = Jac.shape[0]
    for i in range(s):
        for j in range(s):
            a = hA[i, j]
            for r in range(n):
                for q in range(n):
                    out[i * n + r, j * n + q] = -a * Jac[r, q]
    for r in range(s * n):
        out[r, r] += 1.0
