"""Vectorised numpy implementation of the fused forward/backward pass.

The projections are linear, so for an interaction vector
``a_i * r1 + c_i * r2`` we have ``F (a_i r1 + c_i r2) = a_i (F r1) + c_i (F r2)``:
each dense layer is applied to two vectors per dyad instead of one per
position. Gradients are the hand-derived reverse pass of that graph.
"""

from __future__ import annotations

import math

import numpy as np

from ..numcore import gamma_from_logit, gamma_slope


def fused(x_num, gender, dm, dc, mask, t1, y, weights, compute_grad):
    (phi_num, phi_g, W1, b1, W2, b2, gl, F1, c1, F2, c2, F3, c3, w3, b3) = weights
    N, L = dm.shape
    n_tables = phi_num.shape[0] + 1
    h = F1.shape[0]
    sqrt_h = math.sqrt(h)
    live = mask.astype(bool)

    P = (x_num @ phi_num + phi_g[gender]) / n_tables
    A = P @ W1.T + b1
    B = P @ W2.T + b2
    R1 = np.maximum(A, 0.0)
    R2 = np.maximum(B, 0.0)
    gam = gamma_from_logit(float(gl))
    G1, H1 = R1 @ F1.T, R2 @ F1.T
    G2, H2 = R1 @ F2.T, R2 @ F2.T
    G3, H3 = R1 @ F3.T, R2 @ F3.T

    a = np.where(live, gam * dm, 0.0)
    c = np.where(live, (1.0 - gam) * dc, 0.0)
    a3, c3_ = a[:, :, None], c[:, :, None]
    U = a3 * G1[:, None, :] + c3_ * H1[:, None, :] + c1
    V = a3 * G2[:, None, :] + c3_ * H2[:, None, :] + c2
    W = a3 * G3[:, None, :] + c3_ * H3[:, None, :] + c3
    score = np.sum(V * W, axis=2) / sqrt_h

    top = np.where(live, score, -np.inf).max(axis=1)
    e = np.where(live, np.exp(np.where(live, score, 0.0) - top[:, None]), 0.0)
    # position-by-position sums: padding appended at the end adds exact zeros
    denom = np.zeros(N)
    for i in range(L):
        denom += e[:, i]
    alpha = e / denom[:, None]
    S = np.zeros((N, h))
    for i in range(L):
        S += alpha[:, i, None] * U[:, i, :]
    y_hat = S @ w3 + float(b3) + t1

    if y is None:
        return float("nan"), y_hat, alpha, None
    r = y_hat - y
    loss = float(r @ r)
    if not compute_grad:
        return loss, y_hat, alpha, None

    dy = 2.0 * r
    g_b3 = np.asarray(dy.sum())
    g_w3 = S.T @ dy
    dS = dy[:, None] * w3[None, :]
    dalpha = np.sum(U * dS[:, None, :], axis=2)
    abar = np.sum(alpha * dalpha, axis=1)
    dscore = alpha * (dalpha - abar[:, None]) / sqrt_h
    dU = alpha[:, :, None] * dS[:, None, :]
    dV = dscore[:, :, None] * W
    dW = dscore[:, :, None] * V

    g_c1 = dU.sum(axis=(0, 1))
    g_c2 = dV.sum(axis=(0, 1))
    g_c3 = dW.sum(axis=(0, 1))
    dG1, dH1 = np.sum(a3 * dU, axis=1), np.sum(c3_ * dU, axis=1)
    dG2, dH2 = np.sum(a3 * dV, axis=1), np.sum(c3_ * dV, axis=1)
    dG3, dH3 = np.sum(a3 * dW, axis=1), np.sum(c3_ * dW, axis=1)
    da = (np.sum(dU * G1[:, None, :], axis=2) + np.sum(dV * G2[:, None, :], axis=2)
          + np.sum(dW * G3[:, None, :], axis=2))
    dc_ = (np.sum(dU * H1[:, None, :], axis=2) + np.sum(dV * H2[:, None, :], axis=2)
           + np.sum(dW * H3[:, None, :], axis=2))
    dgamma = float(np.sum(da * np.where(live, dm, 0.0)) - np.sum(dc_ * np.where(live, dc, 0.0)))
    g_gl = np.asarray(dgamma * gamma_slope(float(gl)))

    g_F1 = dG1.T @ R1 + dH1.T @ R2
    g_F2 = dG2.T @ R1 + dH2.T @ R2
    g_F3 = dG3.T @ R1 + dH3.T @ R2
    dA = (dG1 @ F1 + dG2 @ F2 + dG3 @ F3) * (A > 0)
    dB = (dH1 @ F1 + dH2 @ F2 + dH3 @ F3) * (B > 0)
    g_W1, g_b1 = dA.T @ P, dA.sum(axis=0)
    g_W2, g_b2 = dB.T @ P, dB.sum(axis=0)
    dP = (dA @ W1 + dB @ W2) / n_tables
    g_phi_num = x_num.T @ dP
    g_phi_g = np.zeros_like(phi_g)
    np.add.at(g_phi_g, gender, dP)

    grads = (g_phi_num, g_phi_g, g_W1, g_b1, g_W2, g_b2, g_gl,
             g_F1, g_c1, g_F2, g_c2, g_F3, g_c3, g_w3, g_b3)
    return loss, y_hat, alpha, grads
