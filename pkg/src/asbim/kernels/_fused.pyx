# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled fused forward/backward pass, one dyad at a time.

Same algebra and argument order as ``fused_py.fused``; per-dyad scratch
buffers are allocated once per call.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt

cnp.import_array()

cdef double GAMMA_LOGIT_BOUND = 36.0


cdef inline double _sigmoid(double z) noexcept nogil:
    cdef double ez
    if z >= 0:
        return 1.0 / (1.0 + exp(-z))
    ez = exp(z)
    return ez / (1.0 + ez)


cdef inline double _gamma(double z) noexcept nogil:
    if z > GAMMA_LOGIT_BOUND:
        z = GAMMA_LOGIT_BOUND
    elif z < -GAMMA_LOGIT_BOUND:
        z = -GAMMA_LOGIT_BOUND
    return _sigmoid(z)


cdef inline double _gamma_slope(double z) noexcept nogil:
    cdef double g
    if z > GAMMA_LOGIT_BOUND or z < -GAMMA_LOGIT_BOUND:
        return 0.0
    g = _sigmoid(z)
    return g * (1.0 - g)


def fused(double[:, ::1] x_num, cnp.int64_t[::1] gender, double[:, ::1] dm,
          double[:, ::1] dc, cnp.uint8_t[:, ::1] mask, double[::1] t1, y,
          tuple weights, bint compute_grad):
    cdef double[:, ::1] phi_num = weights[0]
    cdef double[:, ::1] phi_g = weights[1]
    cdef double[:, ::1] W1 = weights[2]
    cdef double[::1] b1 = weights[3]
    cdef double[:, ::1] W2 = weights[4]
    cdef double[::1] b2 = weights[5]
    cdef double gl = float(weights[6])
    cdef double[:, ::1] F1 = weights[7]
    cdef double[::1] c1 = weights[8]
    cdef double[:, ::1] F2 = weights[9]
    cdef double[::1] c2 = weights[10]
    cdef double[:, ::1] F3 = weights[11]
    cdef double[::1] c3 = weights[12]
    cdef double[::1] w3 = weights[13]
    cdef double b3 = float(weights[14])

    cdef Py_ssize_t N = dm.shape[0], L = dm.shape[1]
    cdef Py_ssize_t nf = phi_num.shape[0], q = phi_num.shape[1], h = F1.shape[0]
    cdef double n_tables = nf + 1.0
    cdef double sqrt_h = sqrt(<double>h)
    cdef bint have_y = y is not None
    cdef double[::1] yv
    if have_y:
        yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef bint grad = compute_grad and have_y

    y_hat_arr = np.zeros(N)
    alpha_arr = np.zeros((N, L))
    cdef double[::1] y_hat = y_hat_arr
    cdef double[:, ::1] alpha = alpha_arr

    # per-dyad scratch
    cdef double[::1] P = np.zeros(q), A = np.zeros(q), B = np.zeros(q)
    cdef double[::1] R1 = np.zeros(q), R2 = np.zeros(q)
    cdef double[:, ::1] G = np.zeros((3, h)), H = np.zeros((3, h))
    cdef double[:, ::1] dG = np.zeros((3, h)), dH = np.zeros((3, h))
    cdef double[::1] S = np.zeros(h), dS = np.zeros(h)
    cdef double[::1] score = np.zeros(L), dalpha = np.zeros(L)
    cdef double[::1] av = np.zeros(L), cv = np.zeros(L)
    cdef double[::1] dR1 = np.zeros(q), dR2 = np.zeros(q), dP = np.zeros(q)

    # gradient accumulators
    g_phi_num_a = np.zeros((nf, q)); g_phi_g_a = np.zeros((phi_g.shape[0], q))
    g_W1_a = np.zeros((q, q)); g_b1_a = np.zeros(q)
    g_W2_a = np.zeros((q, q)); g_b2_a = np.zeros(q)
    g_F_a = np.zeros((3, h, q)); g_c_a = np.zeros((3, h))
    g_w3_a = np.zeros(h)
    cdef double[:, ::1] g_phi_num = g_phi_num_a, g_phi_g = g_phi_g_a
    cdef double[:, ::1] g_W1 = g_W1_a, g_W2 = g_W2_a
    cdef double[::1] g_b1 = g_b1_a, g_b2 = g_b2_a, g_w3 = g_w3_a
    cdef double[:, :, ::1] g_F = g_F_a
    cdef double[:, ::1] g_c = g_c_a
    cdef double g_b3 = 0.0, dgamma = 0.0

    cdef double gam = _gamma(gl)
    cdef double loss = 0.0
    cdef Py_ssize_t n, i, j, k, f, o, p
    cdef cnp.int64_t g_idx
    cdef double acc, top, denom, e, r, dy, abar, ds, a, c
    cdef double u, v, w, du, dv, dw, da, dcc
    cdef double[:, ::1] Fp

    for n in range(N):
        g_idx = gender[n]
        for k in range(q):
            acc = 0.0
            for f in range(nf):
                acc = acc + x_num[n, f] * phi_num[f, k]
            P[k] = (acc + phi_g[g_idx, k]) / n_tables
        for j in range(q):
            acc = b1[j]
            for k in range(q):
                acc = acc + W1[j, k] * P[k]
            A[j] = acc
            R1[j] = acc if acc > 0.0 else 0.0
            acc = b2[j]
            for k in range(q):
                acc = acc + W2[j, k] * P[k]
            B[j] = acc
            R2[j] = acc if acc > 0.0 else 0.0
        for p in range(3):
            Fp = F1 if p == 0 else (F2 if p == 1 else F3)
            for o in range(h):
                acc = 0.0
                v = 0.0
                for k in range(q):
                    acc = acc + Fp[o, k] * R1[k]
                    v = v + Fp[o, k] * R2[k]
                G[p, o] = acc
                H[p, o] = v

        top = -1e308
        for i in range(L):
            if not mask[n, i]:
                av[i] = 0.0
                cv[i] = 0.0
                continue
            a = gam * dm[n, i]
            c = (1.0 - gam) * dc[n, i]
            av[i] = a
            cv[i] = c
            acc = 0.0
            for o in range(h):
                v = a * G[1, o] + c * H[1, o] + c2[o]
                w = a * G[2, o] + c * H[2, o] + c3[o]
                acc = acc + v * w
            score[i] = acc / sqrt_h
            if score[i] > top:
                top = score[i]
        denom = 0.0
        for i in range(L):
            if mask[n, i]:
                e = exp(score[i] - top)
                alpha[n, i] = e
                denom = denom + e
            else:
                alpha[n, i] = 0.0
        for o in range(h):
            S[o] = 0.0
        for i in range(L):
            if mask[n, i]:
                alpha[n, i] = alpha[n, i] / denom
                for o in range(h):
                    S[o] = S[o] + alpha[n, i] * (av[i] * G[0, o] + cv[i] * H[0, o] + c1[o])
        acc = 0.0
        for o in range(h):
            acc = acc + w3[o] * S[o]
        y_hat[n] = acc + b3 + t1[n]
        if not have_y:
            continue
        r = y_hat[n] - yv[n]
        loss = loss + r * r
        if not grad:
            continue

        # ---- reverse pass for dyad n ----
        dy = 2.0 * r
        g_b3 = g_b3 + dy
        for o in range(h):
            g_w3[o] = g_w3[o] + dy * S[o]
            dS[o] = dy * w3[o]
            for p in range(3):
                dG[p, o] = 0.0
                dH[p, o] = 0.0
        abar = 0.0
        for i in range(L):
            if not mask[n, i]:
                continue
            acc = 0.0
            for o in range(h):
                acc = acc + dS[o] * (av[i] * G[0, o] + cv[i] * H[0, o] + c1[o])
            dalpha[i] = acc
            abar = abar + alpha[n, i] * acc
        for i in range(L):
            if not mask[n, i]:
                continue
            a = av[i]
            c = cv[i]
            ds = alpha[n, i] * (dalpha[i] - abar) / sqrt_h
            da = 0.0
            dcc = 0.0
            for o in range(h):
                v = a * G[1, o] + c * H[1, o] + c2[o]
                w = a * G[2, o] + c * H[2, o] + c3[o]
                du = alpha[n, i] * dS[o]
                dv = ds * w
                dw = ds * v
                g_c[0, o] += du
                g_c[1, o] += dv
                g_c[2, o] += dw
                dG[0, o] += a * du
                dH[0, o] += c * du
                dG[1, o] += a * dv
                dH[1, o] += c * dv
                dG[2, o] += a * dw
                dH[2, o] += c * dw
                da = da + du * G[0, o] + dv * G[1, o] + dw * G[2, o]
                dcc = dcc + du * H[0, o] + dv * H[1, o] + dw * H[2, o]
            dgamma = dgamma + da * dm[n, i] - dcc * dc[n, i]

        for k in range(q):
            dR1[k] = 0.0
            dR2[k] = 0.0
        for p in range(3):
            Fp = F1 if p == 0 else (F2 if p == 1 else F3)
            for o in range(h):
                for k in range(q):
                    g_F[p, o, k] += dG[p, o] * R1[k] + dH[p, o] * R2[k]
                    dR1[k] += Fp[o, k] * dG[p, o]
                    dR2[k] += Fp[o, k] * dH[p, o]
        for k in range(q):
            dP[k] = 0.0
        for j in range(q):
            da = dR1[j] if A[j] > 0.0 else 0.0
            dcc = dR2[j] if B[j] > 0.0 else 0.0
            g_b1[j] += da
            g_b2[j] += dcc
            for k in range(q):
                g_W1[j, k] += da * P[k]
                g_W2[j, k] += dcc * P[k]
                dP[k] += W1[j, k] * da + W2[j, k] * dcc
        for k in range(q):
            dP[k] = dP[k] / n_tables
            for f in range(nf):
                g_phi_num[f, k] += x_num[n, f] * dP[k]
            g_phi_g[g_idx, k] += dP[k]

    if not have_y:
        return float("nan"), y_hat_arr, alpha_arr, None
    if not grad:
        return loss, y_hat_arr, alpha_arr, None
    grads = (g_phi_num_a, g_phi_g_a, g_W1_a, g_b1_a, g_W2_a, g_b2_a,
             np.asarray(dgamma * _gamma_slope(gl)),
             g_F_a[0].copy(), g_c_a[0].copy(), g_F_a[1].copy(), g_c_a[1].copy(),
             g_F_a[2].copy(), g_c_a[2].copy(), g_w3_a, np.asarray(g_b3))
    return loss, y_hat_arr, alpha_arr, grads
