"""Compiled fixed-step RK4 core shared by the direct and the jump-free integrators.

Argument groups (all arrays float64 unless noted):

* ``net``   (a, A, B, C, I, P); ``P[k]`` multiplies the stored state on step k
  to give the physical state (ones for the direct system).
* ``act``   (code int64, gain, lo, hi) per neuron.
* ``dly``   (kind int64, base, amplitude, phase, period) per pair.
* ``ker``   (code int64, param, mode int64, window) per pair; mode 0 unused,
  1 linear chain, 2 quadrature.
* ``hist``  (value, amplitude, frequency, horizon, tail int).
* ``quad``  (TE, npre, FN, cum): extended grid with ``npre`` pre-history steps,
  per-step Gauss-Legendre source values and their running integral.
* ``traj``  (XL, XR, DL, DR) output buffers; row 0 of XL/XR must be filled.
* ``imp``   boolean mask of grid points carrying an impulse.
"""
import math

import numpy as np
from numba import njit

OK = 0
UNDERFLOW = 1
NONFINITE = 2

GL_NODES = np.array([0.5 - math.sqrt(15.0) / 10.0, 0.5, 0.5 + math.sqrt(15.0) / 10.0])
GL_WEIGHTS = np.array([5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0])
TWO_PI = 2.0 * math.pi
SNAP_TOL = 1e-10


@njit(cache=True, inline="always")
def activation(code, gain, lo, hi, u):
    if u < lo:
        u = lo
    elif u > hi:
        u = hi
    v = gain * u
    if code == 0:
        return math.tanh(v)
    if code == 1:
        return 1.0 / (1.0 + math.exp(-v))
    if code == 2:
        if v > 1.0:
            return 1.0
        if v < -1.0:
            return -1.0
        return v
    return math.log(v + 1.0)


@njit(cache=True, inline="always")
def kernel_density(code, p, u):
    if code == 0:
        return p * math.exp(-p * u)
    if code == 1:
        return p * p * u * math.exp(-p * u)
    return 1.0 / p if u <= p else 0.0


@njit(cache=True, inline="always")
def history_value(hv, ha, hf, H, htail, j, s, strict):
    if s < -H:
        if strict and htail == 0 and ha[j] != 0.0:
            return hv[j], False
        return hv[j], True
    return hv[j] + ha[j] * math.sin(hf[j] * (s + H)), True


@njit(cache=True, inline="always")
def hermite(x0, d0, x1, d1, h, th):
    om = 1.0 - th
    t2 = th * th
    return ((1.0 + 2.0 * th) * om * om * x0 + th * om * om * h * d0
            + t2 * (3.0 - 2.0 * th) * x1 + t2 * (th - 1.0) * h * d1)


@njit(cache=True, inline="always")
def locate(T, hi, s, right):
    """First index m in [0, hi] with T[m] >= s (T[m] > s when ``right``); hi + 1 if none."""
    lo = 0
    top = hi + 1
    while lo < top:
        mid = (lo + top) >> 1
        if T[mid] < s or (right and T[mid] == s):
            lo = mid + 1
        else:
            top = mid
    return lo


@njit(cache=True, inline="always")
def locate_near(T, hi, s, guess):
    """``locate(T, hi, s, False)`` starting from a nearby index."""
    g = min(max(guess, 0), hi)
    for _ in range(8):
        if T[g] < s:
            if g == hi:
                return hi + 1
            g += 1
        elif g > 0 and T[g - 1] >= s:
            g -= 1
        else:
            return g
    return locate(T, hi, s, False)


@njit(cache=True, inline="always")
def physical_state(j, s, k, T, P, XL, XR, DL, DR, hv, ha, hf, H, htail, strict, hint, slot):
    """x_j(s) for s up to the current step k (left limits at grid points).

    ``hint[slot]`` carries the last located index between calls.
    """
    if s <= 0.0:
        return history_value(hv, ha, hf, H, htail, j, s, strict)
    m = locate_near(T, k, s, hint[slot])
    hint[slot] = m
    m -= 1
    if m >= k:
        # delay shorter than the step: first-order extrapolation from t_k+
        return P[k, j] * (XR[k, j] + (s - T[k]) * DR[k, j]), True
    hm = T[m + 1] - T[m]
    return P[m, j] * hermite(XR[m, j], DR[m, j], XL[m + 1, j], DL[m + 1, j], hm, (s - T[m]) / hm), True


@njit(cache=True, inline="always")
def one_sided_state(j, s, side, k, T, imp, P, XL, XR, DL, DR, hv, ha, hf, H, htail, strict, hint, slot):
    """Like physical_state, but an argument that sits on an impulse time takes
    the limit from ``side`` (+1 after the jump, -1 before it)."""
    if s > 0.0:
        m = locate_near(T, k, s, hint[slot])
        if m > k:
            m = k
        if m > 0 and T[m] - s > s - T[m - 1]:
            m -= 1
        if imp[m] and abs(s - T[m]) <= SNAP_TOL * max(1.0, abs(s)):
            if side > 0:
                return P[m, j] * XR[m, j], True
            return P[m - 1, j] * XL[m, j], True
    return physical_state(j, s, k, T, P, XL, XR, DL, DR, hv, ha, hf, H, htail, strict, hint, slot)


@njit(cache=True)
def quad_memory(i, j, t, k, Fkp, Fst, T, P, XL, XR, DL, DR, hv, ha, hf, H, htail,
                acode, gain, alo, ahi, kcode, kparam, kwin, TE, npre, FN, cum):
    code = kcode[i, j]
    p = kparam[i, j]
    ek = npre + k
    dt = t - T[k]
    if code == 2:
        lo = t - p
        e = locate(TE, ek, lo, True) - 1
        if e < 0:
            e = 0
        a0 = TE[e]
        span = lo - a0
        part = 0.0
        if span > 0.0:
            # partial first step of the window, on its own dense output
            m = e - npre
            for q in range(3):
                s = a0 + GL_NODES[q] * span
                if m < 0:
                    x, _ = history_value(hv, ha, hf, H, htail, j, s, False)
                else:
                    hm = T[m + 1] - T[m]
                    x = P[m, j] * hermite(XR[m, j], DR[m, j], XL[m + 1, j], DL[m + 1, j], hm, (s - T[m]) / hm)
                part += GL_WEIGHTS[q] * activation(acode[j], gain[j], alo[j], ahi[j], x)
            part *= span
        total = cum[ek, j] - cum[e, j] - part + 0.5 * dt * (Fkp[j] + Fst[j])
        return total / p
    lo = t - kwin[i, j]
    e0 = locate(TE, ek, lo, True) - 1
    if e0 < 0:
        e0 = 0
    acc = 0.0
    for e in range(e0, ek):
        he = TE[e + 1] - TE[e]
        for q in range(3):
            s = TE[e] + GL_NODES[q] * he
            acc += GL_WEIGHTS[q] * he * kernel_density(code, p, t - s) * FN[e, q, j]
    acc += 0.5 * dt * (kernel_density(code, p, dt) * Fkp[j] + kernel_density(code, p, 0.0) * Fst[j])
    return acc


@njit(cache=True, inline="always")
def _axpy(out, x, c, d):
    xf = x.ravel()
    df = d.ravel()
    of = out.ravel()
    for q in range(xf.size):
        of[q] = xf[q] + c * df[q]


@njit(cache=True, inline="always")
def _rk4_update(Z, hk, d1, d2, d3, d4):
    zf = Z.ravel()
    f1 = d1.ravel()
    f2 = d2.ravel()
    f3 = d3.ravel()
    f4 = d4.ravel()
    c = hk / 6.0
    for q in range(zf.size):
        zf[q] += c * (f1[q] + 2.0 * f2[q] + 2.0 * f3[q] + f4[q])


def integrate(T, jump, imp, Z0, traj, net, act, dly, ker, hist, quad):
    """Fill ``traj`` over the grid ``T``; returns (status, last good index)."""
    XL, XR, DL, DR = traj
    a, A, B, C, I, P = net
    value, amp, freq, horizon, tail = hist
    TE, npre, FN, cum = quad
    return _integrate(T, jump, imp, Z0, XL, XR, DL, DR, a, A, B, C, I, P, *act, *dly, *ker,
                      value, amp, freq, float(horizon), int(tail), TE, int(npre), FN, cum)


STAGE_OFFSET = np.array([0.0, 0.5, 0.5, 1.0])
# which side of the step a stage sits on: +1 start, 0 interior, -1 end
STAGE_EDGE = np.array([1, 0, 0, -1])


@njit(cache=True)
def _integrate(T, jump, imp, Z0, XL, XR, DL, DR, a, A, B, C, I, P,
               acode, gain, alo, ahi, dkind, dbase, damp, dphase, dperiod,
               kcode, kparam, kmode, kwin, hv, ha, hf, H, htail, TE, npre, FN, cum):
    K = T.shape[0] - 1
    n = XR.shape[1]
    use_quad = FN.shape[0] > 0

    if use_quad:
        for e in range(npre):
            he = TE[e + 1] - TE[e]
            for j in range(n):
                acc = 0.0
                for q in range(3):
                    x, _ = history_value(hv, ha, hf, H, htail, j, TE[e] + GL_NODES[q] * he, False)
                    FN[e, q, j] = activation(acode[j], gain[j], alo[j], ahi[j], x)
                    acc += GL_WEIGHTS[q] * FN[e, q, j]
                cum[e + 1, j] = cum[e, j] + he * acc

    Z = Z0.copy()
    Zs = np.zeros_like(Z)
    KZ = np.zeros((4,) + Z.shape)
    KY = np.zeros((4, n))
    ys = np.zeros(n)
    Fkp = np.zeros(n)
    Fst = np.zeros(n)
    # rows sharing a delay or kernel reuse the column's last lookup:
    # cf columns (tau, value, kernel param, window, memory), ci columns (side, kernel code)
    cf = np.zeros((n, 5))
    ci = np.zeros((n, 2), dtype=np.int64)
    hint = np.zeros(n * n, dtype=np.int64)

    for k in range(K + 1):
        t0 = T[k]
        hk = T[k + 1] - t0 if k < K else 0.0
        for j in range(n):
            Fkp[j] = activation(acode[j], gain[j], alo[j], ahi[j], P[k, j] * XR[k, j])
        # at k == K only the right-sided derivative (stage 0) is needed
        last_stage = 1 if k == K else 4
        for stage in range(last_stage):
            t = t0 + STAGE_OFFSET[stage] * hk
            edge = STAGE_EDGE[stage]
            if stage == 0:
                for i in range(n):
                    ys[i] = XR[k, i]
                Zs[:] = Z
            else:
                c = STAGE_OFFSET[stage] * hk
                for i in range(n):
                    ys[i] = XR[k, i] + c * KY[stage - 1, i]
                _axpy(Zs, Z, c, KZ[stage - 1])
            dy = KY[stage]
            dZ = KZ[stage]

            # right-hand side at (t, ys, Zs)
            for j in range(n):
                cf[j, 0] = np.nan
                ci[j, 1] = -1
                Fst[j] = activation(acode[j], gain[j], alo[j], ahi[j], P[k, j] * ys[j])
            for i in range(n):
                acc = 0.0
                for j in range(n):
                    if A[i, j] != 0.0:
                        acc += A[i, j] * Fst[j]
                    if B[i, j] != 0.0:
                        slope = 1.0
                        if dkind[i, j] == 0:
                            tau = dbase[i, j]
                        else:
                            arg = TWO_PI * t / dperiod[i, j] + dphase[i, j]
                            tau = dbase[i, j] + damp[i, j] * math.sin(arg)
                            slope = 1.0 - damp[i, j] * TWO_PI / dperiod[i, j] * math.cos(arg)
                        # step end points take the limit from inside the step
                        side = 0 if edge == 0 else (edge if slope > 0.0 else -edge)
                        if tau <= 0.0:
                            v = Fst[j]
                        elif tau == cf[j, 0] and side == ci[j, 0]:
                            v = cf[j, 1]
                        else:
                            slot = i * n + j
                            if side != 0:
                                x, ok = one_sided_state(j, t - tau, side, k, T, imp, P, XL, XR, DL, DR,
                                                        hv, ha, hf, H, htail, True, hint, slot)
                            else:
                                x, ok = physical_state(j, t - tau, k, T, P, XL, XR, DL, DR,
                                                       hv, ha, hf, H, htail, True, hint, slot)
                            if not ok:
                                return UNDERFLOW, k
                            v = activation(acode[j], gain[j], alo[j], ahi[j], x)
                            cf[j, 0] = tau
                            cf[j, 1] = v
                            ci[j, 0] = side
                        acc += B[i, j] * v
                    if C[i, j] != 0.0:
                        if kmode[i, j] == 1:
                            beta = kparam[i, j]
                            dZ[i, j, 0] = beta * (Fst[j] - Zs[i, j, 0])
                            if kcode[i, j] == 0:
                                mem = Zs[i, j, 0]
                            else:
                                dZ[i, j, 1] = beta * (Zs[i, j, 0] - Zs[i, j, 1])
                                mem = Zs[i, j, 1]
                        elif kcode[i, j] == ci[j, 1] and kparam[i, j] == cf[j, 2] and kwin[i, j] == cf[j, 3]:
                            mem = cf[j, 4]
                        else:
                            mem = quad_memory(i, j, t, k, Fkp, Fst, T, P, XL, XR, DL, DR, hv, ha, hf, H, htail,
                                              acode, gain, alo, ahi, kcode, kparam, kwin, TE, npre, FN, cum)
                            ci[j, 1] = kcode[i, j]
                            cf[j, 2] = kparam[i, j]
                            cf[j, 3] = kwin[i, j]
                            cf[j, 4] = mem
                        acc += C[i, j] * mem
                dy[i] = -a[i] * ys[i] + (acc + I[i]) / P[k, i]

        for i in range(n):
            DR[k, i] = KY[0, i]
        if k == K:
            break
        finite = True
        for i in range(n):
            v = XR[k, i] + hk / 6.0 * (KY[0, i] + 2.0 * KY[1, i] + 2.0 * KY[2, i] + KY[3, i])
            XL[k + 1, i] = v
            DL[k + 1, i] = KY[3, i]
            XR[k + 1, i] = jump[k + 1, i] * v
            if not math.isfinite(v):
                finite = False
        _rk4_update(Z, hk, KZ[0], KZ[1], KZ[2], KZ[3])
        if not finite:
            return NONFINITE, k
        if use_quad:
            e = npre + k
            for j in range(n):
                acc = 0.0
                for q in range(3):
                    x = P[k, j] * hermite(XR[k, j], DR[k, j], XL[k + 1, j], DL[k + 1, j], hk, GL_NODES[q])
                    FN[e, q, j] = activation(acode[j], gain[j], alo[j], ahi[j], x)
                    acc += GL_WEIGHTS[q] * FN[e, q, j]
                cum[e + 1, j] = cum[e, j] + hk * acc
    return OK, K
