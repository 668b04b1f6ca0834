"""Pure-Python versions of the compiled kernels in ``_kernels.pyx``.

The arithmetic is written in the same order as the Cython code so both
implementations produce the same numbers.
"""
import math

import numpy as np


def _interp(x, xs, ys):
    n = len(xs)
    if x <= xs[0]:
        return ys[0]
    if x >= xs[n - 1]:
        return ys[n - 1]
    lo, hi = 0, n - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if xs[mid] <= x:
            lo = mid
        else:
            hi = mid
    return ys[lo] + (ys[hi] - ys[lo]) * (x - xs[lo]) / (xs[hi] - xs[lo])


def closed_loop(nu, dist, det, a_h, a_s, a_f, c_m, g_lin, offset, g_drift, inv_trg,
                tab_beta, tab_phi, kp, ki_dt, kd_dt, k_act, limit, n_delay, vpw, h0,
                freq, hole, err, act, buf):
    """Run the feedback recursion; returns (samples written, unstable flag).

    ``limit`` applies to the hole-filtered excursion times C_m, ``z + c_m*es``.
    """
    n = len(nu)
    drift = g_drift != 0.0 and len(tab_beta) > 1
    # plain lists are much faster than numpy scalars in a Python loop
    nu_l, dist_l, det_l = nu.tolist(), dist.tolist(), det.tolist()
    tb, tp = list(tab_beta), list(tab_phi)
    bufl = buf.tolist()
    u = es = z = ia = idg = 0.0
    h = h0
    idx = 0
    fl, hl, el, al = [0.0] * n, [0.0] * n, [0.0] * n, [0.0] * n
    done, flagged = n, False
    for k in range(n):
        wl = nu_l[k] + dist_l[k] + u
        h = h + a_h * (wl - h)
        e = wl - h
        if drift:
            es = es + a_s * (e - es)
            lin = e - es
        else:
            lin = e
        z = z + a_f * (c_m * lin - z)
        y = g_lin * z + offset
        if drift:
            y = y + g_drift * math.sin(_interp(es * inv_trg, tb, tp))
        y = y + det_l[k]
        fl[k], hl[k], el[k], al[k] = wl, h, y, u
        if abs(z + c_m * es) > limit:
            done, flagged = k + 1, True
            break
        vin = y * vpw
        if n_delay > 0:
            yd = bufl[idx]
            bufl[idx] = vin
            idx += 1
            if idx == n_delay:
                idx = 0
        else:
            yd = vin
        va = kp * yd + ia
        ia = ia + ki_dt * yd
        u = k_act * (va + idg)
        idg = idg + kd_dt * va
    freq[:done] = fl[:done]
    hole[:done] = hl[:done]
    err[:done] = el[:done]
    act[:done] = al[:done]
    buf[:] = bufl
    return done, flagged


def pv_integral(x, f, x0, f0, df0, delta, out, chunk=256):
    """Principal value of ∫ f(x)/(x - x0) dx over the grid, by singularity subtraction."""
    x = np.asarray(x)
    f = np.asarray(f)
    a, b = x[0], x[-1]
    scale = 1e-12 * (b - a)
    dxk = np.diff(x)
    for start in range(0, len(x0), chunk):
        sl = slice(start, start + chunk)
        c = np.asarray(x0[sl])[:, None]
        dx = x[None, :] - c
        near = np.abs(dx) <= scale
        safe = np.where(near, 1.0, dx)
        g = np.where(near, np.asarray(df0[sl])[:, None], (f[None, :] - np.asarray(f0[sl])[:, None]) / safe)
        s = np.sum(0.5 * (g[:, :-1] + g[:, 1:]) * dxk[None, :], axis=1)
        cc = c[:, 0]
        s = s + np.asarray(f0[sl]) * 0.5 * np.log(((b - cc) ** 2 + delta**2) / ((a - cc) ** 2 + delta**2))
        out[sl] = s
