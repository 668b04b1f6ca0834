# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops.  Must stay numerically identical to _pykernels.py."""
from libc.math cimport fabs, log, sin


cdef inline double _interp(double x, const double[::1] xs, const double[::1] ys) nogil:
    cdef Py_ssize_t n = xs.shape[0]
    cdef Py_ssize_t lo = 0, hi = n - 1, mid
    if x <= xs[0]:
        return ys[0]
    if x >= xs[n - 1]:
        return ys[n - 1]
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if xs[mid] <= x:
            lo = mid
        else:
            hi = mid
    return ys[lo] + (ys[hi] - ys[lo]) * (x - xs[lo]) / (xs[hi] - xs[lo])


def closed_loop(const double[::1] nu, const double[::1] dist, const double[::1] det,
                double a_h, double a_s, double a_f, double c_m, double g_lin, double offset,
                double g_drift, double inv_trg, const double[::1] tab_beta,
                const double[::1] tab_phi, double kp, double ki_dt, double kd_dt,
                double k_act, double limit, Py_ssize_t n_delay, double vpw, double h0,
                double[::1] freq, double[::1] hole, double[::1] err, double[::1] act,
                double[::1] buf):
    """Run the feedback recursion; returns (samples written, unstable flag).

    ``limit`` applies to the hole-filtered excursion times C_m, ``z + c_m*es``.
    """
    cdef Py_ssize_t n = nu.shape[0]
    cdef Py_ssize_t k, idx = 0, done = n
    cdef bint flagged = False
    cdef bint drift = g_drift != 0.0 and tab_beta.shape[0] > 1
    cdef double u = 0.0, h = h0, es = 0.0, z = 0.0, ia = 0.0, idg = 0.0
    cdef double wl, e, lin, y, vin, yd, va
    with nogil:
        for k in range(n):
            wl = nu[k] + dist[k] + u
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
                y = y + g_drift * sin(_interp(es * inv_trg, tab_beta, tab_phi))
            y = y + det[k]
            freq[k] = wl
            hole[k] = h
            err[k] = y
            act[k] = u
            if fabs(z + c_m * es) > limit:
                done = k + 1
                flagged = True
                break
            vin = y * vpw
            if n_delay > 0:
                yd = buf[idx]
                buf[idx] = vin
                idx = idx + 1
                if idx == n_delay:
                    idx = 0
            else:
                yd = vin
            va = kp * yd + ia
            ia = ia + ki_dt * yd
            u = k_act * (va + idg)
            idg = idg + kd_dt * va
    return done, flagged


def pv_integral(const double[::1] x, const double[::1] f, const double[::1] x0,
                const double[::1] f0, const double[::1] df0, double delta, double[::1] out):
    """Principal value of ∫ f(x)/(x - x0) dx over the grid, by singularity subtraction."""
    cdef Py_ssize_t n = x.shape[0], m = x0.shape[0]
    cdef Py_ssize_t j, k
    cdef double a = x[0], b = x[n - 1]
    cdef double s, g_prev, g_cur, dx, c, scale
    scale = 1e-12 * (b - a)
    with nogil:
        for j in range(m):
            c = x0[j]
            s = 0.0
            dx = x[0] - c
            if fabs(dx) <= scale:
                g_prev = df0[j]
            else:
                g_prev = (f[0] - f0[j]) / dx
            for k in range(1, n):
                dx = x[k] - c
                if fabs(dx) <= scale:
                    g_cur = df0[j]
                else:
                    g_cur = (f[k] - f0[j]) / dx
                s = s + 0.5 * (g_prev + g_cur) * (x[k] - x[k - 1])
                g_prev = g_cur
            s = s + f0[j] * 0.5 * log(((b - c) * (b - c) + delta * delta)
                                      / ((a - c) * (a - c) + delta * delta))
            out[j] = s
