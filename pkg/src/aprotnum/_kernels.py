"""Compiled inner loops for the angle and matrix flows.

All kernels take q pre-sampled on the RK4 grid of each gap: a gap split
into ``nsub`` steps of width ``h`` owns ``2*nsub + 1`` consecutive samples
at x_n + j*h/2.  They release the GIL so energy scans can use threads.
"""

import math

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi


@njit(cache=True, nogil=True)
def angle_field(theta, w):
    c = math.cos(theta)
    s = math.sin(theta)
    return c * c - w * s * s


@njit(cache=True, nogil=True)
def jump(c, theta):
    # arg change of (cos t + c sin t, sin t) vs (cos t, sin t); the second
    # component never changes sign along the path, so the principal value
    # of the relative angle is the continuous branch.
    s = math.sin(theta)
    return math.atan2(-c * s * s, 1.0 + c * s * math.cos(theta))


@njit(cache=True, nogil=True)
def rk4_forward(theta, qs, start, nsub, h, energy):
    for j in range(nsub):
        k = start + 2 * j
        w0 = qs[k] - energy
        wm = qs[k + 1] - energy
        w1 = qs[k + 2] - energy
        k1 = angle_field(theta, w0)
        k2 = angle_field(theta + 0.5 * h * k1, wm)
        k3 = angle_field(theta + 0.5 * h * k2, wm)
        k4 = angle_field(theta + h * k3, w1)
        theta += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    return theta


@njit(cache=True, nogil=True)
def rk4_backward(theta, qs, start, nsub, h, energy):
    hb = -h
    for j in range(nsub):
        k = start + 2 * (nsub - j)
        w0 = qs[k] - energy
        wm = qs[k - 1] - energy
        w1 = qs[k - 2] - energy
        k1 = angle_field(theta, w0)
        k2 = angle_field(theta + 0.5 * hb * k1, wm)
        k3 = angle_field(theta + 0.5 * hb * k2, wm)
        k4 = angle_field(theta + hb * k3, w1)
        theta += hb * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    return theta


@njit(cache=True, nogil=True)
def advance_chunk(thetas, energy, qs, starts, nsub, h, vend, reduce, out, incr):
    """Run every initial angle in ``thetas`` across the gaps of one chunk.

    out[g, k] receives the right-continuous angle at the end of gap g.  With
    ``reduce`` the carried angle is taken mod 2*pi after each gap and the
    per-gap increments are written to incr[g, k] (skew-product form).
    Returns the index of the first gap that produced a non-finite angle,
    or -1.
    """
    ng = starts.shape[0]
    for k in range(thetas.shape[0]):
        th = thetas[k]
        for g in range(ng):
            before = th
            th = rk4_forward(th, qs, starts[g], nsub[g], h[g], energy)
            th += jump(vend[g], th)
            if not math.isfinite(th):
                return g
            if reduce:
                incr[g, k] = th - before
                th = th - TWO_PI * math.floor(th / TWO_PI)
            out[g, k] = th
        thetas[k] = th
    return -1


@njit(cache=True, nogil=True)
def retreat_chunk(thetas, energy, qs, starts, nsub, h, vend, out):
    """Inverse of advance_chunk, gaps visited last to first.

    out[g, k] receives the angle at the start of gap g.
    """
    ng = starts.shape[0]
    for k in range(thetas.shape[0]):
        th = thetas[k]
        for gg in range(ng):
            g = ng - 1 - gg
            th += jump(-vend[g], th)
            th = rk4_backward(th, qs, starts[g], nsub[g], h[g], energy)
            if not math.isfinite(th):
                return g
            out[g, k] = th
        thetas[k] = th
    return -1


@njit(cache=True, nogil=True)
def _mat_rhs(w, y00, y01, y10, y11):
    # d/dx (psi', psi) = [[0, w], [1, 0]] (psi', psi)
    return w * y10, w * y11, y00, y01


@njit(cache=True, nogil=True)
def propagate_matrix(qs, start, nsub, h, energy):
    a, b, c, d = 1.0, 0.0, 0.0, 1.0
    for j in range(nsub):
        k = start + 2 * j
        w0 = qs[k] - energy
        wm = qs[k + 1] - energy
        w1 = qs[k + 2] - energy
        k1 = _mat_rhs(w0, a, b, c, d)
        k2 = _mat_rhs(wm, a + 0.5 * h * k1[0], b + 0.5 * h * k1[1], c + 0.5 * h * k1[2], d + 0.5 * h * k1[3])
        k3 = _mat_rhs(wm, a + 0.5 * h * k2[0], b + 0.5 * h * k2[1], c + 0.5 * h * k2[2], d + 0.5 * h * k2[3])
        k4 = _mat_rhs(w1, a + h * k3[0], b + h * k3[1], c + h * k3[2], d + h * k3[3])
        a += h * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]) / 6.0
        b += h * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]) / 6.0
        c += h * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]) / 6.0
        d += h * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3]) / 6.0
    out = np.empty((2, 2))
    out[0, 0] = a
    out[0, 1] = b
    out[1, 0] = c
    out[1, 1] = d
    return out


@njit(cache=True, nogil=True)
def iterate_lift(table, xi0, iterations):
    """Iterate the piecewise-linear lift tabulated on a uniform grid of [0, 2*pi].

    ``table`` has N + 1 entries with table[N] = table[0] + 2*pi; values
    outside [0, 2*pi) are handled by equivariance.
    """
    n = table.shape[0] - 1
    step = TWO_PI / n
    x = xi0
    for _ in range(iterations):
        turns = math.floor(x / TWO_PI)
        t = x - turns * TWO_PI
        u = t / step
        j = int(u)
        if j >= n:
            j = n - 1
        frac = u - j
        x = table[j] + frac * (table[j + 1] - table[j]) + turns * TWO_PI
    return x
