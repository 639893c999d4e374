"""Hot loops: batched billiard reflection, orbit iteration, chart quadrature.

Every kernel exists twice, a numba ``@njit`` scalar loop (``*_jit``) and a
vectorized numpy version (``*_np``). The public names dispatch on
``_accel.USE_NUMBA``; both variants are always importable so tests and the
benchmark can compare them.

Lines are (phi, p): unit normal (cos phi, sin phi), travel direction
phi + pi/2. The table is the centered ellipse with squared semi-axes (A, B).
"""
import math

import numpy as np

from . import _accel
from ._accel import njit

TWO_PI = 2.0 * math.pi

# 8-point Gauss-Legendre rule on [-1, 1]
GL_NODES, GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


# ---------------------------------------------------------------- reflection


@njit
def _reflect_one(phi, p, A, B, min_gap):
    c = math.cos(phi)
    s = math.sin(phi)
    h2 = A * c * c + B * s * s
    disc = (h2 - p * p) / (A * B)
    alpha = s * s / A + c * c / B
    if disc <= 0.0:
        return math.nan, math.nan, False
    root = math.sqrt(disc)
    if 2.0 * root / alpha < min_gap:
        return math.nan, math.nan, False
    beta = p * c * s * (1.0 / B - 1.0 / A)
    t = (-beta + root) / alpha
    y1 = p * c - t * s
    y2 = p * s + t * c
    n1 = y1 / A
    n2 = y2 / B
    nn = math.sqrt(n1 * n1 + n2 * n2)
    n1 /= nn
    n2 /= nn
    d1 = -s
    d2 = c
    dn = d1 * n1 + d2 * n2
    e1 = d1 - 2.0 * dn * n1
    e2 = d2 - 2.0 * dn * n2
    # new normal is the new direction turned by -pi/2
    phi_new = math.atan2(-e1, e2)
    if phi_new < 0.0:
        phi_new += TWO_PI
    p_new = y1 * e2 - y2 * e1
    return phi_new, p_new, True


@njit
def reflect_many_jit(phi, p, A, B, min_gap):
    n = phi.shape[0]
    out_phi = np.empty(n)
    out_p = np.empty(n)
    ok = np.empty(n, dtype=np.bool_)
    for i in range(n):
        a, b, good = _reflect_one(phi[i], p[i], A, B, min_gap)
        out_phi[i] = a
        out_p[i] = b
        ok[i] = good
    return out_phi, out_p, ok


def _two_pi(dtype):
    return np.arctan(np.ones((), dtype=dtype)) * 8


def reflect_many_np(phi, p, A, B, min_gap):
    # float64 or longdouble in, same out
    dtype = np.result_type(phi, p, np.float64)
    phi = np.asarray(phi, dtype=dtype)
    p = np.asarray(p, dtype=dtype)
    A, B = dtype.type(A), dtype.type(B)
    c, s = np.cos(phi), np.sin(phi)
    h2 = A * c * c + B * s * s
    disc = (h2 - p * p) / (A * B)
    alpha = s * s / A + c * c / B
    root = np.sqrt(np.maximum(disc, 0.0))
    ok = (disc > 0.0) & (2.0 * root / alpha >= min_gap)
    beta = p * c * s * (1.0 / B - 1.0 / A)
    t = (-beta + root) / alpha
    y1 = p * c - t * s
    y2 = p * s + t * c
    n1, n2 = y1 / A, y2 / B
    nn = np.hypot(n1, n2)
    n1, n2 = n1 / nn, n2 / nn
    dn = -s * n1 + c * n2
    e1 = -s - 2.0 * dn * n1
    e2 = c - 2.0 * dn * n2
    out_phi = np.mod(np.arctan2(-e1, e2), _two_pi(dtype))
    out_p = y1 * e2 - y2 * e1
    out_phi = np.where(ok, out_phi, np.nan)
    out_p = np.where(ok, out_p, np.nan)
    return out_phi, out_p, ok


@njit
def iterate_many_jit(phi, p, A, B, min_gap, steps):
    n = phi.shape[0]
    out_phi = phi.copy()
    out_p = p.copy()
    ok = np.ones(n, dtype=np.bool_)
    for i in range(n):
        a = phi[i]
        b = p[i]
        for _ in range(steps):
            a, b, good = _reflect_one(a, b, A, B, min_gap)
            if not good:
                ok[i] = False
                break
        out_phi[i] = a
        out_p[i] = b
    return out_phi, out_p, ok


def iterate_many_np(phi, p, A, B, min_gap, steps):
    dtype = np.result_type(phi, p, np.float64)
    phi = np.array(phi, dtype=dtype)
    p = np.array(p, dtype=dtype)
    ok = np.ones(phi.shape, dtype=bool)
    for _ in range(steps):
        phi, p, good = reflect_many_np(phi, p, A, B, min_gap)
        ok &= good
    return phi, p, ok


# ------------------------------------------------------------ canonical chart


@njit
def _density(phi, A, B):
    c = math.cos(phi)
    s = math.sin(phi)
    return 0.5 / math.sqrt(A * c * c + B * s * s)


@njit
def _partial(phi, lo, A, B, nodes, weights):
    half = 0.5 * (phi - lo)
    mid = lo + half
    acc = 0.0
    for i in range(nodes.shape[0]):
        acc += weights[i] * _density(mid + half * nodes[i], A, B)
    return acc * half


@njit
def _panel(edges, phi):
    k = np.searchsorted(edges, phi, side="right") - 1
    if k < 0:
        k = 0
    if k > edges.shape[0] - 2:
        k = edges.shape[0] - 2
    return k


@njit
def chart_eval_jit(phis, edges, xtab, A, B, inv_z, nodes, weights):
    out = np.empty(phis.shape[0])
    for i in range(phis.shape[0]):
        phi = phis[i] % TWO_PI
        k = _panel(edges, phi)
        out[i] = xtab[k] + inv_z * _partial(phi, edges[k], A, B, nodes, weights)
    return out


def _partial_np(phis, lo, A, B, nodes, weights):
    half = 0.5 * (phis - lo)
    pts = (lo + half)[:, None] + half[:, None] * nodes[None, :]
    c, s = np.cos(pts), np.sin(pts)
    return half * ((0.5 / np.sqrt(A * c * c + B * s * s)) @ weights)


def chart_eval_np(phis, edges, xtab, A, B, inv_z, nodes, weights):
    phis = np.mod(np.asarray(phis, dtype=float), TWO_PI)
    k = np.clip(np.searchsorted(edges, phis, side="right") - 1, 0, edges.shape[0] - 2)
    return xtab[k] + inv_z * _partial_np(phis, edges[k], A, B, nodes, weights)


@njit
def chart_invert_jit(xs, edges, xtab, A, B, inv_z, nodes, weights):
    out = np.empty(xs.shape[0])
    for i in range(xs.shape[0]):
        x = xs[i] % 1.0
        k = _panel(xtab, x)
        lo = edges[k]
        hi = edges[k + 1]
        phi = lo + (hi - lo) * (x - xtab[k]) / (xtab[k + 1] - xtab[k])
        for _ in range(60):
            f = xtab[k] + inv_z * _partial(phi, edges[k], A, B, nodes, weights) - x
            if f > 0.0:
                hi = phi
            else:
                lo = phi
            nxt = phi - f / (inv_z * _density(phi, A, B))
            if not (lo <= nxt <= hi):
                nxt = 0.5 * (lo + hi)
            if abs(nxt - phi) <= 1e-16 * TWO_PI:
                phi = nxt
                break
            phi = nxt
        out[i] = phi
    return out


def chart_invert_np(xs, edges, xtab, A, B, inv_z, nodes, weights):
    xs = np.mod(np.asarray(xs, dtype=float), 1.0)
    k = np.clip(np.searchsorted(xtab, xs, side="right") - 1, 0, edges.shape[0] - 2)
    lo, hi = edges[k], edges[k + 1]
    phi = lo + (hi - lo) * (xs - xtab[k]) / (xtab[k + 1] - xtab[k])
    start = edges[k]
    for _ in range(60):
        f = xtab[k] + inv_z * _partial_np(phi, start, A, B, nodes, weights) - xs
        hi = np.where(f > 0.0, phi, hi)
        lo = np.where(f > 0.0, lo, phi)
        c, s = np.cos(phi), np.sin(phi)
        nxt = phi - f / (inv_z * 0.5 / np.sqrt(A * c * c + B * s * s))
        nxt = np.where((nxt >= lo) & (nxt <= hi), nxt, 0.5 * (lo + hi))
        done = np.all(np.abs(nxt - phi) <= 1e-16 * TWO_PI)
        phi = nxt
        if done:
            break
    return phi


if _accel.USE_NUMBA:
    reflect_many = reflect_many_jit
    iterate_many = iterate_many_jit
    chart_eval = chart_eval_jit
    chart_invert = chart_invert_jit
else:
    reflect_many = reflect_many_np
    iterate_many = iterate_many_np
    chart_eval = chart_eval_np
    chart_invert = chart_invert_np
