"""Compiled inner loops for training.

These replicate ``solver._solve_schur`` / ``solver.read_matrix`` and the
Euler update of ``device.step_state`` without per-call numpy overhead. The
numpy versions remain the reference; tests compare the two.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def _reduce(g1, g2):
    n_in, n_bulk = g1.shape
    n_out = g2.shape[1]
    n_t = n_in + n_out
    degree = np.empty(n_bulk)
    coupling = np.empty((n_bulk, n_t))
    for j in range(n_bulk):
        s = 0.0
        for i in range(n_in):
            coupling[j, i] = g1[i, j]
            s += g1[i, j]
        for k in range(n_out):
            coupling[j, n_in + k] = g2[j, k]
            s += g2[j, k]
        degree[j] = s
    reduced = np.zeros((n_t, n_t))
    for j in range(n_bulk):
        inv = 1.0 / degree[j]
        for p in range(n_t):
            cp = coupling[j, p]
            reduced[p, p] += cp
            for q in range(n_t):
                reduced[p, q] -= cp * coupling[j, q] * inv
    return reduced, coupling, degree


@njit(cache=True)
def read_all(g1, g2, v_read):
    """(n_in, n_out) read currents via effective resistance."""
    n_in = g1.shape[0]
    n_out = g2.shape[1]
    n_t = n_in + n_out
    reduced, _, _ = _reduce(g1, g2)
    out = np.empty((n_in, n_out))
    m = np.empty((n_t - 1, n_t - 1))
    rhs = np.zeros((n_t - 1, n_in))
    for i in range(n_in):
        rhs[i, i] = 1.0
    for k in range(n_out):
        skip = n_in + k
        rp = 0
        for p in range(n_t):
            if p == skip:
                continue
            rq = 0
            for q in range(n_t):
                if q == skip:
                    continue
                m[rp, rq] = reduced[p, q]
                rq += 1
            rp += 1
        pot = np.linalg.solve(m, rhs)
        for i in range(n_in):
            out[i, k] = v_read / pot[i, i]
    return out


@njit(cache=True)
def _terminal_voltages(reduced, a, b, v):
    n_t = reduced.shape[0]
    n_free = n_t - 2
    v_t = np.zeros(n_t)
    v_t[a] = v
    if n_free == 0:
        return v_t
    idx = np.empty(n_free, np.int64)
    c = 0
    for p in range(n_t):
        if p != a and p != b:
            idx[c] = p
            c += 1
    m = np.empty((n_free, n_free))
    rhs = np.empty(n_free)
    for r in range(n_free):
        rhs[r] = -reduced[idx[r], a] * v
        for s in range(n_free):
            m[r, s] = reduced[idx[r], idx[s]]
    sol = np.linalg.solve(m, rhs)
    for r in range(n_free):
        v_t[idx[r]] = sol[r]
    return v_t


@njit(cache=True)
def node_voltages(g1, g2, a, k, v):
    """Input, bulk and output voltages with input ``a`` at ``v`` and output ``k`` grounded."""
    n_in = g1.shape[0]
    reduced, coupling, degree = _reduce(g1, g2)
    v_t = _terminal_voltages(reduced, a, n_in + k, v)
    n_bulk = g1.shape[1]
    v_bulk = np.empty(n_bulk)
    for j in range(n_bulk):
        s = 0.0
        for p in range(v_t.shape[0]):
            s += coupling[j, p] * v_t[p]
        v_bulk[j] = s / degree[j]
    return v_t[:n_in].copy(), v_bulk, v_t[n_in:].copy()


@njit(cache=True)
def _conservation(g1, g2, a, k, v, v_bulk):
    src = 0.0
    snk = 0.0
    for j in range(v_bulk.shape[0]):
        src += g1[a, j] * (v - v_bulk[j])
        snk += g2[j, k] * v_bulk[j]
    scale = max(abs(src), abs(snk))
    if scale == 0.0:
        return 0.0
    return abs(src - snk) / scale


@njit(cache=True)
def _bms_new(r, drop, pol, beta, vt, rmin, rmax, dt):
    vd = pol * drop
    if vd > vt and r > rmin:
        rate = -beta * (vd - vt)
    elif vd < -vt and r < rmax:
        rate = -beta * (vd + vt)
    else:
        return r
    new = r + dt * rate
    if new < rmin:
        new = rmin
    elif new > rmax:
        new = rmax
    return new


@njit(cache=True)
def bms_write(r1, r2, pol1, pol2, beta1, vt1, rmin1, rmax1, beta2, vt2, rmin2, rmax2,
              a, k, v, substeps, dt, stats):
    """In-place BMS write. ``stats``: [solves, updates, decreases, max conservation error]."""
    n_in, n_bulk = r1.shape
    n_out = r2.shape[1]
    for _ in range(substeps):
        g1 = 1.0 / r1
        g2 = 1.0 / r2
        v_in, v_bulk, v_out = node_voltages(g1, g2, a, k, v)
        stats[0] += 1
        stats[3] = max(stats[3], _conservation(g1, g2, a, k, v, v_bulk))
        for i in range(n_in):
            for j in range(n_bulk):
                old = r1[i, j]
                new = _bms_new(old, v_in[i] - v_bulk[j], pol1[i, j], beta1[i, j], vt1[i, j],
                               rmin1[i, j], rmax1[i, j], dt)
                if new != old:
                    stats[1] += 1
                    if new < old:
                        stats[2] += 1
                    r1[i, j] = new
        for j in range(n_bulk):
            for q in range(n_out):
                old = r2[j, q]
                new = _bms_new(old, v_bulk[j] - v_out[q], pol2[j, q], beta2[j, q], vt2[j, q],
                               rmin2[j, q], rmax2[j, q], dt)
                if new != old:
                    stats[1] += 1
                    if new < old:
                        stats[2] += 1
                    r2[j, q] = new


@njit(cache=True)
def _bcm_new(x, drop, pol, p, dt):
    # p: a, b, v_t0, v_t1, v_th0, v_th1, mu, d, r_min, r_max
    vd = pol * drop
    if x >= 1.0:
        fb = p[1] if vd < -p[5] else 0.0
    elif x <= 0.0:
        fb = p[1] if vd > p[4] else 0.0
    elif -p[3] <= vd <= p[2]:
        fb = p[0]
    else:
        fb = p[1]
    r = p[9] - x * (p[9] - p[8])
    rate = p[6] * p[8] / (p[7] * p[7]) * (vd / r) * fb
    if rate == 0.0:
        return x
    new = x + dt * rate
    if new < 0.0:
        new = 0.0
    elif new > 1.0:
        new = 1.0
    return new


@njit(cache=True)
def bcm_write(x1, x2, pol1, pol2, p1, p2, a, k, v, substeps, dt, stats):
    """In-place BCM write; ``p1``/``p2`` stack the ten parameters on the last axis."""
    n_in, n_bulk = x1.shape
    n_out = x2.shape[1]
    for _ in range(substeps):
        g1 = np.empty_like(x1)
        g2 = np.empty_like(x2)
        for i in range(n_in):
            for j in range(n_bulk):
                g1[i, j] = 1.0 / (p1[i, j, 9] - x1[i, j] * (p1[i, j, 9] - p1[i, j, 8]))
        for j in range(n_bulk):
            for q in range(n_out):
                g2[j, q] = 1.0 / (p2[j, q, 9] - x2[j, q] * (p2[j, q, 9] - p2[j, q, 8]))
        v_in, v_bulk, v_out = node_voltages(g1, g2, a, k, v)
        stats[0] += 1
        stats[3] = max(stats[3], _conservation(g1, g2, a, k, v, v_bulk))
        for i in range(n_in):
            for j in range(n_bulk):
                old = x1[i, j]
                new = _bcm_new(old, v_in[i] - v_bulk[j], pol1[i, j], p1[i, j], dt)
                if new != old:
                    stats[1] += 1
                    # resistance falls as x rises
                    if new > old:
                        stats[2] += 1
                    x1[i, j] = new
        for j in range(n_bulk):
            for q in range(n_out):
                old = x2[j, q]
                new = _bcm_new(old, v_bulk[j] - v_out[q], pol2[j, q], p2[j, q], dt)
                if new != old:
                    stats[1] += 1
                    if new > old:
                        stats[2] += 1
                    x2[j, q] = new
