"""Slow, independent reference implementations used to pin test values.

Everything here evaluates a definition as directly as possible: max-min
angles by sampling unit vectors, angle sums by stepping with matrix
exponentials and numpy's own SVD, Procrustes minima by scanning the
orthogonal group.  None of it shares code with the fast paths; numerics
go through numpy/scipy directly on purpose.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DimensionMismatch


def _unit_grid_2d(basis, m, offset):
    theta = (np.arange(m) + offset) * math.pi / m
    coeff = np.vstack([np.cos(theta), np.sin(theta)])
    return basis @ coeff  # (d, m) unit vectors


def maxmin_angle(v, w, samples=10**6, seed=0):
    """max over unit vectors of V of the min angle to W, by sampling.

    The sampling resolution per unit sphere is O(samples^(-1/2)) for planes
    and degrades with dimension; the returned value never exceeds the true
    max-min angle by more than the resolution.
    """
    if v.d != w.d or v.s != w.s:
        raise DimensionMismatch("subspace pair mismatch")
    rng = np.random.default_rng(seed)
    s = v.s
    if s == 1:
        vdirs = v.basis
        wdirs = w.basis
    elif s == 2:
        m = max(int(math.sqrt(samples)), 8)
        vdirs = _unit_grid_2d(v.basis, m, rng.uniform())
        wdirs = _unit_grid_2d(w.basis, m, rng.uniform())
    else:
        m = max(int(math.sqrt(samples)), 8)
        cv = rng.standard_normal((s, m))
        cw = rng.standard_normal((s, m))
        vdirs = v.basis @ (cv / np.linalg.norm(cv, axis=0))
        wdirs = w.basis @ (cw / np.linalg.norm(cw, axis=0))
    dots = np.abs(vdirs.T @ wdirs)  # (mv, mw)
    best_per_v = dots.max(axis=1)  # cos of min angle to W
    worst = best_per_v.min()  # cos at the maximizing v
    return float(math.acos(min(max(worst, 0.0), 1.0)))


def fd_angle_derivative(w, wdot, h):
    """Forward difference of the max principal angle along t -> span(w + t wdot)."""
    w = np.asarray(w, dtype=float)
    wdot = np.asarray(wdot, dtype=float)
    q0, _ = np.linalg.qr(w)
    q1, _ = np.linalg.qr(w + h * wdot)
    sig = np.linalg.svd(q0.T @ q1, compute_uv=False)
    c = min(max(sig[-1], 0.0), 1.0)
    if c > 1.0 - 1e-4:
        resid = q1 - q0 @ (q0.T @ q1)
        sine = np.linalg.svd(resid, compute_uv=False)[0]
        ang = math.asin(min(max(float(sine), 0.0), 1.0))
    else:
        ang = math.acos(c)
    return ang / h


def procrustes_bruteforce(p1, p2, angle_steps=20000):
    """min_Q ||p1 - p2 Q||_F over orthogonal Q by scanning O(s), s <= 2.

    Returns (value, q). For s = 2 the scan covers rotations and reflections
    on a uniform angle grid.
    """
    a = np.asarray(p1, dtype=float)
    b = np.asarray(p2, dtype=float)
    s = a.shape[1]
    if s == 1:
        cands = [np.array([[1.0]]), np.array([[-1.0]])]
        vals = [np.linalg.norm(a - b @ q) for q in cands]
        i = int(np.argmin(vals))
        return float(vals[i]), cands[i]
    if s != 2:
        raise ValueError("brute force supports s <= 2 only")
    g = b.T @ a  # maximize tr(Q^T g') with g' = b^T a
    theta = np.arange(angle_steps) * (2.0 * math.pi / angle_steps)
    c, sn = np.cos(theta), np.sin(theta)
    tr_rot = c * (g[0, 0] + g[1, 1]) + sn * (g[0, 1] - g[1, 0])
    tr_ref = c * (g[0, 0] - g[1, 1]) + sn * (g[0, 1] + g[1, 0])
    const = float(np.sum(a * a) + np.sum(b * b))
    i_rot = int(np.argmax(tr_rot))
    i_ref = int(np.argmax(tr_ref))
    if tr_rot[i_rot] >= tr_ref[i_ref]:
        q = np.array([[c[i_rot], -sn[i_rot]], [sn[i_rot], c[i_rot]]])
        best = tr_rot[i_rot]
    else:
        q = np.array([[c[i_ref], sn[i_ref]], [sn[i_ref], -c[i_ref]]])
        best = tr_ref[i_ref]
    return math.sqrt(max(const - 2.0 * best, 0.0)), q


def _angle_between_orthonormal(b1, b2):
    sig = np.linalg.svd(b1.T @ b2, compute_uv=False)
    c = min(max(float(sig[-1]), 0.0), 1.0)
    if c > 1.0 - 1e-4:
        resid = b2 - b1 @ (b1.T @ b2)
        sine = float(np.linalg.svd(resid, compute_uv=False)[0])
        return math.asin(min(max(sine, 0.0), 1.0))
    return math.acos(c)


def birkhoff_average(system, v0, horizon, step=None):
    """Long-run average angular increment along a trajectory, evaluated
    directly from the definition: orthonormal bases are pushed forward step
    by step and successive maximal principal angles are summed.

    For discrete systems horizon is the number of steps.  Continuous
    systems are advanced with matrix exponentials of the generator frozen
    at midpoints, with time step `step`; the sum of successive angles
    converges to the angle integral as step -> 0.
    """
    from .continuous import ContinuousSystem
    from .discrete import DiscreteSystem
    from scipy.linalg import expm

    basis = np.asarray(v0.basis if hasattr(v0, "basis") else v0, dtype=float)
    q, _ = np.linalg.qr(basis)
    total = 0.0
    if isinstance(system, DiscreteSystem):
        n = int(horizon)
        for k in range(n):
            nxt, _ = np.linalg.qr(system.matrix(k) @ q)
            total += _angle_between_orthonormal(q, nxt)
            q = nxt
        return total / n
    if isinstance(system, ContinuousSystem):
        if step is None:
            raise ValueError("continuous birkhoff_average needs a step")
        nsteps = int(round(horizon / step))
        if system.constant is not None:
            flows = {0.0: expm(step * system.constant)}
            flow = flows[0.0]
            for k in range(nsteps):
                nxt, _ = np.linalg.qr(flow @ q)
                total += _angle_between_orthonormal(q, nxt)
                q = nxt
        else:
            for k in range(nsteps):
                t_mid = (k + 0.5) * step
                flow = expm(step * system.matrix(t_mid))
                nxt, _ = np.linalg.qr(flow @ q)
                total += _angle_between_orthonormal(q, nxt)
                q = nxt
        return total / (nsteps * step)
    raise TypeError("unsupported system type %r" % (type(system).__name__,))
