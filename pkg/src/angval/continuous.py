"""Continuous-time linear systems u' = A(t) u: subspace propagation by
classical Runge-Kutta with per-step re-orthonormalization, angle integrals,
and angular value estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import RankDeficient, StepUnstable
from .linalg import qr_thin, spectral_norm
from .search import default_sample_times, run_search


@dataclass(frozen=True)
class ContinuousSystem:
    """Generator t -> A(t).  `constant` holds the matrix when A is autonomous,
    which unlocks an exact precomputed one-step map."""

    generator: Callable[[float], np.ndarray]
    dim: int
    constant: Optional[np.ndarray] = None

    def matrix(self, t):
        if self.constant is not None:
            return self.constant
        return self.generator(float(t))

    @staticmethod
    def from_constant(a):
        a = np.asarray(a, dtype=float)
        return ContinuousSystem(generator=lambda t: a, dim=a.shape[0], constant=a)

    @staticmethod
    def model2d(rho, omega):
        """Elliptic rotation generator omega * D_rho J D_rho^{-1}."""
        a = np.array([[0.0, -omega / rho], [rho * omega, 0.0]])
        return ContinuousSystem.from_constant(a)

    @staticmethod
    def time_varying(fn, dim):
        return ContinuousSystem(generator=fn, dim=dim)


@dataclass(frozen=True)
class SubspaceTrajectory:
    """Node times, orthonormal bases, and the angular speed at each node."""

    times: np.ndarray
    bases: np.ndarray
    integrand: np.ndarray


def _rk4_step_matrix(a, h):
    # Classical RK4 applied to W' = A W with constant A collapses to the
    # degree-4 Taylor polynomial of exp(h A); precomputing it makes each
    # step a single matmul.
    d = a.shape[0]
    a2 = a @ a
    a3 = a2 @ a
    a4 = a3 @ a
    return (
        np.eye(d) + h * a + (h * h / 2.0) * a2 + (h**3 / 6.0) * a3 + (h**4 / 24.0) * a4
    )


def _sigma_max(m):
    s = m.shape[1]
    if s == 1:
        return math.sqrt(float(m[:, 0] @ m[:, 0]))
    if s == 2:
        g = m.T @ m
        tr = g[0, 0] + g[1, 1]
        disc = math.sqrt(max((g[0, 0] - g[1, 1]) ** 2 + 4.0 * g[0, 1] ** 2, 0.0))
        return math.sqrt(max(0.5 * (tr + disc), 0.0))
    return spectral_norm(m)


def _orth_or_raise(w):
    if not np.all(np.isfinite(w)):
        raise StepUnstable("propagated basis has non-finite entries")
    try:
        q, _ = qr_thin(w)
    except RankDeficient as exc:
        raise StepUnstable("propagated basis lost rank") from exc
    return q


def _propagate_line(sys, b0, nsteps, h, store_bases):
    # s = 1 fast path on plain vectors.
    const = sys.constant
    step_mat = _rk4_step_matrix(const, h) if const is not None else None
    d = b0.shape[0]
    b = b0[:, 0].copy()
    integrand = np.empty(nsteps + 1)
    bases = np.empty((nsteps + 1, d, 1)) if store_bases else None
    for k in range(nsteps + 1):
        a = const if const is not None else sys.matrix(k * h)
        u = a @ b
        resid = u - b * float(b @ u)
        speed = math.sqrt(float(resid @ resid))
        if not math.isfinite(speed):
            raise StepUnstable("angular speed is non-finite")
        integrand[k] = speed
        if store_bases:
            bases[k, :, 0] = b
        if k == nsteps:
            break
        if step_mat is not None:
            w = step_mat @ b
        else:
            t = k * h
            amid = sys.matrix(t + 0.5 * h)
            k1 = u  # A(t) b already computed
            k2 = amid @ (b + (0.5 * h) * k1)
            k3 = amid @ (b + (0.5 * h) * k2)
            k4 = sys.matrix(t + h) @ (b + h * k3)
            w = b + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        nw = float(w @ w)
        if nw == 0.0 or not math.isfinite(nw):
            raise StepUnstable("propagated direction vanished or overflowed")
        b = w / math.sqrt(nw)
    return bases, integrand


def _propagate_core(sys, b0, nsteps, h, store_bases):
    # overflow/invalid during a blown-up step is reported via StepUnstable,
    # not as a numpy warning
    with np.errstate(over="ignore", invalid="ignore"):
        if b0.shape[1] == 1:
            return _propagate_line(sys, b0, nsteps, h, store_bases)
        return _propagate_full(sys, b0, nsteps, h, store_bases)


def _propagate_full(sys, b0, nsteps, h, store_bases):
    const = sys.constant
    step_mat = _rk4_step_matrix(const, h) if const is not None else None
    d, s = b0.shape
    b = b0.copy()
    integrand = np.empty(nsteps + 1)
    bases = np.empty((nsteps + 1, d, s)) if store_bases else None
    for k in range(nsteps + 1):
        a = const if const is not None else sys.matrix(k * h)
        m = a @ b
        m = m - b @ (b.T @ m)
        speed = _sigma_max(m)
        if not math.isfinite(speed):
            raise StepUnstable("angular speed is non-finite")
        integrand[k] = speed
        if store_bases:
            bases[k] = b
        if k == nsteps:
            break
        if step_mat is not None:
            w = step_mat @ b
        else:
            t = k * h
            k1 = sys.matrix(t) @ b
            amid = sys.matrix(t + 0.5 * h)
            k2 = amid @ (b + (0.5 * h) * k1)
            k3 = amid @ (b + (0.5 * h) * k2)
            k4 = sys.matrix(t + h) @ (b + h * k3)
            w = b + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        b = _orth_or_raise(w)
    return bases, integrand


def _resolve_steps(t_end, h):
    nsteps = max(int(round(t_end / h)), 1)
    return nsteps, t_end / nsteps


def propagate_subspace(sys, v0, t_end, h):
    """Carry span(v0) along the flow on [0, t_end] with fixed-step RK4.

    The basis is re-orthonormalized after every step and the angular speed
    ||(I - P) A(t) P|| is recorded at each node.  The step is adjusted to
    the nearest exact divisor of t_end.
    """
    nsteps, h_eff = _resolve_steps(t_end, h)
    bases, integrand = _propagate_core(sys, v0.basis, nsteps, h_eff, store_bases=True)
    times = np.arange(nsteps + 1) * h_eff
    return SubspaceTrajectory(times=times, bases=bases, integrand=integrand)


def integral_from_trajectory(traj, t_start=0.0):
    """Trapezoid rule over the stored integrand from t_start to the end."""
    h = traj.times[1] - traj.times[0]
    i0 = int(round(t_start / h))
    if not (0 <= i0 < len(traj.times)):
        raise ValueError("t_start outside the trajectory")
    f = traj.integrand[i0:]
    return float(h * (f.sum() - 0.5 * (f[0] + f[-1])))


def angular_integral(sys, v0, t_start, t_end, h):
    """Accumulated angle a_{t_start, t_end}(V): integral of the angular speed
    along the flow started at time 0 from span(v0)."""
    if not (0.0 <= t_start <= t_end):
        raise ValueError("need 0 <= t_start <= t_end")
    traj = propagate_subspace(sys, v0, t_end, h)
    return integral_from_trajectory(traj, t_start)


def estimate_angular_value_ct(sys, s, variant, horizon, step, config):
    """Estimate an angular value of a continuous system by multistart search.

    Candidates are scored by (1/t) a_{0,t} at a shared sample of times in
    (0, horizon], accumulated by the trapezoid rule on the RK4 trajectory;
    the tail window provides the limsup/liminf proxies.
    """
    nsteps, h = _resolve_steps(horizon, step)
    if config.sample_times is not None:
        raw = np.asarray(config.sample_times, dtype=float)
    else:
        raw = default_sample_times(horizon, config.sample_count, discrete=False)
    idx = np.unique(np.clip(np.round(raw / h).astype(int), 1, nsteps))
    times = idx * h

    def evaluate(basis):
        _, integrand = _propagate_core(sys, basis, nsteps, h, store_bases=False)
        csum = np.cumsum(integrand)
        # trapezoid cumulative: h * (csum[i] - (f0 + f_i) / 2)
        cum = h * (csum[idx] - 0.5 * (integrand[0] + integrand[idx]))
        return cum / times

    return run_search(
        evaluate,
        d=sys.dim,
        s=s,
        variant=variant,
        horizon=float(horizon),
        times=times,
        config=config,
        steps_per_eval=nsteps,
    )


def kinematic_transform_ct(sys, q_fn, qdot_fn):
    """Change of variables u = Q(t) v: generator (Qdot + Q A) Q^{-1}.

    The transformed flow satisfies Phi~(t, tau) Q(tau) = Q(t) Phi(t, tau).
    """

    def gen(t):
        q = np.asarray(q_fn(t), dtype=float)
        qdot = np.asarray(qdot_fn(t), dtype=float)
        rhs = qdot + q @ sys.matrix(t)
        return np.linalg.solve(q.T, rhs.T).T

    return ContinuousSystem(generator=gen, dim=sys.dim)


def trace_normalize(sys):
    """Shift A(t) by -(tr A(t) / d) I; angular speeds are unchanged."""
    d = sys.dim
    if sys.constant is not None:
        a = sys.constant - (np.trace(sys.constant) / d) * np.eye(d)
        return ContinuousSystem.from_constant(a)

    def gen(t):
        a = sys.matrix(t)
        return a - (np.trace(a) / d) * np.eye(d)

    return ContinuousSystem(generator=gen, dim=d)
