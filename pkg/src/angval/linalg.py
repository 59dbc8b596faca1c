"""Small dense linear algebra kernels used by every other module.

Matrices are plain numpy arrays of float64 at desk scale (dimension <= 32 or
so).  The SVD is a one-sided Jacobi iteration: for matrices this small it is
simple, and it keeps high relative accuracy in the small singular values,
which the small-angle paths upstream depend on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidBlock, NoConvergence, RankDeficient

# Pair (p, q) is considered numerically orthogonal below this relative level.
_JACOBI_TOL = 1e-15
_MAX_SWEEPS = 30


def as_matrix(m):
    """Coerce to a 2-d float64 array and reject non-finite entries."""
    a = np.asarray(m, dtype=float)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2:
        raise ValueError("expected a matrix, got ndim=%d" % a.ndim)
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def qr_thin(m, tol=None):
    """Thin QR factorization with a nonnegative diagonal of R.

    Parameters
    ----------
    m : (d, s) array_like, d >= s
    tol : float, optional
        Rank tolerance relative to ||m||.  Defaults to 1e-10.

    Returns
    -------
    q : (d, s) ndarray with orthonormal columns
    r : (s, s) upper triangular ndarray, diag(r) >= 0

    Raises
    ------
    RankDeficient
        If any diagonal entry of R falls below tol * ||m||.
    """
    a = as_matrix(m)
    d, s = a.shape
    if d < s:
        raise ValueError("qr_thin needs d >= s, got shape %s" % (a.shape,))
    if tol is None:
        tol = 1e-10
    if s == 1:
        # One column: QR is just normalization; ||m|| is the column norm, so
        # the rank check degenerates to "nonzero column".
        nrm = float(np.linalg.norm(a[:, 0]))
        if nrm == 0.0:
            raise RankDeficient("zero column at tolerance %g" % tol)
        q = a / nrm
        return q, np.array([[nrm]])
    q, r = np.linalg.qr(a)
    # Fix signs so that diag(r) >= 0; the thin factorization is then unique
    # for full-rank input.
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    q = q * signs
    r = signs[:, None] * r
    scale = float(np.linalg.norm(a))
    if np.any(np.abs(np.diag(r)) <= tol * scale):
        raise RankDeficient("rank-deficient matrix at tolerance %g" % tol)
    return q, r


@dataclass(frozen=True)
class Svd:
    """Factorization m = y @ diag(sigma) @ z.T with orthonormal y, z."""

    y: np.ndarray
    sigma: np.ndarray
    z: np.ndarray

    def reconstruct(self):
        return (self.y * self.sigma) @ self.z.T


def _complete_orthonormal(u):
    """Replace zero columns of u with an orthonormal completion."""
    d, s = u.shape
    out = u.copy()
    basis = [out[:, j] for j in range(s) if np.linalg.norm(out[:, j]) > 0.5]
    for j in range(s):
        if np.linalg.norm(out[:, j]) > 0.5:
            continue
        # Gram-Schmidt a standard basis vector against everything kept so far.
        for e in range(d):
            v = np.zeros(d)
            v[e] = 1.0
            for b in basis:
                v -= b * (b @ v)
            nv = np.linalg.norm(v)
            if nv > 1e-8:
                out[:, j] = v / nv
                basis.append(out[:, j])
                break
    return out


def svd(m, max_sweeps=_MAX_SWEEPS):
    """One-sided Jacobi SVD.

    Rotates pairs of columns until all are mutually orthogonal, then reads
    the singular values off as column norms.  Sweeps are cyclic-by-rows.

    Raises NoConvergence if the off-diagonal mass has not vanished after
    max_sweeps sweeps.
    """
    a = as_matrix(m)
    d, s = a.shape
    if d < s:
        inner = svd(a.T, max_sweeps=max_sweeps)
        return Svd(y=inner.z, sigma=inner.sigma, z=inner.y)
    u = a.copy()
    v = np.eye(s)
    eps = float(np.finfo(float).eps)
    # Columns that cancellation drives below the noise floor of the whole
    # matrix are frozen: their correlations are rounding dust and rotating
    # them can cycle forever on nearly rank-deficient input.
    norms2 = np.sum(u * u, axis=0)
    floor = (d * eps) ** 2 * float(norms2.max(initial=0.0))
    tol = max(_JACOBI_TOL, math.sqrt(d) * eps)
    for _sweep in range(max_sweeps):
        rotated = False
        for p in range(s - 1):
            for q in range(p + 1, s):
                up = u[:, p]
                uq = u[:, q]
                app = float(up @ up)
                aqq = float(uq @ uq)
                if app <= floor or aqq <= floor:
                    continue
                apq = float(up @ uq)
                if abs(apq) <= tol * math.sqrt(app * aqq) or apq == 0.0:
                    continue
                rotated = True
                zeta = (aqq - app) / (2.0 * apq)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                sn = c * t
                new_p = c * up - sn * uq
                new_q = sn * up + c * uq
                u[:, p] = new_p
                u[:, q] = new_q
                vp = v[:, p].copy()
                v[:, p] = c * vp - sn * v[:, q]
                v[:, q] = sn * vp + c * v[:, q]
        if not rotated:
            break
    else:
        raise NoConvergence("jacobi svd: no convergence in %d sweeps" % max_sweeps)
    sigma = np.linalg.norm(u, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    u = u[:, order]
    v = v[:, order]
    y = np.zeros_like(u)
    for j in range(s):
        # Only exact zeros are excluded; tiny sigmas stay meaningful under Jacobi.
        if sigma[j] > 0.0:
            y[:, j] = u[:, j] / sigma[j]
    if np.any(sigma == 0.0):
        y = _complete_orthonormal(y)
    return Svd(y=y, sigma=sigma, z=v)


def _sym2x2_max_eig(g00, g01, g11):
    tr = g00 + g11
    disc = math.sqrt(max((g00 - g11) ** 2 + 4.0 * g01 * g01, 0.0))
    return 0.5 * (tr + disc)


def spectral_norm(m):
    """Largest singular value of m.

    Equals sigma_1 of svd(m); small and symmetric shapes take closed-form
    or symmetric-eigenvalue shortcuts with the same value.
    """
    a = as_matrix(m)
    n, k = a.shape
    if min(n, k) == 0:
        return 0.0
    if min(n, k) == 1:
        return float(np.linalg.norm(a))
    if min(n, k) == 2:
        if k == 2:
            g = a.T @ a
        else:
            g = a @ a.T
        return math.sqrt(max(_sym2x2_max_eig(g[0, 0], g[0, 1], g[1, 1]), 0.0))
    if n == k and np.allclose(a, a.T, rtol=0.0, atol=1e-12 * max(1.0, float(np.abs(a).max()))):
        w = np.linalg.eigvalsh(a)
        return float(max(abs(w[0]), abs(w[-1])))
    return float(svd(a).sigma[0])


# Real quasitriangular building blocks.  A ComplexBlock packs a conjugate
# eigenvalue pair beta +- i*omega with shape parameter rho as the 2x2 matrix
# [[beta, -omega/rho], [rho*omega, beta]]; a RealBlock is the 1x1 [[beta]].


@dataclass(frozen=True)
class RealBlock:
    beta: float

    @property
    def dim(self):
        return 1

    def matrix(self):
        return np.array([[float(self.beta)]])


@dataclass(frozen=True)
class ComplexBlock:
    beta: float
    omega: float
    rho: float

    def __post_init__(self):
        _validate_complex(self.omega, self.rho)

    @property
    def dim(self):
        return 2

    def matrix(self):
        b, w, r = float(self.beta), float(self.omega), float(self.rho)
        return np.array([[b, -w / r], [r * w, b]])


def _validate_complex(omega, rho):
    if not (0.0 < rho <= 1.0):
        raise InvalidBlock("rho must lie in (0, 1], got %r" % (rho,))
    if not (omega > 0.0):
        raise InvalidBlock("omega must be positive, got %r" % (omega,))


def rotation(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def block_flow(block, t):
    """Flow map exp(t * Lambda) of a single quasitriangular block.

    For a ComplexBlock this is exp(beta t) * D_rho @ rotation(t omega) @
    D_rho^{-1}; for a RealBlock the scalar exp(beta t).
    """
    if isinstance(block, RealBlock):
        return np.array([[math.exp(block.beta * float(t))]])
    if isinstance(block, ComplexBlock):
        _validate_complex(block.omega, block.rho)
        b, w, r = float(block.beta), float(block.omega), float(block.rho)
        c = math.cos(w * t)
        s = math.sin(w * t)
        return math.exp(b * t) * np.array([[c, -s / r], [r * s, c]])
    raise InvalidBlock("unknown block type %r" % (type(block).__name__,))
