"""Singular value decomposition for sub-band sized real matrices.

The full decomposition is one-sided Jacobi: columns of a working copy of
``A`` are rotated pairwise until mutually orthogonal, at which point their
norms are the singular values.  ``leading_singular_value`` is a cheaper
power iteration on ``AᵀA`` for callers that need only σ₁.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels

MAX_SWEEPS = 60
POWER_TOL = 1e-10
POWER_MAX_ITER = 10_000


class SvdError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class SvdResult:
    u: np.ndarray
    s: np.ndarray
    v: np.ndarray

    def reconstruct(self):
        return (self.u * self.s) @ self.v.T


def _check(a):
    a = np.array(a, dtype=np.float64, copy=True)
    if a.ndim != 2 or min(a.shape) < 1:
        raise SvdError(f"expected a non-empty 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise SvdError("matrix contains non-finite entries")
    return a


def _orthonormalize(u, keep):
    """Re-orthogonalise kept columns in order and complete the dropped ones.

    Small singular values leave their Jacobi columns with absolute errors of
    order eps·σ₁, so a Gram-Schmidt pass is needed to hold ``UᵀU = I``.
    """
    m, k = u.shape
    candidates = iter(np.eye(m))
    for j in range(k):
        while True:
            x = u[:, j].copy() if keep[j] else next(candidates)
            for _ in range(2):
                x -= u[:, :j] @ (u[:, :j].T @ x)
            norm = np.linalg.norm(x)
            if keep[j] or norm > 1e-8:
                break
        u[:, j] = x / norm
    return u


def decompose(a) -> SvdResult:
    """Thin SVD ``A = U diag(s) Vᵀ`` with ``s`` descending.

    Each column of ``U`` is sign-normalised so its largest-magnitude entry is
    positive (the matching ``V`` column flips with it).
    """
    a = _check(a)
    transposed = a.shape[0] < a.shape[1]
    if transposed:
        a = a.T.copy()
    m, n = a.shape
    w = np.ascontiguousarray(a)
    v = np.eye(n)
    tol = max(m, 1) * np.finfo(np.float64).eps
    if kernels.jacobi_sweeps(w, v, tol, MAX_SWEEPS) < 0:
        raise ConvergenceError(f"Jacobi SVD did not converge in {MAX_SWEEPS} sweeps")

    s = np.linalg.norm(w, axis=0)
    order = np.argsort(-s, kind="stable")
    s = s[order]
    w = w[:, order]
    v = v[:, order]

    keep = s > s[0] * m * np.finfo(np.float64).eps * 4 if s[0] > 0 else np.zeros(n, bool)
    u = np.zeros((m, n))
    u[:, keep] = w[:, keep] / s[keep]
    u = _orthonormalize(u, keep)

    if transposed:
        u, v = v, u
    pivots = np.argmax(np.abs(u), axis=0)
    signs = np.where(u[pivots, np.arange(n)] < 0, -1.0, 1.0)
    u = u * signs
    v = v * signs
    return SvdResult(u=u, s=s, v=v)


def singular_values(a):
    return decompose(a).s


def leading_singular_value(a, tol=POWER_TOL, max_iter=POWER_MAX_ITER):
    """σ₁ of ``a`` by power iteration on the Gram operator ``AᵀA``.

    Stops once the eigen-residual ``‖AᵀAv − λv‖`` falls below ``tol·λ``.
    Raises ConvergenceError when ``max_iter`` is hit first.
    """
    a = _check(a)
    scale = float(np.abs(a).max())
    if scale == 0.0:
        return 0.0
    # unit max-abs keeps the Gram products clear of underflow and overflow
    a = a / scale
    n = a.shape[1]
    # fixed pseudo-random start: a structured vector such as all-ones can be
    # exactly orthogonal to the leading singular vector of integer matrices
    v = np.random.default_rng(0x5EED).standard_normal(n)
    v /= np.linalg.norm(v)
    g = a.T @ (a @ v)
    if not np.any(g):
        # start vector sits in the null space; seed from the dominant column
        v = np.zeros(n)
        v[np.argmax(np.einsum("ij,ij->j", a, a))] = 1.0
        g = a.T @ (a @ v)
    for _ in range(max_iter):
        lam = float(v @ g)
        if np.linalg.norm(g - lam * v) <= tol * lam:
            return float(np.sqrt(lam)) * scale
        v = g / np.linalg.norm(g)
        g = a.T @ (a @ v)
    raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations")
