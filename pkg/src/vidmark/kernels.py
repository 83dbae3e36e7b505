"""Hot numeric kernels with a numba path and a pure-numpy path.

The numba path is used when numba imports cleanly and the environment
variable ``VIDMARK_NO_NUMBA`` is unset (or ``0``).  Both paths are always
importable under explicit names (``*_numba`` / ``*_numpy``) so tests and the
benchmark can compare them directly.
"""
import os

import numpy as np

_FLAG = os.environ.get("VIDMARK_NO_NUMBA", "").strip().lower()

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _FLAG in ("", "0", "false", "no")


# ---------------------------------------------------------------------------
# valid-mode convolution down the columns of a 2-D array


def convolve_columns_numpy(x, h):
    m = h.shape[0]
    rows = x.shape[0] - m + 1
    out = np.zeros((rows, x.shape[1]), dtype=np.float64)
    for k in range(m):
        out += h[k] * x[m - 1 - k:m - 1 - k + rows]
    return out


def _convolve_columns_py(x, h):
    m = h.shape[0]
    rows = x.shape[0] - m + 1
    cols = x.shape[1]
    out = np.zeros((rows, cols), dtype=np.float64)
    for i in range(rows):
        for k in range(m):
            hk = h[k]
            src = i + m - 1 - k
            for j in range(cols):
                out[i, j] += hk * x[src, j]
    return out


# ---------------------------------------------------------------------------
# one-sided (Hestenes) Jacobi rotations


def _rotation(alpha, beta, gamma):
    zeta = (beta - alpha) / (2.0 * gamma)
    sgn = 1.0 if zeta >= 0.0 else -1.0
    t = sgn / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
    c = 1.0 / np.sqrt(1.0 + t * t)
    return c, c * t


def _jacobi_sweeps_py(w, v, tol, max_sweeps):
    m, n = w.shape
    # columns below this squared norm are roundoff and are not rotated
    total = 0.0
    for i in range(m):
        for j in range(n):
            total += w[i, j] * w[i, j]
    floor = total * (m * 2.220446049250313e-16) ** 2
    for sweep in range(max_sweeps):
        rotated = 0
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = 0.0
                beta = 0.0
                gamma = 0.0
                for i in range(m):
                    alpha += w[i, p] * w[i, p]
                    beta += w[i, q] * w[i, q]
                    gamma += w[i, p] * w[i, q]
                if abs(gamma) <= tol * np.sqrt(alpha * beta) or gamma == 0.0:
                    continue
                if alpha <= floor or beta <= floor:
                    continue
                rotated += 1
                zeta = (beta - alpha) / (2.0 * gamma)
                sgn = 1.0 if zeta >= 0.0 else -1.0
                t = sgn / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                for i in range(m):
                    a = w[i, p]
                    b = w[i, q]
                    w[i, p] = c * a - s * b
                    w[i, q] = s * a + c * b
                for i in range(v.shape[0]):
                    a = v[i, p]
                    b = v[i, q]
                    v[i, p] = c * a - s * b
                    v[i, q] = s * a + c * b
        if rotated == 0:
            return sweep + 1
    return -1


def _round_robin(n):
    """Disjoint column pairings covering every (p, q) once per sweep."""
    players = list(range(n)) + ([-1] if n % 2 else [])
    size = len(players)
    rounds = []
    for _ in range(size - 1):
        ps, qs = [], []
        for i in range(size // 2):
            a, b = players[i], players[size - 1 - i]
            if a >= 0 and b >= 0:
                ps.append(min(a, b))
                qs.append(max(a, b))
        rounds.append((np.array(ps, dtype=np.intp), np.array(qs, dtype=np.intp)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def jacobi_sweeps_numpy(w, v, tol, max_sweeps):
    """Round-robin ordering: every round rotates n/2 disjoint pairs at once."""
    m, n = w.shape
    rounds = _round_robin(n)
    floor = float(np.sum(w * w)) * (m * np.finfo(np.float64).eps) ** 2
    for sweep in range(max_sweeps):
        rotated = 0
        for ps, qs in rounds:
            if ps.size == 0:
                continue
            up = w[:, ps]
            uq = w[:, qs]
            alpha = np.einsum("ij,ij->j", up, up)
            beta = np.einsum("ij,ij->j", uq, uq)
            gamma = np.einsum("ij,ij->j", up, uq)
            active = ((np.abs(gamma) > tol * np.sqrt(alpha * beta)) & (gamma != 0.0)
                      & (alpha > floor) & (beta > floor))
            if not active.any():
                continue
            rotated += int(active.sum())
            g = np.where(active, gamma, 1.0)
            zeta = (beta - alpha) / (2.0 * g)
            sgn = np.where(zeta >= 0.0, 1.0, -1.0)
            t = sgn / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            c = np.where(active, 1.0 / np.sqrt(1.0 + t * t), 1.0)
            s = np.where(active, c * t, 0.0)
            w[:, ps] = c * up - s * uq
            w[:, qs] = s * up + c * uq
            vp = v[:, ps]
            vq = v[:, qs]
            v[:, ps] = c * vp - s * vq
            v[:, qs] = s * vp + c * vq
        if rotated == 0:
            return sweep + 1
    return -1


# ---------------------------------------------------------------------------
# bilinear sampling with edge clamping


def bilinear_sample_numpy(plane, ys, xs):
    h, w = plane.shape
    ys = np.clip(ys, 0.0, h - 1.0)
    xs = np.clip(xs, 0.0, w - 1.0)
    y0 = np.minimum(np.floor(ys).astype(np.intp), h - 1)
    x0 = np.minimum(np.floor(xs).astype(np.intp), w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = ys - y0
    fx = xs - x0
    top = plane[y0, x0] * (1.0 - fx) + plane[y0, x1] * fx
    bottom = plane[y1, x0] * (1.0 - fx) + plane[y1, x1] * fx
    return top * (1.0 - fy) + bottom * fy


def _bilinear_sample_py(plane, ys, xs):
    h, w = plane.shape
    out = np.empty(ys.shape, dtype=np.float64)
    fy_all = ys.ravel()
    fx_all = xs.ravel()
    flat = out.ravel()
    for k in range(fy_all.shape[0]):
        y = min(max(fy_all[k], 0.0), h - 1.0)
        x = min(max(fx_all[k], 0.0), w - 1.0)
        y0 = min(int(np.floor(y)), h - 1)
        x0 = min(int(np.floor(x)), w - 1)
        y1 = min(y0 + 1, h - 1)
        x1 = min(x0 + 1, w - 1)
        fy = y - y0
        fx = x - x0
        top = plane[y0, x0] * (1.0 - fx) + plane[y0, x1] * fx
        bottom = plane[y1, x0] * (1.0 - fx) + plane[y1, x1] * fx
        flat[k] = top * (1.0 - fy) + bottom * fy
    return flat.reshape(ys.shape)


if HAVE_NUMBA:
    convolve_columns_numba = numba.njit(cache=True, nogil=True)(_convolve_columns_py)
    jacobi_sweeps_numba = numba.njit(cache=True, nogil=True)(_jacobi_sweeps_py)
    _bilinear_numba = numba.njit(cache=True, nogil=True)(_bilinear_sample_py)

    def bilinear_sample_numba(plane, ys, xs):
        ys = np.ascontiguousarray(ys, dtype=np.float64)
        xs = np.ascontiguousarray(xs, dtype=np.float64)
        return _bilinear_numba(np.ascontiguousarray(plane, dtype=np.float64), ys, xs)
else:  # pragma: no cover
    convolve_columns_numba = None
    jacobi_sweeps_numba = None
    bilinear_sample_numba = None


def convolve_columns(x, h):
    """Valid-mode convolution of every column of ``x`` with ``h``.

    ``out[i] = sum_k h[k] * x[i + len(h) - 1 - k]``, so the output has
    ``x.shape[0] - len(h) + 1`` rows.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    h = np.ascontiguousarray(h, dtype=np.float64)
    if USE_NUMBA:
        return convolve_columns_numba(x, h)
    return convolve_columns_numpy(x, h)


def jacobi_sweeps(w, v, tol, max_sweeps):
    """Orthogonalise the columns of ``w`` in place, accumulating rotations in ``v``.

    Returns the number of sweeps used, or -1 if ``max_sweeps`` was exhausted.
    """
    if USE_NUMBA:
        return jacobi_sweeps_numba(w, v, tol, max_sweeps)
    return jacobi_sweeps_numpy(w, v, tol, max_sweeps)


def bilinear_sample(plane, ys, xs):
    """Sample ``plane`` at fractional (row, col) positions, clamping at the edges."""
    if USE_NUMBA:
        return bilinear_sample_numba(plane, ys, xs)
    return bilinear_sample_numpy(np.asarray(plane, dtype=np.float64), ys, xs)


def backend():
    return "numba" if USE_NUMBA else "numpy"
