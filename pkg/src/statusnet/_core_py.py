"""Pure numpy versions of the hot kernels.

Semantics match ``statusnet._core`` exactly; only the summation order inside
log-sum-exp may differ, so results agree to ~1e-15.
"""

import numpy as np

__all__ = ["list_triangles", "lbp_iterate"]


def list_triangles(indptr, indices):
    """Closed triangles as an ``(C, 3)`` int64 array, rows ``u < v < w``, sorted."""
    n = len(indptr) - 1
    out = []
    for u in range(n):
        nu = indices[indptr[u]:indptr[u + 1]]
        hi = nu[nu > u]
        for v in hi:
            nv = indices[indptr[v]:indptr[v + 1]]
            common = np.intersect1d(hi, nv[nv > v], assume_unique=True)
            for w in common:
                out.append((u, v, w))
    if not out:
        return np.zeros((0, 3), dtype=np.int64)
    return np.asarray(out, dtype=np.int64)


def _lse(a, axis):
    m = np.max(a, axis=axis, keepdims=True)
    s = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    return np.squeeze(s, axis=axis)


def lbp_iterate(tri, unary, logpot, msgs, max_iters, damping, tol):
    """Run synchronous damped sum-product sweeps in log space.

    ``msgs[c, j, y]`` is the log message from triangle ``c`` to its ``j``-th
    variable and is updated in place. ``logpot`` holds 8 log-potentials indexed
    by ``(y0 << 2) | (y1 << 1) | y2``.

    Returns ``(iterations, max_residual, bad_factor)``; ``bad_factor`` is the
    first triangle whose update was not finite, or -1.
    """
    n = unary.shape[0]
    n_tri = tri.shape[0]
    if n_tri == 0:
        return 1, 0.0, -1
    pot = np.asarray(logpot, dtype=np.float64).reshape(2, 2, 2)
    flat_idx = tri.ravel()
    residual = np.inf
    it = 0
    for it in range(1, max_iters + 1):
        flat = msgs.reshape(n_tri * 3, 2)
        total = unary.copy()
        total[:, 0] += np.bincount(flat_idx, weights=flat[:, 0], minlength=n)
        total[:, 1] += np.bincount(flat_idx, weights=flat[:, 1], minlength=n)
        mu = total[tri] - msgs
        m0, m1, m2 = mu[:, 0], mu[:, 1], mu[:, 2]
        new = np.empty_like(msgs)
        new[:, 0] = _lse(
            (pot[None] + m1[:, None, :, None] + m2[:, None, None, :]).reshape(n_tri, 2, 4), 2
        )
        new[:, 1] = _lse(
            (pot[None].transpose(0, 2, 1, 3) + m0[:, None, :, None] + m2[:, None, None, :]).reshape(
                n_tri, 2, 4
            ),
            2,
        )
        new[:, 2] = _lse(
            (pot[None].transpose(0, 3, 1, 2) + m0[:, None, :, None] + m1[:, None, None, :]).reshape(
                n_tri, 2, 4
            ),
            2,
        )
        new -= _lse(new, 2)[..., None]
        diff = np.abs(new - msgs)
        bad = ~np.isfinite(diff).all(axis=(1, 2))
        if bad.any():
            return it, float("nan"), int(np.flatnonzero(bad)[0])
        residual = float(diff.max())
        if damping > 0.0:
            new = damping * msgs + (1.0 - damping) * new
            new -= _lse(new, 2)[..., None]
        msgs[...] = new
        if residual < tol:
            break
    return it, residual, -1
