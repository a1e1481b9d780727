"""Pure numpy implementations of the hot kernels.

Used when the compiled ``_core`` extension is unavailable or when
``KFSD_PURE_PYTHON=1`` is set. Signatures and results match ``_core``.
"""

import numpy as np

# q*n*m float64 cells handled per broadcast chunk
_CHUNK_CELLS = 1 << 21


def sq_dists(X, Y, w):
    """Weighted squared distances ``sum_t w_t (X[i,t] - Y[j,t])**2``.

    Differences are formed explicitly (no Gram expansion) so identical
    curves give exactly 0.
    """
    X = np.ascontiguousarray(X, dtype=float)
    Y = np.ascontiguousarray(Y, dtype=float)
    w = np.asarray(w, dtype=float)
    q, m = X.shape
    n = Y.shape[0]
    out = np.empty((q, n))
    step = max(1, _CHUNK_CELLS // max(1, n * m))
    for start in range(0, q, step):
        diff = X[start:start + step, None, :] - Y[None, :, :]
        out[start:start + step] = np.einsum("qnm,qnm,m->qn", diff, diff, w)
    return out


def kfsd_gaussian(D2q, Kyy, sigma):
    """Gaussian-kernel KFSD of ``q`` queries from their squared distances.

    ``D2q[i, j]`` is the squared L2 distance from query i to sample curve j
    and ``Kyy`` the sample's Gaussian Gram matrix. Sample curves at exactly
    zero distance from a query are left out, and the divisor is the number
    of curves kept. Rows with nothing kept yield NaN.
    """
    D2q = np.asarray(D2q, dtype=float)
    keep = D2q > 0
    scaled = D2q / (sigma * sigma)
    kx = np.exp(-scaled)
    feat = np.sqrt(-2.0 * np.expm1(-scaled))
    with np.errstate(divide="ignore"):
        a = np.where(keep, 1.0 / np.where(keep, feat, 1.0), 0.0)
    sa = a.sum(axis=1)
    quad = np.einsum("ij,ij->i", a @ Kyy, a)
    cross = np.einsum("ij,ij->i", a, kx)
    total = sa * sa + quad - 2.0 * sa * cross
    cnt = keep.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        depth = 1.0 - np.sqrt(np.maximum(total, 0.0)) / cnt
    depth[cnt == 0] = np.nan
    return depth


def band_counts(X, Y):
    """Per query and grid point, counts of sample values strictly below/above.

    Returns two ``(q, m)`` int64 arrays ``(below, above)``.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    Ys = np.sort(Y, axis=0)
    n = Y.shape[0]
    below = np.empty(X.shape, dtype=np.int64)
    above = np.empty(X.shape, dtype=np.int64)
    for t in range(X.shape[1]):
        col = Ys[:, t]
        below[:, t] = np.searchsorted(col, X[:, t], side="left")
        above[:, t] = n - np.searchsorted(col, X[:, t], side="right")
    return below, above
