"""Pure-numpy kernels. Same signatures and results as the compiled module."""

import numpy as np

NAME = "python"

# positions in InfoQuantities.as_array()
X2Y3, X2Z, X2Z_X1, YHY3_X2, WZB, WZE, A, X1Y3_X2, X1Z, X1Z_X2, X1X2Z = range(11)

_CHUNK_CELLS = 1 << 22


def rate_grid(qa, r2, rh, tol):
    """Secrecy rate of every ``(r2[i], rh[i])``; mirrors ``evaluate_rate_point``."""
    qa = np.asarray(qa, dtype=np.float64)
    r2 = np.asarray(r2, dtype=np.float64)
    rh = np.asarray(rh, dtype=np.float64)
    x2y3, x2z, x2zx1, yh, wzb, wze, a, x1y3, x1z, x1zx2, x1x2z = qa

    gate = ((r2 > x2z + tol) & (rh > x2z + wze + tol)) | (rh - r2 > wze + tol)
    direct_ok = (r2 <= 0.0) | (r2 < x2y3 - tol)
    cf_ok = (rh < x2y3 + wzb - tol) | direct_ok
    s = np.minimum(np.minimum(a, a + yh + x2y3 - rh), a + yh + r2 - rh)
    s = np.where(direct_ok & (x1y3 > s), x1y3, s)
    feasible = cf_ok & (s > 0)

    rt = np.full(r2.shape, -np.inf)
    rt = np.where(r2 < x2z + tol, x1zx2, rt)
    nonunique = (r2 > x2z - tol) & (r2 < x2zx1 + tol)
    rt = np.where(nonunique & (x1x2z - r2 > rt), x1x2z - r2, rt)
    rt = np.where((r2 > x2zx1 - tol) & (x1z > rt), x1z, rt)

    return np.where(gate & feasible, np.maximum(s - rt, 0.0), 0.0)


def cond_typicality(a_words, b_words, g_fixed, t_fixed, n_gf, n_tf, cond):
    """Conditional-type deviation for every pair (a-word i, b-word k).

    Per position the given symbol is ``a[i, t] * n_gf + g_fixed[t]`` and the
    tested symbol is ``b[k, t] * n_tf + t_fixed[t]``. The score is the largest
    ``|N(g, t) / N(g) - cond[g, t]|`` over observed ``g``; it is ``inf`` if a
    zero-probability pair occurs.
    """
    a_words = np.asarray(a_words, dtype=np.int64)
    b_words = np.asarray(b_words, dtype=np.int64)
    cond = np.asarray(cond, dtype=np.float64)
    ma, n = a_words.shape
    mb = b_words.shape[0]
    gt, tt = cond.shape
    cells = gt * tt
    given = a_words * n_gf + np.asarray(g_fixed, dtype=np.int64)[None, :]
    tested = b_words * n_tf + np.asarray(t_fixed, dtype=np.int64)[None, :]
    impossible = cond <= 0.0
    row_dead = cond.sum(axis=1) <= 0.0

    out = np.empty((ma, mb))
    step = max(1, _CHUNK_CELLS // max(1, cells * mb))
    for lo in range(0, ma, step):
        hi = min(ma, lo + step)
        idx = given[lo:hi, None, :] * tt + tested[None, :, :]
        pair = np.arange((hi - lo) * mb).reshape(hi - lo, mb, 1) * cells
        counts = np.bincount((idx + pair).ravel(), minlength=(hi - lo) * mb * cells)
        counts = counts.reshape(hi - lo, mb, gt, tt).astype(np.float64)
        ng = counts.sum(axis=3)
        seen = ng > 0
        with np.errstate(invalid="ignore", divide="ignore"):
            freq = counts / ng[..., None]
        dev = np.where(seen[..., None], np.abs(freq - cond), 0.0).max(axis=(2, 3))
        bad = ((counts > 0) & impossible).any(axis=(2, 3)) | (seen & row_dead).any(axis=2)
        out[lo:hi] = np.where(bad, np.inf, dev)
    return out
