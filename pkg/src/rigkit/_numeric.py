"""Small numerical helpers shared across modules."""

import numpy as np


def row_logsumexp(a):
    """Row-wise log-sum-exp of a 2-D array; overwrites ``a``.

    Rows that are entirely ``-inf`` give ``-inf``.
    """
    k = a.shape[1]
    if k <= 16:
        # numpy reduces short rows slowly; go column by column instead
        top = a[:, 0].copy()
        for j in range(1, k):
            np.maximum(top, a[:, j], out=top)
    else:
        top = a.max(axis=1)
    top[~np.isfinite(top)] = 0.0
    a -= top[:, None]
    np.exp(a, out=a)
    with np.errstate(divide="ignore"):
        return np.log(a @ np.ones(k)) + top
