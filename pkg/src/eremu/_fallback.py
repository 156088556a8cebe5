"""Pure-numpy versions of the compiled routines in ``_core``."""

import numpy as np


def _sqdist(x, y):
    diff = x[:, None, :] - y[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def gaussian_mmd(a, b, bandwidths):
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    bw = np.asarray(bandwidths, dtype=np.float64)
    neg_inv = -1.0 / (2.0 * bw * bw)
    sq_aa, sq_ab, sq_bb = _sqdist(a, a), _sqdist(a, b), _sqdist(b, b)
    na, nb = float(a.shape[0]), float(b.shape[0])
    out = np.empty(bw.shape[0])
    for u, c in enumerate(neg_inv):
        out[u] = (
            np.exp(sq_aa * c).sum() / (na * na)
            - 2.0 * np.exp(sq_ab * c).sum() / (na * nb)
            + np.exp(sq_bb * c).sum() / (nb * nb)
        )
    return out
