"""Pure-numpy implementation of the kernel-assembly hot loop."""

import numpy as np


def weighted_gram_dfactor(vt: np.ndarray, w: np.ndarray, d: np.ndarray) -> np.ndarray:
    """out[j,k] = d[j-k+n-1] * sum_a w[a] vt[j,a] conj(vt[k,a]).

    vt: (n, m) complex shifted-amplitude samples (rows = output grid points,
    columns = environment quadrature nodes); w: (m,) nonnegative quadrature
    weights; d: (2n-1,) decoherence factor sampled at index differences,
    Hermitian in the sense d[-r] = conj(d[r]).
    """
    a = vt * np.sqrt(w)[None, :]
    gram = a @ a.conj().T
    n = vt.shape[0]
    idx = np.arange(n)
    return gram * d[idx[:, None] - idx[None, :] + n - 1]


def banded_gram_dfactor(vt, w, d, band: int) -> np.ndarray:
    """Same as weighted_gram_dfactor, but only offsets |j-k| <= band are
    assembled; everything beyond the band is exactly zero (valid whenever the
    decoherence factor has already decayed below round-off there)."""
    n = vt.shape[0]
    a = vt * np.sqrt(w)[None, :]
    out = np.zeros((n, n), dtype=np.complex128)
    idx = np.arange(n)
    for r in range(min(band, n - 1) + 1):
        vals = np.einsum("jm,jm->j", a[: n - r], a[r:].conj())
        out[idx[: n - r], idx[: n - r] + r] = vals * d[n - 1 - r]
        if r:
            out[idx[: n - r] + r, idx[: n - r]] = np.conj(vals) * d[n - 1 + r]
    return out
