"""Backend selection for the kernel-assembly hot loop.

Prefers the compiled Cython extension when it imported cleanly; falls back to
the numpy implementation otherwise. Set CONJDECO_PURE_PYTHON=1 to force the
fallback (used by the backend-agreement tests and the benchmark).
"""

import os

import numpy as np

from . import _kernel_fallback

if os.environ.get("CONJDECO_PURE_PYTHON"):
    _compiled = None
else:
    try:
        from . import _kernel_core as _compiled
    except ImportError:
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "numpy"


def _prep(vt, w, d):
    return (
        np.ascontiguousarray(vt, dtype=np.complex128),
        np.ascontiguousarray(w, dtype=np.float64),
        np.ascontiguousarray(d, dtype=np.complex128),
    )


def _module(backend: str | None):
    use = backend or BACKEND
    if use == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernel backend is not available")
        return _compiled
    return _kernel_fallback


def weighted_gram_dfactor(vt, w, d, backend: str | None = None) -> np.ndarray:
    """out[j,k] = d[j-k+n-1] * sum_a w[a] vt[j,a] conj(vt[k,a])."""
    vt, w, d = _prep(vt, w, d)
    return _module(backend).weighted_gram_dfactor(vt, w, d)


def banded_gram_dfactor(vt, w, d, band: int, backend: str | None = None) -> np.ndarray:
    """Banded variant: offsets beyond |j-k| > band are exactly zero."""
    vt, w, d = _prep(vt, w, d)
    return _module(backend).banded_gram_dfactor(vt, w, d, int(band))


def assemble(vt, w, d, backend: str | None = None, zero_tol: float = 1e-18) -> np.ndarray:
    """Dispatch between dense and banded assembly based on the reach of d."""
    vt, w, d = _prep(vt, w, d)
    n = vt.shape[0]
    mags = np.abs(d)
    live = np.nonzero(mags > zero_tol * max(mags.max(), 1.0))[0]
    band = int(max(abs(live - (n - 1)))) if live.size else 0
    if band + 1 < n // 3:
        return _module(backend).banded_gram_dfactor(vt, w, d, band)
    return _module(backend).weighted_gram_dfactor(vt, w, d)
