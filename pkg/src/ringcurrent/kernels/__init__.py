"""Hot loops of the propagation and gradient code.

The compiled extension is used when it was built; otherwise the numpy
fallback is selected at import. Setting ``RINGCURRENT_PURE_PYTHON=1`` forces
the fallback.
"""
import os

import numpy as np

from . import _fallback

native = None
if os.environ.get("RINGCURRENT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _native as native
    except ImportError:
        native = None

_impl = native if native is not None else _fallback
BACKEND = "native" if native is not None else "python"


def unitaries(V, w, dt):
    return _impl.unitaries(np.ascontiguousarray(V, dtype=complex), np.ascontiguousarray(w, dtype=float), float(dt))


def forward_chain(U, psi0):
    return _impl.forward_chain(np.ascontiguousarray(U, dtype=complex), np.asarray(psi0, dtype=complex))


def backward_chain(U, target):
    return _impl.backward_chain(np.ascontiguousarray(U, dtype=complex), np.asarray(target, dtype=complex))


def slice_overlaps(V, w, dt, fwd, bwd):
    return _impl.slice_overlaps(
        np.ascontiguousarray(V, dtype=complex),
        np.ascontiguousarray(w, dtype=float),
        float(dt),
        np.ascontiguousarray(fwd, dtype=complex),
        np.ascontiguousarray(bwd, dtype=complex),
    )


__all__ = ["BACKEND", "native", "unitaries", "forward_chain", "backward_chain", "slice_overlaps"]
