"""Pure numpy versions of the propagation kernels.

Shapes: ``n`` slices, ``L`` sector dimension. All complex arrays are
``complex128``.
"""
import numpy as np


def unitaries(V, w, dt):
    """``U[n] = V[n] diag(exp(-i w[n] dt)) V[n]^dagger``."""
    phases = np.exp(-1j * w * dt)
    return np.einsum("nij,nj,nkj->nik", V, phases, V.conj())


def forward_chain(U, psi0):
    """States before each slice plus the final state, shape ``(n + 1, L)``."""
    n, L = U.shape[0], U.shape[1]
    out = np.empty((n + 1, L), dtype=complex)
    out[0] = psi0
    for k in range(n):
        out[k + 1] = U[k] @ out[k]
    return out


def backward_chain(U, target):
    """``out[n] = target`` and ``out[k] = U[k]^dagger out[k + 1]``."""
    n, L = U.shape[0], U.shape[1]
    out = np.empty((n + 1, L), dtype=complex)
    out[n] = target
    for k in range(n - 1, -1, -1):
        out[k] = U[k].conj().T @ out[k + 1]
    return out


def slice_overlaps(V, w, dt, fwd, bwd):
    """``d[k, j] = <bwd[k+1]| dU_k/dH_jj |fwd[k]>`` for a diagonal perturbation.

    The Frechet derivative of ``exp(-i H dt)`` in the eigenbasis of ``H`` is the
    divided difference ``(e^{-i a dt} - e^{-i b dt}) / (a - b)``, written here as
    ``-i dt e^{-i (a + b) dt / 2} sinc((a - b) dt / 2)`` so equal eigenvalues
    need no special case.
    """
    half = 0.5 * dt * (w[:, :, None] - w[:, None, :])
    kernel = (
        -1j * dt
        * np.exp(-0.5j * dt * (w[:, :, None] + w[:, None, :]))
        * np.sinc(half / np.pi)
    )
    n = V.shape[0]
    a = np.einsum("nji,nj->ni", V.conj(), bwd[1 : n + 1])
    b = np.einsum("nji,nj->ni", V.conj(), fwd[:n])
    M = a.conj()[:, :, None] * kernel * b[:, None, :]
    return np.einsum("nja,nab,njb->nj", V.conj(), M, V)
