"""Closed-form predictions for current states and their superpositions.

These are the oracles the numerical engine is checked against. All energies
follow the conventions of :mod:`ringcurrent.ring`.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import DegeneratePairError, DomainError
from .ring import (
    RingSpec,
    WindingTarget,
    coupling_table,
    eigenenergies,
    eigenenergy,
    normalize_winding,
)


@dataclass(frozen=True)
class QslReport:
    tau_mt: float
    tau_ml: float
    tau_qsl: float
    mean_energy: float
    energy_spread: float
    ground_energy: float

    def to_dict(self) -> dict:
        return asdict(self)


def current_closed(ring: RingSpec, ell: int) -> float:
    J_nn = coupling_table(ring).J_nn
    return 2.0 * J_nn / ring.L * np.sin(2.0 * np.pi * ell / ring.L)


def contiguous_current_closed(ring: RingSpec, M: int) -> float:
    """Current of the equal-weight superposition of windings ``1..M``."""
    if not 1 <= M <= ring.L:
        raise DomainError(f"M must lie in 1..{ring.L}, got {M}")
    L = ring.L
    J_nn = coupling_table(ring).J_nn
    return (
        2.0 * J_nn / (M * L)
        * np.sin(np.pi * M / L) * np.sin(np.pi * (M + 1) / L) / np.sin(np.pi / L)
    )


def superposition_current_closed(ring: RingSpec, target: WindingTarget) -> float:
    """Total current of a winding superposition.

    Cross-winding matrix elements of the current vanish, so the result is the
    weight-averaged single-winding current. Equal-weight ``{1..M}`` targets use
    the summed closed form.
    """
    windings = target.reduced(ring.L)
    M = len(windings)
    if target.equal_weights and sorted(target.windings) == list(range(1, M + 1)):
        return contiguous_current_closed(ring, M)
    n2 = target.normalization**2
    return n2 * sum(abs(w) ** 2 * current_closed(ring, ell) for ell, w in zip(windings, target.weights))


def population_profile_closed(ring: RingSpec, M: int, j: int) -> float:
    L = ring.L
    if not 1 <= M <= L:
        raise DomainError(f"M must lie in 1..{L}, got {M}")
    if not 1 <= j <= L:
        raise DomainError(f"site {j} outside 1..{L}")
    if j == L:
        return M / L
    return np.sin(M * np.pi * j / L) ** 2 / (M * L * np.sin(np.pi * j / L) ** 2)


def _energy_degenerate(ring: RingSpec, ell: int, ell_p: int) -> bool:
    # E_l depends on l only through cos(2 pi l k / L), so l and -l coincide
    return (int(ell) + int(ell_p)) % ring.L == 0


def beat_frequency(ring: RingSpec, ell: int, ell_p: int) -> float:
    """``E_ell - E_ell'``; equivalent windings are rejected."""
    if normalize_winding(ell, ring.L) == normalize_winding(ell_p, ring.L):
        raise DegeneratePairError(f"windings {ell} and {ell_p} label the same state")
    if _energy_degenerate(ring, ell, ell_p):
        return 0.0
    return eigenenergy(ring, ell) - eigenenergy(ring, ell_p)


def two_state_population(ring: RingSpec, ell: int, ell_p: int, j, t) -> np.ndarray:
    """Site populations of ``(|ell> + |ell'>)/sqrt(2)`` after bare evolution for ``t``.

    The relative phase advances as ``+omega t`` (``omega = E_ell - E_ell'``), so
    the population peak moves from site ``L`` to ``L - n`` after
    ``2 pi n / (L omega)``. Broadcasts over ``j`` and ``t``.
    """
    omega = beat_frequency(ring, ell, ell_p)
    j = np.asarray(j, dtype=float)
    t = np.asarray(t, dtype=float)
    L = ring.L
    return (1.0 + np.cos(2.0 * np.pi * (ell_p - ell) * j / L + omega * t)) / L


def translation_time(ring: RingSpec, ell: int, ell_p: int, n: int = 1) -> float:
    """Time for the two-state population peak to move ``n`` sites."""
    omega = beat_frequency(ring, ell, ell_p)
    if _energy_degenerate(ring, ell, ell_p):
        raise DegeneratePairError(f"windings {ell}, {ell_p} are energy degenerate")
    return 2.0 * np.pi * n / (ring.L * abs(omega))


def qsl(ring: RingSpec, ell: int, ell_p: int) -> QslReport:
    E_a = eigenenergy(ring, ell)
    E_b = eigenenergy(ring, ell_p)
    omega = beat_frequency(ring, ell, ell_p)
    if _energy_degenerate(ring, ell, ell_p) or abs(omega) < 1e-12 * max(1.0, abs(E_a)):
        raise DegeneratePairError(f"windings {ell}, {ell_p} are energy degenerate")
    E0 = float(eigenenergies(ring).min())
    mean = 0.5 * (E_a + E_b)
    spread = 0.5 * abs(E_a - E_b)
    tau_mt = np.pi / abs(E_a - E_b)
    # distances from the ground level are exact zeros when a member is the ground state
    tau_ml = np.pi / ((E_a - E0) + (E_b - E0))
    return QslReport(
        tau_mt=tau_mt,
        tau_ml=tau_ml,
        tau_qsl=max(tau_mt, tau_ml),
        mean_energy=mean,
        energy_spread=spread,
        ground_energy=E0,
    )


def blob_velocity(ring: RingSpec, ell: int, ell_p: int) -> float:
    """Speed of the rigidly rotating population blob, ``L a |omega| / 2 pi``."""
    omega = beat_frequency(ring, ell, ell_p)
    if _energy_degenerate(ring, ell, ell_p):
        return 0.0
    return ring.L * ring.spacing * abs(omega) / (2.0 * np.pi)
