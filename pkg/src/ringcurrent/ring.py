"""Dipolar XY ring restricted to the single-excitation sector.

Sites are labelled ``1..L`` in every public function; arrays are indexed
``0..L-1`` internally, so amplitude ``psi[j - 1]`` belongs to site ``j``.
Sector basis vector ``|j>`` has the excitation on site ``j``.

Energies are in whatever units ``C3 / R**3`` carries; :meth:`RingSpec.unit_hopping`
returns a ring whose nearest-neighbour hopping ``J_nn`` is exactly 1 so that
energies read in units of ``J_nn`` and times in units of ``1/J_nn``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class RingSpec:
    L: int
    R: float = 1.0
    C3: float = 1.0

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 3:
            raise DomainError(f"ring needs an integer L >= 3, got {self.L!r}")
        if not self.R > 0:
            raise DomainError(f"ring radius must be positive, got {self.R!r}")
        if not self.C3 > 0:
            raise DomainError(f"C3 must be positive, got {self.C3!r}")
        object.__setattr__(self, "L", int(self.L))

    @classmethod
    def unit_hopping(cls, L: int, R: float = 1.0) -> "RingSpec":
        """Ring of radius ``R`` with ``C3`` chosen so that ``J_nn == 1``."""
        a = 2.0 * R * np.sin(np.pi / L)
        return cls(L=L, R=R, C3=a**3)

    @property
    def spacing(self) -> float:
        """Nearest-neighbour distance ``2 R sin(pi / L)``."""
        return 2.0 * self.R * np.sin(np.pi / self.L)

    @property
    def J_nn(self) -> float:
        return self.C3 / self.spacing**3

    def to_dict(self) -> dict:
        return {"L": self.L, "R": self.R, "C3": self.C3}


@dataclass(frozen=True)
class CouplingTable:
    """Couplings ``J_k = C3 / d_k**3`` for link distances ``k = 1..floor(L/2)``."""

    L: int
    J: tuple
    J_nn: float

    def coupling(self, k: int) -> float:
        """Coupling across ``k`` links; ``k`` and ``L - k`` are the same bond length."""
        k = abs(int(k)) % self.L
        if k == 0:
            raise DomainError("no coupling for a zero link distance")
        return self.J[min(k, self.L - k) - 1]


@dataclass(frozen=True)
class WindingTarget:
    """Superposition of current states with windings ``windings``.

    ``weights`` defaults to equal real weights; the normalization constant is
    derived so the resulting state has unit norm.
    """

    windings: tuple
    weights: tuple | None = None
    _norm: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        windings = tuple(int(w) for w in self.windings)
        if not windings:
            raise DomainError("a winding target needs at least one winding number")
        object.__setattr__(self, "windings", windings)
        if self.weights is None:
            weights = (1.0 + 0j,) * len(windings)
        else:
            weights = tuple(complex(w) for w in self.weights)
            if len(weights) != len(windings):
                raise DomainError("weights and windings differ in length")
        object.__setattr__(self, "weights", weights)
        total = sum(abs(w) ** 2 for w in weights)
        if total == 0:
            raise DomainError("all superposition weights are zero")
        object.__setattr__(self, "_norm", 1.0 / np.sqrt(total))

    @property
    def normalization(self) -> float:
        return self._norm

    @property
    def equal_weights(self) -> bool:
        return all(w == self.weights[0] for w in self.weights)

    def reduced(self, L: int) -> tuple:
        """Windings mapped onto ``1..L``; raises if two coincide."""
        reduced = tuple(normalize_winding(w, L) for w in self.windings)
        if len(set(reduced)) != len(reduced):
            raise DomainError(f"windings {self.windings} are not distinct modulo L={L}")
        return reduced


def normalize_winding(ell: int, L: int) -> int:
    """Representative of ``ell`` modulo ``L`` in ``1..L``."""
    return (int(ell) - 1) % L + 1


def _check_site(ring: RingSpec, j: int, name: str = "site") -> None:
    if not 1 <= j <= ring.L:
        raise DomainError(f"{name} {j} outside 1..{ring.L}")


def link_distance(ring: RingSpec, j: int, k: int) -> float:
    _check_site(ring, j)
    _check_site(ring, k)
    if j == k:
        raise DomainError("link distance needs two distinct sites")
    return 2.0 * ring.R * np.sin(np.pi * abs(j - k) / ring.L)


def coupling_table(ring: RingSpec) -> CouplingTable:
    values = tuple(
        ring.C3 / link_distance(ring, 1, 1 + k) ** 3 for k in range(1, ring.L // 2 + 1)
    )
    return CouplingTable(L=ring.L, J=values, J_nn=values[0])


def ring_index(ring: RingSpec, j: int, k: int) -> int:
    """Site reached from ``j`` after ``k`` signed hops, wrapping around the ring."""
    _check_site(ring, j)
    return (j + k - 1) % ring.L + 1


def bare_hamiltonian(ring: RingSpec) -> np.ndarray:
    """Sector matrix of the dipolar XY Hamiltonian.

    Each ordered pair contributes ``J (sx sx + sy sy)``, which in the sector is
    ``2 J`` hopping; summing both orders gives ``4 J`` per matrix element.
    """
    table = coupling_table(ring)
    L = ring.L
    H = np.zeros((L, L), dtype=complex)
    for j in range(L):
        for k in range(L):
            if j != k:
                H[j, k] = 4.0 * table.coupling(k - j)
    return H


def detuned_hamiltonian(ring: RingSpec, detunings: Sequence[float]) -> np.ndarray:
    """Bare Hamiltonian plus ``sum_j Delta_j sz_j`` restricted to the sector.

    ``sz_j`` is +1 on the excited site and -1 elsewhere, so the diagonal gains
    ``2 Delta_j - sum(Delta)``.
    """
    delta = np.asarray(detunings, dtype=float)
    if delta.shape != (ring.L,):
        raise DomainError(f"expected {ring.L} detunings, got shape {delta.shape}")
    if not np.all(np.isfinite(delta)):
        raise DomainError("detunings must be finite")
    H = bare_hamiltonian(ring)
    H[np.diag_indices(ring.L)] += 2.0 * delta - delta.sum()
    return H


def current_operator(ring: RingSpec) -> np.ndarray:
    """Nearest-neighbour current ``-i J_nn / L sum_j (s+_j s-_{j+1} - h.c.)``."""
    L = ring.L
    amp = coupling_table(ring).J_nn / L
    op = np.zeros((L, L), dtype=complex)
    for j in range(L):
        nxt = (j + 1) % L
        op[j, nxt] += -1j * amp
        op[nxt, j] += 1j * amp
    return op


def current_state(ring: RingSpec, ell: int) -> np.ndarray:
    j = np.arange(1, ring.L + 1)
    ell = normalize_winding(ell, ring.L)
    return np.exp(2j * np.pi * ell * j / ring.L) / np.sqrt(ring.L)


def localized_state(ring: RingSpec, j: int = 1) -> np.ndarray:
    _check_site(ring, j)
    psi = np.zeros(ring.L, dtype=complex)
    psi[j - 1] = 1.0
    return psi


def superposition_state(ring: RingSpec, target: WindingTarget) -> np.ndarray:
    psi = np.zeros(ring.L, dtype=complex)
    for ell, w in zip(target.reduced(ring.L), target.weights):
        psi += w * current_state(ring, ell)
    return target.normalization * psi


def _primed_offsets(L: int) -> range:
    """Link offsets covered by the parity-dependent primed sum, zero excluded later."""
    if L % 2 == 0:
        return range(-L // 2 + 1, L // 2 + 1)
    return range(-(L // 2), L // 2 + 1)


def eigenenergy(ring: RingSpec, ell: int) -> float:
    """Energy of ``current_state(ell)``: ``4 sum'_k J_|k| cos(2 pi ell k / L)``."""
    table = coupling_table(ring)
    L = ring.L
    return 4.0 * sum(
        table.coupling(k) * np.cos(2.0 * np.pi * ell * k / L)
        for k in _primed_offsets(L)
        if k != 0
    )


def eigenenergies(ring: RingSpec) -> np.ndarray:
    """``E_ell`` for ``ell = 1..L``."""
    return np.array([eigenenergy(ring, ell) for ell in range(1, ring.L + 1)])


def plane_wave_basis(ring: RingSpec) -> np.ndarray:
    """Columns are ``current_state(ell)`` for ``ell = 1..L``."""
    return np.stack([current_state(ring, ell) for ell in range(1, ring.L + 1)], axis=1)


def is_hermitian(op: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return bool(np.max(np.abs(op - op.conj().T)) < tol)
