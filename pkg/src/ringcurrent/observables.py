"""Read-out layer: populations, currents, correlators, phases and fidelities.

Every function accepts either a sector state vector or a sector density
matrix. Pure states are internally turned into ``rho_{ab} = psi_a psi_b^*``,
so ``<s+_i s-_k> = rho_{ki}``.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, IndeterminatePhaseError
from .evolve import Trajectory, bare_states, pure_density
from .ring import RingSpec, WindingTarget, coupling_table, current_operator, superposition_state

IMAG_TOL = 1e-12
PSD_TOL = 1e-8


@dataclass(frozen=True)
class ObservableSeries:
    name: str
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.shape != values.shape:
            raise DomainError("times and values differ in length")
        if np.any(np.diff(times) <= 0):
            raise DomainError("series times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["time", "value"])
        for t, v in zip(self.times, self.values):
            writer.writerow([repr(float(t)), repr(float(v))])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {"name": self.name, "times": self.times.tolist(), "values": self.values.tolist()},
            sort_keys=True,
        )

    @classmethod
    def from_csv(cls, text: str, name: str = "") -> "ObservableSeries":
        rows = list(csv.reader(io.StringIO(text)))
        if rows[0] != ["time", "value"]:
            raise DomainError(f"unexpected header {rows[0]}")
        data = np.array([[float(a), float(b)] for a, b in rows[1:]])
        return cls(name=name, times=data[:, 0], values=data[:, 1])


@dataclass(frozen=True)
class ErrorMetrics:
    times: np.ndarray
    population_error: np.ndarray  # (n_t, L), site j in column j - 1
    current_error: np.ndarray  # (n_t, L), bond (j, j + 1) in column j - 1


def _as_density(state) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        return pure_density(state)
    if state.ndim == 2 and state.shape[0] == state.shape[1]:
        return state
    raise DomainError(f"expected a state vector or density matrix, got shape {state.shape}")


def _real(value, what: str) -> float:
    if abs(np.imag(value)) > IMAG_TOL * max(1.0, abs(value)):
        raise DomainError(f"{what} has imaginary part {np.imag(value):.3e}")
    return float(np.real(value))


def populations(state) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        return np.abs(state) ** 2
    return np.real(np.diag(state)).copy()


def total_current(state, ring: RingSpec) -> float:
    rho = _as_density(state)
    return _real(np.trace(rho @ current_operator(ring)), "current")


def local_currents(state, ring: RingSpec) -> np.ndarray:
    """Bond currents ``-i J_nn <s+_j s-_{j+1} - h.c.>`` for ``j = 1..L`` (ring wrap)."""
    rho = _as_density(state)
    J_nn = coupling_table(ring).J_nn
    L = ring.L
    j = np.arange(L)
    nxt = (j + 1) % L
    # <s+_j s-_{j+1}> = rho[j+1, j]
    return 2.0 * J_nn * np.imag(rho[nxt, j])


def local_current(state, ring: RingSpec, j: int) -> float:
    if not 1 <= j <= ring.L:
        raise DomainError(f"bond {j} outside 1..{ring.L}")
    return float(local_currents(state, ring)[j - 1])


def pair_correlator(state, j: int, k: int, axes: str = "xx") -> float:
    """``<s^a_j s^b_k>`` for ``a, b`` in ``x, y, z`` evaluated inside the sector.

    Mixed ``z``/transverse products change the excitation number and vanish.
    """
    rho = _as_density(state)
    L = rho.shape[0]
    if j == k:
        raise DomainError("pair correlator needs two distinct sites")
    if not (1 <= j <= L and 1 <= k <= L):
        raise DomainError(f"sites {j}, {k} outside 1..{L}")
    if len(axes) != 2 or any(a not in "xyz" for a in axes):
        raise DomainError(f"axes must be two of x, y, z, got {axes!r}")
    a, b = axes
    p, q = j - 1, k - 1
    if a == "z" and b == "z":
        return float(1.0 - 2.0 * (rho[p, p].real + rho[q, q].real))
    if "z" in axes:
        return 0.0
    # in the sector s^a_j s^b_k keeps only s+_j s-_k and s-_j s+_k terms
    hop = rho[q, p]  # <s+_j s-_k>
    if a == b:
        return float(2.0 * hop.real)
    sign = 1.0 if a == "y" else -1.0
    return float(sign * 2.0 * hop.imag)


def reconstruct_phases(state, min_population: float = 1e-9) -> np.ndarray:
    """Site phases from nearest-neighbour ``xx`` and ``yx`` correlators.

    ``<sx_j sx_{j+1}>`` fixes the cosine of the bond phase, ``<sy_j sx_{j+1}>``
    its sine, so ``atan2`` resolves the branch. The gauge sets ``phi_L = 0``;
    output lies in ``[0, 2 pi)``.
    """
    state = np.asarray(state, dtype=complex)
    P = populations(state)
    L = len(P)
    for j in range(L):
        nxt = (j + 1) % L
        if P[j] <= min_population or P[nxt] <= min_population:
            raise IndeterminatePhaseError(f"bond ({j + 1}, {nxt + 1}) has vanishing population")
    bond = np.empty(L)
    for j in range(1, L + 1):
        k = j % L + 1
        c = pair_correlator(state, j, k, "xx")
        s = pair_correlator(state, j, k, "yx")
        bond[j - 1] = np.arctan2(s, c)  # phi_{j+1} - phi_j
    phases = np.empty(L)
    phases[L - 1] = 0.0
    # walk backwards from the gauge site using bonds j -> j + 1
    for j in range(L - 1, 0, -1):
        phases[j - 1] = phases[j] - bond[j - 1]
    return np.mod(phases, 2 * np.pi)


def superposition_phases_closed(ring: RingSpec, target: WindingTarget) -> np.ndarray:
    """Phase pattern of a winding superposition from the arctangent of its amplitude sum."""
    amp = superposition_state(ring, target)
    phases = np.arctan2(amp.imag, amp.real)
    return np.mod(phases - phases[-1], 2 * np.pi)


def _psd_sqrt(rho, what: str) -> np.ndarray:
    w, V = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    if w.min() < -PSD_TOL:
        raise DomainError(f"{what} is not positive semidefinite (min eigenvalue {w.min():.3e})")
    # round-off eigenvalues would turn into ~1e-8 noise under the square root
    w = np.where(w > 1e-14 * max(w.max(), 1.0), w, 0.0)
    return (V * np.sqrt(w)) @ V.conj().T


def uhlmann_fidelity(rho, sigma) -> float:
    """``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2``; a vector ``sigma`` uses ``<psi|rho|psi>``.

    The trace equals the nuclear norm of ``sqrt(rho) sqrt(sigma)``, which is
    evaluated from singular values to avoid a third square root.
    """
    rho = _as_density(rho)
    sigma = np.asarray(sigma, dtype=complex)
    if sigma.ndim == 1:
        return float(min(max(np.vdot(sigma, rho @ sigma).real, 0.0), 1.0))
    a = _psd_sqrt(rho, "first argument")
    b = _psd_sqrt(sigma, "second argument")
    value = np.linalg.svd(a @ b, compute_uv=False).sum() ** 2
    return float(min(max(value, 0.0), 1.0))


def series(trajectory: Trajectory, name: str, func) -> ObservableSeries:
    """Apply ``func(state)`` to every sample of a trajectory."""
    return ObservableSeries(name=name, times=trajectory.times, values=np.array([func(s) for s in trajectory.states]))


def count_peaks(profile, rel_height: float = 0.5) -> int:
    """Number of strict local maxima on the ring above ``rel_height * max``."""
    p = np.asarray(profile, dtype=float)
    left, right = np.roll(p, 1), np.roll(p, -1)
    peaks = (p > left) & (p >= right) & (p >= rel_height * p.max())
    return int(peaks.sum())


def error_metrics(trajectory: Trajectory, ring: RingSpec, target, t_ref: float) -> ErrorMetrics:
    """Local population and current errors against the ideal reference.

    The reference holds the target state fixed until ``t_ref`` (the switch-off
    time) and evolves it under the bare Hamiltonian afterwards.
    """
    times = trajectory.times
    if not times[0] <= t_ref <= times[-1] + 1e-12:
        raise DomainError(f"trajectory does not cover t_ref={t_ref}")
    psi_t = superposition_state(ring, target) if isinstance(target, WindingTarget) else np.asarray(target, dtype=complex)
    ideal = bare_states(psi_t, ring, np.clip(times - t_ref, 0.0, None))
    dP = np.empty((len(times), ring.L))
    dI = np.empty((len(times), ring.L))
    for n, state in enumerate(trajectory.states):
        dP[n] = np.abs(populations(state) - populations(ideal[n]))
        dI[n] = np.abs(local_currents(state, ring) - local_currents(ideal[n], ring))
    return ErrorMetrics(times=times, population_error=dP, current_error=dI)
