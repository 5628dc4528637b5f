"""Time evolution in the single-excitation sector.

Piecewise-constant control: row ``n`` of a :class:`PulseSchedule` is held on
``[n dt, (n + 1) dt)``. A schedule with ``N_T + 1`` rows therefore switches the
detunings off at ``T_targ + dt`` where ``T_targ = N_T dt``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp

from . import kernels
from .errors import CapacityError, DomainError, IntegratorAccuracyError
from .ring import (
    RingSpec,
    bare_hamiltonian,
    eigenenergies,
    is_hermitian,
    link_distance,
    plane_wave_basis,
)

NORM_TOL = 1e-10
DENSITY_TOL = 1e-12
POSITIVITY_TOL = 1e-8
ORACLE_MAX_L = 8


@dataclass(frozen=True)
class PulseSchedule:
    """Detunings ``values[n, j - 1]`` (energy) on slice ``n`` of duration ``dt``."""

    dt: float
    values: np.ndarray
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] < 2:
            raise DomainError(f"schedule needs a (N_T + 1, L) matrix with N_T >= 1, got {values.shape}")
        if not self.dt > 0:
            raise DomainError(f"slice duration must be positive, got {self.dt!r}")
        if not np.all(np.isfinite(values)):
            raise DomainError("schedule contains non-finite detunings")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "dt", float(self.dt))

    @classmethod
    def zeros(cls, n_steps: int, L: int, dt: float, **metadata) -> "PulseSchedule":
        """All-zero schedule with ``n_steps + 1`` rows."""
        return cls(dt=dt, values=np.zeros((n_steps + 1, L)), metadata=dict(metadata))

    @property
    def n_steps(self) -> int:
        return self.values.shape[0] - 1

    @property
    def n_slices(self) -> int:
        return self.values.shape[0]

    @property
    def L(self) -> int:
        return self.values.shape[1]

    @property
    def t_targ(self) -> float:
        return self.n_steps * self.dt

    @property
    def t_off(self) -> float:
        """Time at which the last pulse ends."""
        return self.n_slices * self.dt

    def with_values(self, values, **metadata) -> "PulseSchedule":
        meta = dict(self.metadata)
        meta.update(metadata)
        return PulseSchedule(dt=self.dt, values=values, metadata=meta)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    mixed: bool = False
    aux: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if times.ndim != 1 or len(times) != len(self.states):
            raise DomainError("times and states differ in length")
        if np.any(np.diff(times) <= 0):
            raise DomainError("trajectory times must be strictly increasing")
        object.__setattr__(self, "times", times)

    def __len__(self):
        return len(self.times)

    def index_of(self, t: float) -> int:
        """Index of the sample closest to ``t``."""
        return int(np.argmin(np.abs(self.times - t)))

    def densities(self) -> np.ndarray:
        if self.mixed:
            return self.states
        return np.einsum("ni,nj->nij", self.states, self.states.conj())


def check_state(psi, L: int | None = None) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1 or (L is not None and psi.shape[0] != L):
        raise DomainError(f"expected a length-{L} state vector, got shape {psi.shape}")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > NORM_TOL:
        raise DomainError(f"state is not normalized (norm {norm:.3e})")
    return psi


def check_density(rho, L: int | None = None, tol: float = DENSITY_TOL) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or (L is not None and rho.shape[0] != L):
        raise DomainError(f"expected an {L}x{L} density matrix, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise DomainError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > tol:
        raise DomainError(f"density matrix has trace {np.trace(rho).real:.12f}")
    if np.linalg.eigvalsh(rho).min() < -1e-10:
        raise DomainError("density matrix has negative eigenvalues")
    return rho


def pure_density(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def propagator(H, dt: float) -> np.ndarray:
    """``exp(-i H dt)`` for Hermitian ``H`` via its eigendecomposition."""
    H = np.asarray(H, dtype=complex)
    if not is_hermitian(H):
        raise DomainError("propagator needs a Hermitian generator")
    w, V = np.linalg.eigh(H)
    return (V * np.exp(-1j * w * dt)) @ V.conj().T


def slice_hamiltonians(ring: RingSpec, values) -> np.ndarray:
    """Stack of sector Hamiltonians, one per schedule row."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.shape[1] != ring.L:
        raise DomainError(f"schedule has {values.shape[-1]} sites, ring has {ring.L}")
    diag = 2.0 * values - values.sum(axis=1, keepdims=True)
    H = np.broadcast_to(bare_hamiltonian(ring), (len(values), ring.L, ring.L)).copy()
    idx = np.arange(ring.L)
    H[:, idx, idx] += diag
    return H


def slice_eigensystems(ring: RingSpec, values):
    """Eigenvalues ``w`` (n, L) and eigenvectors ``V`` (n, L, L) of every slice."""
    return np.linalg.eigh(slice_hamiltonians(ring, values))


def evolve_pulsed(initial, schedule: PulseSchedule, ring: RingSpec) -> Trajectory:
    """States at every slice boundary ``0, dt, ..., (N_T + 1) dt``."""
    psi0 = check_state(initial, ring.L)
    if schedule.L != ring.L:
        raise DomainError(f"schedule has {schedule.L} sites, ring has {ring.L}")
    w, V = slice_eigensystems(ring, schedule.values)
    U = kernels.unitaries(V, w, schedule.dt)
    states = kernels.forward_chain(U, psi0)
    times = schedule.dt * np.arange(schedule.n_slices + 1)
    return Trajectory(times=times, states=states)


def bare_states(psi0, ring: RingSpec, times) -> np.ndarray:
    """Rows ``exp(-i H0 t) psi0`` for every ``t``, via the analytic plane-wave eigenbasis."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    B = plane_wave_basis(ring)
    coeffs = B.conj().T @ np.asarray(psi0, dtype=complex)
    phases = np.exp(-1j * np.outer(times, eigenenergies(ring)))
    return (phases * coeffs) @ B.T


def evolve_bare(initial, ring: RingSpec, times) -> Trajectory:
    """Exact bare evolution; no time stepping."""
    psi0 = check_state(initial, ring.L)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    return Trajectory(times=times, states=bare_states(psi0, ring, times))


def evolve_schedule_then_bare(initial, schedule: PulseSchedule, ring: RingSpec, horizon: float) -> Trajectory:
    """Pulsed evolution up to switch-off, then bare evolution sampled every ``dt`` up to ``horizon``."""
    pulsed = evolve_pulsed(initial, schedule, ring)
    t_off = schedule.t_off
    n_after = int(np.floor((horizon - t_off) / schedule.dt + 1e-9))
    if n_after < 1:
        return pulsed
    offsets = schedule.dt * np.arange(1, n_after + 1)
    after = evolve_bare(pulsed.states[-1], ring, offsets)
    return Trajectory(
        times=np.concatenate([pulsed.times, t_off + offsets]),
        states=np.concatenate([pulsed.states, after.states]),
    )


def sector_liouvillian(H, gamma: float) -> np.ndarray:
    """Generator acting on row-major ``vec(rho)``.

    In the sector ``sz_j`` is diagonal with entries +-1, so each dephasing
    channel leaves populations alone and damps the two coherences that touch
    site ``j`` at rate ``2 gamma``; every coherence touches two sites, hence
    ``4 gamma`` in total.
    """
    H = np.asarray(H, dtype=complex)
    L = H.shape[0]
    eye = np.eye(L)
    gen = -1j * (np.kron(H, eye) - np.kron(eye, H.T))
    offdiag = 1.0 - eye
    gen[np.diag_indices(L * L)] -= 4.0 * gamma * offdiag.ravel()
    return gen


def _breakpoints(times, schedule: PulseSchedule | None) -> np.ndarray:
    points = [0.0, *np.asarray(times, dtype=float)]
    if schedule is not None:
        points.extend(schedule.dt * np.arange(schedule.n_slices + 1))
    points = np.unique(np.asarray(points))
    # merge points closer than rounding noise
    keep = np.concatenate([[True], np.diff(points) > 1e-12])
    return points[keep]


def _slice_at(t_mid: float, schedule: PulseSchedule | None):
    if schedule is None or t_mid >= schedule.t_off:
        return None
    return min(int(t_mid / schedule.dt), schedule.n_slices - 1)


def evolve_lindblad(initial, ring: RingSpec, gamma: float, times, schedule: PulseSchedule | None = None) -> Trajectory:
    """Pure-dephasing master equation integrated exactly over constant-H segments.

    Each segment applies ``expm(generator * length)``; segments split at slice
    boundaries and requested sample times. ``initial`` may be a state vector or
    a density matrix and refers to ``t = 0``.
    """
    if gamma < 0:
        raise DomainError(f"dephasing rate must be non-negative, got {gamma}")
    initial = np.asarray(initial, dtype=complex)
    rho = pure_density(check_state(initial, ring.L)) if initial.ndim == 1 else check_density(initial, ring.L)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0) or np.any(np.diff(times) <= 0):
        raise DomainError("sample times must be non-negative and strictly increasing")
    if schedule is not None and schedule.L != ring.L:
        raise DomainError(f"schedule has {schedule.L} sites, ring has {ring.L}")

    H0 = bare_hamiltonian(ring)
    Hs = slice_hamiltonians(ring, schedule.values) if schedule is not None else None
    generators: dict = {}
    maps: dict = {}

    def segment_map(k, length):
        key = (k, round(length, 12))
        if key not in maps:
            if k not in generators:
                generators[k] = sector_liouvillian(H0 if k is None else Hs[k], gamma)
            maps[key] = scipy.linalg.expm(generators[k] * length)
        return maps[key]

    L = ring.L
    vec = rho.ravel()
    out = np.empty((len(times), L, L), dtype=complex)
    points = _breakpoints(times, schedule)
    sample = 0
    for t0, t1 in zip(points[:-1], points[1:]):
        if sample < len(times) and abs(t0 - times[sample]) <= 1e-12:
            out[sample] = _checked(vec.reshape(L, L), t0)
            sample += 1
        if sample >= len(times):
            break
        k = _slice_at(0.5 * (t0 + t1), schedule)
        vec = segment_map(k, t1 - t0) @ vec
    if sample < len(times):
        out[sample] = _checked(vec.reshape(L, L), points[-1])
        sample += 1
    return Trajectory(times=times, states=out, mixed=True)


def _checked(rho, t):
    rho = 0.5 * (rho + rho.conj().T)
    low = np.linalg.eigvalsh(rho).min()
    if low < -POSITIVITY_TOL:
        raise IntegratorAccuracyError(f"density lost positivity at t={t:.6g} (min eigenvalue {low:.3e})")
    return rho


# --- brute-force reference in the full 2^L space -----------------------------

_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, 1j], [-1j, 0]], dtype=complex)  # local basis (down, up)
_SZ = np.array([[-1, 0], [0, 1]], dtype=complex)


def _site_operator(op, j: int, L: int) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for site in range(1, L + 1):
        out = np.kron(out, op if site == j else np.eye(2))
    return out


def full_space_operators(ring: RingSpec):
    """Full-space bare Hamiltonian, ``sz_j`` list and sector embedding indices."""
    L = ring.L
    if L > ORACLE_MAX_L:
        raise CapacityError(f"full-space oracle limited to L <= {ORACLE_MAX_L}, got {L}")
    sx = [_site_operator(_SX, j, L) for j in range(1, L + 1)]
    sy = [_site_operator(_SY, j, L) for j in range(1, L + 1)]
    sz = [_site_operator(_SZ, j, L) for j in range(1, L + 1)]
    H0 = np.zeros((2**L, 2**L), dtype=complex)
    for j in range(1, L + 1):
        for k in range(1, L + 1):
            if j != k:
                H0 += ring.C3 / link_distance(ring, j, k) ** 3 * (sx[k - 1] @ sx[j - 1] + sy[k - 1] @ sy[j - 1])
    # site 1 is the most significant bit; |j> = s+_j |down...down>
    embed = np.array([1 << (L - j) for j in range(1, L + 1)])
    return H0, sz, embed


def full_space_oracle(ring: RingSpec, schedule: PulseSchedule | None, gamma: float, times, initial=None) -> Trajectory:
    """Evolve in the full ``2^L`` space and project back onto the sector.

    Independent of the sector code paths: the Hamiltonian is assembled from
    Pauli products, unitary slices use ``scipy.linalg.expm`` and dephasing is
    integrated as an ODE. Returns sector densities; the full-space excitation
    number is stored in ``aux["excitation_number"]``.
    """
    L = ring.L
    H0, sz, embed = full_space_operators(ring)
    dim = 2**L
    if initial is None:
        initial = np.zeros(L, dtype=complex)
        initial[0] = 1.0
    initial = np.asarray(initial, dtype=complex)
    if initial.ndim == 1:
        psi = np.zeros(dim, dtype=complex)
        psi[embed] = initial
        rho = np.outer(psi, psi.conj())
    else:
        rho = np.zeros((dim, dim), dtype=complex)
        rho[np.ix_(embed, embed)] = initial
    times = np.atleast_1d(np.asarray(times, dtype=float))
    number = sum(0.5 * (z + np.eye(dim)) for z in sz)

    def hamiltonian(k):
        if k is None:
            return H0
        return H0 + sum(schedule.values[k, j] * sz[j] for j in range(L))

    def advance(rho, H, length):
        if gamma == 0:
            U = scipy.linalg.expm(-1j * H * length)
            return U @ rho @ U.conj().T

        def rhs(_, y):
            r = y.reshape(dim, dim)
            d = -1j * (H @ r - r @ H)
            for z in sz:
                d += gamma * (z @ r @ z - r)
            return d.ravel()

        sol = solve_ivp(rhs, (0.0, length), rho.ravel(), method="DOP853", rtol=1e-12, atol=1e-14)
        return sol.y[:, -1].reshape(dim, dim)

    out = np.empty((len(times), L, L), dtype=complex)
    n_exc = np.empty(len(times))
    points = _breakpoints(times, schedule)
    sample = 0
    for t0, t1 in zip(points[:-1], points[1:]):
        if sample < len(times) and abs(t0 - times[sample]) <= 1e-12:
            out[sample] = rho[np.ix_(embed, embed)]
            n_exc[sample] = np.trace(number @ rho).real
            sample += 1
        if sample >= len(times):
            break
        rho = advance(rho, hamiltonian(_slice_at(0.5 * (t0 + t1), schedule)), t1 - t0)
    if sample < len(times):
        out[sample] = rho[np.ix_(embed, embed)]
        n_exc[sample] = np.trace(number @ rho).real
    return Trajectory(times=times, states=out, mixed=True, aux={"excitation_number": n_exc})


def trace_distance(rho, sigma) -> float:
    diff = np.asarray(rho) - np.asarray(sigma)
    return 0.5 * float(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))).sum())
