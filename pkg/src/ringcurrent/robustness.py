"""Ensemble studies: detuning noise, pure dephasing and decay-rate fits.

Noise realizations come from a Philox counter-based generator keyed by
``(seed, realization_index)``, so an ensemble is identical whether it is run
serially or spread over threads.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DomainError
from .evolve import PulseSchedule, check_state, evolve_lindblad, slice_eigensystems, bare_states
from .grape import _target_state
from .observables import ObservableSeries, total_current, uhlmann_fidelity
from .ring import RingSpec


@dataclass(frozen=True)
class NoiseModel:
    W: float
    n_realizations: int = 100
    rng_seed: int = 0

    def __post_init__(self):
        if not self.W >= 0:
            raise DomainError(f"disorder strength must be non-negative, got {self.W}")
        if self.n_realizations < 1:
            raise DomainError("need at least one realization")


@dataclass(frozen=True)
class DephasingModel:
    gamma: float

    def __post_init__(self):
        if not self.gamma >= 0:
            raise DomainError(f"dephasing rate must be non-negative, got {self.gamma}")


@dataclass
class DisorderResult:
    W: float
    times: np.ndarray
    mean_fidelity: np.ndarray
    std_error: np.ndarray
    t_eval: float
    mean_at_target: float
    se_at_target: float


@dataclass
class DephasingResult:
    gamma: float
    current: ObservableSeries
    fidelity: ObservableSeries


def realization_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(index)])))


def perturb_schedule(schedule: PulseSchedule, noise: NoiseModel, realization_index: int) -> PulseSchedule:
    """Add i.i.d. uniform ``[-W, W]`` offsets to every (slice, site) entry."""
    if not 0 <= realization_index < noise.n_realizations:
        raise DomainError(f"realization {realization_index} outside 0..{noise.n_realizations - 1}")
    if noise.W == 0:
        return schedule
    eps = realization_rng(noise.rng_seed, realization_index).uniform(-noise.W, noise.W, size=schedule.values.shape)
    return schedule.with_values(schedule.values + eps, noise_W=noise.W, realization=realization_index)


def _fidelity_trace(values, dt, ring, psi0, target) -> np.ndarray:
    w, V = slice_eigensystems(ring, values)
    states = kernels.forward_chain(kernels.unitaries(V, w, dt), psi0)
    return np.abs(states @ target.conj()) ** 2


def disorder_average(
    ring: RingSpec,
    schedule: PulseSchedule,
    initial,
    target,
    noise: NoiseModel,
    workers: int = 1,
) -> DisorderResult:
    """Fidelity to ``target`` averaged over noisy copies of ``schedule``.

    Fidelities are sampled at every slice boundary up to switch-off; the
    reported target-time value is the one at ``t_off = T_targ + dt``.
    """
    psi0 = check_state(initial, ring.L)
    tgt = _target_state(ring, target)

    def one(index):
        noisy = perturb_schedule(schedule, noise, index)
        return _fidelity_trace(noisy.values, schedule.dt, ring, psi0, tgt)

    indices = range(noise.n_realizations)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            traces = list(pool.map(one, indices))
    else:
        traces = [one(i) for i in indices]
    # realizations on the contiguous axis so the reduction is pairwise and order-fixed
    F = np.ascontiguousarray(np.array(traces).T)
    n = noise.n_realizations
    # shift by the first realization so identical samples average exactly
    dev = F - F[:, :1]
    mean = F[:, 0] + dev.sum(axis=1) / n
    if n > 1:
        se = np.sqrt(((dev - (mean - F[:, 0])[:, None]) ** 2).sum(axis=1) / (n - 1) / n)
    else:
        se = np.zeros_like(mean)
    times = schedule.dt * np.arange(schedule.n_slices + 1)
    return DisorderResult(
        W=noise.W,
        times=times,
        mean_fidelity=mean,
        std_error=se,
        t_eval=schedule.t_off,
        mean_at_target=float(mean[-1]),
        se_at_target=float(se[-1]),
    )


def disorder_sweep(
    ring: RingSpec,
    schedule: PulseSchedule,
    initial,
    target,
    W_list,
    noise_base: NoiseModel,
    workers: int = 1,
) -> list:
    """One :class:`DisorderResult` per disorder strength, sharing seed and ensemble size."""
    return [
        disorder_average(
            ring, schedule, initial, target,
            NoiseModel(W=float(W), n_realizations=noise_base.n_realizations, rng_seed=noise_base.rng_seed),
            workers=workers,
        )
        for W in W_list
    ]


def dephasing_run(
    ring: RingSpec,
    schedule: PulseSchedule,
    initial,
    target,
    gamma: float,
    horizon: float,
    sample_dt: float | None = None,
) -> DephasingResult:
    """Lindblad evolution under ``schedule`` then bare dynamics, with current and fidelity series."""
    tgt = _target_state(ring, target)
    step = schedule.dt if sample_dt is None else sample_dt
    times = step * np.arange(int(np.floor(horizon / step + 1e-9)) + 1)
    traj = evolve_lindblad(initial, ring, gamma, times, schedule=schedule)
    current = np.array([total_current(rho, ring) for rho in traj.states])
    fid = np.array([uhlmann_fidelity(rho, tgt) for rho in traj.states])
    return DephasingResult(
        gamma=gamma,
        current=ObservableSeries("current", times, current),
        fidelity=ObservableSeries("fidelity", times, fid),
    )


def dephasing_sweep(ring, schedule, initial, target, gamma_list, horizon: float, sample_dt=None, workers: int = 1) -> list:
    def one(gamma):
        return dephasing_run(ring, schedule, initial, target, float(gamma), horizon, sample_dt)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, gamma_list))
    return [one(g) for g in gamma_list]


def fit_decay_rate(series: ObservableSeries, t_start: float) -> float:
    """Least-squares exponential decay rate of a positive series from ``t_start`` on."""
    mask = series.times >= t_start - 1e-12
    t = series.times[mask]
    y = series.values[mask]
    if len(t) < 2:
        raise DomainError("need at least two samples after t_start")
    bad = np.flatnonzero(y <= 0)
    if bad.size:
        i = bad[0]
        raise DomainError(f"series is non-positive at t={t[i]:.6g} (value {y[i]:.3e})")
    slope = np.polyfit(t, np.log(y), 1)[0]
    return float(-slope)


def oscillation_amplitude(series: ObservableSeries, t_start: float) -> float:
    """Peak-to-peak spread of a series after ``t_start``."""
    v = series.values[series.times >= t_start - 1e-12]
    return float(v.max() - v.min())


def post_target_bare_fidelity(ring, final_state, target, times) -> np.ndarray:
    """Fidelity to ``target`` of ``final_state`` evolved under the bare Hamiltonian."""
    tgt = _target_state(ring, target)
    return np.abs(bare_states(final_state, ring, times) @ tgt.conj()) ** 2
