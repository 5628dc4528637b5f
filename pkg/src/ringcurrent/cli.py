"""Command-line pipelines: optimize, analytics, sweep and population-movie.

Settings are resolved in three layers: built-in defaults, then the YAML file
given by ``--config``, then command-line flags. Energies are in units of
``J_nn`` and times in ``1/J_nn`` everywhere; ``--jnn-mhz`` only adds an SI
conversion record to the manifest.

Exit codes: 0 success, 2 configuration error, 3 optimizer did not converge,
4 numerical integrity failure.
"""
from __future__ import annotations

import argparse
import copy
import math
import sys
import time
from pathlib import Path

import numpy as np
import yaml

from . import analytics, grape, io, observables, robustness
from .errors import CapacityError, DomainError, IntegratorAccuracyError, NonFiniteGradientError
from .evolve import PulseSchedule, evolve_schedule_then_bare
from .ring import RingSpec, WindingTarget, eigenenergies, localized_state, superposition_state

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NOT_CONVERGED = 3
EXIT_NUMERICAL = 4

SWEEP_KINDS = ("disorder", "dephasing", "target_time", "dt")

DEFAULTS = {
    "ring": {"L": 8, "R": 1.0, "C3": None},
    "target": {"windings": [1], "weights": None},
    "initial_site": 1,
    "timing": {"T_targ": 1.0, "dt": 0.01},
    "grape": {},
    "noise": {"W": 1.0, "n_realizations": 100, "rng_seed": 0},
    "dephasing": {"gamma": 0.05},
    "sweep": {"kind": None, "grid": []},
    "outputs": {"dir": "out", "format": "csv"},
    "horizon": None,
    "schedule": None,
    "workers": 1,
    "jnn_mhz": None,
}


class ConfigError(Exception):
    pass


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def load_config(path=None, overrides=None) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                data = yaml.safe_load(fh) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a mapping")
        unknown = set(data) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = _merge(cfg, data)
    return _merge(cfg, overrides or {})


class Experiment:
    """Validated view of a config mapping."""

    def __init__(self, cfg: dict):
        self.cfg = cfg
        try:
            r = cfg["ring"]
            L = int(r["L"])
            if r.get("C3") is None:
                self.ring = RingSpec.unit_hopping(L, R=float(r.get("R", 1.0)))
            else:
                self.ring = RingSpec(L=L, R=float(r["R"]), C3=float(r["C3"]))
            t = cfg["target"]
            weights = t.get("weights")
            if weights is not None:
                weights = [complex(w) if not isinstance(w, (list, tuple)) else complex(*w) for w in weights]
            self.target = WindingTarget(windings=tuple(int(w) for w in t["windings"]), weights=weights)
            self.target.reduced(L)
            self.T = float(cfg["timing"]["T_targ"])
            self.dt = float(cfg["timing"]["dt"])
            if not (self.T > 0 and self.dt > 0):
                raise ConfigError("T_targ and dt must be positive")
            ratio = self.T / self.dt
            if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
                raise ConfigError(f"T_targ/dt = {ratio} is not an integer")
            self.n_steps = int(round(ratio))
            self.grape = grape.GrapeConfig.from_dict(cfg.get("grape") or {})
            self.initial = localized_state(self.ring, int(cfg.get("initial_site", 1)))
            self.horizon = float(cfg["horizon"]) if cfg.get("horizon") is not None else 3.0 * self.T
            fmt = cfg["outputs"]["format"]
            if fmt not in ("csv", "json"):
                raise ConfigError(f"unknown output format {fmt!r}")
            self.format = fmt
            self.out = Path(cfg["outputs"]["dir"])
            self.workers = int(cfg.get("workers", 1))
        except ConfigError:
            raise
        except (DomainError, KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config: {exc}") from exc

    def seeds(self) -> dict:
        return {"grape": self.grape.rng_seed, "noise": int(self.cfg["noise"].get("rng_seed", 0))}

    def units(self) -> dict | None:
        f = self.cfg.get("jnn_mhz")
        if f is None:
            return None
        # J_nn / h in MHz; hbar = 1 time unit is 1 / (2 pi f) microseconds
        return {"J_nn_MHz": float(f), "time_unit_us": 1.0 / (2.0 * math.pi * float(f))}


class Writer:
    """Collects output files so the manifest can digest them."""

    def __init__(self, out: Path, fmt: str):
        self.out = out
        self.fmt = fmt
        self.files: list = []
        self.wall_times: dict = {}
        out.mkdir(parents=True, exist_ok=True)

    def text(self, name: str, text: str):
        io.write_text(self.out / name, text)
        self.files.append(name)

    def json(self, name: str, obj):
        self.text(name, io.dumps_json(obj))

    def matrix(self, stem: str, times, matrix, columns):
        if self.fmt == "csv":
            self.text(f"{stem}.csv", io.matrix_csv(times, matrix, columns))
        else:
            self.text(f"{stem}.json", io.matrix_json(times, matrix, columns))

    def series(self, series: observables.ObservableSeries):
        if self.fmt == "csv":
            self.text(f"{series.name}.csv", series.to_csv())
        else:
            self.text(f"{series.name}.json", series.to_json() + "\n")

    def table(self, stem: str, header, rows):
        rows = [list(r) for r in rows]
        if self.fmt == "csv":
            self.text(f"{stem}.csv", io.table_csv(header, rows))
        else:
            self.json(f"{stem}.json", {"columns": list(header), "rows": rows})

    def manifest(self, exp: Experiment, wall: float, failures=None, extra=None):
        extra = dict(extra or {})
        if self.wall_times:
            extra["stage_wall_times"] = self.wall_times
        units = exp.units()
        if units:
            extra["units"] = units
        manifest = io.build_manifest(self.out, self.files, exp.cfg, exp.seeds(), wall, failures, extra)
        io.write_text(self.out / "manifest.json", io.dumps_json(manifest))
        return manifest


def _site_columns(L):
    return [f"P{j}" for j in range(1, L + 1)]


def _obtain_schedule(exp: Experiment, writer: Writer | None = None):
    """Load ``schedule`` from the config if given, otherwise optimize one."""
    path = exp.cfg.get("schedule")
    if path:
        schedule = io.load_schedule(path)
        if schedule.L != exp.ring.L:
            raise ConfigError(f"schedule at {path} has L={schedule.L}, ring has L={exp.ring.L}")
        return schedule, None
    report = grape.optimize(exp.ring, exp.initial, exp.target, exp.n_steps, exp.dt, exp.grape)
    if writer is not None:
        writer.text("schedule.json", io.dumps_json(io.schedule_to_dict(report.final_schedule)))
        # wall time goes to the manifest so the report stays reproducible
        record = report.to_dict()
        writer.wall_times["optimize"] = record.pop("wall_time")
        writer.json("report.json", record)
    return report.final_schedule, report


def cmd_optimize(exp: Experiment) -> int:
    start = time.perf_counter()
    w = Writer(exp.out, exp.format)
    schedule, report = _obtain_schedule(exp, w)
    traj = evolve_schedule_then_bare(exp.initial, schedule, exp.ring, exp.horizon)
    tgt = superposition_state(exp.ring, exp.target)
    F = np.abs(traj.states @ tgt.conj()) ** 2
    I = np.array([observables.total_current(s, exp.ring) for s in traj.states])
    P = np.abs(traj.states) ** 2
    w.series(observables.ObservableSeries("fidelity", traj.times, F))
    w.series(observables.ObservableSeries("current", traj.times, I))
    w.matrix("populations", traj.times, P, _site_columns(exp.ring.L))
    w.matrix("schedule_heatmap", schedule.dt * np.arange(schedule.n_slices), schedule.values, [f"D{j}" for j in range(1, exp.ring.L + 1)])
    summary = {
        "fidelity_at_T_targ": float(F[traj.index_of(schedule.t_targ)]),
        "fidelity_at_switch_off": float(F[traj.index_of(schedule.t_off)]),
        "current_at_switch_off": float(I[traj.index_of(schedule.t_off)]),
        "T_targ": schedule.t_targ,
        "t_switch_off": schedule.t_off,
    }
    w.json("summary.json", summary)
    w.manifest(exp, time.perf_counter() - start, extra={"summary": summary})
    if report is not None and not report.converged:
        print(f"optimizer stopped at fidelity {report.final_fidelity:.6f} without converging", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def analytics_record(ring: RingSpec, target: WindingTarget) -> dict:
    L = ring.L
    windings = [int(x) for x in target.reduced(L)]
    rec = {
        "L": L,
        "J_nn": ring.J_nn,
        "windings": windings,
        "eigenenergies": {str(l): float(e) for l, e in zip(range(1, L + 1), eigenenergies(ring))},
        "currents": {str(l): analytics.current_closed(ring, l) for l in windings},
        "superposition_current": analytics.superposition_current_closed(ring, target),
    }
    M = len(windings)
    if target.equal_weights and sorted(windings) == list(range(1, M + 1)):
        rec["population_profile"] = [analytics.population_profile_closed(ring, M, j) for j in range(1, L + 1)]
    pairs = {}
    for i, a in enumerate(windings):
        for b in windings[i + 1:]:
            entry = {"omega": analytics.beat_frequency(ring, a, b), "blob_velocity": analytics.blob_velocity(ring, a, b)}
            try:
                entry["qsl"] = analytics.qsl(ring, a, b).to_dict()
                entry["one_site_translation_time"] = analytics.translation_time(ring, a, b)
            except DomainError as exc:
                entry["qsl"] = None
                entry["note"] = str(exc)
            pairs[f"{a},{b}"] = entry
    rec["pairs"] = pairs
    return rec


def cmd_analytics(exp: Experiment) -> int:
    start = time.perf_counter()
    w = Writer(exp.out, exp.format)
    rec = analytics_record(exp.ring, exp.target)
    w.json("analytics.json", rec)
    w.manifest(exp, time.perf_counter() - start)
    sys.stdout.write(io.dumps_json(rec))
    return EXIT_OK


def _grid_label(x) -> str:
    return f"{float(x):g}"


def cmd_sweep(exp: Experiment) -> int:
    start = time.perf_counter()
    sweep = exp.cfg.get("sweep") or {}
    kind = sweep.get("kind")
    grid = list(sweep.get("grid") or [])
    if kind not in SWEEP_KINDS:
        raise ConfigError(f"sweep kind must be one of {SWEEP_KINDS}, got {kind!r}")
    if not grid:
        raise ConfigError("sweep grid is empty")
    w = Writer(exp.out, exp.format)
    failures = []
    results = []

    def attempt(value, func):
        try:
            results.append((value, func(value)))
        except (DomainError, IntegratorAccuracyError, NonFiniteGradientError, CapacityError) as exc:
            failures.append({"grid_value": value, "error": type(exc).__name__, "message": str(exc)})

    if kind in ("disorder", "dephasing"):
        schedule, _ = _obtain_schedule(exp, w)
    if kind == "disorder":
        noise = exp.cfg["noise"]
        base = robustness.NoiseModel(W=0.0, n_realizations=int(noise["n_realizations"]), rng_seed=int(noise["rng_seed"]))
        for W in grid:
            attempt(float(W), lambda W: robustness.disorder_average(
                exp.ring, schedule, exp.initial, exp.target,
                robustness.NoiseModel(W=W, n_realizations=base.n_realizations, rng_seed=base.rng_seed),
                workers=exp.workers,
            ))
        if results:
            cols = [f"W={_grid_label(v)}" for v, _ in results]
            times = results[0][1].times
            w.matrix("disorder_mean_fidelity_vs_W", times, np.column_stack([r.mean_fidelity for _, r in results]), cols)
            w.matrix("disorder_std_error_vs_W", times, np.column_stack([r.std_error for _, r in results]), cols)
            w.table("disorder_at_target_vs_W", ["W", "mean_fidelity", "std_error"],
                    [(v, r.mean_at_target, r.se_at_target) for v, r in results])
    elif kind == "dephasing":
        for g in grid:
            attempt(float(g), lambda g: robustness.dephasing_run(
                exp.ring, schedule, exp.initial, exp.target, g, exp.horizon))
        if results:
            cols = [f"gamma={_grid_label(v)}" for v, _ in results]
            times = results[0][1].current.times
            w.matrix("dephasing_current_vs_gamma", times, np.column_stack([r.current.values for _, r in results]), cols)
            w.matrix("dephasing_fidelity_vs_gamma", times, np.column_stack([r.fidelity.values for _, r in results]), cols)
            rows = []
            for v, r in results:
                try:
                    rate = robustness.fit_decay_rate(_abs_series(r.current), schedule.t_off)
                except DomainError:
                    rate = float("nan")
                rows.append((v, rate))
            w.table("dephasing_decay_rate_vs_gamma", ["gamma", "fitted_rate"], rows)
    elif kind == "target_time":
        for T in grid:
            attempt(float(T), lambda T: grape.optimize(
                exp.ring, exp.initial, exp.target, max(1, int(round(T / exp.dt))), exp.dt, exp.grape))
        w.table("target_time_fidelity_vs_T", ["T_targ", "final_fidelity", "iterations", "converged"],
                [(v, r.final_fidelity, r.iterations_used, int(r.converged)) for v, r in results])
    else:
        for n in grid:
            n = int(n)
            attempt(n, lambda n: grape.optimize(exp.ring, exp.initial, exp.target, n, exp.T / n, exp.grape))
        w.table("dt_fidelity_vs_N_T", ["N_T", "dt", "final_fidelity", "iterations", "converged"],
                [(v, exp.T / v, r.final_fidelity, r.iterations_used, int(r.converged)) for v, r in results])
    w.manifest(exp, time.perf_counter() - start, failures=failures, extra={"sweep": {"kind": kind, "grid": grid}})
    return EXIT_OK


def _abs_series(series):
    return observables.ObservableSeries(series.name, series.times, np.abs(series.values))


def cmd_population_movie(exp: Experiment) -> int:
    start = time.perf_counter()
    w = Writer(exp.out, exp.format)
    schedule, _ = _obtain_schedule(exp, w)
    traj = evolve_schedule_then_bare(exp.initial, schedule, exp.ring, exp.horizon)
    P = np.abs(traj.states) ** 2
    w.matrix("population_movie", traj.times, P, _site_columns(exp.ring.L))
    after = traj.times >= schedule.t_off - 1e-12
    peaks = [observables.count_peaks(p) for p in P[after]]
    argmax = [int(np.argmax(p)) + 1 for p in P[after]]
    w.table("peak_tracking", ["time", "n_peaks", "argmax_site"], zip(traj.times[after], peaks, argmax))
    w.manifest(exp, time.perf_counter() - start)
    return EXIT_OK


COMMANDS = {
    "optimize": cmd_optimize,
    "analytics": cmd_analytics,
    "sweep": cmd_sweep,
    "population-movie": cmd_population_movie,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ringcurrent", description="Current-state preparation on dipolar Rydberg rings.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="YAML config file")
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--seed", type=int, help="seed for optimizer init and noise")
        p.add_argument("--format", choices=("csv", "json"), help="tabular output format")
        p.add_argument("--horizon", type=float, help="last sample time in 1/J_nn (default 3 T_targ)")
        p.add_argument("--jnn-mhz", type=float, help="J_nn/h in MHz for the SI conversion record")
        if name == "sweep":
            p.add_argument("--kind", choices=SWEEP_KINDS)
            p.add_argument("--grid", type=float, nargs="+")
    return parser


def _overrides(args) -> dict:
    o: dict = {}
    if args.out is not None:
        o["outputs"] = {"dir": str(args.out)}
    if args.format is not None:
        o.setdefault("outputs", {})["format"] = args.format
    if args.seed is not None:
        o["grape"] = {"rng_seed": args.seed}
        o["noise"] = {"rng_seed": args.seed}
    if args.horizon is not None:
        o["horizon"] = args.horizon
    if args.jnn_mhz is not None:
        o["jnn_mhz"] = args.jnn_mhz
    if getattr(args, "kind", None) is not None:
        o.setdefault("sweep", {})["kind"] = args.kind
    if getattr(args, "grid", None):
        o.setdefault("sweep", {})["grid"] = args.grid
    return o


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        exp = Experiment(load_config(args.config, _overrides(args)))
        return COMMANDS[args.command](exp)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegratorAccuracyError, NonFiniteGradientError, CapacityError) as exc:
        print(f"numerical integrity failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
