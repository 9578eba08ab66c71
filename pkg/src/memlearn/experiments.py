"""Scenario runners producing the data behind each experiment family.

Every realization draws from its own RNG stream derived from the base seed
and a key (network size, realization index), so results do not depend on
worker count or completion order.
"""
from __future__ import annotations

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import device
from .device import BMS, DeviceRecord, Params
from .network import NetworkDims, build_network, histogram_from, perturb, shuffle_devices
from .trainer import (
    RunRecord,
    TargetMap,
    TrainerConfig,
    compute_error,
    enumerate_maps,
    random_map,
    train_until_learned,
    training_step,
)

BASELINE = "baseline"
RANDOM_POLARITY = "random-polarity"
EQUAL_R = "equal-R-random-vwrite"
VARIANTS = (BASELINE, RANDOM_POLARITY, EQUAL_R)

# maps a-f used for sequential learning on 4x4 networks; schedule revisits a
SEQUENTIAL_MAPS_4 = {
    "a": TargetMap((0, 1, 2, 3)),
    "b": TargetMap((1, 2, 3, 0)),
    "c": TargetMap((3, 2, 1, 0)),
    "d": TargetMap((1, 0, 3, 2)),
    "e": TargetMap((0, 0, 2, 2)),
    "f": TargetMap((2, 3, 0, 1)),
}
SEQUENTIAL_SCHEDULE_4 = ("a", "b", "c", "d", "e", "f", "a")

# six maps for the 6x6 toy network
TOY_MAPS_6 = {
    "a": TargetMap((0, 1, 2, 3, 4, 5)),
    "b": TargetMap((5, 4, 3, 2, 1, 0)),
    "c": TargetMap((1, 2, 3, 4, 5, 0)),
    "d": TargetMap((1, 0, 3, 2, 5, 4)),
    "e": TargetMap((3, 4, 5, 0, 1, 2)),
    "f": TargetMap((0, 0, 2, 2, 4, 4)),
}


def realization_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key)))


def _map_jobs(fn, jobs: list, workers: int) -> list:
    if workers <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


# --- success sweeps ----------------------------------------------------------

@dataclass
class SweepSpec:
    model: str = BMS
    grid: Sequence[tuple] = ((3, 3, 20), (3, 3, 100), (3, 3, 400))
    realizations: int = 100
    seed: int = 0
    max_steps: int = 1000
    variant: str = BASELINE
    config: Optional[TrainerConfig] = None
    workers: int = 1

    def __post_init__(self):
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.variant == EQUAL_R and self.model != BMS:
            raise ValueError("the equal-R variant is defined for BMS devices only")
        self.grid = [tuple(int(v) for v in g) for g in self.grid]

    def trainer_config(self) -> TrainerConfig:
        cfg = self.config or TrainerConfig.for_model(self.model)
        cfg = dataclasses.replace(cfg, max_training_steps=self.max_steps)
        if self.variant == EQUAL_R and cfg.v_write_range is None:
            cfg = dataclasses.replace(cfg, v_write_range=(0.15, 0.3))
        return cfg


@dataclass
class GridPoint:
    """Outcome of all realizations at one (n_in, n_out, n_bulk).

    ``learned_at`` holds the step at which each realization learned, or -1.
    """

    n_in: int
    n_out: int
    n_bulk: int
    learned_at: np.ndarray
    max_steps: int
    final_mean_r: np.ndarray
    final_std_r: np.ndarray

    @property
    def realizations(self) -> int:
        return len(self.learned_at)

    @property
    def curve(self) -> np.ndarray:
        """Fraction learned at or before step s, for s = 1..max_steps."""
        steps = np.arange(1, self.max_steps + 1)
        la = self.learned_at[self.learned_at > 0]
        return np.searchsorted(np.sort(la), steps, side="right") / self.realizations

    @property
    def success(self) -> float:
        return float(np.mean((self.learned_at > 0) & (self.learned_at <= self.max_steps)))

    @property
    def sem(self) -> float:
        return sem(self.success, self.realizations)

    def steps_to(self, fraction: float) -> Optional[int]:
        """First step at which the success curve reaches ``fraction``."""
        hit = np.flatnonzero(self.curve >= fraction)
        return int(hit[0]) + 1 if hit.size else None


def sem(p, n: int):
    return np.sqrt(np.asarray(p) * (1 - np.asarray(p)) / n)


@dataclass
class SweepResult:
    spec: SweepSpec
    points: list

    def point(self, n_bulk: int, n_in: Optional[int] = None, n_out: Optional[int] = None) -> GridPoint:
        for p in self.points:
            if p.n_bulk == n_bulk and n_in in (None, p.n_in) and n_out in (None, p.n_out):
                return p
        raise KeyError(n_bulk)


def _sweep_job(job):
    spec, (n_in, n_out, n_bulk), r = job
    rng = realization_rng(spec.seed, n_in, n_out, n_bulk, r)
    net = build_network(
        NetworkDims(n_in, n_bulk, n_out),
        spec.model,
        rng,
        random_polarity=spec.variant == RANDOM_POLARITY,
        initial_resistance=100.0 if spec.variant == EQUAL_R else None,
    )
    target = random_map(n_in, n_out, rng)
    rec = train_until_learned(net, target, spec.trainer_config(), rng)
    res = net.all_resistances()
    return rec.learned_at or -1, res.mean(), res.std()


def run_success_sweep(spec: SweepSpec) -> SweepResult:
    """Fresh network and random map per realization, trained up to the step cap."""
    jobs = [(spec, g, r) for g in spec.grid for r in range(spec.realizations)]
    out = _map_jobs(_sweep_job, jobs, spec.workers)
    points = []
    for gi, (n_in, n_out, n_bulk) in enumerate(spec.grid):
        chunk = np.array(out[gi * spec.realizations : (gi + 1) * spec.realizations])
        points.append(GridPoint(n_in, n_out, n_bulk, chunk[:, 0].astype(int), spec.max_steps,
                                chunk[:, 1], chunk[:, 2]))
    return SweepResult(spec, points)


def run_variants(spec: SweepSpec, variant: Optional[str] = None) -> SweepResult:
    """Success sweep with one of the construction variants applied."""
    if variant is not None:
        spec = dataclasses.replace(spec, variant=variant)
    return run_success_sweep(spec)


# --- sequential maps ---------------------------------------------------------

@dataclass
class SequentialTrace:
    labels: list
    errors: list = field(default_factory=list)
    map_index: list = field(default_factory=list)
    learned_at: list = field(default_factory=list)

    @property
    def switch_steps(self) -> list:
        """Global step index (1-based) of the first step spent on each map."""
        idx = np.asarray(self.map_index)
        return [int(np.flatnonzero(idx == m)[0]) + 1 for m in range(len(self.labels)) if np.any(idx == m)]


def run_sequential_maps(dims: NetworkDims, maps: Sequence[TargetMap], cfg: TrainerConfig,
                        seed: int, model: str = BMS,
                        labels: Optional[Sequence[str]] = None) -> SequentialTrace:
    """Train one evolving network on each map in turn until its error hits zero."""
    rng = realization_rng(seed, dims.n_in, dims.n_out, dims.n_bulk)
    net = build_network(dims, model, rng)
    trace = SequentialTrace(list(labels) if labels else [m.label() for m in maps])
    offset = 0
    for m, target in enumerate(maps):
        rec = train_until_learned(net, target, cfg, rng)
        trace.errors.extend(int(e) for e in rec.errors)
        trace.map_index.extend([m] * len(rec.steps))
        trace.learned_at.append(None if rec.learned_at is None else offset + rec.learned_at)
        offset += len(rec.steps)
    return trace


# --- perturbation recovery ---------------------------------------------------

@dataclass
class PerturbationEvent:
    step: int
    error_after: int
    recovered: bool
    recovery_steps: Optional[int]


@dataclass
class PerturbationTrace:
    errors: list = field(default_factory=list)
    learned_at: Optional[int] = None
    events: list = field(default_factory=list)

    @property
    def recovered_fraction(self) -> float:
        return float(np.mean([e.recovered for e in self.events])) if self.events else 1.0


def _continue_training(net, target, cfg, rng, steps: int) -> list:
    errors = []
    for _ in range(steps):
        training_step(net, target, cfg, rng)
        errors.append(compute_error(net, target, cfg, rng))
    return errors


def run_perturbation(dims: NetworkDims, cfg: TrainerConfig, period: int, fraction: float,
                     factor: float, seed: int, events: int, model: str = BMS,
                     target: Optional[TargetMap] = None) -> PerturbationTrace:
    """Learn a map, then alternate ``period`` training steps with a resistance perturbation.

    An event counts as recovered when the error is zero right after the
    perturbation or at some step of the following period. One extra period
    is run after the last event so it can be scored too.
    """
    if period < 1:
        raise ValueError("period must be >= 1")
    target = target or TargetMap.identity(dims.n_in)
    rng = realization_rng(seed, dims.n_in, dims.n_out, dims.n_bulk)
    net = build_network(dims, model, rng)
    rec = train_until_learned(net, target, cfg, rng)
    trace = PerturbationTrace(errors=[int(e) for e in rec.errors], learned_at=rec.learned_at)
    pending = None
    for _ in range(events + 1):
        window = _continue_training(net, target, cfg, rng, period)
        if pending is not None:
            zero = [s for s, e in enumerate(window, 1) if e == 0]
            if pending.error_after == 0:
                pending.recovered, pending.recovery_steps = True, 0
            elif zero:
                pending.recovered, pending.recovery_steps = True, zero[0]
            trace.events.append(pending)
        trace.errors.extend(window)
        if len(trace.events) == events:
            break
        perturb(net, fraction, factor, rng)
        pending = PerturbationEvent(len(trace.errors), compute_error(net, target, cfg, rng), False, None)
    return trace


# --- shuffle / relearn -------------------------------------------------------

@dataclass
class RelearnResult:
    """Resistance statistics against the number of maps learned.

    ``mean_r`` and ``cv`` are averaged over realizations and indexed by the
    number of maps learned so far (index 0 is the fresh network).
    ``histograms`` maps a checkpoint count to raw and mean-normalised
    histograms, with counts averaged over realizations.
    """

    maps_per_pass: int
    mean_r: np.ndarray
    cv: np.ndarray
    mean_r_runs: np.ndarray
    cv_runs: np.ndarray
    histograms: dict
    failures: int
    mean_decreases: int

    @property
    def maps_learned(self) -> np.ndarray:
        return np.arange(len(self.mean_r))


def _relearn_job(job):
    dims, model, cfg, cycles, seed, r, checkpoints, map_order, carry = job
    rng = realization_rng(seed, dims.n_in, dims.n_out, dims.n_bulk, r)
    net = build_network(dims, model, rng)
    maps = enumerate_maps(dims.n_in, dims.n_out)
    means, cvs, snaps = [], [], {}
    failures = 0

    def note(count):
        res = net.all_resistances()
        means.append(res.mean())
        cvs.append(res.std() / res.mean())
        if count in checkpoints:
            snaps[count] = res.copy()

    note(0)
    count = 0
    for cycle in range(cycles + 1):
        if cycle > 0:
            net = shuffle_devices(net, rng, carry=carry)
        order = rng.permutation(len(maps)) if map_order == "shuffled" else range(len(maps))
        for m in order:
            rec = train_until_learned(net, maps[m], cfg, rng)
            failures += not rec.learned
            count += 1
            note(count)
    return np.array(means), np.array(cvs), snaps, failures


def run_relearn_shuffle(dims: NetworkDims, cfg: TrainerConfig, cycles: int, seed: int,
                        realizations: int = 1, model: str = BMS,
                        checkpoints: Optional[Sequence[int]] = None,
                        raw_bin: float = 5.0, normalized_bin: float = 0.05,
                        map_order: str = "lexicographic", carry: str = "resistance",
                        workers: int = 1) -> RelearnResult:
    """Learn every map, then ``cycles`` times shuffle the devices and relearn every map.

    ``carry`` is passed to :func:`~memlearn.network.shuffle_devices`. The
    default moves resistance values between slots while every slot keeps its
    quenched parameters; moving whole records instead leaves the
    never-punished high-threshold devices stuck near ``r_min`` and the CV
    keeps growing with every pass.
    """
    n_maps = dims.n_out**dims.n_in
    total = n_maps * (cycles + 1)
    if checkpoints is None:
        checkpoints = [c for c in (0, n_maps, 4 * n_maps, 10 * n_maps) if c <= total]
    checkpoints = tuple(int(c) for c in checkpoints)
    jobs = [(dims, model, cfg, cycles, seed, r, checkpoints, map_order, carry) for r in range(realizations)]
    out = _map_jobs(_relearn_job, jobs, workers)
    means = np.array([o[0] for o in out])
    cvs = np.array([o[1] for o in out])
    histograms = {}
    for c in checkpoints:
        runs = [o[2][c] for o in out]
        pooled = np.concatenate(runs)
        raw_counts, raw_edges = histogram_from(pooled, raw_bin)
        normalized = np.concatenate([r / r.mean() for r in runs])
        norm_counts, norm_edges = histogram_from(normalized, normalized_bin)
        histograms[c] = dict(
            raw_counts=raw_counts / realizations,
            raw_edges=raw_edges,
            norm_counts=norm_counts / realizations,
            norm_edges=norm_edges,
        )
    decreases = int(np.sum(np.diff(means, axis=1) < 0))
    return RelearnResult(n_maps, means.mean(axis=0), cvs.mean(axis=0), means, cvs, histograms,
                         sum(o[3] for o in out), decreases)


# --- single device -----------------------------------------------------------

@dataclass
class DeviceDemo:
    t: np.ndarray
    v: np.ndarray
    i: np.ndarray
    r: np.ndarray


def triangle(amplitude: float, n: int) -> np.ndarray:
    """Symmetric triangle 0 -> amplitude -> 0 sampled at ``2 n`` points."""
    up = amplitude * np.arange(1, n + 1) / n
    return np.concatenate([up, up[-2::-1], [0.0]])


def hysteresis_waveform(small: float = 0.05, large: float = -0.5, n_small: int = 20,
                        n_large: int = 50) -> np.ndarray:
    """Three small positive triangles, one large negative excursion, one small triangle."""
    parts = [triangle(small, n_small) for _ in range(3)]
    parts.append(triangle(large, n_large))
    parts.append(triangle(small, n_small))
    return np.concatenate(parts)


def run_device_demo(params, waveform: Sequence[float], dt: float = 1.0,
                    state: Optional[float] = None) -> DeviceDemo:
    """Drive one memristor directly from a voltage source.

    ``params`` is a parameter set or a :class:`DeviceRecord`. At every sample
    the current is computed from the present resistance, then the state is
    advanced by one Euler substep.
    """
    dev = params if isinstance(params, DeviceRecord) else DeviceRecord(params, 1, state)
    v = np.asarray(waveform, dtype=float)
    r = np.empty_like(v)
    for n, vn in enumerate(v):
        r[n] = device.resistance_of(dev)
        dev = device.apply_voltage_substep(dev, vn, dt)
    return DeviceDemo(np.arange(len(v)) * dt, v, v / r, r)


def hysteresis_demo_params() -> Params:
    return device.BmsParams(beta=0.9, v_threshold=0.075, r_min=75.0, r_max=5000.0)
