"""Learning by punishing mistakes on a memristor network.

A training step picks a random input, reads which output carries the largest
current and, while that output is wrong, drives the input/winner pair with a
large negative write voltage. The write raises the resistance of the devices
carrying the mistaken current. Nothing is ever rewarded.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .device import BCM, BMS, step_state
from .network import NetworkState
from .solver import conductances, read_matrix, solve_conductances

TIE_BREAKS = ("lowest", "random")
# "fast": compiled bulk-eliminated kernels; "schur"/"dense": numpy solver routes
SOLVERS = ("fast", "schur", "dense")
# currents this close (relative) to the maximum count as tied
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class TargetMap:
    """Desired output index for every input index."""

    assignment: tuple

    def __post_init__(self):
        values = tuple(int(v) for v in self.assignment)
        if any(v < 0 for v in values):
            raise ValueError("map entries must be nonnegative")
        object.__setattr__(self, "assignment", values)

    @classmethod
    def identity(cls, n: int) -> "TargetMap":
        return cls(tuple(range(n)))

    @property
    def n_in(self) -> int:
        return len(self.assignment)

    def __getitem__(self, i: int) -> int:
        return self.assignment[i]

    def __len__(self) -> int:
        return len(self.assignment)

    def check(self, n_in: int, n_out: int) -> None:
        if len(self.assignment) != n_in:
            raise ValueError(f"map has {len(self.assignment)} entries, network has {n_in} inputs")
        if any(v >= n_out for v in self.assignment):
            raise ValueError(f"map refers to an output >= {n_out}")

    def label(self) -> str:
        return "".join(str(v) for v in self.assignment)


def identity_map(n: int) -> TargetMap:
    return TargetMap.identity(n)


def random_map(n_in: int, n_out: int, rng: np.random.Generator) -> TargetMap:
    """Each input gets an output drawn uniformly and independently."""
    return TargetMap(tuple(rng.integers(0, n_out, size=n_in)))


def enumerate_maps(n_in: int, n_out: int, limit: int = 10**6) -> list:
    """All ``n_out ** n_in`` maps in lexicographic order (first input most significant)."""
    if n_out**n_in > limit:
        raise OverflowError(f"{n_out}**{n_in} maps exceeds the limit of {limit}")
    return [TargetMap(t) for t in itertools.product(range(n_out), repeat=n_in)]


@dataclass
class TrainerConfig:
    """Read/write protocol parameters.

    ``dt`` is the length of one write substep in the model's time unit.
    ``v_write_range``, when set, replaces ``v_write`` by ``-U(lo, hi)`` drawn
    afresh for every punishment.
    """

    v_read: float = 1e-4
    v_write: float = -0.2
    write_substeps: int = 5
    dt: float = 1.0
    max_corrections: int = 80
    max_training_steps: int = 1000
    tie_break: str = "lowest"
    v_write_range: Optional[tuple] = None
    solver: str = "fast"
    check_conservation: bool = False

    def __post_init__(self):
        if not self.v_read > 0:
            raise ValueError("v_read must be positive")
        if not self.v_write < 0:
            raise ValueError("v_write must be negative so that punishment raises resistance")
        if self.write_substeps < 1 or self.max_corrections < 1 or self.max_training_steps < 1:
            raise ValueError("write_substeps, max_corrections and max_training_steps must be >= 1")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}")
        if self.tie_break not in TIE_BREAKS:
            raise ValueError(f"tie_break must be one of {TIE_BREAKS}")
        if self.v_write_range is not None:
            lo, hi = self.v_write_range
            if not 0 < lo <= hi:
                raise ValueError("v_write_range must satisfy 0 < lo <= hi")

    @classmethod
    def for_model(cls, model: str, **overrides) -> "TrainerConfig":
        """Default protocol for a model (BCM: -5 V writes over 1 ms in 5 substeps)."""
        if model == BCM:
            base = dict(v_read=1e-4, v_write=-5.0, write_substeps=5, dt=0.2e-3)
        elif model == BMS:
            base = {}
        else:
            raise ValueError(f"unknown model {model!r}")
        base.update(overrides)
        return cls(**base)

    def check_against(self, net: NetworkState) -> None:
        """Reject read voltages that would move BMS devices."""
        if net.model == BMS:
            vmin = min(float(np.min(lay.params.v_threshold)) for lay in net.layers)
            if abs(self.v_read) >= vmin:
                raise ValueError(f"|v_read|={abs(self.v_read)} must be below the smallest threshold {vmin:.4g}")


@dataclass
class Diagnostics:
    """Counters gathered while training; not needed for the algorithm itself."""

    solves: int = 0
    device_updates: int = 0
    resistance_decreases: int = 0
    max_conservation_error: float = 0.0

    def note_solution(self, sol) -> None:
        self.solves += 1
        self.max_conservation_error = max(self.max_conservation_error, sol.conservation_error())

    @property
    def decrease_fraction(self) -> float:
        return self.resistance_decreases / self.device_updates if self.device_updates else 0.0


@dataclass
class StepRecord:
    step: int
    input: int
    corrections: int
    resolved: bool
    error: int


@dataclass
class RunRecord:
    steps: list = field(default_factory=list)
    learned_at: Optional[int] = None
    diagnostics: Diagnostics = field(default_factory=Diagnostics)

    @property
    def learned(self) -> bool:
        return self.learned_at is not None

    @property
    def errors(self) -> np.ndarray:
        return np.array([s.error for s in self.steps], dtype=int)

    @property
    def cumulative_corrections(self) -> np.ndarray:
        return np.cumsum([s.corrections for s in self.steps], dtype=int)


def _pick_winner(currents: np.ndarray, cfg: TrainerConfig, rng) -> int:
    top = currents.max()
    tied = np.flatnonzero(currents >= top - TIE_RTOL * abs(top))
    if len(tied) == 1 or cfg.tie_break == "lowest":
        return int(tied[0])
    if rng is None:
        raise ValueError("random tie-break needs an rng")
    return int(rng.choice(tied))


def _read_rows(net: NetworkState, cfg: TrainerConfig, diag: Optional[Diagnostics],
               inputs: Optional[Sequence[int]] = None) -> np.ndarray:
    g1, g2 = conductances(net)
    if not cfg.check_conservation and cfg.solver != "dense":
        if cfg.solver == "fast":
            currents = _kernels.read_all(g1, g2, cfg.v_read)
        else:
            currents = read_matrix(g1, g2, cfg.v_read)
        return currents if inputs is None else currents[list(inputs)]
    method = "dense" if cfg.solver == "dense" else "schur"
    rows = range(net.dims.n_in) if inputs is None else inputs
    out = np.empty((len(rows), net.dims.n_out))
    for r, i in enumerate(rows):
        for k in range(net.dims.n_out):
            sol = solve_conductances(g1, g2, i, k, cfg.v_read, method)
            if diag is not None:
                diag.note_solution(sol)
            out[r, k] = sol.terminal_current
    return out


def read_winner(net: NetworkState, input_idx: int, cfg: TrainerConfig,
                rng: Optional[np.random.Generator] = None,
                diag: Optional[Diagnostics] = None) -> tuple:
    """Return ``(winner, currents)`` for one input; the network is not modified."""
    if not 0 <= input_idx < net.dims.n_in:
        raise IndexError(f"input index {input_idx} out of range")
    currents = _read_rows(net, cfg, diag, [input_idx])[0]
    return _pick_winner(currents, cfg, rng), currents


def write_punish(net: NetworkState, input_idx: int, output_idx: int, cfg: TrainerConfig,
                 v_write: Optional[float] = None, diag: Optional[Diagnostics] = None) -> NetworkState:
    """Drive ``input_idx`` at the write voltage with ``output_idx`` grounded.

    The circuit is re-solved before every substep and all devices are updated
    together from that one solution. Mutates and returns ``net``.
    """
    v = cfg.v_write if v_write is None else v_write
    if cfg.solver == "fast":
        _fast_write(net, input_idx, output_idx, v, cfg, diag)
        return net
    for _ in range(cfg.write_substeps):
        g1, g2 = conductances(net)
        sol = solve_conductances(g1, g2, input_idx, output_idx, v, cfg.solver)
        if diag is not None:
            diag.note_solution(sol)
        for lay, drops in ((net.layer1, sol.layer1_drops), (net.layer2, sol.layer2_drops)):
            new = step_state(lay.params, lay.polarity, lay.state, drops, cfg.dt)
            if diag is not None:
                changed = new != lay.state
                diag.device_updates += int(changed.sum())
                old_r = lay.resistance()
                lay.state = new
                diag.resistance_decreases += int((changed & (lay.resistance() < old_r)).sum())
            else:
                lay.state = new
    return net


def _fast_write(net: NetworkState, input_idx: int, output_idx: int, v: float,
                cfg: TrainerConfig, diag: Optional[Diagnostics]) -> None:
    l1, l2 = net.layer1, net.layer2
    stats = np.zeros(4)
    if net.model == BMS:
        p1, p2 = l1.packed_params, l2.packed_params
        _kernels.bms_write(
            l1.state, l2.state, l1.polarity, l2.polarity,
            p1[..., 0], p1[..., 1], p1[..., 2], p1[..., 3],
            p2[..., 0], p2[..., 1], p2[..., 2], p2[..., 3],
            input_idx, output_idx, v, cfg.write_substeps, cfg.dt, stats,
        )
    else:
        _kernels.bcm_write(
            l1.state, l2.state, l1.polarity, l2.polarity, l1.packed_params, l2.packed_params,
            input_idx, output_idx, v, cfg.write_substeps, cfg.dt, stats,
        )
    if diag is not None:
        diag.solves += int(stats[0])
        diag.device_updates += int(stats[1])
        diag.resistance_decreases += int(stats[2])
        diag.max_conservation_error = max(diag.max_conservation_error, stats[3])


def training_step(net: NetworkState, target: TargetMap, cfg: TrainerConfig,
                  rng: np.random.Generator, step: int = 0,
                  diag: Optional[Diagnostics] = None) -> StepRecord:
    """Pick an input at random and punish wrong answers until it is right or the cap is hit.

    The returned record has ``error`` set to -1; callers fill it in after
    :func:`compute_error`.
    """
    i = int(rng.integers(net.dims.n_in))
    corrections = 0
    while True:
        winner, _ = read_winner(net, i, cfg, rng, diag)
        if winner == target[i]:
            return StepRecord(step, i, corrections, True, -1)
        if corrections == cfg.max_corrections:
            return StepRecord(step, i, corrections, False, -1)
        v = -rng.uniform(*cfg.v_write_range) if cfg.v_write_range else cfg.v_write
        write_punish(net, i, winner, cfg, v, diag)
        corrections += 1


def winners(net: NetworkState, cfg: TrainerConfig, rng: Optional[np.random.Generator] = None,
            diag: Optional[Diagnostics] = None) -> np.ndarray:
    currents = _read_rows(net, cfg, diag)
    return np.array([_pick_winner(row, cfg, rng) for row in currents], dtype=int)


def compute_error(net: NetworkState, target: TargetMap, cfg: TrainerConfig,
                  rng: Optional[np.random.Generator] = None,
                  diag: Optional[Diagnostics] = None) -> int:
    """Hamming distance between the winning outputs and the target map."""
    target.check(net.dims.n_in, net.dims.n_out)
    return int(np.sum(winners(net, cfg, rng, diag) != np.asarray(target.assignment)))


def train_until_learned(net: NetworkState, target: TargetMap, cfg: TrainerConfig,
                        rng: np.random.Generator, max_steps: Optional[int] = None,
                        record: Optional[RunRecord] = None) -> RunRecord:
    """Repeat training steps until the error is zero or the step cap is reached.

    Steps are counted from 1 within this call; ``learned_at`` is the step at
    which the error first hit zero.
    """
    target.check(net.dims.n_in, net.dims.n_out)
    cfg.check_against(net)
    record = RunRecord() if record is None else record
    cap = cfg.max_training_steps if max_steps is None else max_steps
    diag = record.diagnostics
    for step in range(1, cap + 1):
        rec = training_step(net, target, cfg, rng, step, diag)
        rec.error = compute_error(net, target, cfg, rng, diag)
        record.steps.append(rec)
        if rec.error == 0:
            record.learned_at = step
            break
    return record
