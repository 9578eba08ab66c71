"""Extremal-dynamics toy network that learns by depressing mistaken paths.

Activity leaves an input through its strongest weight to a middle node and
from there through the strongest weight to an output. When the output is
wrong both weights on that path are lowered by ``delta``; correct answers
change nothing.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .trainer import TargetMap


@dataclass(eq=False)
class ToyNetwork:
    """``w1[j, i]`` is input i -> middle j, ``w2[k, j]`` is middle j -> output k."""

    w1: np.ndarray
    w2: np.ndarray
    delta: float = 0.01

    def __post_init__(self):
        self.w1 = np.asarray(self.w1, dtype=float)
        self.w2 = np.asarray(self.w2, dtype=float)
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.w1.shape[0] != self.w2.shape[1]:
            raise ValueError("w1 and w2 disagree on the middle layer size")
        if not (np.all(np.isfinite(self.w1)) and np.all(np.isfinite(self.w2))):
            raise ValueError("weights must be finite")

    @property
    def n_in(self) -> int:
        return self.w1.shape[1]

    @property
    def n_mid(self) -> int:
        return self.w1.shape[0]

    @property
    def n_out(self) -> int:
        return self.w2.shape[0]


def build_toy(n_in: int, n_mid: int, n_out: int, rng: np.random.Generator,
              delta: float = 0.01) -> ToyNetwork:
    """Weights drawn i.i.d. from U(0, 1)."""
    w1 = rng.random((n_mid, n_in))
    w2 = rng.random((n_out, n_mid))
    return ToyNetwork(w1, w2, delta)


def toy_propagate(tn: ToyNetwork, input_idx: int) -> tuple:
    """Return ``(j_m, k_m)``, the strongest middle node and its strongest output."""
    j = int(np.argmax(tn.w1[:, input_idx]))
    k = int(np.argmax(tn.w2[:, j]))
    return j, k


def toy_outputs(tn: ToyNetwork) -> np.ndarray:
    j = np.argmax(tn.w1, axis=0)
    return np.argmax(tn.w2[:, j], axis=0)


def toy_error(tn: ToyNetwork, target: TargetMap) -> int:
    return int(np.sum(toy_outputs(tn) != np.asarray(target.assignment)))


@dataclass
class ToyStep:
    input: int
    output: int
    punished: bool


def toy_step(tn: ToyNetwork, target: TargetMap, rng: np.random.Generator) -> ToyStep:
    i = int(rng.integers(tn.n_in))
    j, k = toy_propagate(tn, i)
    if k == target[i]:
        return ToyStep(i, k, False)
    tn.w1[j, i] -= tn.delta
    tn.w2[k, j] -= tn.delta
    return ToyStep(i, k, True)


@dataclass
class ToyTrace:
    errors: list = field(default_factory=list)
    map_index: list = field(default_factory=list)
    learned_at: list = field(default_factory=list)

    @property
    def all_learned(self) -> bool:
        return all(s is not None for s in self.learned_at)


def toy_train(tn: ToyNetwork, maps: Sequence[TargetMap], max_steps: int,
              rng: np.random.Generator) -> ToyTrace:
    """Train on ``maps`` one after another, moving on once the error reaches zero.

    ``max_steps`` bounds the total number of steps over all maps. The error
    after every step is the Hamming distance over all inputs.
    """
    trace = ToyTrace(learned_at=[None] * len(maps))
    current = 0
    for step in range(1, max_steps + 1):
        if current == len(maps):
            break
        target = maps[current]
        toy_step(tn, target, rng)
        err = toy_error(tn, target)
        trace.errors.append(err)
        trace.map_index.append(current)
        if err == 0:
            trace.learned_at[current] = step
            current += 1
    return trace


def first_map_learning_time(n_in: int, n_mid: int, n_out: int, target: TargetMap,
                            seed: int, max_steps: int = 100_000,
                            delta: float = 0.01) -> Optional[int]:
    rng = np.random.default_rng(seed)
    tn = build_toy(n_in, n_mid, n_out, rng, delta)
    return toy_train(tn, [target], max_steps, rng).learned_at[0]
