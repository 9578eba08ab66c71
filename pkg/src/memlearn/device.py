"""Single-device physics for the two memristor models.

Two models are supported:

* ``BMS``: bipolar memristive system with threshold. The state is the
  resistance ``R`` itself and it only moves when ``|V|`` exceeds ``V_th``.
* ``BCM``: boundary condition memristor. The state is the normalised
  filament position ``x = w / D`` in ``[0, 1]``; the rate is proportional to
  the device current and picks one of three factors ``(a, b, 0)`` depending on
  the voltage and on whether ``x`` sits on a boundary.

All rate and update functions are vectorised: parameter fields may be numpy
arrays, which is how the network module stores whole crossbar layers.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Union

import numpy as np

BMS = "bms"
BCM = "bcm"
MODELS = (BMS, BCM)

# Device parameters fitted to Pickett's TiO2 device (SI units).
BCM_REFERENCE = dict(
    a=0.1494,
    b=1.6182,
    v_t0=0.915,
    v_t1=1.3048,
    v_th0=4.7404,
    v_th1=2.4629,
    mu=1e-16,
    d=1e-8,
    r_min=1e3,
    r_max=1e4,
)


def _scalar_or_array(value):
    out = np.asarray(value, dtype=float)
    return out[()] if out.ndim == 0 else out


@dataclass(eq=False)
class BmsParams:
    """Threshold memristor parameters (scalars or equally shaped arrays)."""

    beta: np.ndarray
    v_threshold: np.ndarray
    r_min: np.ndarray
    r_max: np.ndarray

    model = BMS

    def __post_init__(self):
        for f in dataclasses.fields(self):
            setattr(self, f.name, _scalar_or_array(getattr(self, f.name)))
        if not np.all(self.beta > 0):
            raise ValueError("beta must be positive")
        if not np.all(self.v_threshold > 0):
            raise ValueError("v_threshold must be positive")
        if not (np.all(self.r_min > 0) and np.all(self.r_min < self.r_max)):
            raise ValueError("need 0 < r_min < r_max")


@dataclass(eq=False)
class BcmParams:
    """Boundary condition memristor parameters.

    ``a`` and ``b`` are the slow and fast rate factors, ``v_t0``/``v_t1`` the
    interior switching thresholds and ``v_th0``/``v_th1`` the thresholds that
    release the state from the ``x = 0`` and ``x = 1`` boundaries.
    """

    a: np.ndarray
    b: np.ndarray
    v_t0: np.ndarray
    v_t1: np.ndarray
    v_th0: np.ndarray
    v_th1: np.ndarray
    mu: np.ndarray
    d: np.ndarray
    r_min: np.ndarray
    r_max: np.ndarray

    model = BCM

    def __post_init__(self):
        for f in dataclasses.fields(self):
            setattr(self, f.name, _scalar_or_array(getattr(self, f.name)))
        if not (np.all(self.a > 0) and np.all(self.a < self.b)):
            raise ValueError("need 0 < a < b")
        for name in ("v_t0", "v_t1", "v_th0", "v_th1"):
            if not np.all(getattr(self, name) >= 0):
                raise ValueError(f"{name} must be nonnegative")
        if not (np.all(self.mu > 0) and np.all(self.d > 0)):
            raise ValueError("mu and d must be positive")
        if not (np.all(self.r_min > 0) and np.all(self.r_min < self.r_max)):
            raise ValueError("need 0 < r_min < r_max")


Params = Union[BmsParams, BcmParams]
PARAM_TYPES = {BMS: BmsParams, BCM: BcmParams}


def param_names(model: str) -> list[str]:
    return [f.name for f in dataclasses.fields(PARAM_TYPES[model])]


def bms_rate(r, v, p: BmsParams):
    """Return dR/dt for the threshold model.

    Positive voltages above threshold lower the resistance, negative voltages
    below ``-v_threshold`` raise it. Saturated devices (``r == r_min`` under a
    lowering bias, ``r == r_max`` under a raising one) do not move.
    """
    r = np.asarray(r, dtype=float)
    v = np.asarray(v, dtype=float)
    vt = p.v_threshold
    lower = (v > vt) & (r > p.r_min)
    raise_ = (v < -vt) & (r < p.r_max)
    out = np.where(lower, -p.beta * (v - vt), np.where(raise_, -p.beta * (v + vt), 0.0))
    return out[()]


def bcm_resistance(x, p: BcmParams):
    return p.r_max - np.asarray(x, dtype=float) * (p.r_max - p.r_min)


def bcm_rate(x, v, p: BcmParams):
    """Return dx/dt (per second) for the boundary condition model."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    current = v / bcm_resistance(x, p)
    interior = np.where((v >= -p.v_t1) & (v <= p.v_t0), p.a, p.b)
    at_low_r = np.where(v < -p.v_th1, p.b, 0.0)
    at_high_r = np.where(v > p.v_th0, p.b, 0.0)
    f_b = np.where(x >= 1.0, at_low_r, np.where(x <= 0.0, at_high_r, interior))
    out = p.mu * p.r_min / p.d**2 * current * f_b
    return out[()]


def step_state(params: Params, polarity, state, v_terminal, dt: float):
    """One explicit Euler substep, clamped to the admissible state range.

    ``v_terminal`` is the drop across the device in circuit orientation; the
    device sees ``polarity * v_terminal``.
    """
    v_dev = np.asarray(polarity) * np.asarray(v_terminal, dtype=float)
    state = np.asarray(state, dtype=float)
    if isinstance(params, BmsParams):
        rate = bms_rate(state, v_dev, params)
        # np.where keeps sub-threshold devices bit-identical
        new = np.where(rate != 0.0, np.clip(state + dt * rate, params.r_min, params.r_max), state)
    else:
        rate = bcm_rate(state, v_dev, params)
        new = np.where(rate != 0.0, np.clip(state + dt * rate, 0.0, 1.0), state)
    return new[()]


def resistance(params: Params, state):
    if isinstance(params, BmsParams):
        return np.asarray(state, dtype=float)
    return bcm_resistance(state, params)


def state_from_resistance(params: Params, r):
    """Inverse of :func:`resistance`, clamped to the valid state range."""
    r = np.clip(np.asarray(r, dtype=float), params.r_min, params.r_max)
    if isinstance(params, BmsParams):
        return r[()]
    x = (params.r_max - r) / (params.r_max - params.r_min)
    return np.clip(x, 0.0, 1.0)[()]


def initial_state(params: Params):
    """Minimum resistance: ``R = r_min`` for BMS, ``x = 1`` for BCM."""
    if isinstance(params, BmsParams):
        return np.array(params.r_min, dtype=float)[()]
    return np.ones_like(params.r_min, dtype=float)[()]


def state_in_range(params: Params, state) -> bool:
    state = np.asarray(state, dtype=float)
    if isinstance(params, BmsParams):
        return bool(np.all((params.r_min <= state) & (state <= params.r_max)))
    return bool(np.all((0.0 <= state) & (state <= 1.0)))


BMS_BETA_RANGE = (0.8, 1.0)
BMS_VTH_RANGE = (0.05, 0.1)
BMS_RMIN_RANGE = (50.0, 100.0)
BMS_RMAX = 5000.0
BCM_RMIN_RANGE = (500.0, 1000.0)


def sample_bms_params(rng: np.random.Generator, shape=()) -> BmsParams:
    """Quenched BMS variability: beta~U(0.8,1), V_th~U(0.05,0.1), r_min~U(50,100)."""
    beta = rng.uniform(*BMS_BETA_RANGE, size=shape)
    v_threshold = rng.uniform(*BMS_VTH_RANGE, size=shape)
    r_min = rng.uniform(*BMS_RMIN_RANGE, size=shape)
    r_max = np.full(shape, BMS_RMAX)
    return BmsParams(beta, v_threshold, r_min, r_max)


def sample_bcm_params(rng: np.random.Generator, shape=()) -> BcmParams:
    """Reference BCM parameters with r_min drawn from U(500, 1000) ohm."""
    values = {k: np.full(shape, v) for k, v in BCM_REFERENCE.items()}
    values["r_min"] = rng.uniform(*BCM_RMIN_RANGE, size=shape)
    return BcmParams(**values)


SAMPLERS = {BMS: sample_bms_params, BCM: sample_bcm_params}


@dataclass
class DeviceRecord:
    """One memristor: parameters, polarity (+1 or -1) and mutable state.

    ``state`` is the resistance for BMS and the normalised state ``x`` for BCM.
    """

    params: Params
    polarity: int = 1
    state: float = None

    def __post_init__(self):
        if self.polarity not in (1, -1):
            raise ValueError(f"polarity must be +1 or -1, got {self.polarity}")
        if self.state is None:
            self.state = float(initial_state(self.params))
        self.state = float(self.state)
        if not state_in_range(self.params, self.state):
            raise ValueError(f"state {self.state} outside the admissible range")

    @property
    def model(self) -> str:
        return self.params.model


def sample_device(model: str, rng: np.random.Generator) -> DeviceRecord:
    return DeviceRecord(SAMPLERS[model](rng))


def resistance_of(dev: DeviceRecord) -> float:
    return float(resistance(dev.params, dev.state))


def apply_voltage_substep(dev: DeviceRecord, v_terminal: float, dt: float) -> DeviceRecord:
    """Return a copy of ``dev`` after one Euler substep under ``v_terminal``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    new = step_state(dev.params, dev.polarity, dev.state, v_terminal, dt)
    return dataclasses.replace(dev, state=float(new))
