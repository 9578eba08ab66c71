"""Three-layer memristive network: construction, mutation, statistics, I/O.

A network is two fully connected crossbars, inputs -> bulk and bulk ->
outputs. Each crossbar is stored as a :class:`Layer`, a structure of arrays
holding every device's parameters, polarity and state. Individual devices can
be pulled out as :class:`~memlearn.device.DeviceRecord` values.
"""
from __future__ import annotations

import dataclasses
import functools
import hashlib
from dataclasses import dataclass
from typing import IO, Optional

import numpy as np

from . import device
from .device import BCM, BMS, DeviceRecord, Params

FORMAT_VERSION = 1
MAGIC = "memlearn-network"


@dataclass(frozen=True)
class NetworkDims:
    n_in: int
    n_bulk: int
    n_out: int

    def __post_init__(self):
        for name in ("n_in", "n_bulk", "n_out"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")

    @property
    def n_devices(self) -> int:
        return self.n_in * self.n_bulk + self.n_bulk * self.n_out


@dataclass(eq=False)
class Layer:
    params: Params
    polarity: np.ndarray
    state: np.ndarray

    @property
    def shape(self) -> tuple:
        return self.state.shape

    def resistance(self) -> np.ndarray:
        return device.resistance(self.params, self.state)

    @functools.cached_property
    def packed_params(self) -> np.ndarray:
        """Parameters stacked on a trailing axis, in dataclass field order."""
        return np.ascontiguousarray(
            np.stack([np.broadcast_to(v, self.shape) for _, v in _param_items(self.params)], axis=-1),
            dtype=float,
        )

    def copy(self) -> "Layer":
        params = type(self.params)(
            **{k: np.array(v, copy=True) for k, v in _param_items(self.params)}
        )
        return Layer(params, self.polarity.copy(), self.state.copy())


def _param_items(params: Params):
    return [(f.name, getattr(params, f.name)) for f in dataclasses.fields(params)]


@dataclass(eq=False)
class NetworkState:
    """Layer dimensions plus the input->bulk and bulk->output device tables.

    ``layer1`` arrays are indexed ``[input, bulk]`` and ``layer2`` arrays
    ``[bulk, output]``.
    """

    dims: NetworkDims
    model: str
    layer1: Layer
    layer2: Layer
    seed: Optional[int] = None

    @property
    def layers(self) -> tuple:
        return (self.layer1, self.layer2)

    @property
    def n_devices(self) -> int:
        return self.layer1.state.size + self.layer2.state.size

    def resistances(self) -> tuple:
        return self.layer1.resistance(), self.layer2.resistance()

    def all_resistances(self) -> np.ndarray:
        r1, r2 = self.resistances()
        return np.concatenate([r1.ravel(), r2.ravel()])

    def device(self, layer: int, row: int, col: int) -> DeviceRecord:
        lay = self.layers[layer - 1]
        params = type(lay.params)(**{k: v[row, col] for k, v in _param_items(lay.params)})
        return DeviceRecord(params, int(lay.polarity[row, col]), float(lay.state[row, col]))

    def copy(self) -> "NetworkState":
        return NetworkState(self.dims, self.model, self.layer1.copy(), self.layer2.copy(), self.seed)

    def state_hash(self) -> str:
        """Digest of every parameter, polarity and state value."""
        h = hashlib.sha256()
        h.update(f"{self.model}:{self.dims}".encode())
        for lay in self.layers:
            for _, v in _param_items(lay.params):
                h.update(np.ascontiguousarray(v, dtype=float).tobytes())
            h.update(np.ascontiguousarray(lay.polarity, dtype=np.int8).tobytes())
            h.update(np.ascontiguousarray(lay.state, dtype=float).tobytes())
        return h.hexdigest()

    def equals(self, other: "NetworkState") -> bool:
        return (
            self.dims == other.dims
            and self.model == other.model
            and self.state_hash() == other.state_hash()
        )

    def validate(self) -> None:
        d = self.dims
        if self.layer1.shape != (d.n_in, d.n_bulk) or self.layer2.shape != (d.n_bulk, d.n_out):
            raise ValueError("layer shapes do not match dims")
        for lay in self.layers:
            if not np.all(np.isin(lay.polarity, (1, -1))):
                raise ValueError("polarity must be +1 or -1")
            if not device.state_in_range(lay.params, lay.state):
                raise ValueError("device state outside the admissible range")


def _make_layer(model: str, shape: tuple, rng: np.random.Generator, random_polarity: bool,
                initial_resistance: Optional[float]) -> Layer:
    params = device.SAMPLERS[model](rng, shape)
    if random_polarity:
        polarity = np.where(rng.random(shape) < 0.5, 1, -1).astype(np.int8)
    else:
        polarity = np.ones(shape, dtype=np.int8)
    if initial_resistance is None:
        state = np.array(device.initial_state(params), dtype=float)
    else:
        if np.any(initial_resistance < params.r_min) or np.any(initial_resistance > params.r_max):
            raise ValueError("initial_resistance outside [r_min, r_max] for some device")
        state = np.asarray(device.state_from_resistance(params, np.full(shape, initial_resistance)))
    return Layer(params, polarity, state)


def build_network(dims: NetworkDims, model: str, rng: np.random.Generator, *,
                  random_polarity: bool = False,
                  initial_resistance: Optional[float] = None,
                  seed: Optional[int] = None) -> NetworkState:
    """Sample a fresh network; every device drawn independently from the model's prior.

    ``random_polarity`` flips each device with probability 1/2 and
    ``initial_resistance`` overrides the default minimum-resistance start.
    """
    if model not in device.MODELS:
        raise ValueError(f"unknown model {model!r}")
    layer1 = _make_layer(model, (dims.n_in, dims.n_bulk), rng, random_polarity, initial_resistance)
    layer2 = _make_layer(model, (dims.n_bulk, dims.n_out), rng, random_polarity, initial_resistance)
    return NetworkState(dims, model, layer1, layer2, seed)


def perturb(net: NetworkState, fraction: float, factor: float, rng: np.random.Generator) -> int:
    """Multiply the resistance of ``floor(fraction * total)`` random devices by ``factor``.

    Resistances are clamped to each device's range. Mutates ``net`` and
    returns the number of devices selected.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must lie in [0, 1]")
    if factor <= 0:
        raise ValueError("factor must be positive")
    total = net.n_devices
    count = int(np.floor(fraction * total))
    if count == 0:
        return 0
    chosen = rng.choice(total, size=count, replace=False)
    n1 = net.layer1.state.size
    _scale_resistance(net.layer1, chosen[chosen < n1], factor)
    _scale_resistance(net.layer2, chosen[chosen >= n1] - n1, factor)
    return count


def _scale_resistance(lay: Layer, flat_idx: np.ndarray, factor: float) -> None:
    if flat_idx.size == 0:
        return
    idx = np.unravel_index(flat_idx, lay.shape)
    sub = type(lay.params)(**{k: np.broadcast_to(v, lay.shape)[idx] for k, v in _param_items(lay.params)})
    r = device.resistance(sub, lay.state[idx]) * factor
    lay.state[idx] = device.state_from_resistance(sub, r)


def _flat_fields(lay: Layer) -> dict:
    out = {k: np.broadcast_to(v, lay.shape).ravel() for k, v in _param_items(lay.params)}
    out["polarity"] = lay.polarity.ravel()
    out["state"] = lay.state.ravel()
    return out


def _layer_from_flat(model: str, fields: dict, shape: tuple) -> Layer:
    params = device.PARAM_TYPES[model](
        **{k: np.array(fields[k]).reshape(shape) for k in device.param_names(model)}
    )
    return Layer(params, np.array(fields["polarity"], dtype=np.int8).reshape(shape),
                 np.array(fields["state"], dtype=float).reshape(shape))


SHUFFLE_CARRY = ("record", "resistance")


def shuffle_devices(net: NetworkState, rng: np.random.Generator, *, per_layer: bool = False,
                    carry: str = "record") -> NetworkState:
    """Return a copy with devices randomly permuted over edge slots.

    ``carry="record"`` moves whole records (parameters, polarity and state),
    so the multiset of resistances is unchanged. ``carry="resistance"`` moves
    only the resistance values; each slot keeps its own parameters and
    polarity, and a value below the receiving slot's ``r_min`` (or above its
    ``r_max``) is clamped into range.

    By default the permutation spans both layers; ``per_layer`` restricts it
    to each crossbar.
    """
    if carry not in SHUFFLE_CARRY:
        raise ValueError(f"carry must be one of {SHUFFLE_CARRY}")
    f1, f2 = _flat_fields(net.layer1), _flat_fields(net.layer2)
    if carry == "resistance":
        f1 = {**f1, "r": net.layer1.resistance().ravel()}
        f2 = {**f2, "r": net.layer2.resistance().ravel()}
        moving = ("r",)
    else:
        moving = tuple(f1)
    n1 = net.layer1.state.size
    if per_layer:
        p1, p2 = rng.permutation(n1), rng.permutation(net.layer2.state.size)
    else:
        perm = rng.permutation(net.n_devices)
        p1, p2 = perm[:n1], perm[n1:]
    joined = {k: np.concatenate([f1[k], f2[k]]) for k in moving}
    if per_layer:
        g1 = {**f1, **{k: f1[k][p1] for k in moving}}
        g2 = {**f2, **{k: f2[k][p2] for k in moving}}
    else:
        g1 = {**f1, **{k: joined[k][p1] for k in moving}}
        g2 = {**f2, **{k: joined[k][p2] for k in moving}}
    layers = []
    for g, lay in ((g1, net.layer1), (g2, net.layer2)):
        new = _layer_from_flat(net.model, g, lay.shape)
        if carry == "resistance":
            new.state = np.ascontiguousarray(
                device.state_from_resistance(new.params, g["r"].reshape(lay.shape)), dtype=float
            )
        layers.append(new)
    return NetworkState(net.dims, net.model, layers[0], layers[1], net.seed)


@dataclass
class ResistanceStats:
    mean: float
    std: float
    cv: float
    counts: np.ndarray
    edges: np.ndarray


def histogram_from(values: np.ndarray, bin_width: float, low: Optional[float] = None) -> tuple:
    """Fixed-width histogram whose lower edge is ``low`` (default: min of ``values``)."""
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    values = np.asarray(values, dtype=float)
    low = float(values.min()) if low is None else float(low)
    n_bins = max(1, int(np.floor((values.max() - low) / bin_width)) + 1)
    edges = low + bin_width * np.arange(n_bins + 1)
    idx = np.clip(np.floor((values - low) / bin_width).astype(int), 0, n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    return counts, edges


def resistance_stats(net: NetworkState, bin_width: float) -> ResistanceStats:
    r = net.all_resistances()
    mean = float(r.mean())
    std = float(r.std())
    counts, edges = histogram_from(r, bin_width)
    return ResistanceStats(mean, std, std / mean, counts, edges)


# --- persistence -------------------------------------------------------------

class NetworkFormatError(ValueError):
    """Raised for malformed or incompatible network files."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def save(net: NetworkState, sink: IO[str]) -> None:
    """Write ``net`` as versioned plain text, one device per line.

    Floats use ``repr`` so a load gives back bit-identical values.
    """
    names = device.param_names(net.model)
    d = net.dims
    sink.write(f"{MAGIC} {FORMAT_VERSION}\n")
    sink.write(f"dims {d.n_in} {d.n_bulk} {d.n_out}\n")
    sink.write(f"model {net.model}\n")
    sink.write(f"seed {'none' if net.seed is None else net.seed}\n")
    sink.write(f"devices {net.n_devices}\n")
    sink.write("columns layer row col " + " ".join(names) + " polarity state\n")
    for number, lay in ((1, net.layer1), (2, net.layer2)):
        full = {k: np.broadcast_to(v, lay.shape) for k, v in _param_items(lay.params)}
        rows, cols = lay.shape
        for i in range(rows):
            for j in range(cols):
                vals = " ".join(repr(float(full[k][i, j])) for k in names)
                sink.write(f"{number} {i} {j} {vals} {int(lay.polarity[i, j])} {float(lay.state[i, j])!r}\n")
    sink.write("end\n")


def _expect(lines: list, pos: int, key: str) -> list:
    if pos >= len(lines):
        raise NetworkFormatError(f"unexpected end of file: missing '{key}' section", pos + 1)
    parts = lines[pos].split()
    if not parts or parts[0] != key:
        raise NetworkFormatError(f"expected '{key}' section, got {lines[pos]!r}", pos + 1)
    return parts[1:]


def load(source: IO[str]) -> NetworkState:
    """Parse a file written by :func:`save` and validate every device."""
    lines = source.read().splitlines()
    header = _expect(lines, 0, MAGIC)
    if header != [str(FORMAT_VERSION)]:
        raise NetworkFormatError(f"unsupported format version {' '.join(header)!r}", 1)
    try:
        dims = NetworkDims(*(int(t) for t in _expect(lines, 1, "dims")))
    except (TypeError, ValueError) as exc:
        raise NetworkFormatError(f"bad dims: {exc}", 2) from None
    (model,) = _expect(lines, 2, "model") or [""]
    if model not in device.MODELS:
        raise NetworkFormatError(f"unknown model {model!r}", 3)
    (seed_tok,) = _expect(lines, 3, "seed")
    seed = None if seed_tok == "none" else int(seed_tok)
    (count_tok,) = _expect(lines, 4, "devices")
    if int(count_tok) != dims.n_devices:
        raise NetworkFormatError(f"device count {count_tok} does not match dims", 5)
    names = device.param_names(model)
    columns = _expect(lines, 5, "columns")
    if columns != ["layer", "row", "col", *names, "polarity", "state"]:
        raise NetworkFormatError("column header does not match model", 6)

    shapes = {1: (dims.n_in, dims.n_bulk), 2: (dims.n_bulk, dims.n_out)}
    tables = {n: {k: np.full(s, np.nan) for k in [*names, "polarity", "state"]} for n, s in shapes.items()}
    seen = {1: np.zeros(shapes[1], bool), 2: np.zeros(shapes[2], bool)}
    pos = 6
    for _ in range(dims.n_devices):
        lineno = pos + 1
        if pos >= len(lines) or lines[pos].strip() == "end":
            raise NetworkFormatError("unexpected end of file: 'devices' section truncated", lineno)
        parts = lines[pos].split()
        if len(parts) != len(columns):
            raise NetworkFormatError(f"expected {len(columns)} fields, got {len(parts)}", lineno)
        try:
            layer, row, col = int(parts[0]), int(parts[1]), int(parts[2])
            values = [float(t) for t in parts[3:]]
        except ValueError as exc:
            raise NetworkFormatError(f"bad field: {exc}", lineno) from None
        if layer not in shapes or not (0 <= row < shapes[layer][0] and 0 <= col < shapes[layer][1]):
            raise NetworkFormatError(f"device index out of range: {layer} {row} {col}", lineno)
        if seen[layer][row, col]:
            raise NetworkFormatError(f"duplicate device {layer} {row} {col}", lineno)
        seen[layer][row, col] = True
        for key, value in zip([*names, "polarity", "state"], values):
            tables[layer][key][row, col] = value
        try:
            DeviceRecord(
                device.PARAM_TYPES[model](**{k: tables[layer][k][row, col] for k in names}),
                int(tables[layer]["polarity"][row, col]),
                tables[layer]["state"][row, col],
            )
        except ValueError as exc:
            raise NetworkFormatError(f"invalid device: {exc}", lineno) from None
        pos += 1
    if pos >= len(lines) or lines[pos].strip() != "end":
        raise NetworkFormatError("missing 'end' section", pos + 1)

    layers = []
    for n in (1, 2):
        t = tables[n]
        params = device.PARAM_TYPES[model](**{k: t[k] for k in names})
        layers.append(Layer(params, t["polarity"].astype(np.int8), t["state"]))
    return NetworkState(dims, model, layers[0], layers[1], seed)
