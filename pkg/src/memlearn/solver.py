"""DC nodal analysis of the two-crossbar network.

One input terminal is held at ``v_applied`` and one output terminal is
grounded. Every other terminal floats and takes part in KCL, so current can
leak back through idle inputs and outputs.

Node ordering used throughout: inputs ``0..n_in-1``, then bulk nodes, then
outputs.

Two solution routes are provided. ``"dense"`` factorises the reduced
Laplacian of the whole graph with a Cholesky decomposition. ``"schur"``
exploits the fact that bulk nodes only touch terminals: the bulk block of the
Laplacian is diagonal, so bulk nodes can be eliminated exactly, leaving a
system of size ``n_in + n_out - 2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .device import BMS
from .network import NetworkState

METHODS = ("dense", "schur")


class SolverError(RuntimeError):
    """The nodal system could not be solved (singular or non-finite)."""


@dataclass
class CircuitSolution:
    node_voltages: np.ndarray
    layer1_drops: np.ndarray
    layer2_drops: np.ndarray
    terminal_current: float
    source_current: float
    n_in: int
    n_out: int

    @property
    def input_voltages(self) -> np.ndarray:
        return self.node_voltages[: self.n_in]

    @property
    def bulk_voltages(self) -> np.ndarray:
        return self.node_voltages[self.n_in : len(self.node_voltages) - self.n_out]

    @property
    def output_voltages(self) -> np.ndarray:
        return self.node_voltages[len(self.node_voltages) - self.n_out :]

    def conservation_error(self) -> float:
        """|I_source - I_sink| relative to the larger of the two."""
        scale = max(abs(self.source_current), abs(self.terminal_current))
        if scale == 0.0:
            return 0.0
        return abs(self.source_current - self.terminal_current) / scale


def conductances(net: NetworkState) -> tuple:
    r1, r2 = net.resistances()
    return 1.0 / r1, 1.0 / r2


def laplacian(g1: np.ndarray, g2: np.ndarray) -> np.ndarray:
    """Weighted graph Laplacian over (inputs, bulk, outputs)."""
    n_in, n_bulk = g1.shape
    n_out = g2.shape[1]
    n = n_in + n_bulk + n_out
    adj = np.zeros((n, n))
    b0, o0 = n_in, n_in + n_bulk
    adj[:n_in, b0:o0] = g1
    adj[b0:o0, o0:] = g2
    adj += adj.T
    return np.diag(adj.sum(axis=1)) - adj


def kcl_residual(g1, g2, sol: CircuitSolution, input_idx: int, output_idx: int) -> float:
    """Largest KCL imbalance over floating nodes, relative to the terminal current."""
    n = len(sol.node_voltages)
    res = laplacian(g1, g2) @ sol.node_voltages
    floating = np.ones(n, bool)
    floating[input_idx] = False
    floating[n - sol.n_out + output_idx] = False
    scale = max(abs(sol.terminal_current), np.finfo(float).tiny)
    return float(np.max(np.abs(res[floating]), initial=0.0) / scale)


def _check_indices(g1, g2, input_idx, output_idx):
    if not 0 <= input_idx < g1.shape[0]:
        raise IndexError(f"input index {input_idx} out of range")
    if not 0 <= output_idx < g2.shape[1]:
        raise IndexError(f"output index {output_idx} out of range")


def _assemble(g1, g2, v_nodes, input_idx, output_idx, v_applied) -> CircuitSolution:
    n_in, n_bulk = g1.shape
    n_out = g2.shape[1]
    if not np.all(np.isfinite(v_nodes)):
        raise SolverError("non-finite node voltages")
    v_in = v_nodes[:n_in]
    v_bulk = v_nodes[n_in : n_in + n_bulk]
    v_out = v_nodes[n_in + n_bulk :]
    drops1 = v_in[:, None] - v_bulk[None, :]
    drops2 = v_bulk[:, None] - v_out[None, :]
    source = float(g1[input_idx] @ (v_applied - v_bulk))
    sink = float(g2[:, output_idx] @ v_bulk)
    return CircuitSolution(v_nodes, drops1, drops2, sink, source, n_in, n_out)


def _solve_dense(g1, g2, input_idx, output_idx, v_applied):
    n_in, n_bulk = g1.shape
    lap = laplacian(g1, g2)
    n = lap.shape[0]
    a, b = input_idx, n_in + n_bulk + output_idx
    free = np.ones(n, bool)
    free[[a, b]] = False
    v = np.zeros(n)
    v[a] = v_applied
    if free.any():
        rhs = -lap[free, a] * v_applied
        try:
            factor = linalg.cho_factor(lap[np.ix_(free, free)])
        except linalg.LinAlgError as exc:
            raise SolverError(f"nodal matrix not positive definite: {exc}") from None
        v[free] = linalg.cho_solve(factor, rhs)
    return v


def terminal_laplacian(g1: np.ndarray, g2: np.ndarray) -> tuple:
    """Eliminate the bulk layer; return (reduced Laplacian over terminals, coupling, bulk degree)."""
    degree = g1.sum(axis=0) + g2.sum(axis=1)
    coupling = np.hstack([g1.T, g2])
    diag = np.concatenate([g1.sum(axis=1), g2.sum(axis=0)])
    reduced = np.diag(diag) - coupling.T @ (coupling / degree[:, None])
    return reduced, coupling, degree


def _solve_schur(g1, g2, input_idx, output_idx, v_applied):
    n_in = g1.shape[0]
    reduced, coupling, degree = terminal_laplacian(g1, g2)
    n_t = reduced.shape[0]
    a, b = input_idx, n_in + output_idx
    free = np.ones(n_t, bool)
    free[[a, b]] = False
    v_t = np.zeros(n_t)
    v_t[a] = v_applied
    if free.any():
        try:
            v_t[free] = np.linalg.solve(reduced[np.ix_(free, free)], -reduced[free, a] * v_applied)
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"reduced nodal matrix singular: {exc}") from None
    v_bulk = coupling @ v_t / degree
    return np.concatenate([v_t[:n_in], v_bulk, v_t[n_in:]])


def solve_conductances(g1, g2, input_idx: int, output_idx: int, v_applied: float,
                       method: str = "dense") -> CircuitSolution:
    """Solve the network given conductance tables ``g1[in, bulk]`` and ``g2[bulk, out]``."""
    _check_indices(g1, g2, input_idx, output_idx)
    if method == "dense":
        v = _solve_dense(g1, g2, input_idx, output_idx, v_applied)
    elif method == "schur":
        v = _solve_schur(g1, g2, input_idx, output_idx, v_applied)
    else:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    return _assemble(g1, g2, v, input_idx, output_idx, v_applied)


def solve(net: NetworkState, input_idx: int, output_idx: int, v_applied: float,
          method: str = "dense") -> CircuitSolution:
    g1, g2 = conductances(net)
    if not (np.all(np.isfinite(g1)) and np.all(g1 > 0) and np.all(np.isfinite(g2)) and np.all(g2 > 0)):
        raise SolverError("all resistances must be finite and positive")
    return solve_conductances(g1, g2, input_idx, output_idx, v_applied, method)


def read_matrix(g1: np.ndarray, g2: np.ndarray, v_read: float) -> np.ndarray:
    """Currents for every (input, output) pair, each measured with the other terminals floating.

    Uses the effective resistance between the two terminals of the bulk-reduced
    network: grounding output ``k`` and injecting a unit current at input ``i``
    gives ``R_eff(i, k)`` as the potential of ``i``; the read current is
    ``v_read / R_eff``. All outputs are handled in one batched solve.
    """
    n_in, n_out = g1.shape[0], g2.shape[1]
    reduced, _, _ = terminal_laplacian(g1, g2)
    n_t = n_in + n_out
    keep = np.array([[t for t in range(n_t) if t != n_in + k] for k in range(n_out)])
    grounded = reduced[keep[:, :, None], keep[:, None, :]]
    # inputs keep their index after deleting an output row
    rhs = np.broadcast_to(np.eye(n_t - 1)[:, :n_in], (n_out, n_t - 1, n_in))
    try:
        pot = np.linalg.solve(grounded, rhs)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"grounded terminal matrix singular: {exc}") from None
    r_eff = np.diagonal(pot[:, :n_in, :], axis1=1, axis2=2).T
    return v_read / r_eff


def read_currents(net: NetworkState, input_idx: int, v_read: float,
                  method: str = "fast") -> np.ndarray:
    """Current into each output when ``v_read`` drives ``input_idx``.

    One measurement per output with the remaining outputs floating. The
    network is not modified. ``method`` is ``"fast"`` (effective resistance on
    the reduced network) or one of the full solve routes.
    """
    if net.model == BMS:
        vmin = min(float(np.min(lay.params.v_threshold)) for lay in net.layers)
        assert abs(v_read) < vmin, f"|v_read|={abs(v_read)} not below device threshold {vmin}"
    g1, g2 = conductances(net)
    if method == "fast":
        _check_indices(g1, g2, input_idx, 0)
        return read_matrix(g1, g2, v_read)[input_idx]
    return np.array([
        solve_conductances(g1, g2, input_idx, k, v_read, method).terminal_current
        for k in range(net.dims.n_out)
    ])
