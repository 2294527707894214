"""Synaptic crossbar layers: ideal virtual-ground readout and resistive-mesh nodal analysis.

Mesh convention for :func:`nodal_solve`: word line ``i`` is driven at its left end
and runs through crossings ``(i, 0) ... (i, M-1)``; bit line ``j`` runs from the top
crossing ``(0, j)`` down to ``(N-1, j)`` and is sensed into virtual ground at the
bottom. One segment resistor sits between each pair of adjacent crossings; the
driver ties directly to crossing ``(i, 0)`` and crossing ``(N-1, j)`` ties directly
to the sense node. Far ends are open.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .device import SynapseDevice, synapse_conductance, synapse_position_for


class CrossbarError(ValueError):
    pass


@dataclass(frozen=True)
class CrossbarLayer:
    synapses: tuple  # N rows of M SynapseDevice
    wire_resistance_per_segment_ohm: float = 0.0

    def __post_init__(self):
        rows = tuple(tuple(r) for r in self.synapses)
        if not rows or not rows[0]:
            raise CrossbarError("crossbar needs at least one row and one column")
        if any(len(r) != len(rows[0]) for r in rows):
            raise CrossbarError("ragged synapse matrix")
        if self.wire_resistance_per_segment_ohm < 0:
            raise CrossbarError("wire_resistance_per_segment_ohm must be >= 0")
        object.__setattr__(self, "synapses", rows)

    @property
    def rows_N(self) -> int:
        return len(self.synapses)

    @property
    def cols_M(self) -> int:
        return len(self.synapses[0])

    @classmethod
    def from_positions(cls, template: SynapseDevice, positions, wire_resistance_per_segment_ohm=0.0):
        positions = np.asarray(positions, dtype=float)
        rows = [[replace(template, dw_position_m=float(x)) for x in row] for row in positions]
        return cls(rows, wire_resistance_per_segment_ohm)

    @classmethod
    def from_conductances(cls, template: SynapseDevice, G, wire_resistance_per_segment_ohm=0.0):
        G = np.asarray(G, dtype=float)
        rows = [
            [replace(template, dw_position_m=synapse_position_for(template, float(g))) for g in row]
            for row in G
        ]
        return cls(rows, wire_resistance_per_segment_ohm)

    def positions(self) -> np.ndarray:
        return np.array([[s.dw_position_m for s in row] for row in self.synapses])


@dataclass(frozen=True)
class DifferentialLayer:
    plus: CrossbarLayer
    minus: CrossbarLayer

    def __post_init__(self):
        if (self.plus.rows_N, self.plus.cols_M) != (self.minus.rows_N, self.minus.cols_M):
            raise CrossbarError("differential halves differ in shape")

    @property
    def rows_N(self) -> int:
        return self.plus.rows_N

    @property
    def cols_M(self) -> int:
        return self.plus.cols_M


def conductance_matrix(layer: CrossbarLayer) -> np.ndarray:
    return np.array([[synapse_conductance(s) for s in row] for row in layer.synapses])


def ideal_layer_currents(word_voltages, G) -> np.ndarray:
    """Bit-line currents with every bit line held at virtual ground: ``I = V @ G``."""
    V = np.asarray(word_voltages, dtype=float)
    G = np.asarray(G, dtype=float)
    if V.ndim != 1 or G.ndim != 2 or V.shape[0] != G.shape[0]:
        raise CrossbarError(f"voltage vector {V.shape} does not match conductance matrix {G.shape}")
    return V @ G


def _node_index(N, M):
    word = np.arange(N * M).reshape(N, M)
    return word, word + N * M


def _mesh(G: np.ndarray, g_wire: float):
    """Full nodal conductance matrix over word and bit nodes plus the fixed-node split.

    Word node ``(i, 0)`` is the driver terminal and bit node ``(N-1, j)`` the virtual
    ground terminal; both are fixed. Returns ``(A, free, driven, grounded)``.
    """
    N, M = G.shape
    w, b = _node_index(N, M)
    a = np.concatenate([w[:, :-1].ravel(), b[:-1, :].ravel(), w.ravel()])
    c = np.concatenate([w[:, 1:].ravel(), b[1:, :].ravel(), b.ravel()])
    g = np.concatenate([np.full((M - 1) * N + (N - 1) * M, g_wire), G.ravel()])
    keep = g != 0
    a, c, g = a[keep], c[keep], g[keep]
    n = 2 * N * M
    A = sp.csr_matrix(
        (np.concatenate([g, g, -g, -g]), (np.concatenate([a, c, a, c]), np.concatenate([a, c, c, a]))),
        shape=(n, n),
    )
    driven = w[:, 0]
    grounded = b[N - 1, :]
    fixed = np.zeros(n, dtype=bool)
    fixed[driven] = True
    fixed[grounded] = True
    return A, np.flatnonzero(~fixed), driven, grounded


def _solve_nodes(G: np.ndarray, g_wire: float, V: np.ndarray) -> np.ndarray:
    """Node voltages for drive columns ``V`` (N x k). Returns (2*N*M) x k."""
    A, free, driven, _ = _mesh(G, g_wire)
    v = np.zeros((A.shape[0], V.shape[1]))
    v[driven, :] = V
    if free.size:
        A_ff = A[free][:, free].tocsc()
        rhs = -(A[free][:, driven] @ V)
        try:
            lu = spla.splu(A_ff)
        except RuntimeError as exc:
            raise np.linalg.LinAlgError(f"singular crossbar mesh: {exc}") from exc
        v[free, :] = lu.solve(rhs)
    if not np.all(np.isfinite(v)):
        raise np.linalg.LinAlgError("singular crossbar mesh")
    return v


def _ground_currents(G: np.ndarray, g_wire: float, v: np.ndarray) -> np.ndarray:
    A, _, _, grounded = _mesh(G, g_wire)
    # grounded rows: sum_k g_k * (v_k - 0) flows into the virtual ground
    return -(A[grounded] @ v)


def nodal_solve(layer: CrossbarLayer, word_voltages):
    """Solve the parasitic mesh. Returns ``(word_node_V, bit_node_V, bit_currents)``.

    Node voltage arrays are N x M. With zero wire resistance the mesh collapses to
    the ideal model, which is returned directly (word nodes at the drive voltage,
    bit nodes at ground).
    """
    G = conductance_matrix(layer)
    V = np.asarray(word_voltages, dtype=float)
    N, M = G.shape
    if V.shape != (N,):
        raise CrossbarError(f"expected {N} word-line voltages, got shape {V.shape}")
    r = layer.wire_resistance_per_segment_ohm
    if r == 0:
        word = np.repeat(V[:, None], M, axis=1)
        return word, np.zeros((N, M)), ideal_layer_currents(V, G)

    g_wire = 1.0 / r
    v = _solve_nodes(G, g_wire, V[:, None])
    currents = _ground_currents(G, g_wire, v)[:, 0]
    return v[: N * M, 0].reshape(N, M), v[N * M:, 0].reshape(N, M), currents


def transfer_matrix(layer: CrossbarLayer) -> np.ndarray:
    """N x M matrix ``T`` with ``bit_currents = V @ T``; the conductance matrix for ideal wires."""
    G = conductance_matrix(layer)
    r = layer.wire_resistance_per_segment_ohm
    if r == 0:
        return G
    g_wire = 1.0 / r
    v = _solve_nodes(G, g_wire, np.eye(G.shape[0]))
    return _ground_currents(G, g_wire, v).T


def differential_layer_currents(word_voltages, diff: DifferentialLayer) -> np.ndarray:
    V = np.asarray(word_voltages, dtype=float)
    return ideal_layer_currents(V, conductance_matrix(diff.plus)) - ideal_layer_currents(
        V, conductance_matrix(diff.minus)
    )


def write_matrix_csv(matrix, path) -> None:
    """Row-major CSV, no header; shortest round-trip float repr."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in np.atleast_2d(np.asarray(matrix, dtype=float)):
            writer.writerow([repr(float(x)) for x in row])


def read_matrix_csv(path) -> np.ndarray:
    with open(Path(path), newline="") as fh:
        rows = [[float(x) for x in row] for row in csv.reader(fh) if row]
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise CrossbarError(f"{path}: empty or ragged matrix")
    return np.array(rows)
