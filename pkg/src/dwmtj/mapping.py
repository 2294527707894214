"""Weight-to-conductance mapping, position quantization, and the abstract LIF oracle.

The oracle reduces a constant-width dipolar-field neuron to a normalized membrane
``m = x / L`` that ramps at ``gain * I - leak_rate``. For that device class the
reduction is exact, so device-level and abstract spike trains must coincide up to
roundoff; :func:`verify_against_oracle` co-simulates both and compares.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .crossbar import CrossbarLayer, DifferentialLayer, conductance_matrix
from .device import (
    FIRE_RTOL,
    DipolarField,
    NeuronDevice,
    NeuronState,
    SynapseDevice,
)
from .netsim import (
    DriveWaveform,
    Network,
    NetworkLayer,
    NoInhibition,
    SimConfig,
    WinnerTakeAll,
    run_network,
)


class UnsupportedConfiguration(ValueError):
    """The network contains devices the abstract model cannot represent exactly."""


@dataclass(frozen=True)
class WeightMapping:
    scale_S_per_unit: float
    g_floor_S: float

    def __post_init__(self):
        if not self.scale_S_per_unit > 0:
            raise ValueError("scale_S_per_unit must be > 0")


def map_weights(W, g_AP: float, g_P: float):
    """Split ``W`` (N inputs x M outputs) into a differential conductance pair.

    Returns ``(G_plus, G_minus, mapping)``; the readout ``V @ (G_plus - G_minus)``
    equals ``scale * (W.T @ V)``.
    """
    W = np.asarray(W, dtype=float)
    if not np.all(np.isfinite(W)):
        raise ValueError("weight matrix has non-finite entries")
    if not 0 < g_AP < g_P:
        raise ValueError("need 0 < g_AP < g_P")
    w_max = float(np.max(np.abs(W))) if W.size else 0.0
    if w_max == 0:
        return np.full(W.shape, g_AP), np.full(W.shape, g_AP), WeightMapping(g_P - g_AP, g_AP)
    s = (g_P - g_AP) / w_max
    G_plus = np.clip(g_AP + s * np.maximum(W, 0.0), g_AP, g_P)
    G_minus = np.clip(g_AP + s * np.maximum(-W, 0.0), g_AP, g_P)
    return G_plus, G_minus, WeightMapping(s, g_AP)


def decode_weights(G_plus, G_minus, mapping: WeightMapping) -> np.ndarray:
    return (np.asarray(G_plus, dtype=float) - np.asarray(G_minus, dtype=float)) / mapping.scale_S_per_unit


def quantize_position(x, n_levels: int, window: tuple[float, float]):
    """Snap to the nearest of ``n_levels`` evenly spaced points on ``[a, b]``; ties go toward ``b``."""
    if n_levels < 2:
        raise ValueError("n_levels must be >= 2")
    a, b = window
    step = (b - a) / (n_levels - 1)
    k = np.clip(np.floor((np.asarray(x, dtype=float) - a) / step + 0.5), 0, n_levels - 1)
    out = a + k * step
    return float(out) if np.ndim(out) == 0 else out


def quantize_conductances(G, n_levels: int, g_AP: float, g_P: float) -> np.ndarray:
    """Conductances programmable with ``n_levels`` evenly spaced DW positions."""
    return quantize_position(G, n_levels, (g_AP, g_P))


def build_network(
    weights: Sequence,
    neuron: NeuronDevice,
    synapse: SynapseDevice,
    wire_resistance_ohm: float = 0.0,
    sense_resistance_ohm: float = 10e3,
    quantize_levels: Optional[int] = None,
) -> Network:
    """Differential crossbar network with one weight matrix per layer and identical neurons."""
    g_AP, g_P = synapse.barrier.g_antiparallel_S, synapse.barrier.g_parallel_S
    layers = []
    for W in weights:
        W = np.asarray(W, dtype=float)
        G_plus, G_minus, _ = map_weights(W, g_AP, g_P)
        if quantize_levels:
            G_plus = quantize_conductances(G_plus, quantize_levels, g_AP, g_P)
            G_minus = quantize_conductances(G_minus, quantize_levels, g_AP, g_P)
        diff = DifferentialLayer(
            CrossbarLayer.from_conductances(synapse, G_plus, wire_resistance_ohm),
            CrossbarLayer.from_conductances(synapse, G_minus, wire_resistance_ohm),
        )
        layers.append(NetworkLayer(diff, [neuron] * W.shape[1]))
    return Network(layers, input_width=np.asarray(weights[0]).shape[0],
                   sense_resistance_ohm=sense_resistance_ohm)


# -- abstract LIF oracle ----------------------------------------------------------


@dataclass(frozen=True)
class AbstractLifNeuron:
    membrane: float = 0.0
    threshold: float = 0.8
    leak_rate: float = 0.0  # 1/s
    gain: float = 1.0  # (1/s)/A

    def __post_init__(self):
        if not 0 <= self.membrane <= 1:
            raise ValueError("membrane must lie in [0, 1]")
        if not 0 < self.threshold <= 1:
            raise ValueError("threshold must lie in (0, 1]")


def lif_oracle_step(neuron: AbstractLifNeuron, input_current: float, dt: float):
    if not dt > 0:
        raise ValueError("dt must be > 0")
    m = neuron.membrane + (neuron.gain * input_current - neuron.leak_rate) * dt
    m = min(max(m, 0.0), 1.0)
    if m >= neuron.threshold * (1.0 - FIRE_RTOL):
        return replace(neuron, membrane=0.0), True
    return replace(neuron, membrane=m), False


def abstract_from_device(device: NeuronDevice, position_m: float = 0.0) -> AbstractLifNeuron:
    g = device.geometry
    if not g.is_rectangular:
        raise UnsupportedConfiguration("tapered tracks have position-dependent gain")
    if not isinstance(device.leak, DipolarField):
        raise UnsupportedConfiguration(f"{type(device.leak).__name__} leak is not exactly reducible")
    if device.reset_position_m != 0 or device.refractory_s != 0:
        raise UnsupportedConfiguration("oracle assumes reset to x=0 and no refractory window")
    L = g.length_m
    return AbstractLifNeuron(
        membrane=position_m / L,
        threshold=device.fire_position_m / L,
        leak_rate=device.leak.drift_speed_mps / L,
        gain=device.material.stt_mobility / (g.width_start_m * g.thickness_m * L),
    )


def run_abstract_network(
    network: Network,
    drives: DriveWaveform,
    config: SimConfig,
    initial_states: Optional[Sequence[Sequence[NeuronState]]] = None,
) -> dict:
    """Spike times per ``(layer, neuron)`` from the abstract model.

    Readout is the ideal differential dot product; inter-layer coupling uses the same
    one-step latency and one-step output pulse as the device simulator.
    """
    weights, neurons, levels = [], [], []
    for k, layer in enumerate(network.layers):
        xb = layer.crossbar
        parts = [xb.plus, xb.minus] if isinstance(xb, DifferentialLayer) else [xb]
        if any(p.wire_resistance_per_segment_ohm != 0 for p in parts):
            raise UnsupportedConfiguration("oracle assumes ideal wires")
        if isinstance(xb, DifferentialLayer):
            weights.append((conductance_matrix(xb.plus), conductance_matrix(xb.minus)))
        else:
            weights.append((conductance_matrix(xb), None))
        start = initial_states[k] if initial_states is not None else [NeuronState()] * len(layer.neurons)
        neurons.append([abstract_from_device(d, s.dw_position_m) for d, s in zip(layer.neurons, start)])
        levels.append([
            (d.supply_voltage_V * d.output_mtj.g_antiparallel_S, d.supply_voltage_V * d.output_mtj.g_parallel_S)
            for d in layer.neurons
        ])

    spikes = {(k, j): [] for k, layer in enumerate(neurons) for j in range(len(layer))}
    fired_prev = [[False] * len(layer) for layer in neurons]
    dt, policy = config.dt, config.inhibition
    for n in range(config.n_steps):
        t = n * dt
        fired_now = []
        for k in range(len(neurons)):
            if k == 0:
                V = drives.amplitudes_at(t)
            else:
                V = np.array([levels[k - 1][j][1] if f else levels[k - 1][j][0]
                              for j, f in enumerate(fired_prev[k - 1])]) * network.sense_resistance_ohm
            G_plus, G_minus = weights[k]
            I = G_plus.T @ V if G_minus is None else G_plus.T @ V - G_minus.T @ V
            crossings = []
            for j, nrn in enumerate(neurons[k]):
                rate = nrn.gain * I[j] - nrn.leak_rate
                m0 = nrn.membrane
                neurons[k][j], f = lif_oracle_step(nrn, float(I[j]), dt)
                if f:
                    frac = (nrn.threshold - m0) / rate if rate > 0 else 0.0
                    crossings.append((t + min(max(frac, 0.0), dt), j))
            if crossings and isinstance(policy, WinnerTakeAll):
                crossings = [min(crossings)]
            for t_spike, j in crossings:
                spikes[(k, j)].append(t_spike)
            fired = [j for _, j in crossings]
            if crossings and not isinstance(policy, NoInhibition):
                winner = min(crossings)[1]
                for j, nrn in enumerate(neurons[k]):
                    if j == winner:
                        continue
                    if isinstance(policy, WinnerTakeAll):
                        m = 0.0
                    else:
                        L = network.layers[k].neurons[j].geometry.length_m
                        m = max(nrn.membrane - policy.inhibit_displacement_m / L, 0.0)
                    neurons[k][j] = replace(nrn, membrane=m)
            flags = [False] * len(neurons[k])
            for j in fired:
                flags[j] = True
            fired_now.append(flags)
        fired_prev = fired_now
    return spikes


@dataclass
class VerificationReport:
    max_deviation_s: float
    spike_count_match: bool
    per_neuron: dict = field(default_factory=dict)  # (layer, neuron) -> (n_device, n_oracle, max_dev)

    def to_text(self) -> str:
        lines = [
            f"max_deviation_s={self.max_deviation_s:.9e}",
            f"spike_count_match={'true' if self.spike_count_match else 'false'}",
        ]
        for (k, j), (nd, no, dev) in sorted(self.per_neuron.items()):
            lines.append(f"neuron_{k}_{j}=device:{nd},oracle:{no},max_deviation_s:{dev:.9e}")
        return "\n".join(lines) + "\n"


def verify_against_oracle(
    network: Network,
    drives: DriveWaveform,
    config: SimConfig,
    initial_states: Optional[Sequence[Sequence[NeuronState]]] = None,
) -> VerificationReport:
    oracle = run_abstract_network(network, drives, config, initial_states)
    trace = run_network(network, drives, config, initial_states)
    per_neuron, worst, match = {}, 0.0, True
    for key, ref in oracle.items():
        got = trace.events_for(*key)
        # greedy in-order pairing
        devs = [abs(a - b) for a, b in zip(got, ref)]
        dev = max(devs, default=0.0)
        per_neuron[key] = (len(got), len(ref), dev)
        worst = max(worst, dev)
        match = match and len(got) == len(ref)
    return VerificationReport(worst, match, per_neuron)
