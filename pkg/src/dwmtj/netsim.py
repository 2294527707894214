"""Fixed-step simulation of feed-forward DW-MTJ networks and single neurons.

Time is ``t_n = n * dt``. Layer 0 reads the input drive at ``t_n``; layer ``k > 0``
reads the output MTJ currents that layer ``k - 1`` presented at the end of the
previous step, so a signal advances one layer per step. A neuron that fires
presents its parallel-state output for exactly the following step.
"""

from __future__ import annotations

import bisect
import math
import sys
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from .crossbar import CrossbarLayer, DifferentialLayer, transfer_matrix
from .device import (
    MtjState,
    NeuronDevice,
    NeuronState,
    mtj_output_state,
    neuron_output_current,
    step_neuron,
)


class ConfigError(ValueError):
    pass


# -- inhibition -----------------------------------------------------------------


@dataclass(frozen=True)
class NoInhibition:
    pass


@dataclass(frozen=True)
class WinnerTakeAll:
    pass


@dataclass(frozen=True)
class Partial:
    inhibit_displacement_m: float

    def __post_init__(self):
        if not self.inhibit_displacement_m > 0:
            raise ConfigError("inhibit_displacement_m must be > 0")


InhibitionPolicy = Union[NoInhibition, WinnerTakeAll, Partial]


def apply_inhibition(
    layer_states: Sequence[NeuronState],
    winner_index: int,
    policy: InhibitionPolicy,
    devices: Sequence[NeuronDevice],
) -> list[NeuronState]:
    if not 0 <= winner_index < len(layer_states):
        raise IndexError(f"winner_index {winner_index} out of range")
    states = list(layer_states)
    if isinstance(policy, NoInhibition):
        return states
    for k, (s, dev) in enumerate(zip(states, devices)):
        if k == winner_index:
            continue
        if isinstance(policy, WinnerTakeAll):
            x = dev.reset_position_m
        elif isinstance(policy, Partial):
            if policy.inhibit_displacement_m > dev.geometry.length_m:
                raise ConfigError("inhibit displacement exceeds the track length")
            x = max(s.dw_position_m - policy.inhibit_displacement_m, 0.0)
        else:
            raise ConfigError(f"unknown inhibition policy {policy!r}")
        moved = replace(s, dw_position_m=x)
        states[k] = replace(moved, mtj_state=mtj_output_state(moved, dev))
    return states


# -- drives ---------------------------------------------------------------------


@dataclass(frozen=True)
class DriveWaveform:
    """Per-input pulse lists of ``(start_s, end_s, amplitude)``; pulses are half-open ``[start, end)``.

    Amplitudes are volts for network word lines and amperes for a bare neuron track.
    """

    pulses: tuple

    def __post_init__(self):
        cleaned = []
        for i, train in enumerate(self.pulses):
            train = tuple(sorted((float(a), float(b), float(v)) for a, b, v in train))
            for k, (a, b, _) in enumerate(train):
                if a < 0 or b <= a:
                    raise ConfigError(f"input {i}: bad pulse interval [{a}, {b})")
                if k and a < train[k - 1][1]:
                    raise ConfigError(f"input {i}: overlapping pulses")
            cleaned.append(train)
        object.__setattr__(self, "pulses", tuple(cleaned))
        object.__setattr__(self, "_starts", tuple([p[0] for p in t] for t in cleaned))

    @property
    def n_inputs(self) -> int:
        return len(self.pulses)

    def amplitudes_at(self, t: float) -> np.ndarray:
        out = np.zeros(len(self.pulses))
        for i, (train, starts) in enumerate(zip(self.pulses, self._starts)):
            k = bisect.bisect_right(starts, t) - 1
            if k >= 0 and t < train[k][1]:
                out[i] = train[k][2]
        return out


def _check_unit_interval(values) -> np.ndarray:
    u = np.asarray(values, dtype=float)
    if u.ndim != 1 or not np.all((u >= 0) & (u <= 1)):
        raise ConfigError("encoded values must be a vector in [0, 1]")
    return u


def dc_encode(values, v_max: float) -> DriveWaveform:
    u = _check_unit_interval(values)
    return DriveWaveform(tuple(((0.0, math.inf, v_max * x),) for x in u))


def rate_encode(
    values,
    f_max: float,
    pulse_width_s: float,
    v_pulse: float,
    seed: int = 0,
    t_end_s: float = 1e-6,
    jitter: float = 0.0,
) -> DriveWaveform:
    """Regular pulse trains at ``u_i * f_max`` over ``[0, t_end_s)``.

    ``jitter`` in [0, 1] shifts each pulse by a uniform fraction of its free slack,
    drawn from ``seed``; 0 gives the deterministic train.
    """
    u = _check_unit_interval(values)
    if not f_max > 0 or not pulse_width_s > 0:
        raise ConfigError("f_max and pulse_width_s must be > 0")
    if pulse_width_s >= 1.0 / f_max:
        raise ConfigError("pulse width must be shorter than the period 1/f_max")
    rng = np.random.default_rng(seed)
    trains = []
    for x in u:
        train = []
        if x > 0:
            rate = x * f_max
            period = 1.0 / rate if rate > 1.0 / sys.float_info.max else math.inf
            slack = max(min(period, t_end_s) - pulse_width_s, 0.0)
            n_pulses = math.ceil(t_end_s / period) if math.isfinite(period) else 1
            for k in range(n_pulses):
                start = k * period if k else 0.0
                if start >= t_end_s:
                    break
                if jitter:
                    start += jitter * rng.uniform() * slack
                train.append((start, start + pulse_width_s, v_pulse))
        trains.append(tuple(train))
    return DriveWaveform(tuple(trains))


def pulse_train(
    amplitude: float, pulse_width_s: float, period_s: float, t_end_s: float, start_s: float = 0.0
) -> DriveWaveform:
    """Single-input periodic pulses; ``pulse_width_s == period_s`` gives a constant drive."""
    if not 0 < pulse_width_s <= period_s:
        raise ConfigError("need 0 < pulse_width_s <= period_s")
    if pulse_width_s == period_s:
        return DriveWaveform((((start_s, math.inf, amplitude),),))
    pulses, k = [], 0
    while start_s + k * period_s < t_end_s:
        a = start_s + k * period_s
        pulses.append((a, a + pulse_width_s, amplitude))
        k += 1
    return DriveWaveform((tuple(pulses),))


def wordline_drive(neuron_outputs, sense_resistance_ohm: float) -> np.ndarray:
    if not sense_resistance_ohm > 0:
        raise ConfigError("sense_resistance_ohm must be > 0")
    return np.asarray(neuron_outputs, dtype=float) * sense_resistance_ohm


# -- network --------------------------------------------------------------------


@dataclass(frozen=True)
class NetworkLayer:
    crossbar: Union[CrossbarLayer, DifferentialLayer]
    neurons: tuple

    def __post_init__(self):
        object.__setattr__(self, "neurons", tuple(self.neurons))
        if len(self.neurons) != self.crossbar.cols_M:
            raise ConfigError(
                f"layer has {self.crossbar.cols_M} bit lines but {len(self.neurons)} neurons"
            )

    def readout_matrix(self) -> np.ndarray:
        """N x M matrix mapping word-line volts to net bit-line amperes."""
        if isinstance(self.crossbar, DifferentialLayer):
            return transfer_matrix(self.crossbar.plus) - transfer_matrix(self.crossbar.minus)
        return transfer_matrix(self.crossbar)


@dataclass(frozen=True)
class Network:
    layers: tuple
    input_width: int
    sense_resistance_ohm: float = 10e3

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise ConfigError("network has no layers")
        width = self.input_width
        for k, layer in enumerate(self.layers):
            if layer.crossbar.rows_N != width:
                raise ConfigError(f"layer {k} expects {layer.crossbar.rows_N} inputs, gets {width}")
            width = layer.crossbar.cols_M
        if not self.sense_resistance_ohm > 0:
            raise ConfigError("sense_resistance_ohm must be > 0")


@dataclass(frozen=True)
class SimConfig:
    dt: float
    t_end: float
    inhibition: InhibitionPolicy = field(default_factory=NoInhibition)
    sample_stride: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError("dt must be > 0")
        if not self.t_end > 0:
            raise ConfigError("t_end must be > 0")
        if self.sample_stride < 1:
            raise ConfigError("sample_stride must be >= 1")

    @property
    def n_steps(self) -> int:
        # tolerate t_end / dt landing a hair above an integer
        return max(1, math.ceil(self.t_end / self.dt - 1e-9))


@dataclass(frozen=True)
class NetFireEvent:
    time_s: float
    layer: int
    neuron: int


@dataclass
class SimTrace:
    """Samples are taken at the start of a step: positions and MTJ output states at
    ``t_n`` together with the bit-line currents that drive step ``n``."""

    neuron_ids: list  # (layer, neuron)
    bitline_ids: list  # (layer, bit line)
    times: list = field(default_factory=list)
    positions: list = field(default_factory=list)
    mtj: list = field(default_factory=list)
    currents: list = field(default_factory=list)
    events: list = field(default_factory=list)

    def position_array(self) -> np.ndarray:
        return np.array(self.positions).reshape(len(self.times), len(self.neuron_ids))

    def current_array(self) -> np.ndarray:
        return np.array(self.currents).reshape(len(self.times), len(self.bitline_ids))

    def events_for(self, layer: int, neuron: int) -> list[float]:
        return [e.time_s for e in self.events if e.layer == layer and e.neuron == neuron]


def _step_layer(states, devices, currents, t, dt, policy):
    """Step every neuron, then resolve inhibition. Returns (states, fired indices, events)."""
    new_states, fired, times = [], [], []
    for k, (s, dev, i_in) in enumerate(zip(states, devices, currents)):
        s_new, ev = step_neuron(s, dev, i_in, t, dt)
        new_states.append(s_new)
        if ev is not None:
            fired.append(k)
            times.append(ev.time_s)
    if not fired or isinstance(policy, NoInhibition):
        return new_states, fired, times
    # earliest crossing within the step wins; exact ties go to the lowest index
    first = min(range(len(fired)), key=lambda i: (times[i], fired[i]))
    winner = fired[first]
    if isinstance(policy, WinnerTakeAll):
        for k in fired:
            if k == winner:
                continue
            # suppressed crossing: reset without the fire bookkeeping
            reset = replace(states[k], dw_position_m=devices[k].reset_position_m)
            new_states[k] = replace(reset, mtj_state=mtj_output_state(reset, devices[k]))
        fired, times = [winner], [times[first]]
    new_states = apply_inhibition(new_states, winner, policy, devices)
    return new_states, fired, times


def run_network(
    network: Network,
    drives: DriveWaveform,
    config: SimConfig,
    initial_states: Optional[Sequence[Sequence[NeuronState]]] = None,
) -> SimTrace:
    if drives.n_inputs != network.input_width:
        raise ConfigError(f"drive has {drives.n_inputs} inputs, network expects {network.input_width}")
    layers = network.layers
    readouts = [layer.readout_matrix() for layer in layers]
    devices = [list(layer.neurons) for layer in layers]
    if initial_states is None:
        states = [[NeuronState() for _ in d] for d in devices]
    else:
        states = [list(s) for s in initial_states]
        if [len(s) for s in states] != [len(d) for d in devices]:
            raise ConfigError("initial_states shape does not match the network")
    high = [[d.supply_voltage_V * d.output_mtj.g_parallel_S for d in devs] for devs in devices]
    outputs = [[neuron_output_current(s, d) for s, d in zip(ss, dd)] for ss, dd in zip(states, devices)]
    presenting = [[s.mtj_state == MtjState.PARALLEL for s in ss] for ss in states]

    trace = SimTrace(
        neuron_ids=[(l, n) for l, d in enumerate(devices) for n in range(len(d))],
        bitline_ids=[(l, j) for l, d in enumerate(devices) for j in range(len(d))],
    )
    dt, stride, policy = config.dt, config.sample_stride, config.inhibition
    for n in range(config.n_steps):
        t = n * dt
        v_in = drives.amplitudes_at(t)
        currents = [
            (
                (v_in if k == 0 else wordline_drive(outputs[k - 1], network.sense_resistance_ohm))
                @ readouts[k]
            ).tolist()
            for k in range(len(layers))
        ]
        if n % stride == 0:
            trace.times.append(t)
            for ss in states:
                trace.positions.extend(s.dw_position_m for s in ss)
            for pp in presenting:
                trace.mtj.extend(int(p) for p in pp)
            for I in currents:
                trace.currents.extend(I)
        new_outputs, new_presenting = [], []
        for k in range(len(layers)):
            states[k], fired, times = _step_layer(states[k], devices[k], currents[k], t, dt, policy)
            trace.events.extend(NetFireEvent(tf, k, j) for j, tf in zip(fired, times))
            fired_set = set(fired)
            new_outputs.append(
                [high[k][j] if j in fired_set else neuron_output_current(s, devices[k][j])
                 for j, s in enumerate(states[k])]
            )
            new_presenting.append(
                [j in fired_set or s.mtj_state == MtjState.PARALLEL for j, s in enumerate(states[k])]
            )
        outputs, presenting = new_outputs, new_presenting
    trace.events.sort(key=lambda e: (e.time_s, e.layer, e.neuron))
    return trace


def simulate_neuron(
    device: NeuronDevice,
    drive: DriveWaveform,
    dt: float,
    t_end: float,
    sample_stride: int = 1,
    initial_state: Optional[NeuronState] = None,
) -> SimTrace:
    """Drive one neuron's track directly with a current waveform (amperes)."""
    if drive.n_inputs != 1:
        raise ConfigError("single-neuron drive must have exactly one input")
    config = SimConfig(dt=dt, t_end=t_end, sample_stride=sample_stride)
    state = initial_state or NeuronState()
    trace = SimTrace(neuron_ids=[(0, 0)], bitline_ids=[(0, 0)])
    presenting = state.mtj_state == MtjState.PARALLEL
    for n in range(config.n_steps):
        t = n * dt
        i_in = float(drive.amplitudes_at(t)[0])
        if n % sample_stride == 0:
            trace.times.append(t)
            trace.positions.append(state.dw_position_m)
            trace.mtj.append(int(presenting))
            trace.currents.append(i_in)
        state, ev = step_neuron(state, device, i_in, t, dt)
        if ev is not None:
            trace.events.append(NetFireEvent(ev.time_s, 0, 0))
        presenting = ev is not None or state.mtj_state == MtjState.PARALLEL
    return trace
