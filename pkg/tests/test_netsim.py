import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dwmtj.crossbar import CrossbarLayer
from dwmtj.device import (
    DipolarField,
    MtjState,
    NeuronDevice,
    NeuronState,
    SynapseDevice,
    neuron_output_current,
)
from dwmtj.netsim import (
    ConfigError,
    DriveWaveform,
    Network,
    NetworkLayer,
    NoInhibition,
    Partial,
    SimConfig,
    WinnerTakeAll,
    apply_inhibition,
    dc_encode,
    pulse_train,
    rate_encode,
    run_network,
    simulate_neuron,
    wordline_drive,
)

SYN = SynapseDevice()


def one_by_one(conductance, neuron):
    layer = CrossbarLayer.from_conductances(SYN, [[conductance]])
    return Network([NetworkLayer(layer, [neuron])], input_width=1)


# -- drives ---------------------------------------------------------------------


def test_dc_encode_examples():
    assert dc_encode([0.0], 0.1).amplitudes_at(1e-6)[0] == 0.0
    assert dc_encode([1.0], 0.1).amplitudes_at(3e-6)[0] == pytest.approx(0.1)
    assert dc_encode([0.5], 0.1).amplitudes_at(0.0)[0] == pytest.approx(0.05)


def test_dc_encode_rejects_out_of_range():
    with pytest.raises(ConfigError):
        dc_encode([1.2], 0.1)


def test_rate_encode_counts():
    assert rate_encode([0.0], 10e6, 10e-9, 0.1, t_end_s=1e-6).pulses[0] == ()
    assert len(rate_encode([1.0], 10e6, 10e-9, 0.1, t_end_s=1e-6).pulses[0]) == 10


def test_rate_encode_rejects_overlap():
    with pytest.raises(ConfigError):
        rate_encode([1.0], 10e6, 100e-9, 0.1)


@given(u=st.floats(0, 1), width_frac=st.floats(0.05, 0.9))
def test_rate_encode_mean_drive(u, width_frac):
    f_max, window, v = 10e6, 2e-6, 0.2
    width = width_frac / f_max
    wave = rate_encode([u], f_max, width, v, t_end_s=window)
    # integrate the waveform on a fine grid, independent of the pulse list
    t = np.linspace(0, window, 200001)[:-1]
    mean = np.mean([wave.amplitudes_at(x)[0] for x in t[::10]])
    expected = u * f_max * width * v
    assert abs(mean - expected) <= width * v / window + 1e-3 * v


def test_rate_encode_jitter_is_seeded():
    a = rate_encode([0.5], 10e6, 10e-9, 0.1, seed=3, jitter=0.5)
    b = rate_encode([0.5], 10e6, 10e-9, 0.1, seed=3, jitter=0.5)
    c = rate_encode([0.5], 10e6, 10e-9, 0.1, seed=4, jitter=0.5)
    assert a == b and a != c


def test_waveform_rejects_overlapping_pulses():
    with pytest.raises(ConfigError):
        DriveWaveform((((0.0, 2.0, 1.0), (1.0, 3.0, 1.0)),))


def test_wordline_drive_examples():
    assert np.all(wordline_drive([0.0, 0.0], 10e3) == 0)
    assert wordline_drive([5e-6], 10e3)[0] == pytest.approx(0.05)
    d = NeuronDevice()
    outs = [neuron_output_current(NeuronState(mtj_state=MtjState.PARALLEL), d), neuron_output_current(NeuronState(), d)]
    assert np.allclose(wordline_drive(outs, 10e3), [0.05, 0.01])
    with pytest.raises(ConfigError):
        wordline_drive([1.0], 0.0)


# -- inhibition -----------------------------------------------------------------

DEVS = [NeuronDevice()] * 4


def test_inhibition_none_is_identity():
    states = [NeuronState(dw_position_m=x) for x in (0.5e-6, 0.7e-6, 0.3e-6, 0.0)]
    assert apply_inhibition(states, 3, NoInhibition(), DEVS) == states


def test_wta_resets_non_winners():
    states = [NeuronState(dw_position_m=x) for x in (0.5e-6, 0.7e-6, 0.3e-6, 0.0)]
    out = apply_inhibition(states, 3, WinnerTakeAll(), DEVS)
    assert [s.dw_position_m for s in out] == [0.0, 0.0, 0.0, 0.0]
    assert out[3] is states[3]


def test_partial_inhibition_clamps():
    states = [NeuronState(dw_position_m=0.1e-6), NeuronState(dw_position_m=0.5e-6), NeuronState()]
    out = apply_inhibition(states, 2, Partial(0.2e-6), DEVS[:3])
    assert out[0].dw_position_m == 0.0
    assert out[1].dw_position_m == pytest.approx(0.3e-6)


def test_partial_inhibition_rejects_displacement_beyond_track():
    with pytest.raises(ConfigError):
        apply_inhibition([NeuronState(), NeuronState()], 0, Partial(2e-6), DEVS[:2])


# -- network runs ---------------------------------------------------------------


def test_quiescent_network():
    rng = np.random.default_rng(0)
    layer = CrossbarLayer.from_positions(SYN, rng.uniform(0, 1e-6, (3, 2)))
    net = Network([NetworkLayer(layer, [NeuronDevice()] * 2)], 3)
    trace = run_network(net, dc_encode([0, 0, 0], 1.0), SimConfig(1e-9, 200e-9))
    assert trace.events == []
    assert np.all(trace.position_array() == 0)


def test_one_by_one_periodic_firing():
    # 2 V across 5e-5 S gives 100 uA: net +5 m/s against the 5 m/s dipolar leak
    net = one_by_one(5e-5, NeuronDevice(leak=DipolarField(5.0)))
    trace = run_network(net, dc_encode([1.0], 2.0), SimConfig(0.1e-9, 700e-9, sample_stride=50))
    times = [e.time_s for e in trace.events]
    assert len(times) == 4
    for k, t in enumerate(times, start=1):
        assert abs(t - 160e-9 * k) <= 0.1e-9 * k


def test_mismatched_network_rejected():
    rng = np.random.default_rng(1)
    l0 = NetworkLayer(CrossbarLayer.from_positions(SYN, rng.uniform(0, 1e-6, (3, 2))), [NeuronDevice()] * 2)
    l1 = NetworkLayer(CrossbarLayer.from_positions(SYN, rng.uniform(0, 1e-6, (3, 2))), [NeuronDevice()] * 2)
    with pytest.raises(ConfigError):
        Network([l0, l1], 3)
    with pytest.raises(ConfigError):
        NetworkLayer(l0.crossbar, [NeuronDevice()])


def test_sim_config_validation():
    with pytest.raises(ConfigError):
        SimConfig(0.0, 1e-6)
    with pytest.raises(ConfigError):
        SimConfig(1e-9, 1e-6, sample_stride=0)
    assert SimConfig(0.1e-9, 10e-6).n_steps == 100000


def _two_layer(seed=2):
    rng = np.random.default_rng(seed)
    neuron = NeuronDevice(leak=DipolarField(1.0))
    l0 = NetworkLayer(CrossbarLayer.from_positions(SYN, rng.uniform(0.5e-6, 1e-6, (3, 3))), [neuron] * 3)
    l1 = NetworkLayer(CrossbarLayer.from_positions(SYN, rng.uniform(0, 1e-6, (3, 2))), [neuron] * 2)
    return Network([l0, l1], 3, sense_resistance_ohm=1e6), dc_encode(rng.uniform(0.3, 1, 3), 1.5)


def _layer_columns(trace, layer):
    return [k for k, (l, _) in enumerate(trace.neuron_ids) if l == layer]


@pytest.mark.parametrize("seed", range(5))
def test_downstream_state_never_changes_upstream(seed):
    net, drive = _two_layer()
    cfg = SimConfig(0.2e-9, 1e-6, sample_stride=5)
    rng = np.random.default_rng(seed)
    base = run_network(net, drive, cfg)
    fuzzed_downstream = [
        [NeuronState() for _ in range(3)],
        [NeuronState(dw_position_m=float(x), mtj_state=MtjState(int(rng.integers(0, 2)))) for x in rng.uniform(0, 0.79e-6, 2)],
    ]
    other = run_network(net, drive, cfg, initial_states=fuzzed_downstream)
    cols = _layer_columns(base, 0)
    assert np.array_equal(base.position_array()[:, cols], other.position_array()[:, cols])
    assert [e for e in base.events if e.layer == 0] == [e for e in other.events if e.layer == 0]
    assert np.array_equal(base.current_array()[:, :3], other.current_array()[:, :3])


def test_layer_one_sees_layer_zero_spikes():
    net, drive = _two_layer()
    trace = run_network(net, drive, SimConfig(0.2e-9, 1e-6))
    ev = [e for e in trace.events if e.layer == 0]
    assert ev
    k = math.ceil(ev[0].time_s / 0.2e-9)  # step after the fire step
    cur = trace.current_array()
    assert not np.allclose(cur[k, 3:], cur[k - 1, 3:])


def test_wta_at_most_one_event_per_step():
    layer = CrossbarLayer.from_positions(SYN, np.full((2, 4), 0.9e-6))  # identical columns: simultaneous crossings
    net = Network([NetworkLayer(layer, [NeuronDevice(leak=DipolarField(1.0))] * 4)], 2)
    trace = run_network(net, dc_encode([1, 1], 1.0), SimConfig(0.5e-9, 500e-9, WinnerTakeAll()))
    assert trace.events
    assert {e.neuron for e in trace.events} == {0}
    steps = [math.ceil(e.time_s / 0.5e-9) for e in trace.events]
    assert len(steps) == len(set(steps))
    free = run_network(net, dc_encode([1, 1], 1.0), SimConfig(0.5e-9, 500e-9))
    assert {e.neuron for e in free.events} == {0, 1, 2, 3}


def test_run_is_deterministic():
    net, drive = _two_layer()
    cfg = SimConfig(0.2e-9, 500e-9, WinnerTakeAll(), 3)
    a, b = run_network(net, drive, cfg), run_network(net, drive, cfg)
    assert a == b


def test_pulsed_trace_sawtooth():
    d = NeuronDevice(leak=DipolarField(5.0))
    trace = simulate_neuron(d, pulse_train(100e-6, 50e-9, 100e-9, 400e-9), 0.1e-9, 400e-9)
    x = np.array(trace.positions)
    on = np.array(trace.currents) > 0
    dx = np.diff(x)
    assert np.all(dx[on[:-1]] > 0)
    interior_off = (~on[:-1]) & (x[:-1] > 0)
    assert np.all(dx[interior_off] < 0)
    assert trace.events == []


def test_simulate_neuron_mtj_column_flags_fire_step():
    d = NeuronDevice(leak=DipolarField(5.0))
    trace = simulate_neuron(d, pulse_train(100e-6, 1, 1, 1), 1e-9, 200e-9)
    assert len(trace.events) == 1
    k = trace.mtj.index(1)
    assert trace.times[k] == pytest.approx(math.ceil(trace.events[0].time_s / 1e-9 - 1e-9) * 1e-9)
    assert sum(trace.mtj) == 1


def test_wta_winner_is_earliest_crossing_not_lowest_index():
    # both columns cross in the same step; column 1 is 0.01% stronger
    layer = CrossbarLayer.from_conductances(SYN, [[3e-5, 3e-5 * (1 + 1e-4)]])
    net = Network([NetworkLayer(layer, [NeuronDevice(leak=DipolarField(1.0))] * 2)], 1)
    trace = run_network(net, dc_encode([1.0], 3.0), SimConfig(1e-9, 300e-9, WinnerTakeAll()))
    assert trace.events and {e.neuron for e in trace.events} == {1}
