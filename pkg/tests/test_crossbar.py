import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from dwmtj.crossbar import (
    CrossbarError,
    CrossbarLayer,
    DifferentialLayer,
    conductance_matrix,
    differential_layer_currents,
    ideal_layer_currents,
    nodal_solve,
    read_matrix_csv,
    transfer_matrix,
    write_matrix_csv,
)
from dwmtj.device import SynapseDevice

from oracles import kirchhoff_2x2

SYN = SynapseDevice()
G_AP, G_P = 1e-5, 5e-5


def random_layer(rng, n, m, r_seg=0.0):
    return CrossbarLayer.from_positions(SYN, rng.uniform(0, 1e-6, (n, m)), r_seg)


def test_conductance_matrix_endpoints_and_mixed():
    assert np.allclose(conductance_matrix(CrossbarLayer.from_positions(SYN, np.full((2, 3), 0.1e-6))), G_AP)
    assert np.allclose(conductance_matrix(CrossbarLayer.from_positions(SYN, np.full((2, 3), 0.9e-6))), G_P)
    G = conductance_matrix(CrossbarLayer.from_positions(SYN, [[0.1e-6, 0.5e-6], [0.9e-6, 0.0]]))
    assert np.allclose(G, [[G_AP, 3e-5], [G_P, G_AP]])


def test_from_conductances_round_trips():
    G = np.array([[1e-5, 2.5e-5], [4e-5, 5e-5]])
    assert np.allclose(conductance_matrix(CrossbarLayer.from_conductances(SYN, G)), G, rtol=1e-12)


def test_layer_rejects_ragged_and_negative_wire():
    with pytest.raises(CrossbarError):
        CrossbarLayer([[SYN, SYN], [SYN]])
    with pytest.raises(CrossbarError):
        CrossbarLayer([[SYN]], -1.0)


def test_ideal_examples():
    g = 3e-5
    assert np.allclose(ideal_layer_currents([1, 1], np.diag([g, g])), [g, g])
    G = [[1e-4, 2e-4], [3e-4, 4e-4]]
    assert np.allclose(ideal_layer_currents([0.1, 0.2], G), [7e-5, 1e-4], rtol=1e-12)
    assert np.all(ideal_layer_currents([0, 0], G) == 0)


def test_ideal_dimension_mismatch():
    with pytest.raises(CrossbarError):
        ideal_layer_currents([1, 2, 3], np.ones((2, 2)))


G_MATS = arrays(float, (4, 3), elements=st.floats(G_AP, G_P))
V_VECS = arrays(float, 4, elements=st.floats(-1, 1))


@given(G=G_MATS, V1=V_VECS, V2=V_VECS, alpha=st.floats(-10, 10))
def test_ideal_is_linear(G, V1, V2, alpha):
    I1, I2 = ideal_layer_currents(V1, G), ideal_layer_currents(V2, G)
    scale = np.abs(V1) @ G + np.abs(V2) @ G + 1e-30
    assert np.all(np.abs(ideal_layer_currents(V1 + V2, G) - (I1 + I2)) <= 1e-12 * scale)
    assert np.all(np.abs(ideal_layer_currents(alpha * V1, G) - alpha * I1) <= 1e-12 * abs(alpha) * scale + 1e-300)


def test_nodal_zero_resistance_is_ideal():
    rng = np.random.default_rng(0)
    layer = random_layer(rng, 5, 4)
    V = rng.uniform(0, 1, 5)
    word, bit, I = nodal_solve(layer, V)
    assert np.allclose(I, V @ conductance_matrix(layer), rtol=1e-12, atol=0)
    assert np.all(bit == 0) and np.allclose(word, V[:, None])


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("r", [1.0, 1e3, 1e5])
def test_nodal_matches_hand_kirchhoff_2x2(seed, r):
    rng = np.random.default_rng(seed)
    G = rng.uniform(G_AP, G_P, (2, 2))
    V = rng.uniform(0, 1, 2)
    layer = CrossbarLayer.from_conductances(SYN, G, r)
    expected = kirchhoff_2x2(conductance_matrix(layer), V, r)
    assert np.allclose(nodal_solve(layer, V)[2], expected, rtol=1e-9, atol=0)


def test_nodal_1x1_has_no_segments():
    layer = CrossbarLayer.from_conductances(SYN, [[2e-5]], 50.0)
    assert nodal_solve(layer, [0.3])[2] == pytest.approx([6e-6], rel=1e-12)


def test_nodal_node_voltages_between_ground_and_drive():
    rng = np.random.default_rng(4)
    layer = random_layer(rng, 6, 6, 200.0)
    V = rng.uniform(0, 1, 6)
    word, bit, _ = nodal_solve(layer, V)
    assert word.min() >= -1e-15 and word.max() <= V.max() + 1e-15
    assert bit.min() >= -1e-15 and np.all(bit <= word + 1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_transfer_matrix_matches_direct_solve(seed):
    rng = np.random.default_rng(seed)
    layer = random_layer(rng, 5, 7, 30.0)
    V = rng.uniform(-1, 1, 5)
    assert np.allclose(V @ transfer_matrix(layer), nodal_solve(layer, V)[2], rtol=1e-10, atol=1e-20)


def test_nodal_sweep_deviation_monotone():
    rng = np.random.default_rng(11)
    for _ in range(5):
        pos = rng.uniform(0, 1e-6, (8, 8))
        V = rng.uniform(0, 1, 8)
        ideal = V @ conductance_matrix(CrossbarLayer.from_positions(SYN, pos))
        devs = []
        for r in np.logspace(-3, 2, 11) / G_P:
            I = nodal_solve(CrossbarLayer.from_positions(SYN, pos, r), V)[2]
            devs.append(np.max(np.abs(I - ideal) / ideal))
        assert all(b > a for a, b in zip(devs, devs[1:]))


# Measured at R_seg = 1e-3/g_P on uniformly placed 8x8 instances, 200 draws:
# min 2.2e-2, mean 2.9e-2, max 3.7e-2.
NODAL_BOUND_AT_1E_3 = 4e-2


def test_nodal_deviation_bound_at_small_resistance():
    rng = np.random.default_rng(12)
    worst = 0.0
    for _ in range(50):
        pos = rng.uniform(0, 1e-6, (8, 8))
        V = rng.uniform(0, 1, 8)
        layer = CrossbarLayer.from_positions(SYN, pos, 1e-3 / G_P)
        ideal = V @ conductance_matrix(layer)
        worst = max(worst, np.max(np.abs(nodal_solve(layer, V)[2] - ideal) / ideal))
    assert worst < NODAL_BOUND_AT_1E_3


@pytest.mark.parametrize("seed", range(20))
def test_parasitics_only_lose_signal(seed):
    rng = np.random.default_rng(100 + seed)
    n, m = rng.integers(1, 9, 2)
    layer = random_layer(rng, n, m, float(rng.uniform(1, 2000)))
    V = rng.uniform(0, 1, n)
    ideal = V @ conductance_matrix(layer)
    assert np.all(nodal_solve(layer, V)[2] <= ideal * (1 + 1e-12))


def test_differential_examples():
    rng = np.random.default_rng(5)
    pos = rng.uniform(0, 1e-6, (3, 3))
    same = DifferentialLayer(CrossbarLayer.from_positions(SYN, pos), CrossbarLayer.from_positions(SYN, pos))
    assert np.all(differential_layer_currents(rng.uniform(0, 1, 3), same) == 0)

    plus = random_layer(rng, 3, 3)
    floor = CrossbarLayer.from_positions(SYN, np.full((3, 3), 0.0))
    V = rng.uniform(0, 1, 3)
    expected = V @ conductance_matrix(plus) - V.sum() * G_AP
    assert np.allclose(differential_layer_currents(V, DifferentialLayer(plus, floor)), expected, rtol=1e-12)

    minus = random_layer(rng, 3, 3)
    got = differential_layer_currents(V, DifferentialLayer(plus, minus))
    ref = ideal_layer_currents(V, conductance_matrix(plus)) - ideal_layer_currents(V, conductance_matrix(minus))
    assert np.array_equal(got, ref)


def test_differential_shape_mismatch():
    rng = np.random.default_rng(6)
    with pytest.raises(CrossbarError):
        DifferentialLayer(random_layer(rng, 2, 3), random_layer(rng, 3, 2))


def test_matrix_csv_round_trip(tmp_path):
    G = np.random.default_rng(7).uniform(G_AP, G_P, (4, 5))
    write_matrix_csv(G, tmp_path / "g.csv")
    assert np.array_equal(read_matrix_csv(tmp_path / "g.csv"), G)
