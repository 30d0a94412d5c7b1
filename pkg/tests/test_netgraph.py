"""Network model construction, validation, and Laplacian sampling."""

import numpy as np
import pytest

from sentinet.netgraph import (
    ConfigError,
    SampledLaplacian,
    UncertainNetwork,
    build_network,
    graph_distances,
    neighbors,
    nominal_laplacian,
    sample_laplacian,
    with_shifted_gains,
)

PATH3 = {
    "n_vertices": 3,
    "edges": [[1, 2], [2, 3]],
    "nominal_weight": -2.0,
    "uncertainty": [-0.4, 0.4],
    "self_loop_gain": 0.4,
    "target_vertex": 3,
}

STAR10 = {
    "n_vertices": 10,
    "edges": [[2, 5], [3, 5], [5, 6], [5, 10], [2, 3], [2, 6], [2, 10],
              [3, 6], [6, 10], [1, 2], [2, 4], [6, 7], [6, 8], [6, 9]],
    "nominal_weight": -10.0,
    "uncertainty": [-0.5, 0.5],
    "self_loop_gain": 0.5,
    "target_vertex": 5,
}


# ---------------------------------------------------------------------------
# construction and validation
# ---------------------------------------------------------------------------


def test_build_network_canonicalises_edges():
    cfg = dict(PATH3)
    cfg["edges"] = [[3, 2], [2, 1]]  # reversed order and orientation
    net = build_network(cfg)
    assert net.edges == ((1, 2), (2, 3))
    assert net.nominal_weight[(1, 2)] == -2.0


def test_build_network_broadcasts_scalars():
    net = build_network(PATH3)
    assert net.uncertainty_bound[(2, 3)] == (-0.4, 0.4)
    np.testing.assert_allclose(net.self_loop_gains, [0.4, 0.4, 0.4])


def test_build_network_per_edge_lists_follow_input_order():
    cfg = dict(PATH3)
    cfg["edges"] = [[2, 3], [1, 2]]
    cfg["nominal_weight"] = [-5.0, -7.0]
    cfg["uncertainty"] = [[-1.0, 0.5], [-2.0, 0.25]]
    net = build_network(cfg)
    assert net.nominal_weight[(2, 3)] == -5.0
    assert net.nominal_weight[(1, 2)] == -7.0
    assert net.uncertainty_bound[(1, 2)] == (-2.0, 0.25)


@pytest.mark.parametrize(
    "mutation",
    [
        {"edges": [[1, 2], [1, 2]]},               # duplicate
        {"edges": [[1, 2], [2, 1]]},               # duplicate after canon
        {"edges": [[1, 1], [2, 3]]},               # self loop
        {"edges": [[1, 2], [2, 4]]},               # vertex out of range
        {"edges": [[1, 2]]},                       # disconnected (vertex 3)
        {"target_vertex": 9},                      # target out of range
        {"self_loop_gain": 0.0},                   # gain must be positive
        {"self_loop_gain": [0.4, 0.4]},            # wrong gain arity
        {"uncertainty": [-0.4, 2.5]},              # weight sign can flip
        {"uncertainty": [0.4, -0.4]},              # empty interval
        {"nominal_weight": [-2.0]},                # wrong weight arity
    ],
)
def test_build_network_rejects_bad_configs(mutation):
    cfg = dict(PATH3)
    cfg.update(mutation)
    with pytest.raises(ConfigError):
        build_network(cfg)


def test_build_network_missing_keys():
    with pytest.raises(ConfigError):
        build_network({"n_vertices": 3, "edges": [[1, 2], [2, 3]]})


def test_network_rejects_noncanonical_direct_construction():
    with pytest.raises(ConfigError):
        UncertainNetwork(
            n_vertices=2,
            edges=((2, 1),),
            nominal_weight={(2, 1): -1.0},
            uncertainty_bound={(2, 1): (0.0, 0.0)},
            self_loop_gains=np.array([1.0, 1.0]),
            target_vertex=2,
        )


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------


def test_nominal_matrix_matches_hand_computation():
    # path 1-2-3, weights -2, gains 0.4: off-diagonals keep the weight and
    # each endpoint's diagonal accumulates its negation plus the gain
    net = build_network(PATH3)
    want = np.array([
        [2.4, -2.0, 0.0],
        [-2.0, 4.4, -2.0],
        [0.0, -2.0, 2.4],
    ])
    got = nominal_laplacian(net)
    np.testing.assert_allclose(got.matrix, want, atol=0.0)
    assert got.sample_index == 0


def test_sampled_matrix_is_symmetric_with_gain_row_sums():
    net = build_network(STAR10)
    s = sample_laplacian(net, rng_seed=11, index=3)
    np.testing.assert_allclose(s.matrix, s.matrix.T, atol=0.0)
    np.testing.assert_allclose(s.matrix.sum(axis=1), net.self_loop_gains, atol=1e-12)


def test_sampled_offdiagonals_stay_in_interval():
    net = build_network(STAR10)
    for index in (1, 2, 3):
        s = sample_laplacian(net, rng_seed=5, index=index)
        for (i, j) in net.edges:
            w = s.matrix[i - 1, j - 1]
            lo, hi = net.uncertainty_bound[(i, j)]
            nominal = net.nominal_weight[(i, j)]
            assert nominal + lo <= w <= nominal + hi


def test_sampled_matrix_is_positive_definite():
    # negated state matrix must be Hurwitz for every admissible draw
    net = build_network(STAR10)
    for index in range(1, 8):
        s = sample_laplacian(net, rng_seed=42, index=index)
        assert np.linalg.eigvalsh(s.matrix)[0] > 0.0


# ---------------------------------------------------------------------------
# sampling determinism
# ---------------------------------------------------------------------------


def test_samples_are_pure_functions_of_seed_and_index():
    net = build_network(STAR10)
    a = sample_laplacian(net, rng_seed=9, index=6)
    b = sample_laplacian(net, rng_seed=9, index=6)
    assert np.array_equal(a.matrix, b.matrix)
    assert a.seed_trace == b.seed_trace


def test_samples_do_not_depend_on_draw_order():
    net = build_network(STAR10)
    direct = sample_laplacian(net, rng_seed=9, index=6)
    for index in (1, 2, 3, 4, 5):
        sample_laplacian(net, rng_seed=9, index=index)
    after = sample_laplacian(net, rng_seed=9, index=6)
    assert np.array_equal(direct.matrix, after.matrix)


def test_distinct_indices_and_seeds_differ():
    net = build_network(STAR10)
    base = sample_laplacian(net, rng_seed=9, index=1)
    assert not np.array_equal(base.matrix, sample_laplacian(net, rng_seed=9, index=2).matrix)
    assert not np.array_equal(base.matrix, sample_laplacian(net, rng_seed=10, index=1).matrix)


def test_sample_index_zero_is_reserved():
    net = build_network(PATH3)
    with pytest.raises(ConfigError):
        sample_laplacian(net, rng_seed=1, index=0)


def test_edge_sampler_override_and_bounds_enforcement():
    net = build_network(PATH3)
    pinned = sample_laplacian(net, rng_seed=1, index=1, edge_sampler=lambda rng, lo, hi: lo)
    for (i, j) in net.edges:
        want = net.nominal_weight[(i, j)] + net.uncertainty_bound[(i, j)][0]
        assert pinned.matrix[i - 1, j - 1] == pytest.approx(want, abs=0.0)
    with pytest.raises(ConfigError):
        sample_laplacian(net, rng_seed=1, index=1, edge_sampler=lambda rng, lo, hi: hi + 1.0)


def test_sampled_matrix_is_immutable():
    net = build_network(PATH3)
    s = sample_laplacian(net, rng_seed=1, index=1)
    with pytest.raises(ValueError):
        s.matrix[0, 0] = 99.0


# ---------------------------------------------------------------------------
# topology helpers
# ---------------------------------------------------------------------------


def test_neighbors_and_distances():
    net = build_network(STAR10)
    adj = neighbors(net)
    assert adj[1] == (2,)
    assert adj[5] == (2, 3, 6, 10)
    dist = graph_distances(net, 5)
    assert dist[5] == 0
    assert dist[2] == 1
    assert dist[1] == 2
    assert dist[7] == 2


def test_with_shifted_gains_returns_new_network():
    net = build_network(PATH3)
    shifted = with_shifted_gains(net, 0.25)
    np.testing.assert_allclose(shifted.self_loop_gains, [0.65, 0.65, 0.65])
    np.testing.assert_allclose(net.self_loop_gains, [0.4, 0.4, 0.4])


def test_sampled_laplacian_rejects_nonsquare():
    with pytest.raises(ConfigError):
        SampledLaplacian(matrix=np.ones((2, 3)), sample_index=1, seed_trace=0)
