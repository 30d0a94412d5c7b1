"""Structural channel analysis: relative degrees, invariant zeros, verdicts."""

import numpy as np
import pytest

from sentinet.netgraph import (
    ConfigError,
    SampledLaplacian,
    build_network,
    graph_distances,
    nominal_laplacian,
    sample_laplacian,
)
from sentinet.sysid import (
    DecoupledChannelError,
    SystemRealization,
    Verdict,
    design_gain_shift,
    feasibility_verdict,
    invariant_zeros,
    realization,
    relative_degree,
)

PATH3 = {
    "n_vertices": 3,
    "edges": [[1, 2], [2, 3]],
    "nominal_weight": -2.0,
    "uncertainty": [-0.4, 0.4],
    "self_loop_gain": 0.4,
    "target_vertex": 3,
}

NET10 = {
    "n_vertices": 10,
    "edges": [[2, 5], [3, 5], [5, 6], [5, 10], [2, 3], [2, 6], [2, 10],
              [3, 6], [6, 10], [1, 2], [2, 4], [6, 7], [6, 8], [6, 9]],
    "nominal_weight": -10.0,
    "uncertainty": [-0.5, 0.5],
    "self_loop_gain": 0.5,
    "target_vertex": 5,
}

# Hurwitz state matrix whose attack-1 -> monitor-2 channel has numerator
# 2s - 1, hence a finite zero at +0.5 in the open right half-plane.
A_UNSTABLE_ZERO = np.array([
    [-1.0, 0.0, 0.0],
    [2.0, -1.0, -3.0],
    [1.0, 0.0, -1.0],
])


def path3_system(attack, monitor):
    net = build_network(PATH3)
    return realization(nominal_laplacian(net), attack=attack, monitor=monitor,
                       target=net.target_vertex)


def zeros_oracle(sys, channel):
    """Finite channel zeros via the numerator polynomial of c (sI-A)^-1 b.

    Builds the numerator coefficients with the Faddeev-LeVerrier adjugate
    recursion (M_0 = I, M_k = A M_{k-1} - tr(A M_{k-1})/k * I, coefficient
    k is c M_k b) on the spectrally rescaled matrix, deflates structurally
    zero leading coefficients, and takes companion-matrix roots.  This never
    touches the pencil eigenvalue route used by the implementation.
    """

    scale = float(np.linalg.norm(sys.a_matrix, 2))
    a = sys.a_matrix / scale
    b = sys.input_vector()
    c = sys.output_vector(channel)
    n = sys.n
    coeffs = np.empty(n)
    m = np.eye(n)
    for k in range(n):
        coeffs[k] = c @ m @ b
        if k < n - 1:
            am = a @ m
            m = am - (np.trace(am) / (k + 1)) * np.eye(n)
    lead = 0
    while lead < n and abs(coeffs[lead]) <= 1e-9:
        lead += 1
    assert lead < n, "oracle saw a decoupled channel"
    roots = np.roots(coeffs[lead:]) * scale if lead < n - 1 else np.array([])
    return sorted((complex(z) for z in roots), key=lambda z: (z.real, z.imag))


# ---------------------------------------------------------------------------
# realization plumbing
# ---------------------------------------------------------------------------


def test_realization_negates_sampled_matrix():
    net = build_network(PATH3)
    sample = nominal_laplacian(net)
    sys = realization(sample, attack=1, monitor=2, target=3)
    np.testing.assert_allclose(sys.a_matrix, -sample.matrix, atol=0.0)
    np.testing.assert_allclose(sys.input_vector(), [1.0, 0.0, 0.0])
    np.testing.assert_allclose(sys.output_vector("monitor"), [0.0, 1.0, 0.0])
    np.testing.assert_allclose(sys.output_vector("target"), [0.0, 0.0, 1.0])


@pytest.mark.parametrize(
    "kwargs",
    [
        {"attack_vertex": 1, "target_vertex": 1, "monitor_vertex": 2},
        {"attack_vertex": 2, "target_vertex": 1, "monitor_vertex": 1},
        {"attack_vertex": 4, "target_vertex": 1, "monitor_vertex": 2},
    ],
)
def test_realization_vertex_validation(kwargs):
    with pytest.raises(ConfigError):
        SystemRealization(a_matrix=-np.eye(3), **kwargs)


def test_realization_rejects_nonsquare_matrix():
    with pytest.raises(ConfigError):
        SystemRealization(a_matrix=np.zeros((2, 3)), attack_vertex=1,
                          target_vertex=2, monitor_vertex=1)


def test_output_vector_rejects_unknown_channel():
    sys = path3_system(1, 2)
    with pytest.raises(ValueError):
        sys.output_vector("sensor")


# ---------------------------------------------------------------------------
# relative degree
# ---------------------------------------------------------------------------


def test_relative_degree_is_hop_distance_plus_one_on_path():
    sys = path3_system(attack=1, monitor=2)
    assert relative_degree(sys, "monitor") == 2
    assert relative_degree(sys, "target") == 3
    # first nonzero Markov parameter of the target channel, by hand:
    # (A^2)[3,1] = A[3,2] * A[2,1] = 2 * 2
    a = sys.a_matrix
    h = float(sys.output_vector("target") @ a @ a @ sys.input_vector())
    assert h == pytest.approx(4.0, abs=1e-12)


def test_relative_degree_matches_graph_distance_on_sampled_network():
    # with strictly negative couplings the Markov chain of signs never
    # cancels, so the relative degree equals hop distance plus one
    net = build_network(NET10)
    sample = sample_laplacian(net, rng_seed=2024, index=2)
    for attack, monitor in [(1, 6), (4, 2), (7, 2), (9, 6), (10, 2), (8, 8)]:
        sys = realization(sample, attack=attack, monitor=monitor, target=5)
        dist = graph_distances(net, attack)
        assert relative_degree(sys, "monitor") == dist[monitor] + 1
        assert relative_degree(sys, "target") == dist[5] + 1


def test_relative_degree_raises_on_decoupled_channel():
    sys = SystemRealization(a_matrix=np.diag([-1.0, -2.0, -3.0]),
                            attack_vertex=1, target_vertex=3, monitor_vertex=2)
    with pytest.raises(DecoupledChannelError):
        relative_degree(sys, "monitor")
    with pytest.raises(DecoupledChannelError):
        invariant_zeros(sys, "monitor")


# ---------------------------------------------------------------------------
# invariant zeros
# ---------------------------------------------------------------------------


def test_path_monitor_zero_is_frozen_value():
    # attack 2, monitor 1 on the nominal path: numerator 2s + 4.8
    report = invariant_zeros(path3_system(attack=2, monitor=1), "monitor")
    assert len(report.finite_zeros) == 1
    assert report.finite_zeros[0] == pytest.approx(-2.4, abs=1e-12)
    assert report.infinite_zero_count == 2
    assert not report.has_unstable_finite_zero
    assert report.max_real_part == pytest.approx(-2.4, abs=1e-12)


def test_path_target_channel_has_only_infinite_zeros():
    report = invariant_zeros(path3_system(attack=1, monitor=2), "target")
    assert report.finite_zeros == ()
    assert report.infinite_zero_count == 3
    assert report.max_real_part == float("-inf")
    assert not report.has_unstable_finite_zero


def test_infinite_zero_count_equals_relative_degree():
    net = build_network(NET10)
    sample = sample_laplacian(net, rng_seed=2024, index=5)
    for attack, monitor in [(1, 2), (3, 6), (10, 6), (7, 9)]:
        sys = realization(sample, attack=attack, monitor=monitor, target=5)
        for channel in ("monitor", "target"):
            report = invariant_zeros(sys, channel)
            assert report.infinite_zero_count == relative_degree(sys, channel)


def test_finite_zeros_match_numerator_polynomial_oracle():
    # the polynomial route loses digits on clustered zeros, so it only pins
    # the location coarsely; the rank-drop certificate below is the sharp one
    net = build_network(NET10)
    sample = sample_laplacian(net, rng_seed=2024, index=7)
    for attack, monitor in [(1, 2), (3, 6), (10, 2), (8, 6), (4, 9)]:
        sys = realization(sample, attack=attack, monitor=monitor, target=5)
        for channel in ("monitor", "target"):
            report = invariant_zeros(sys, channel)
            oracle = zeros_oracle(sys, channel)
            assert len(oracle) == len(report.finite_zeros)
            assert len(oracle) == sys.n - report.infinite_zero_count
            for got, want in zip(report.finite_zeros, oracle):
                assert abs(got - want) <= 1e-3 * (1.0 + abs(want))


def test_reported_zeros_drop_channel_matrix_rank():
    # at an exact zero z the matrix [[zI - A, -b], [c, 0]] is singular; the
    # smallest singular value measures how far a reported zero is from one
    net = build_network(NET10)
    sample = sample_laplacian(net, rng_seed=2024, index=7)
    for attack, monitor in [(1, 2), (10, 2), (4, 9)]:
        sys = realization(sample, attack=attack, monitor=monitor, target=5)
        n = sys.n
        block = np.zeros((n + 1, n + 1), dtype=complex)
        block[:n, n] = -sys.input_vector()
        block[n, :n] = sys.output_vector("monitor")
        scale = float(np.linalg.norm(sys.a_matrix, 2))
        for z in invariant_zeros(sys, "monitor").finite_zeros:
            block[:n, :n] = z * np.eye(n) - sys.a_matrix
            sigma_min = np.linalg.svd(block, compute_uv=False)[-1]
            assert sigma_min <= 1e-10 * max(1.0, scale)


def test_unstable_zero_detected():
    sys = SystemRealization(a_matrix=A_UNSTABLE_ZERO, attack_vertex=1,
                            target_vertex=3, monitor_vertex=2)
    report = invariant_zeros(sys, "monitor")
    assert report.finite_zeros == (pytest.approx(0.5, abs=1e-12),)
    assert report.has_unstable_finite_zero
    assert report.max_real_part == pytest.approx(0.5, abs=1e-12)


def test_zero_shift_law():
    # replacing A by A - s*I moves every finite zero left by exactly s
    net = build_network(NET10)
    sample = sample_laplacian(net, rng_seed=2024, index=3)
    shift = 0.7
    base = realization(sample, attack=10, monitor=2, target=5)
    moved = SystemRealization(a_matrix=base.a_matrix - shift * np.eye(10),
                              attack_vertex=10, target_vertex=5, monitor_vertex=2)
    z0 = invariant_zeros(base, "monitor").finite_zeros
    z1 = invariant_zeros(moved, "monitor").finite_zeros
    assert len(z0) == len(z1)
    for a, b in zip(z0, z1):
        assert abs(b - (a - shift)) <= 1e-9 * (1.0 + abs(a))


def test_zero_scale_law():
    net = build_network(NET10)
    sample = sample_laplacian(net, rng_seed=2024, index=3)
    alpha = 2.0
    base = realization(sample, attack=3, monitor=6, target=5)
    scaled = SystemRealization(a_matrix=alpha * base.a_matrix,
                               attack_vertex=3, target_vertex=5, monitor_vertex=6)
    z0 = invariant_zeros(base, "monitor").finite_zeros
    z1 = invariant_zeros(scaled, "monitor").finite_zeros
    for a, b in zip(z0, z1):
        assert abs(b - alpha * a) <= 1e-9 * (1.0 + abs(alpha * a))


# ---------------------------------------------------------------------------
# feasibility verdicts
# ---------------------------------------------------------------------------


def test_verdict_feasible_on_path_pair():
    assert feasibility_verdict(path3_system(attack=2, monitor=1)) is Verdict.FEASIBLE


def test_verdict_infeasible_relative_degree():
    # attack 1, monitor 3, target 2 on the path: the monitor is two hops
    # away but the target only one, so the monitor reacts too slowly
    net = build_network(PATH3)
    sys = realization(nominal_laplacian(net), attack=1, monitor=3, target=2)
    assert feasibility_verdict(sys) is Verdict.INFEASIBLE_RELATIVE_DEGREE


def test_verdict_infeasible_unstable_zero():
    sys = SystemRealization(a_matrix=A_UNSTABLE_ZERO, attack_vertex=1,
                            target_vertex=3, monitor_vertex=2)
    assert feasibility_verdict(sys) is Verdict.INFEASIBLE_UNSTABLE_ZERO


def test_verdict_values_are_stable_strings():
    assert Verdict.FEASIBLE.value == "Feasible"
    assert Verdict.INFEASIBLE_RELATIVE_DEGREE.value == "InfeasibleRelativeDegree"
    assert Verdict.INFEASIBLE_UNSTABLE_ZERO.value == "InfeasibleUnstableZero"


# ---------------------------------------------------------------------------
# stabilising gain shift
# ---------------------------------------------------------------------------


def test_design_gain_shift_zero_when_already_stable():
    net = build_network(PATH3)
    samples = [nominal_laplacian(net)] + [
        sample_laplacian(net, rng_seed=3, index=i) for i in (1, 2)
    ]
    assert design_gain_shift(net, samples) == 0.0


def test_design_gain_shift_clears_unstable_zero():
    net = build_network(PATH3)
    crafted = SampledLaplacian(matrix=-A_UNSTABLE_ZERO, sample_index=1, seed_trace=0)
    shift = design_gain_shift(net, [crafted], pairs=[(1, 2)])
    assert shift == pytest.approx(0.5 + 1e-6, abs=1e-12)
    # the shifted realization's monitor zero must now be strictly stable
    moved = SystemRealization(a_matrix=A_UNSTABLE_ZERO - shift * np.eye(3),
                              attack_vertex=1, target_vertex=3, monitor_vertex=2)
    assert not invariant_zeros(moved, "monitor").has_unstable_finite_zero


def test_gain_shift_consistency_between_network_and_zero_motion():
    # shifting gains by s changes the sampled matrix by s*I, so monitor
    # zeros move left by s; verify end to end through the network layer
    net = build_network(PATH3)
    from sentinet.netgraph import with_shifted_gains

    shifted_net = with_shifted_gains(net, 0.3)
    base = realization(nominal_laplacian(net), attack=2, monitor=1, target=3)
    moved = realization(nominal_laplacian(shifted_net), attack=2, monitor=1, target=3)
    z0 = invariant_zeros(base, "monitor").finite_zeros[0]
    z1 = invariant_zeros(moved, "monitor").finite_zeros[0]
    assert z1 == pytest.approx(z0 - 0.3, abs=1e-10)
