"""Network, flow, and electric-quantity tests.

Derived expected values come from independent oracles computed here:
brute-force quadratic minimization for flows, explicit eigendecomposition
for spectral gaps, and the seeded Monte Carlo walkers for commute times.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vtqw.network import (Distribution, Flow, Network, NetworkError,
                          commute_time, commute_time_mc, effective_resistance,
                          hitting_time_mc, min_energy_flow,
                          min_energy_flow_to_set, network_from_dict,
                          spectral_gap, stationary_distribution, total_weight,
                          transition_matrix)
from vtqw.rand import random_connected_network


def unit_triangle():
    return Network(["a", "b", "c"],
                   [("a", "b", 1.0), ("b", "c", 1.0), ("a", "c", 1.0)])


def unit_path(k):
    names = [f"p{j}" for j in range(k + 1)]
    return Network(names, [(names[j], names[j + 1], 1.0) for j in range(k)])


def brute_force_min_energy(net, demand_vec):
    """Quadratic-program oracle: minimize sum theta_e^2/w_e s.t. B theta = d.

    Solved through the KKT system with a least-squares solve; independent of
    the Laplacian route used by the implementation.
    """
    m = len(net.edges)
    n = net.n
    incidence = np.zeros((n, m))
    for k, e in enumerate(net.edges):
        incidence[net.index(e.u), k] = 1.0
        incidence[net.index(e.v), k] = -1.0
    weights = np.array([e.w for e in net.edges])
    kkt = np.zeros((m + n, m + n))
    kkt[:m, :m] = np.diag(2.0 / weights)
    kkt[:m, m:] = incidence.T
    kkt[m:, :m] = incidence
    rhs = np.concatenate([np.zeros(m), demand_vec])
    sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
    return sol[:m]


# -- construction and totals ---------------------------------------------------

def test_total_weight_triangle():
    assert total_weight(unit_triangle()) == 3.0


def test_total_weight_weighted_path():
    net = Network(["u", "v", "w"], [("u", "v", 1.0), ("v", "w", 2.0)])
    assert total_weight(net) == 3.0


def test_zero_weight_edge_rejected():
    with pytest.raises(NetworkError):
        Network(["u", "v"], [("u", "v", 0.0)])


def test_duplicate_label_rejected():
    with pytest.raises(NetworkError):
        Network(["u", "v", "w"],
                [("u", "v", 1.0, "x", "y"), ("u", "w", 1.0, "x", "z")])


def test_labels_and_neighbors():
    net = Network(["u", "v"], [("u", "v", 2.0, "out", "back")])
    assert net.labels("u", +1) == ["out"]
    assert net.labels("v", -1) == ["back"]
    assert net.neighbor("u", "out") == "v"
    assert net.neighbor("v", "back") == "u"


# -- stationary distribution and transition matrix ------------------------------

def test_stationary_triangle_uniform():
    pi = stationary_distribution(unit_triangle())
    for u in "abc":
        assert pi(u) == pytest.approx(1.0 / 3.0)


def test_stationary_path():
    pi = stationary_distribution(unit_path(2))
    assert pi("p0") == pytest.approx(0.25)
    assert pi("p1") == pytest.approx(0.5)
    assert pi("p2") == pytest.approx(0.25)


def test_stationary_star():
    net = Network(["c", "l1", "l2", "l3"],
                  [("c", "l1", 1.0), ("c", "l2", 1.0), ("c", "l3", 1.0)])
    pi = stationary_distribution(net)
    assert pi("c") == pytest.approx(0.5)
    for leaf in ("l1", "l2", "l3"):
        assert pi(leaf) == pytest.approx(1.0 / 6.0)


def test_transition_single_edge():
    net = Network(["u", "v"], [("u", "v", 1.0)])
    np.testing.assert_allclose(transition_matrix(net), [[0, 1], [1, 0]])


def test_transition_triangle():
    p = transition_matrix(unit_triangle())
    off = p[~np.eye(3, dtype=bool)]
    np.testing.assert_allclose(off, 0.5)


def test_transition_weighted_path():
    net = Network(["u", "v", "w"], [("u", "v", 1.0), ("v", "w", 2.0)])
    p = transition_matrix(net)
    assert p[net.index("v"), net.index("u")] == pytest.approx(1.0 / 3.0)
    assert p[net.index("v"), net.index("w")] == pytest.approx(2.0 / 3.0)


def test_transition_isolated_vertex():
    net = Network(["u", "v", "w"], [("u", "v", 1.0)])
    with pytest.raises(NetworkError):
        transition_matrix(net)


@pytest.mark.parametrize("seed", range(8))
def test_detailed_balance(seed):
    net = random_connected_network(seed)
    p = transition_matrix(net)
    pi = stationary_distribution(net).as_vector(net)
    np.testing.assert_allclose(pi[:, None] * p, (pi[:, None] * p).T, atol=1e-9)
    np.testing.assert_allclose(pi @ p, pi, atol=1e-9)


# -- spectral gap ----------------------------------------------------------------

def test_gap_single_edge():
    net = Network(["u", "v"], [("u", "v", 1.0)])
    assert spectral_gap(net) == pytest.approx(2.0)


def eig_gap_oracle(net):
    p = transition_matrix(net)
    eigs = np.linalg.eigvals(np.eye(net.n) - p).real
    return float(np.min(eigs[eigs > 1e-9]))


def test_gap_triangle():
    assert spectral_gap(unit_triangle()) == pytest.approx(1.5)
    assert eig_gap_oracle(unit_triangle()) == pytest.approx(1.5)


def test_gap_k4():
    names = list("abcd")
    net = Network(names, [(a, b, 1.0) for i, a in enumerate(names)
                          for b in names[i + 1:]])
    assert spectral_gap(net) == pytest.approx(4.0 / 3.0)
    assert eig_gap_oracle(net) == pytest.approx(4.0 / 3.0)


def test_gap_disconnected():
    net = Network(["u", "v", "x", "y"], [("u", "v", 1.0), ("x", "y", 1.0)])
    with pytest.raises(NetworkError):
        spectral_gap(net)


# -- flows -------------------------------------------------------------------------

def test_min_energy_flow_path():
    net = unit_path(3)
    flow = min_energy_flow(net, {"p0": 1.0, "p3": -1.0})
    np.testing.assert_allclose(flow.values, 1.0, atol=1e-9)
    assert flow.energy() == pytest.approx(3.0)
    oracle = brute_force_min_energy(net, flow.divergence())
    np.testing.assert_allclose(flow.values, oracle, atol=1e-8)


def test_min_energy_flow_parallel_pair():
    net = Network(["s", "t"], [("s", "t", 1.0, "a", "a'"), ("s", "t", 1.0, "b", "b'")])
    flow = min_energy_flow(net, {"s": 1.0, "t": -1.0})
    np.testing.assert_allclose(flow.values, 0.5, atol=1e-9)
    assert flow.energy() == pytest.approx(0.5)


def test_min_energy_flow_zero_demand():
    net = unit_triangle()
    flow = min_energy_flow(net, {})
    np.testing.assert_allclose(flow.values, 0.0, atol=1e-12)
    assert flow.energy() == pytest.approx(0.0)


def test_min_energy_flow_infeasible():
    net = Network(["u", "v", "x", "y"], [("u", "v", 1.0), ("x", "y", 1.0)])
    with pytest.raises(NetworkError):
        min_energy_flow(net, {"u": 1.0, "x": -1.0})


@pytest.mark.parametrize("seed", range(6))
def test_min_energy_flow_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    net = random_connected_network(rng, 4, 5, extra_edge_p=0.3)
    a, b = rng.choice(net.n, size=2, replace=False)
    demand = {net.vertices[a]: 1.0, net.vertices[b]: -1.0}
    flow = min_energy_flow(net, demand)
    oracle = brute_force_min_energy(net, flow.divergence())
    np.testing.assert_allclose(flow.values, oracle, atol=1e-8)


def test_min_energy_flow_two_solvers_agree():
    net = random_connected_network(5)
    d = {net.vertices[0]: 1.0, net.vertices[-1]: -1.0}
    f1 = min_energy_flow(net, d)
    # independent second run through the grounded system
    f2 = min_energy_flow_to_set(net, Distribution.point(net.vertices[0]),
                                [net.vertices[-1]])
    np.testing.assert_allclose(f1.values, f2.values, atol=1e-8)


def test_flow_antisymmetry_and_boundary():
    net = unit_path(2)
    flow = min_energy_flow(net, {"p0": 1.0, "p2": -1.0})
    assert flow.theta("p0", "p1") == pytest.approx(1.0)
    assert flow.theta("p1", "p0") == pytest.approx(-1.0)
    assert flow.boundary() == {"p0", "p2"}
    assert not flow.is_circulation()


def test_circulation_conserves_everywhere():
    net = unit_triangle()
    # orientation a->b, b->c, a->c: a cycle needs the third edge reversed
    circ = Flow(net, np.array([1.0, 1.0, -1.0]))
    np.testing.assert_allclose(circ.divergence(), 0.0, atol=1e-12)
    assert circ.is_circulation()


# -- resistance and commute time -----------------------------------------------------

def test_resistance_same_point_zero():
    net = unit_triangle()
    d = Distribution.point("a")
    assert effective_resistance(net, d, d) == pytest.approx(0.0, abs=1e-12)


def test_resistance_path_endpoints():
    net = unit_path(3)
    assert effective_resistance(net, Distribution.point("p0"), ["p3"]) \
        == pytest.approx(3.0)


def test_resistance_parallel_pair():
    net = Network(["s", "t"], [("s", "t", 1.0, "a", "a'"), ("s", "t", 1.0, "b", "b'")])
    assert effective_resistance(net, Distribution.point("s"), ["t"]) \
        == pytest.approx(0.5)


def test_commute_single_edge():
    net = Network(["s", "t"], [("s", "t", 1.0)])
    assert commute_time(net, Distribution.point("s"), ["t"]) == pytest.approx(2.0)


def test_commute_path_mc():
    net = unit_path(2)
    assert commute_time(net, Distribution.point("p0"), ["p2"]) == pytest.approx(8.0)
    est = commute_time_mc(net, "p0", ["p2"], walks=100_000, seed=7)
    assert est.within(8.0)


def test_commute_triangle_mc():
    net = unit_triangle()
    assert commute_time(net, Distribution.point("a"), ["b"]) == pytest.approx(4.0)
    est = commute_time_mc(net, "a", ["b"], walks=100_000, seed=8)
    assert est.within(4.0)


def test_hitting_start_in_marked():
    net = unit_triangle()
    est = hitting_time_mc(net, Distribution.point("a"), ["a"], walks=100, seed=0)
    assert est.estimate == 0.0 and est.stderr == 0.0


def test_hitting_single_edge_forced():
    net = Network(["s", "t"], [("s", "t", 1.0)])
    est = hitting_time_mc(net, Distribution.point("s"), ["t"], walks=200, seed=0)
    assert est.estimate == 1.0 and est.stderr == 0.0


def test_hitting_from_stationary_matches_resistance():
    net = unit_path(2)
    pi = stationary_distribution(net)
    expected = commute_time(net, pi, ["p2"])
    est = hitting_time_mc(net, pi, ["p2"], walks=100_000, seed=11)
    assert est.within(expected)


def test_mc_deterministic_given_seed():
    net = unit_triangle()
    a = hitting_time_mc(net, Distribution.point("a"), ["c"], walks=5000, seed=3)
    b = hitting_time_mc(net, Distribution.point("a"), ["c"], walks=5000, seed=3)
    assert a == b


# -- orientation independence ----------------------------------------------------------

@pytest.mark.parametrize("seed", range(4))
def test_orientation_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    net = random_connected_network(rng, 4, 6)
    flipped = Network(net.vertices,
                      [(e.v, e.u, e.w) if rng.random() < 0.5 else (e.u, e.v, e.w)
                       for e in net.edges])
    assert total_weight(net) == pytest.approx(total_weight(flipped))
    assert spectral_gap(net) == pytest.approx(spectral_gap(flipped))
    sigma = Distribution.point(net.vertices[0])
    marked = [net.vertices[-1]]
    assert effective_resistance(net, sigma, marked) == pytest.approx(
        effective_resistance(flipped, sigma, marked))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_commute_identity_property(seed):
    net = random_connected_network(np.random.default_rng(seed), 3, 6)
    sigma = Distribution.point(net.vertices[0])
    marked = [net.vertices[-1]]
    r = effective_resistance(net, sigma, marked)
    assert commute_time(net, sigma, marked) == pytest.approx(
        2.0 * total_weight(net) * r, rel=1e-10)


# -- distributions and I/O ----------------------------------------------------------------

def test_distribution_must_sum_to_one():
    with pytest.raises(NetworkError):
        Distribution({"a": 0.7, "b": 0.2})


def test_distribution_support_check():
    net = unit_triangle()
    d = Distribution({"zzz": 1.0})
    with pytest.raises(NetworkError):
        d.as_vector(net)


def test_network_from_dict():
    net = network_from_dict({
        "vertices": ["u", "v"],
        "edges": [{"u": "u", "v": "v", "w": 2.0, "label_u": "f", "label_v": "g"}],
    })
    assert total_weight(net) == 2.0
    assert net.neighbor("u", "f") == "v"
