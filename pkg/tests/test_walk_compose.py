"""Walk assembly, witnesses, conditions, decisions, and G^T equivalence."""

import numpy as np
import pytest

from vtqw.network import (Distribution, Flow, Network, effective_resistance,
                          min_energy_flow_to_set, total_weight)
from vtqw.subroutine import build_from_classical
from vtqw.walk_compose import (WalkError, WalkInstance, assemble,
                               path_subdivided_network, walk_extension)
from vtqw.rand import random_connected_network, random_stopping_law, rng_from


def single_edge_instance(marked=("v",), law=((1, 1.0),), alpha="const",
                         r_bound=None, error=()):
    net = Network(["u", "v"], [("u", "v", 1.0)])
    sub = build_from_classical({0: list(law)}, {0: 1}, {0: list(error)})
    ext = walk_extension(net)
    sigma = Distribution.point("u")
    if r_bound is None:
        alpha_vec = (np.ones(sub.tmax + 1) if alpha == "const"
                     else np.arange(sub.tmax + 1) + 1.0)
        r_bound = sub.stopping_profile(0).expect_sum_inverse(alpha_vec)
    inst = WalkInstance(net, ["u"], ["v"], list(marked), sigma, sub, ext,
                        alpha, w0=1.0 / r_bound)
    return inst, r_bound


def hand_count_dimension(net, n_virtual, sub):
    """Combinatorial count of the walk basis.

    t=0: one forward slot per outgoing label, one backward per incoming,
    plus the virtual-source slots; every t >= 1 carries both directions on
    all 2E real slots with answers x Z_{>= t}.
    """
    n_edges = len(net.edges)
    count = 2 * n_edges + n_virtual
    for t in range(1, sub.tmax + 1):
        z_geq = sum(sub.z_sizes[t - 1:])
        count += 2 * (2 * n_edges) * sub.n_answers * z_geq
    return count


def test_single_edge_dimension_matches_hand_count():
    inst, _ = single_edge_instance()
    sub = inst.sub
    # virtual slots: u in V0 and v in M
    assert inst.dimension == hand_count_dimension(inst.net, 2, sub)


def test_triangle_ladders_bucket_orthogonality():
    net = Network(["a", "b", "c"],
                  [("a", "b", 1.0), ("b", "c", 2.0), ("a", "c", 0.5)])
    laws = {k: [(1, 0.4), (3, 0.6)] for k in range(3)}
    sub = build_from_classical(laws, {k: 1 for k in laws})
    inst = WalkInstance(net, ["a"], ["c"], ["c"], Distribution.point("a"),
                        sub, walk_extension(net), "linear", w0=0.25)
    assert inst.bucket_gram_offdiag <= 1e-12


def test_sigma_outside_v0_rejected():
    net = Network(["u", "v"], [("u", "v", 1.0)])
    sub = build_from_classical({0: [(1, 1.0)]}, {0: 1})
    with pytest.raises(WalkError):
        WalkInstance(net, ["u"], ["v"], [], Distribution.point("v"), sub,
                     walk_extension(net), "const", w0=1.0)


# -- positive witness ---------------------------------------------------------------

def test_positive_witness_single_edge():
    inst, r_bound = single_edge_instance()
    theta = min_energy_flow_to_set(inst.net, inst.sigma, ["v"])
    cert = inst.build_positive_witness(theta)
    assert cert.delta <= 1e-12
    assert cert.overlap.real == pytest.approx(1.0 / np.sqrt(inst.w0))
    assert abs(cert.overlap.imag) <= 1e-12


def test_positive_witness_linear_alpha_c_plus():
    inst, r_bound = single_edge_instance(alpha="linear")
    theta = min_energy_flow_to_set(inst.net, inst.sigma, ["v"])
    cert = inst.build_positive_witness(theta)
    assert cert.complexity <= 6.0 + 1e-9
    assert cert.complexity <= cert.extras["c_plus_bound"] + 1e-9


def test_positive_witness_rejects_bad_p2():
    inst, _ = single_edge_instance()
    theta = Flow(inst.net, np.array([3.0]))  # triple flow: P2 ratio 9
    with pytest.raises(WalkError):
        inst.build_positive_witness(theta)


def test_positive_witness_star_orthogonality():
    net = Network(["a", "b", "c", "d"],
                  [("a", "b", 1.0), ("b", "c", 2.0), ("c", "d", 1.0),
                   ("a", "d", 1.5)])
    laws = {k: [(1, 0.5), (3, 0.5)] for k in range(4)}
    sub = build_from_classical(laws, {k: 1 for k in laws})
    sigma = Distribution.point("a")
    inst = WalkInstance(net, ["a"], ["c"], ["c"], sigma, sub,
                        walk_extension(net), "linear", w0=0.3)
    theta = min_energy_flow_to_set(net, sigma, ["c"])
    cert = inst.build_positive_witness(theta)
    # stars live in Psi_B, so delta <= 1e-12 certifies the star overlaps too
    assert cert.delta <= 1e-12
    assert cert.complexity <= 6.0 + 1e-9


# -- negative witness ---------------------------------------------------------------

def test_negative_witness_identity_and_norm():
    inst, r_bound = single_edge_instance(marked=(), law=((1, 0.5), (3, 0.5)))
    cert = inst.build_negative_witness()
    assert cert.extras["split_residual"] <= 1e-10
    assert cert.delta <= 1e-12
    assert cert.complexity == pytest.approx(cert.extras["c_minus_expected"],
                                            rel=1e-9)
    n1 = inst.check_conditions(r_bound, 1.0).n1
    assert cert.complexity == pytest.approx(2.0 * r_bound * n1, rel=1e-9)


def test_negative_witness_requires_empty_marked_set():
    inst, _ = single_edge_instance(marked=("v",))
    with pytest.raises(WalkError):
        inst.build_negative_witness()


def test_negative_witness_with_error_bound():
    inst, _ = single_edge_instance(marked=(), law=((1, 1.0),),
                                   error=((1, 0.1),))
    cert = inst.build_negative_witness()
    prof = inst.sub.stopping_profile(0)
    bound = 2.0 * (1.0 / inst.w0) * prof.expect_at_stop(inst.alpha)
    assert cert.delta <= bound + 1e-10


# -- conditions -------------------------------------------------------------------------

def test_conditions_zero_error():
    inst, r_bound = single_edge_instance(law=((2, 1.0),))
    theta = min_energy_flow_to_set(inst.net, inst.sigma, ["v"])
    rep = inst.check_conditions(10.0, 10.0, theta=theta)
    assert rep.p4 == pytest.approx(0.0, abs=1e-12)
    assert rep.n2 == pytest.approx(0.0, abs=1e-12)
    assert rep.p4_ok and rep.n2_ok


def test_conditions_deterministic_n1():
    # alpha = 1, deterministic times: N1 = sum w (T + 1), the exact norm sum
    net = Network(["a", "b", "c"], [("a", "b", 2.0), ("b", "c", 0.5)])
    sub = build_from_classical({0: [(2, 1.0)], 1: [(3, 1.0)]}, {0: 1, 1: 1})
    inst = WalkInstance(net, ["a"], ["c"], [], Distribution.point("a"), sub,
                        walk_extension(net), "const", w0=1.0)
    rep = inst.check_conditions(1.0, 100.0)
    assert rep.n1 == pytest.approx(2.0 * 3 + 0.5 * 4)


def test_conditions_flag_r_violation():
    inst, r_bound = single_edge_instance()
    theta = min_energy_flow_to_set(inst.net, inst.sigma, ["v"])
    rep = inst.check_conditions(r_bound * 0.5, 100.0, theta=theta)
    assert rep.p3_ok is False


# -- end-to-end decisions -----------------------------------------------------------------

def test_run_single_edge_marked_positive():
    inst, r_bound = single_edge_instance()
    n1 = inst.check_conditions(r_bound, 1.0).n1
    decision, cost = inst.run(r_bound, n1)
    assert decision.positive
    assert cost["c_minus"] == pytest.approx(max(2 * r_bound * n1, 1.0))


def test_run_single_edge_empty_negative():
    inst, r_bound = single_edge_instance(marked=())
    n1 = inst.check_conditions(r_bound, 1.0).n1
    decision, _ = inst.run(r_bound, n1)
    assert not decision.positive


def test_run_star_mixed_times_positive():
    leaves = [f"l{k}" for k in range(4)]
    net = Network(["c"] + leaves, [("c", leaf, 0.25) for leaf in leaves])
    laws = {0: [(1, 1.0)], 1: [(1, 0.5), (3, 0.5)], 2: [(3, 1.0)],
            3: [(1, 0.5), (3, 0.5)]}
    sub = build_from_classical(laws, {k: 1 for k in laws})
    sigma = Distribution.point("c")
    inst = WalkInstance(net, ["c"], leaves, ["l1"], sigma, sub,
                        walk_extension(net), "linear", w0=0.2)
    theta = min_energy_flow_to_set(net, sigma, ["l1"])
    rep = inst.check_conditions(5.0, 100.0, theta=theta)
    decision, cost = inst.run(max(rep.p3, 1.0), rep.n1)
    assert decision.positive
    assert cost["walk_calls"] > 0


def test_run_modes_agree_single_edge():
    inst, r_bound = single_edge_instance()
    n1 = inst.check_conditions(r_bound, 1.0).n1
    spectral, _ = inst.run(r_bound, n1, mode="spectral")
    circuit, _ = inst.run(r_bound, n1, mode="circuit", seed=5)
    assert spectral.positive == circuit.positive


# -- G^T equivalence ---------------------------------------------------------------------

@pytest.mark.parametrize("seed", range(3))
def test_path_subdivision_equivalence(seed):
    rng = rng_from(seed)
    net = random_connected_network(rng, 4, 5, extra_edge_p=0.3)
    times = {k: int(rng.integers(1, 4)) for k in range(len(net.edges))}
    laws = {k: [(times[k], 1.0)] for k in times}
    sub = build_from_classical(laws, {k: 1 for k in laws})
    sigma = Distribution.point(net.vertices[0])
    marked = [net.vertices[-1]]
    inst = WalkInstance(net, [net.vertices[0]], marked, marked, sigma, sub,
                        walk_extension(net), "const", w0=1.0)

    subdivided = path_subdivided_network(net, times)
    assert inst.check_conditions(1.0, 1.0).n1 == pytest.approx(
        total_weight(subdivided), rel=1e-10)

    reweighted = Network(net.vertices,
                         [(e.u, e.v, e.w / (times[k] + 1.0))
                          for k, e in enumerate(net.edges)])
    theta = Flow(net, min_energy_flow_to_set(reweighted, sigma, marked).values)
    assert inst.check_conditions(1.0, 1.0, theta=theta).p3 == pytest.approx(
        effective_resistance(subdivided, sigma, marked), rel=1e-8)


def test_extension_contract_checked():
    net = Network(["u", "v"], [("u", "v", 1.0)])
    other = Network(["u", "v", "w"], [("u", "v", 1.0), ("v", "w", 1.0)])
    sub = build_from_classical({0: [(1, 1.0)]}, {0: 1})
    with pytest.raises(WalkError):
        WalkInstance(net, ["u"], ["v"], [], Distribution.point("u"), sub,
                     walk_extension(other), "const", w0=1.0)
