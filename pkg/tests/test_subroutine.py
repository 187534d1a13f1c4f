"""Variable-time subroutine model: validation, profiles, builders."""

import numpy as np
import pytest

from vtqw.subroutine import (SubroutineError, VariableTimeSubroutine,
                             alpha_sequence, build_from_classical,
                             phase_extension, subroutine_from_dict, validate)
from vtqw.rand import random_block_subroutine, random_classical_subroutine


def trivial_sub():
    """T=1, U_1 = I, Z_1 the whole workspace, g == 0."""
    eye = [np.eye(2, dtype=complex)]
    return VariableTimeSubroutine(["i"], 2, [1], [None, eye], {"i": 0})


def two_branch_sub():
    """Equal-amplitude halt at t in {1, 3}; answers correct."""
    return build_from_classical({0: [(1, 0.5), (3, 0.5)]}, {0: 1})


def test_trivial_passes_validation():
    sub = trivial_sub()
    report = validate(sub, phase_extension(sub))
    assert report.passed
    prof = sub.stopping_profile("i")
    assert prof.pbar[1] == pytest.approx(1.0)


def test_invariance_violation_is_named():
    # T=3, |Z_t| = 1 each; U_2 acts on H_1, breaking the invariance
    dim = 2 * 3
    u2 = np.eye(dim, dtype=complex)
    u2[0, 0], u2[0, 1], u2[1, 0], u2[1, 1] = 0, 1, 1, 0  # mixes z=0 (in Z_1)
    layers = [None] + [[np.eye(dim, dtype=complex)] for _ in range(3)]
    layers[2] = [u2]
    sub = VariableTimeSubroutine([0], 2, [1, 1, 1], layers, {0: 0}, z_init=2)
    report = validate(sub)
    assert not report.passed
    assert report.worst()[0] == "halting_invariance"


def test_even_t_rejected():
    eye = [np.eye(2, dtype=complex)]
    with pytest.raises(SubroutineError):
        VariableTimeSubroutine([0], 2, [1, 0], [None, eye, eye], {0: 0})


@pytest.mark.parametrize("seed", range(5))
def test_random_block_subroutine_valid(seed):
    sub, ext = random_block_subroutine(seed, n_inputs=2, tmax=3)
    report = validate(sub, ext)
    assert report.passed, report.residuals


# -- stopping profiles -------------------------------------------------------------

def test_deterministic_halt_moments():
    sub = build_from_classical({0: [(3, 1.0)]}, {0: 1})
    prof = sub.stopping_profile(0)
    assert prof.pbar[3] == pytest.approx(1.0)
    assert prof.mean() == pytest.approx(3.0)
    assert prof.second_moment() == pytest.approx(9.0)


def test_two_branch_profile_from_norms():
    """Direct norm computation cross-checks the two-branch construction."""
    sub = two_branch_sub()
    prof = sub.stopping_profile(0)
    np.testing.assert_allclose(prof.pbar[[1, 2, 3]], [0.5, 0.0, 0.5], atol=1e-12)
    assert prof.mean() == pytest.approx(2.0)
    assert prof.second_moment() == pytest.approx(5.0)
    # independent recomputation from raw matrix products
    state = sub.initial_state()
    halted = []
    for t in range(1, sub.tmax + 1):
        state = sub.unitary(t, 0) @ (sub.projector_running(t) @ state)
        part = sub.projector_halt_at(t) @ state
        halted.append(float(np.vdot(part, part).real))
    np.testing.assert_allclose(halted, prof.pbar[1:], atol=1e-12)


def test_zero_error_profile():
    sub = two_branch_sub()
    assert sub.stopping_profile(0).total_error() == pytest.approx(0.0, abs=1e-12)


def test_error_flip_recovered():
    sub = build_from_classical({0: [(1, 1.0)]}, {0: 1}, {0: [(1, 0.1)]})
    prof = sub.stopping_profile(0)
    assert prof.eps[1] == pytest.approx(0.1, abs=1e-9)
    assert prof.total_error() == pytest.approx(0.1, abs=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_classical_builder_round_trip(seed):
    rng = np.random.default_rng(seed)
    sub, _ = random_classical_subroutine(rng, n_inputs=3, tmax=5, error_p=0.3)
    for inp in sub.inputs:
        prof = sub.stopping_profile(inp)
        assert abs(prof.pbar.sum() - 1.0) < 1e-9


def test_law_round_trip_exact():
    laws = {0: [(1, 0.25), (2, 0.5), (5, 0.25)], 1: [(3, 1.0)]}
    errors = {0: [(2, 0.2)], 1: [(3, 0.05)]}
    sub = build_from_classical(laws, {0: 1, 1: 0}, errors)
    p0 = sub.stopping_profile(0)
    np.testing.assert_allclose([p0.pbar[1], p0.pbar[2], p0.pbar[5]],
                               [0.25, 0.5, 0.25], atol=1e-9)
    assert p0.eps[2] == pytest.approx(0.2, abs=1e-9)
    p1 = sub.stopping_profile(1)
    assert p1.pbar[3] == pytest.approx(1.0)
    assert p1.eps[3] == pytest.approx(0.05, abs=1e-9)


def test_law_must_sum_to_one():
    with pytest.raises(SubroutineError):
        build_from_classical({0: [(1, 0.5)]}, {0: 1})


def test_t_cap_enforced():
    with pytest.raises(SubroutineError):
        build_from_classical({0: [(100, 1.0)]}, {0: 1})


# -- weighted expectations -----------------------------------------------------------

def test_expectation_constant_alpha():
    sub = build_from_classical({0: [(3, 1.0)]}, {0: 1})
    alpha = np.ones(sub.tmax + 1)
    assert sub.expectation_weighted(0, alpha, "sum_direct") == pytest.approx(4.0)


def test_expectation_linear_alpha():
    sub = build_from_classical({0: [(3, 1.0)]}, {0: 1})
    alpha = np.arange(sub.tmax + 1) + 1.0
    assert sub.expectation_weighted(0, alpha, "sum_direct") == pytest.approx(10.0)
    assert sub.expectation_weighted(0, alpha, "sum_inverse") == pytest.approx(25.0 / 12.0)


def test_expectation_zero_error_at_stop():
    sub = two_branch_sub()
    alpha = np.ones(sub.tmax + 1)
    assert sub.expectation_weighted(0, alpha, "at_T") == pytest.approx(0.0, abs=1e-12)


def test_alpha_validation():
    sub = two_branch_sub()
    with pytest.raises(SubroutineError):
        sub.expectation_weighted(0, np.full(sub.tmax + 1, 2.0), "sum_direct")


def test_alpha_sequences():
    np.testing.assert_allclose(alpha_sequence("const", 3), [1, 1, 1, 1])
    np.testing.assert_allclose(alpha_sequence("linear", 3), [1, 2, 3, 4])
    np.testing.assert_allclose(alpha_sequence("inverse", 3), [1, 0.5, 1 / 3, 0.25])


# -- algorithm states (Claim-level identities) ------------------------------------------

@pytest.mark.parametrize("seed", range(4))
def test_algorithm_state_forms_agree(seed):
    """w^t built stepwise equals the projector-free product form."""
    sub, _ = random_block_subroutine(seed, n_inputs=2, tmax=5)
    for inp in sub.inputs:
        states = sub.algorithm_states(inp)
        prod = sub.initial_state()
        for t in range(1, sub.tmax + 1):
            prod = sub.unitary(t, inp) @ prod
            # Pi_{>= t} U_t ... U_1 |0,0>
            np.testing.assert_allclose(states[t],
                                       sub.projector_running(t) @ prod,
                                       atol=1e-10)


@pytest.mark.parametrize("seed", range(4))
def test_state_norms_match_stopping_law(seed):
    sub, _ = random_block_subroutine(seed, n_inputs=1, tmax=3)
    inp = sub.inputs[0]
    states = sub.algorithm_states(inp)
    prof = sub.stopping_profile(inp)
    survival = prof.survival()
    for t in range(1, sub.tmax + 1):
        halted = sub.projector_halt_at(t) @ states[t]
        assert float(np.vdot(halted, halted).real) == pytest.approx(
            prof.pbar[t], abs=1e-10)
        assert float(np.vdot(states[t], states[t]).real) == pytest.approx(
            survival[t], abs=1e-10)


def test_profile_moments_match_direct_sum():
    sub = two_branch_sub()
    prof = sub.stopping_profile(0)
    direct_mean = sum(t * prof.pbar[t] for t in range(len(prof.pbar)))
    assert prof.mean() == pytest.approx(direct_mean, abs=1e-12)
    alpha = np.arange(sub.tmax + 1) + 1.0
    direct = sum(prof.pbar[t] * alpha[: t + 1].sum()
                 for t in range(len(prof.pbar)))
    assert prof.expect_sum(alpha) == pytest.approx(direct, abs=1e-12)


# -- extension and serialization -----------------------------------------------------------

def test_phase_extension_conditions():
    sub = build_from_classical({0: [(1, 1.0)], 1: [(3, 1.0)]}, {0: 1, 1: 0})
    ext = phase_extension(sub)
    report = validate(sub, ext)
    assert report.passed
    assert sub.g_by_index() == {1: 1, 2: 0}


def test_subroutine_from_dict_classical():
    doc = {"T": 3, "inputs": {"a": {"halt_law": [[1, 0.5], [3, 0.5]],
                                    "answer": 1, "errors": [[1, 0.25]]}}}
    sub = subroutine_from_dict(doc)
    prof = sub.stopping_profile("a")
    assert prof.pbar[1] == pytest.approx(0.5)
    assert prof.eps[1] == pytest.approx(0.25, abs=1e-9)


def test_subroutine_from_dict_explicit_matrices():
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    flat = [[float(v.real), float(v.imag)] for v in x.reshape(-1)]
    doc = {"z_sizes": [1], "z_init": 0, "g": {"a": 1},
           "unitaries": [[flat]]}
    sub = subroutine_from_dict(doc)
    prof = sub.stopping_profile("a")
    assert prof.pbar[1] == pytest.approx(1.0)
    assert prof.eps[1] == pytest.approx(0.0, abs=1e-12)
