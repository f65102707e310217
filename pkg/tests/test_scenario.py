import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _helpers import random_density, random_povm, random_scenario
from teleopt.operators import PAULIS, NotPhysicalError, density_from_bloch, random_unit_vectors
from teleopt.optimizer import optimize_outcome
from teleopt.scenario import (
    FAMILY_LABELS,
    OVector,
    Povm,
    Scenario,
    UndefinedConditionalError,
    conditional_state,
    family_scenario,
    format_scenario_text,
    load_scenario,
    o_operator,
    o_vector,
    outcome_probability,
    parse_scenario_text,
    povm_family,
    singlet_state,
)

THETAS_50 = np.linspace(0, np.pi / 2, 50)


def o13_by_loops(pi12, tau23):
    """O[(i1,i3),(j1,j3)] = sum_{i2,m2} Pi[(i1,i2),(j1,m2)] tau[(m2,i3),(i2,j3)]."""
    P = pi12.reshape(2, 2, 2, 2)
    T = tau23.reshape(2, 2, 2, 2)
    out = np.zeros((2, 2, 2, 2), dtype=complex)
    for i1, i3, j1, j3, i2, m2 in itertools.product(range(2), repeat=6):
        out[i1, i3, j1, j3] += P[i1, i2, j1, m2] * T[m2, i3, i2, j3]
    return out.reshape(4, 4)


def test_singlet_state():
    psi = np.array([0, 1, -1, 0]) / np.sqrt(2)
    tau = singlet_state()
    assert np.abs(tau - np.outer(psi, psi)).max() < 1e-15
    assert np.abs(np.linalg.eigvalsh(tau) - [0, 0, 0, 1]).max() < 1e-15


def test_family_at_bell_limit():
    povm = povm_family(0.0)
    assert np.abs(povm["a"] - singlet_state()).max() < 1e-15


def test_family_at_projective_limit():
    povm = povm_family(np.pi / 2)
    down = np.diag([0.0, 1.0])
    up = np.diag([1.0, 0.0])
    assert np.abs(povm["a"] + povm["d"] - np.kron(down, np.eye(2))).max() < 1e-15
    assert np.abs(povm["b"] + povm["c"] - np.kron(up, np.eye(2))).max() < 1e-15


@settings(max_examples=60, deadline=None)
@given(st.floats(0, np.pi / 2))
def test_family_is_complete(theta):
    povm = povm_family(theta)
    assert np.abs(sum(povm.elements) - np.eye(4)).max() < 1e-12


@pytest.mark.parametrize("theta", THETAS_50)
def test_family_well_formed(theta):
    for e in povm_family(theta).elements:
        assert np.linalg.eigvalsh(e)[0] >= -1e-10
        assert np.abs(e - e.conj().T).max() < 1e-10


def test_family_theta_out_of_range():
    with pytest.raises(ValueError):
        povm_family(-0.1)
    with pytest.raises(ValueError):
        povm_family(2.0)


def test_o_operator_bell_limit():
    sc = family_scenario(0.0)
    expected = (np.eye(4) + sum(np.kron(s, s) for s in PAULIS)) / 8
    assert np.abs(o_operator(sc, "a") - expected).max() < 1e-15


def test_o_operator_matches_index_loops():
    rng = np.random.default_rng(7)
    sc = random_scenario(rng, 4)
    for pi, o in zip(sc.povm.elements, sc.o_operators):
        assert np.abs(o - o13_by_loops(pi, sc.shared_state)).max() < 1e-14
    sc = family_scenario(0.9)
    for pi, o in zip(sc.povm.elements, sc.o_operators):
        assert np.abs(o - o13_by_loops(pi, sc.shared_state)).max() < 1e-15


def test_o_operators_total_trace():
    rng = np.random.default_rng(8)
    for _ in range(10):
        sc = random_scenario(rng, 3)
        assert abs(sum(np.trace(o) for o in sc.o_operators) - 2) < 1e-12
        for o in sc.o_operators:
            assert np.linalg.eigvalsh(o)[0] > -1e-12


def test_o_operator_factorizes_for_product_resource():
    rng = np.random.default_rng(9)
    w2, w3 = random_density(rng), random_density(rng)
    povm = random_povm(rng, 3)
    sc = Scenario(np.kron(w2, w3), povm)
    for pi, o in zip(povm.elements, sc.o_operators):
        reduced = np.einsum("ajbk,kj->ab", pi.reshape(2, 2, 2, 2), w2)
        assert np.abs(o - np.kron(reduced, w3)).max() < 1e-14


def test_o_vector_bell_limit():
    sc = family_scenario(0.0)
    ov = o_vector(sc, "a")
    assert np.abs(ov.ops - PAULIS / 4).max() < 1e-15
    assert np.abs(ov.m_matrix - np.eye(3) / 4).max() < 1e-15
    assert np.abs(ov.r_vector).max() < 1e-15
    assert abs(ov.probability_weight - 0.25) < 1e-15


@pytest.mark.parametrize("theta", [0.2, 0.7, 1.1, np.pi / 2])
def test_o_vector_structure(theta):
    c, s2 = np.cos(theta), np.sin(theta) ** 2
    ov = o_vector(family_scenario(theta), "a")
    # overall positive normalization 1/4 on top of diag(c, c, c^2) and (0, 0, -s^2)
    assert np.abs(ov.m_matrix - np.diag([c, c, c * c]) / 4).max() < 1e-15
    assert np.abs(ov.r_vector - np.array([0, 0, -s2]) / 4).max() < 1e-15


@pytest.mark.parametrize("theta", THETAS_50[::7])
def test_o_vectors_differ_only_in_signs(theta):
    ref = o_vector(family_scenario(theta), "a")
    for ov in family_scenario(theta).o_vectors:
        assert np.abs(np.abs(ov.m_matrix) - np.abs(ref.m_matrix)).max() < 1e-15
        assert np.abs(ov.m_matrix - np.diag(np.diag(ov.m_matrix))).max() < 1e-15
        assert np.abs(np.abs(ov.r_vector) - np.abs(ref.r_vector)).max() < 1e-15


@pytest.mark.parametrize("theta", [0.3, 1.0, 1.3])
def test_outcomes_contribute_equally(theta):
    values = [
        np.einsum("iab,iba->", res.x.ops, ov.ops).real
        for ov in family_scenario(theta).o_vectors
        for res in [optimize_outcome(ov)]
    ]
    assert max(values) - min(values) < 1e-9


def test_o_vector_reconstruction():
    rng = np.random.default_rng(10)
    for _ in range(10):
        for ov in random_scenario(rng).o_vectors:
            rebuilt = OVector.from_affine(ov.m_matrix, ov.r_vector).ops
            assert np.abs(rebuilt - ov.ops).max() < 1e-12


def test_outcome_probability_bell_limit():
    sc = family_scenario(0.0)
    rng = np.random.default_rng(0)
    for w in random_unit_vectors(rng, 20):
        for lab in FAMILY_LABELS:
            assert abs(outcome_probability(sc, lab, w) - 0.25) < 1e-15


def test_outcome_probability_projective_limit():
    sc = family_scenario(np.pi / 2)
    north = [0, 0, 1]
    assert abs(outcome_probability(sc, "b", north) - 0.5) < 1e-15
    assert abs(outcome_probability(sc, "c", north) - 0.5) < 1e-15
    assert abs(outcome_probability(sc, "a", north)) < 1e-15
    assert abs(outcome_probability(sc, "d", north)) < 1e-15


def test_probabilities_sum_to_one():
    rng = np.random.default_rng(1)
    inputs = random_unit_vectors(rng, 100)
    worst = 0.0
    for theta in THETAS_50:
        sc = family_scenario(theta)
        for w in inputs:
            worst = max(worst, abs(sum(outcome_probability(sc, lab, w) for lab in sc.labels) - 1))
    assert worst < 1e-12


def test_conditional_state_bell_limit():
    sc = family_scenario(0.0)
    w = np.array([0.6, 0.0, 0.8])
    assert np.abs(conditional_state(sc, "a", w) - density_from_bloch(w)).max() < 1e-15


def test_conditional_state_projective_limit_is_mixed():
    sc = family_scenario(np.pi / 2)
    rng = np.random.default_rng(2)
    for w in random_unit_vectors(rng, 10):
        assert np.abs(conditional_state(sc, "b", w) - np.eye(2) / 2).max() < 1e-15


def test_conditional_state_normalized():
    rng = np.random.default_rng(3)
    sc = random_scenario(rng, 4)
    for w in random_unit_vectors(rng, 100):
        for lab in sc.labels:
            rho = conditional_state(sc, lab, w)
            assert abs(np.trace(rho) - 1) < 1e-12
            assert np.linalg.eigvalsh(rho)[0] > -1e-12


def test_conditional_state_undefined():
    with pytest.raises(UndefinedConditionalError):
        conditional_state(family_scenario(np.pi / 2), "a", [0, 0, 1])


def test_validation_rejects_bad_inputs():
    good = povm_family(0.4)
    with pytest.raises(NotPhysicalError):
        Povm(good.elements[:3], good.labels[:3])
    bad = list(good.elements)
    bad[0] = bad[0] - 0.01 * np.eye(4)
    bad[1] = bad[1] + 0.01 * np.eye(4)
    with pytest.raises(NotPhysicalError):
        Povm(tuple(bad), good.labels)
    with pytest.raises(NotPhysicalError):
        Scenario(2 * singlet_state(), good)
    with pytest.raises(NotPhysicalError):
        Scenario(np.diag([1.5, -0.5, 0, 0]), good)
    with pytest.raises(KeyError):
        good.index("z")


def test_scenario_text_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    sc = random_scenario(rng, 3)
    path = tmp_path / "scenario.txt"
    path.write_text(format_scenario_text(sc))
    loaded = load_scenario(path)
    assert loaded.labels == ("0", "1", "2")
    assert np.array_equal(loaded.shared_state, sc.shared_state)
    for a, b in zip(loaded.povm.elements, sc.povm.elements):
        assert np.array_equal(a, b)


def test_scenario_text_token_validation():
    text = format_scenario_text(family_scenario(0.3))
    with pytest.raises(ValueError, match="tokens"):
        parse_scenario_text(" ".join(text.split()[:-1]))
    with pytest.raises(ValueError, match="tokens"):
        parse_scenario_text(" ".join(text.split()[:16]))
    with pytest.raises(ValueError, match="re,im"):
        parse_scenario_text(text.replace(",", ";", 1))
