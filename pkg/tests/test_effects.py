import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from optw import effects, zoo
from optw.convex import Theory, mix
from optw.errors import NotInformationallyComplete
from optw.sampling import random_effect, random_polytope_theory, random_state


@pytest.fixture
def bit():
    return zoo.classical_theory(2)


def _tetrahedral(q):
    dirs = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]) / np.sqrt(3)
    I, X, Y, Z = zoo.pauli_matrices()
    ops = [0.25 * (I + n[0] * X + n[1] * Y + n[2] * Z) for n in dirs]
    return effects.observable(q, [q.quantum.coords(E).real for E in ops], "tetra")


def test_evaluate_unit_zero_and_indicator(bit):
    u, z = effects.unit_effect(bit), effects.zero_effect(bit)
    s = mix(bit.vertices(), [0.5, 0.5])
    assert effects.evaluate(u, s) == pytest.approx(1.0)
    assert effects.evaluate(z, s) == 0.0
    assert effects.evaluate(effects.propensity(bit, [1, 0]), s) == pytest.approx(0.5)


def test_propensity_rejects_out_of_range(bit):
    with pytest.raises(ValueError):
        effects.propensity(bit, [1.2, 0])
    # u = (sqrt 2, 0, 0, 0), so (2, 0, 0, 0) is the constant sqrt 2 > 1
    assert effects.is_valid_effect(zoo.quantum_theory(2), [1.0, 0.0, 0.0, 0.0])
    assert not effects.is_valid_effect(zoo.quantum_theory(2), [2.0, 0.0, 0.0, 0.0])


def test_complement_examples(bit, rng):
    u, z = effects.unit_effect(bit), effects.zero_effect(bit)
    np.testing.assert_array_equal(effects.complement(u).l, z.l)
    np.testing.assert_array_equal(effects.complement(z).l, u.l)
    l = random_effect(bit, rng)
    np.testing.assert_allclose(effects.complement(effects.complement(l)).l, l.l)


def test_coexistence_examples(bit):
    u = effects.unit_effect(bit)
    l0 = effects.propensity(bit, [1, 0])
    assert effects.coexistent(l0, effects.complement(l0))
    assert not effects.coexistent(u, u)
    assert effects.coexistent(effects.scale(u, 0.5), effects.scale(u, 0.5))


def test_leq_examples(bit):
    l0 = effects.propensity(bit, [1, 0])
    l1 = effects.propensity(bit, [0, 1])
    assert effects.leq(effects.zero_effect(bit), l0)
    assert effects.leq(l0, effects.unit_effect(bit))
    s = effects.propensity(bit, l0.l + l1.l)
    assert effects.leq(l0, s)
    assert not effects.leq(l0, l1)


def test_predictability_and_resolution(bit):
    l0 = effects.propensity(bit, [1, 0])
    assert effects.is_predictable(l0) and effects.is_resolved(l0)
    assert not effects.is_predictable(effects.scale(effects.unit_effect(bit), 0.5))
    trit = zoo.classical_theory(3)
    l01 = effects.propensity(trit, [1, 1, 0])
    assert effects.is_predictable(l01) and not effects.is_resolved(l01)
    q = zoo.quantum_theory(2)
    proj = zoo.effect_from_operator(q, np.diag([1.0, 0.0]))
    assert effects.is_predictable(proj) and effects.is_resolved(proj)
    big = zoo.effect_from_operator(zoo.quantum_theory(3), np.diag([1.0, 1.0, 0.0]))
    assert effects.is_predictable(big) and not effects.is_resolved(big)


def test_unit_is_never_predictable():
    for T in zoo.zoo_theories().values():
        assert not effects.is_predictable(effects.unit_effect(T))


def test_informational_completeness_examples(bit):
    assert not effects.is_informationally_complete(effects.observable(bit, [[1, 1]]))
    assert effects.is_informationally_complete(effects.observable(bit, [[1, 0], [0, 1]]))
    q = zoo.quantum_theory(2)
    L = _tetrahedral(q)
    assert effects.is_informationally_complete(L)
    assert np.linalg.matrix_rank(L.matrix) == 4


def test_observable_must_sum_to_unit(bit):
    with pytest.raises(ValueError):
        effects.observable(bit, [[1, 0], [0, 0.5]])


def test_expansion_examples(bit):
    L = effects.observable(bit, [[1, 0], [0, 1]])
    e = effects.expand_in_observable(effects.unit_effect(bit), L)
    np.testing.assert_allclose(e.coefficients, [1, 1])
    assert e.unique
    e = effects.expand_in_observable(effects.propensity(bit, [1, 0]), L)
    np.testing.assert_allclose(e.coefficients, [1, 0], atol=1e-15)
    with pytest.raises(NotInformationallyComplete):
        effects.expand_in_observable(effects.propensity(bit, [1, 0]),
                                     effects.observable(bit, [[1, 1]]))


def test_expansion_non_unique_is_flagged():
    trit = zoo.classical_theory(2)
    L = effects.observable(trit, [[0.5, 0], [0.5, 0], [0, 1]])
    e = effects.expand_in_observable(effects.propensity(trit, [1, 0]), L)
    assert not e.unique
    assert e.residual <= 1e-9


def test_tetrahedral_reconstruction(rng):
    q = zoo.quantum_theory(2)
    L = _tetrahedral(q)
    proj = zoo.effect_from_operator(q, np.diag([1.0, 0.0]))
    e = effects.expand_in_observable(proj, L)
    assert e.residual <= 1e-9
    for _ in range(20):
        w = random_state(q, rng)
        probs = L.probabilities(w)
        assert abs(np.dot(e.coefficients, probs) - effects.evaluate(proj, w)) <= 1e-9
        np.testing.assert_allclose(effects.reconstruct_state(L, probs).x, w.x, atol=1e-9)


def test_explicit_mode_restricts_effects():
    # square where only the x measurement is allowed
    V = zoo.gbit_theory().extremal_states
    E = np.array([[0.5, 0.5, 0], [0.5, -0.5, 0]])
    T = Theory("restricted", [1, 0, 0], V, effect_mode="explicit", extremal_effects=E)
    assert effects.is_valid_effect(T, E[0])
    assert effects.is_valid_effect(T, [0.5, 0.25, 0])
    # the y measurement is a valid contraction but outside the allowed cone
    assert not effects.is_valid_effect(T, [0.5, 0, 0.5])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_closure_under_complement_mixing_and_coexistence(seed):
    rng = np.random.default_rng(seed)
    T = random_polytope_theory(rng)
    l, k = random_effect(T, rng), random_effect(T, rng)
    lam = float(rng.uniform())
    assert effects.is_valid_effect(T, effects.complement(l).l)
    assert effects.is_valid_effect(T, effects.mix_effects([l, k], [lam, 1 - lam]).l)
    assert effects.coexistent(effects.scale(l, lam), effects.scale(k, 1 - lam))


def _complete_observable(T):
    # small shifted copies of a dual basis, topped up by the unit
    m = T.embed_dim
    parts = []
    for g in np.eye(m):
        lo, hi = effects.effect_range(T, g)
        parts.append((g - lo * T.unit) / (m * max(hi - lo, 1e-12)))
    parts.append(T.unit - np.sum(parts, axis=0))
    return effects.observable(T, parts)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_reconstruction_from_complete_observable(seed):
    rng = np.random.default_rng(seed)
    T = random_polytope_theory(rng)
    L = _complete_observable(T)
    assert effects.is_informationally_complete(L)
    w = random_state(T, rng)
    probs = L.probabilities(w)
    for _ in range(100):
        f = random_effect(T, rng)
        c = effects.expand_in_observable(f, L).coefficients
        assert abs(c @ probs - effects.evaluate(f, w)) <= 1e-8
