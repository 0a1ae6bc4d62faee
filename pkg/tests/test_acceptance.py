"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line."""
import contextlib
import itertools
import subprocess
import sys
import time

import numpy as np
import pytest

from optw import composite as comp
from optw import metric, transforms as tr, zoo
from optw.convex import caratheodory_dimension, mix
from optw.effects import observable
from optw.errors import NullConditioning
from optw.sampling import (random_instrument, random_ket, random_polytope_theory,
                           random_pure_state, random_state)


@contextlib.contextmanager
def criterion(capsys, number, title, budget=None):
    """Time the block, print one verdict line, re-raise any failure."""
    start = time.perf_counter()
    failure = None
    notes = []
    try:
        yield notes
    except Exception as e:
        failure = e
    elapsed = time.perf_counter() - start
    if failure is None and budget is not None and elapsed >= budget:
        failure = AssertionError(f"runtime {elapsed:.1f}s exceeds {budget}s")
    verdict = "PASS" if failure is None else "FAIL"
    with capsys.disabled():
        line = f"\ncriterion {number:>2} {verdict}  {title}  ({elapsed:.1f}s)"
        line += "".join(f"  [{n}]" for n in notes)
        if failure is not None:
            line += f"  {str(failure).splitlines()[0]}"
        print(line)
    if failure is not None:
        raise failure


def _bloch(theory, n):
    return theory.state(np.r_[1.0, n] / np.sqrt(2))


def test_01_quantum_metric_conformance(capsys):
    with criterion(capsys, 1, "quantum metric conformance", budget=30):
        rng = np.random.default_rng(101)
        q = zoo.quantum_theory(2)
        worst = 0.0
        for _ in range(200):
            a, b = random_ket(2, rng), random_ket(2, rng)
            exact = np.sqrt(max(0.0, 1 - abs(np.vdot(a, b)) ** 2))
            got = metric.distance(zoo.ket_state(q, a), zoo.ket_state(q, b))
            worst = max(worst, abs(got - exact))
        assert worst <= 1e-10, worst

        # pure directions shrunk to a radius inside every discretization, plus the
        # twelve icosahedron vertices, which are pure and present at every order
        n = rng.normal(size=(200, 2, 3))
        n /= np.linalg.norm(n, axis=2, keepdims=True)
        pairs = [(0.75 * a, 0.75 * b) for a, b in n]
        ico = zoo.icosphere(0)
        pairs += [(ico[i], ico[j]) for i, j in itertools.combinations(range(12), 2)]
        errors = []
        for order in range(4):
            B = zoo.bloch_discretization(order)
            errors.append(max(abs(metric.distance(_bloch(B, x), _bloch(B, y))
                                  - 0.5 * np.linalg.norm(x - y)) for x, y in pairs))
        assert zoo.bloch_discretization(3).n_vertices == 642
        assert errors[-1] <= 2e-2, errors
        assert all(e2 < e1 for e1, e2 in zip(errors, errors[1:])), errors


@pytest.mark.parametrize("N, count", [(2, 642), (3, 500)])
def test_02_hypersphere(capsys, N, count):
    with criterion(capsys, 2, f"hypersphere N={N} count={count}", budget=60):
        T = zoo.hypersphere_theory(N, count)
        V = T.vertices()
        D = metric.distance_matrix(V)
        P = T.extremal_states[:, 1:]
        half_chord = 0.5 * np.linalg.norm(P[:, None, :] - P[None, :, :], axis=2)
        assert np.abs(D - half_chord).max() <= 1e-9
        assert metric.metric_dimension(T) == 2


def test_03_dimensionality_ladder(capsys):
    with criterion(capsys, 3, "dimensionality ladder", budget=60):
        problems = []

        def dims(T):
            return (caratheodory_dimension(T), metric.metric_dimension(T),
                    metric.informational_dimension(T))

        for k in (2, 3, 4):
            got = dims(zoo.classical_theory(k))
            if got != (k, k, k):
                problems.append(f"classical({k}) gave {got}")
        q = zoo.quantum_theory(2)
        got = dims(q)
        if got != (2, 2, 2):
            problems.append(f"qubit gave {got}")
        if q.affine_dim != 3 or np.sqrt(q.affine_dim + 1) != 2:
            problems.append(f"qubit affine dimension {q.affine_dim}")
        # the square: all four vertices are pairwise orthogonal under the propensity metric
        got = dims(zoo.gbit_theory())
        if got != (3, 2, 2):
            problems.append(f"gbit gave (cdim, mdim, idim) = {got}, expected (3, 2, 2)")
        for name, T in zoo.zoo_theories().items():
            if metric.informational_dimension(T) > metric.metric_dimension(T):
                problems.append(f"{name}: idim > mdim")
        assert not problems, "; ".join(problems)


def test_04_metric_axioms(capsys):
    with criterion(capsys, 4, "metric axiom suite", budget=120):
        rng = np.random.default_rng(404)
        worst = {"symmetry": 0.0, "triangle": 0.0, "bound": 0.0, "mixing": 0.0}
        for t in range(20):
            T = random_polytope_theory(rng, max_dim=4, max_vertices=12, name=f"random{t}")
            assert T.affine_dim <= 4 and T.n_vertices <= 12
            for _ in range(1000):
                a, b, c = (random_state(T, rng) for _ in range(3))
                dab, dba = metric.distance(a, b), metric.distance(b, a)
                dbc, dac = metric.distance(b, c), metric.distance(a, c)
                worst["symmetry"] = max(worst["symmetry"], abs(dab - dba))
                worst["triangle"] = max(worst["triangle"], dac - dab - dbc)
                worst["bound"] = max(worst["bound"], dab, dbc, dac)
                alpha = float(rng.uniform())
                m = metric.mixing_contraction_check(a, b, alpha)
                worst["mixing"] = max(worst["mixing"], abs(m.lhs - m.rhs))
        assert worst["symmetry"] == 0.0, worst
        assert worst["triangle"] <= 1e-9, worst
        assert worst["bound"] <= 1.0, worst
        assert worst["mixing"] <= 1e-9, worst


def test_05_transformation_algebra(capsys):
    with criterion(capsys, 5, "transformation algebra suite", budget=60):
        rng = np.random.default_rng(505)
        theories = [zoo.classical_theory(3), zoo.gbit_theory(), zoo.polygon_theory(5),
                    zoo.quantum_theory(2), zoo.quantum_theory(3)]
        worst = {"norm": 0.0, "homogeneity": 0.0, "subadditivity": -np.inf,
                 "sum1": 0.0, "sum2": 0.0, "bayes": 0.0}
        for i in range(500):
            T = theories[i % len(theories)]
            ins = random_instrument(T, rng, k=int(rng.integers(2, 4)))
            A, B = ins[0], ins[1]
            nA, nB = tr.transformation_norm(A), tr.transformation_norm(B)
            worst["norm"] = max(worst["norm"], nA, nB)
            lam = float(rng.uniform())
            worst["homogeneity"] = max(worst["homogeneity"],
                                       abs(tr.transformation_norm(tr.scalar_mul(lam, A)) - lam * nA))
            S = tr.add_coexistent(A, B)
            worst["subadditivity"] = max(worst["subadditivity"], tr.transformation_norm(S) - nA - nB)
            w = random_state(T, rng)
            pA, pB, pS = (tr.occurrence_prob(X, w) for X in (A, B, S))
            worst["sum1"] = max(worst["sum1"], abs(pS - pA - pB))
            if min(pA, pB) > 1e-6:
                lhs = tr.conditional_state(S, w).x
                rhs = (pA * tr.conditional_state(A, w).x + pB * tr.conditional_state(B, w).x) / pS
                worst["sum2"] = max(worst["sum2"], float(np.abs(lhs - rhs).max()))
            C = random_instrument(T, rng)[0]
            try:
                chain = abs(tr.bayes_prob(C, A, w) - tr.occurrence_prob(C, tr.conditional_state(A, w)))
                worst["bayes"] = max(worst["bayes"], chain)
            except NullConditioning:
                pass
        assert worst["norm"] <= 1 + 1e-12, worst
        assert worst["homogeneity"] <= 1e-12, worst
        assert worst["subadditivity"] <= 1e-12, worst
        assert worst["sum1"] <= 1e-12 and worst["sum2"] <= 1e-12, worst
        assert worst["bayes"] <= 1e-12, worst
        for T in theories:
            p = rng.dirichlet(np.ones(4))
            I = tr.identity(T)
            fixture = tr.instrument(T, [tr.Transformation(T, pj * I.M, f"p{j}")
                                        for j, pj in enumerate(p)])
            assert tr.no_information_check(fixture) is True


def test_06_no_signaling(capsys):
    with criterion(capsys, 6, "no-signaling", budget=60):
        rng = np.random.default_rng(606)
        b, g, q = zoo.classical_theory(2), zoo.gbit_theory(), zoo.quantum_theory(2)
        composites = [comp.composite(b, g, "min_tensor"), comp.composite(g, g, "min_tensor"),
                      comp.composite(g, g, "max_tensor"), comp.composite(b, b, "max_tensor"),
                      comp.composite(q, q), comp.composite(q, zoo.quantum_theory(3))]
        worst = 0.0
        for i in range(100):
            C = composites[i % len(composites)]
            W = comp.JointState(C, random_state(C.joint, rng).x.reshape(C.shape))
            I = random_instrument(C.factors[1], rng, k=int(rng.integers(2, 4)))
            worst = max(worst, comp.acausality_check(W, I))
        assert worst <= 1e-9, worst

        C = comp.composite(q, q)
        Phi = comp.ket_joint_state(C, zoo.max_entangled_ket(2))
        I, X, Y, Z = zoo.pauli_matrices()
        measure = [tr.instrument(q, [zoo.kraus_to_transformation([(I + s * P) / 2], q)
                                     for s in (1, -1)]) for P in (Z, X)]
        rep = comp.equivalent_incompatible_mixtures(Phi, *measure)
        assert rep.deviation <= 1e-9, rep.deviation
        # the two ensembles really differ
        assert metric.distance(rep.first.states[0], rep.second.states[0]) > 0.5


def test_07_minimal_lab(capsys):
    with criterion(capsys, 7, "minimal lab", budget=30) as notes:
        rng = np.random.default_rng(707)
        q = zoo.quantum_theory(2)
        C = comp.composite(q, q)
        Phi = comp.ket_joint_state(C, zoo.max_entangled_ket(2))
        dyn = comp.dynamically_faithful(Phi)
        assert dyn.faithful and dyn.rank == 16, dyn
        assert np.isfinite(dyn.condition_number)
        notes.append(f"dynamical faithfulness condition number {dyn.condition_number:.6g}")
        info = comp.informationally_faithful(Phi)
        assert info.faithful and info.rank == 4, info
        preps = comp.preparationally_faithful(Phi, [random_state(q, rng) for _ in range(50)])
        assert all(p.feasible for p in preps)
        assert max(p.residual for p in preps) <= 1e-10
        L = comp.bell_observable(2)
        assert comp.induced_effect_rank(L, random_state(q, rng)) == 4


def test_08_teleportation(capsys):
    with criterion(capsys, 8, "teleportation", budget=30):
        rng = np.random.default_rng(808)
        q = zoo.quantum_theory(2)
        C = comp.composite(q, q)
        Phi = comp.ket_joint_state(C, zoo.max_entangled_ket(2))
        L, U = comp.bell_observable(2), zoo.pauli_corrections(2, q)
        worst_d = worst_p = 0.0
        for _ in range(100):
            rep = comp.teleportation_check(Phi, L, U, random_pure_state(q, rng))
            worst_d = max(worst_d, rep.max_distance)
            worst_p = max(worst_p, max(abs(o.probability - 0.25) for o in rep.outcomes))
        assert worst_d <= 1e-10 and worst_p <= 1e-12, (worst_d, worst_p)

        # classical bits: shared perfectly correlated pair, joint outcome (x, s) of the
        # input bit and Alice's shared bit; Bob flips when x != s
        bit = zoo.classical_theory(2)
        Cb = comp.composite(bit, bit)
        shared = comp.joint_state(Cb, np.diag([0.5, 0.5]))
        joint = np.eye(4)
        L4 = observable(Cb.joint, joint)
        flip = tr.transformation(bit, [[0, 1], [1, 0]], "flip")
        U4 = [tr.identity(bit) if x == s else flip for x in (0, 1) for s in (0, 1)]
        for x in (0, 1):
            rep = comp.teleportation_check(shared, L4, U4, bit.vertex(x))
            for (xx, s), o in zip(itertools.product((0, 1), repeat=2), rep.outcomes):
                assert o.probability == (0.5 if xx == x else 0.0)
                assert o.distance == 0.0
        # mixed inputs go through the parity measurement
        parity = observable(Cb.joint, [[1, 0, 0, 1], [0, 1, 1, 0]])
        for p in (0.0, 0.3, 1.0):
            rep = comp.teleportation_check(shared, parity, [tr.identity(bit), flip],
                                           mix(bit.vertices(), [p, 1 - p]))
            assert rep.max_distance == 0.0
            assert rep.total_probability == 1.0


def _quantum_orthogonal_pairs(T, rng, n=20):
    d = T.quantum.d
    pairs = []
    for _ in range(n):
        Q, _ = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
        pairs.append((zoo.ket_state(T, Q[:, 0]), zoo.ket_state(T, Q[:, 1])))
    return pairs


def test_09_two_orthogonal_states(capsys):
    with criterion(capsys, 9, "two orthogonal states are perfectly discriminable", budget=30):
        rng = np.random.default_rng(909)
        found = 0
        for name, T in zoo.zoo_theories().items():
            if T.backend == "quantum":
                pairs = _quantum_orthogonal_pairs(T, rng)
            else:
                G = metric.orthogonality_graph(T)
                V = T.vertices()
                pairs = [(V[i], V[j]) for i, j in G.edges]
            assert pairs, name
            for a, b in pairs:
                assert metric.orthogonal(a, b), name
                d = metric.perfectly_discriminable([a, b])
                assert d.feasible, name
                M = d.observable.matrix
                np.testing.assert_allclose(M @ np.array([a.x, b.x]).T, np.eye(2), atol=1e-8)
                found += 1
        assert found > 0

        # the square: omega orthogonal to both neighbours, mixed witnesses fail
        g = zoo.gbit_theory().vertices()
        omega, z1, z2 = g[0], g[1], g[3]
        wit = [metric.orthogonality_witness(omega.theory, omega.x, [z.x]) for z in (z1, z2)]
        flagged = 0
        # alpha = 1/2 makes the denominator vanish here and is reported as beta = inf
        for alpha in (0.1, 0.3, 0.7, 0.9):
            r = metric.pairwise_vs_joint_orthogonality_report(z1, z2, omega, alpha, witnesses=wit)
            a, b = r.cross_values
            assert r.beta == pytest.approx(alpha * a / (alpha * a - (1 - alpha) * b))
            flagged += not r.beta_in_unit
        assert flagged >= 1


def test_10_determinism(capsys, tmp_path):
    with criterion(capsys, 10, "determinism of optw verify"):
        outputs = []
        for k in range(2):
            out = tmp_path / f"run{k}.json"
            subprocess.run([sys.executable, "-m", "optw.cli", "verify", "zoo:polygon:5",
                            "--seed", "12345", "--format", "json", "-o", str(out)],
                           check=True)
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]
        assert b'"seed": 12345' in outputs[0]
