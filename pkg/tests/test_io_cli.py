import json
from pathlib import Path

import numpy as np
import pytest

from optw import io, zoo
from optw.cli import main

FIXTURES = Path(__file__).parent / "fixtures"
SCENARIOS = Path(io.__file__).parent / "scenarios"


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr().out


def _records(out):
    return {r["name"]: r for r in json.loads(out)["records"]}


def test_complex_array_pairs_and_reals():
    a = io.complex_array([[1, 0], [0, 1]], 1)
    np.testing.assert_array_equal(a, [1, 1j])
    b = io.complex_array([1.0, 2.0], 1)
    np.testing.assert_array_equal(b, [1, 2])
    with pytest.raises(ValueError):
        io.complex_array([[[1, 2, 3]]], 1)


@pytest.mark.parametrize("spec", ["zoo:gbit", "zoo:classical:3", "zoo:polygon:5",
                                  "zoo:hypersphere:2:42"])
def test_polytope_round_trip(spec):
    T = io.zoo_theory(spec)
    back = io.theory_from_dict(json.loads(json.dumps(io.theory_to_dict(T)))).theory
    np.testing.assert_allclose(back.extremal_states, T.extremal_states)
    np.testing.assert_allclose(back.unit, T.unit)
    assert back.backend == T.backend


def test_quantum_round_trip_keeps_the_basis():
    T = zoo.quantum_theory(3)
    back = io.theory_from_dict(json.loads(json.dumps(io.theory_to_dict(T)))).theory
    assert back.backend == "quantum"
    np.testing.assert_allclose(back.quantum.basis, T.quantum.basis, atol=1e-15)


def test_embed_dim_mismatch_rejected():
    d = io.theory_to_dict(zoo.gbit_theory())
    d["embed_dim"] = 4
    with pytest.raises(ValueError):
        io.theory_from_dict(d)


def test_unknown_zoo_name():
    with pytest.raises(ValueError):
        io.zoo_theory("zoo:dodecahedron")


def test_theory_file_observables_and_instruments():
    tf = io.load_theory(FIXTURES / "bad_instrument.json")
    assert set(tf.instruments) == {"leaky", "measure"}
    assert tf.instruments["leaky"].labels == ("zero", "one")
    assert tf.observables["which"].matrix.shape == (2, 2)


def test_state_specs(rng):
    q = zoo.quantum_theory(2)
    s = io.state_from_spec(q, {"bloch": [0, 0, 1]})
    np.testing.assert_allclose(s.x, [1 / np.sqrt(2), 0, 0, 1 / np.sqrt(2)], atol=1e-15)
    k = io.state_from_spec(q, {"ket": [[0, 0], [1, 0]]})
    np.testing.assert_allclose(k.x, [1 / np.sqrt(2), 0, 0, -1 / np.sqrt(2)], atol=1e-15)
    m = io.state_from_spec(q, {"mix": [[0.5, {"bloch": [0, 0, 1]}], [0.5, {"bloch": [0, 0, -1]}]]})
    np.testing.assert_allclose(m.x, q.chaotic.x, atol=1e-15)
    r = io.state_from_spec(q, {"random": True}, rng)
    assert q.quantum.is_density(r.x)
    with pytest.raises(ValueError):
        io.state_from_spec(q, {"banana": 1})


def test_bundled_scenarios_load():
    for path in sorted(SCENARIOS.glob("*.json")):
        sc = io.load_scenario(path)
        assert sc.theories, path.name


def test_export_round_trips_through_the_cli(capsys, tmp_path):
    code, out = _run(capsys, "export", "zoo:polygon:6")
    assert code == 0
    path = tmp_path / "hexagon.json"
    path.write_text(out)
    code, out = _run(capsys, "analyze", path, "--format", "json")
    assert code == 0
    assert _records(out)["metric dimension"]["value"] == 3


def test_output_flag_writes_file(capsys, tmp_path):
    target = tmp_path / "report.txt"
    code, out = _run(capsys, "analyze", "zoo:classical:3", "-o", target)
    assert code == 0 and out == ""
    assert "caratheodory dimension" in target.read_text()


def test_analyze_classical(capsys):
    code, out = _run(capsys, "analyze", "zoo:classical:3", "--format", "json")
    rec = _records(out)
    assert code == 0
    assert rec["caratheodory dimension"]["value"] == 3
    assert rec["informational dimension"]["value"] == 3
    assert rec["metric dimension"]["value"] == 3


def test_analyze_qubit_includes_square_root_relation(capsys):
    code, out = _run(capsys, "analyze", "zoo:quantum:2", "--format", "json")
    rec = _records(out)
    assert code == 0
    assert rec["caratheodory dimension"]["value"] == 2
    assert any("sqrt" in name for name in rec)


def test_cutoff_gives_unresolved_exit(capsys):
    code, out = _run(capsys, "analyze", "zoo:gbit", "--cutoff", "1")
    assert code == 2
    assert "UNRESOLVED" in out


def test_verify_zoo_passes(capsys):
    code, out = _run(capsys, "verify", "zoo:polygon:5", "--samples", "8")
    assert code == 0, out


def test_verify_flags_non_vertex(capsys):
    code, out = _run(capsys, "verify", FIXTURES / "bad_vertex.json", "--samples", "5",
                     "--format", "json")
    rec = _records(out)
    assert code == 1
    assert rec["vertex minimality"]["status"] == "fail"
    assert rec["vertex minimality"]["value"] == [4]


def test_verify_flags_unnormalized_instrument(capsys):
    code, out = _run(capsys, "verify", FIXTURES / "bad_instrument.json", "--samples", "5",
                     "--format", "json")
    rec = _records(out)
    assert code == 1
    assert rec["instrument leaky: normalization"]["status"] == "fail"
    assert abs(rec["instrument leaky: normalization"]["value"] - 0.5) < 1e-12
    assert rec["instrument measure: normalization"]["status"] == "pass"


def test_verify_is_deterministic_and_job_independent(capsys, monkeypatch):
    runs = [_run(capsys, "verify", "zoo:gbit", "--seed", "7", "--samples", "6",
                 "--format", "json", "--jobs", j)[1] for j in (1, 1, 3)]
    assert runs[0] == runs[1] == runs[2]
    monkeypatch.setenv("OPTW_SEED", "7")
    env = _run(capsys, "verify", "zoo:gbit", "--samples", "6", "--format", "json")[1]
    assert env == runs[0]
    other = _run(capsys, "verify", "zoo:gbit", "--seed", "8", "--samples", "6",
                 "--format", "json")[1]
    assert other != runs[0]


def test_seed_must_fit_64_bits():
    with pytest.raises(SystemExit):
        main(["verify", "zoo:gbit", "--seed", str(2**64)])


def test_distance_matrix(capsys):
    code, out = _run(capsys, "distance", "zoo:gbit", "--states", FIXTURES / "states_square.json",
                     "--format", "json")
    D = np.array(json.loads(out)["distances"])
    assert code == 0
    np.testing.assert_allclose(D, D.T, atol=1e-12)
    np.testing.assert_allclose(np.diag(D), 0, atol=1e-12)
    # every pair of square vertices is orthogonal
    np.testing.assert_allclose(D[:3, :3], 1 - np.eye(3), atol=1e-9)
    np.testing.assert_allclose(D[0, 4], 0.5, atol=1e-9)


def test_distance_empty_and_single(capsys):
    code, out = _run(capsys, "distance", "zoo:gbit", "--states", FIXTURES / "states_empty.json",
                     "--format", "json")
    assert code == 0 and json.loads(out)["distances"] == []
    code, out = _run(capsys, "distance", "zoo:gbit", "--states", FIXTURES / "states_single.json",
                     "--format", "tsv")
    assert code == 0 and out.strip() == "0"


def test_missing_file_exit_code(capsys):
    assert main(["analyze", "no/such/theory.json"]) == 3
    assert "optw: error:" in capsys.readouterr().err


def test_composite_bell_scenario(capsys):
    code, out = _run(capsys, "composite", SCENARIOS / "bell.json", "--format", "json")
    rec = _records(out)
    assert code == 0, out
    assert all(r["status"] in ("pass", "info") for r in rec.values())
    assert any(r["anchor"] == "The minimal lab" for r in rec.values())


def test_composite_product_scenario(capsys):
    code, _ = _run(capsys, "composite", SCENARIOS / "product.json")
    assert code == 0


def test_composite_signaling_scenario_fails(capsys):
    code, out = _run(capsys, "composite", SCENARIOS / "signaling.json", "--format", "json")
    assert code == 1
    failed = [r for r in _records(out).values() if r["status"] == "fail"]
    assert failed and all(r["anchor"] == "Acausality of local transformations" for r in failed)


def test_teleport_qubit_scenario(capsys):
    code, out = _run(capsys, "teleport", SCENARIOS / "teleport_qubit.json", "--table")
    assert code == 0, out
    table = out.split("target\toutcome\tprobability\tdistance\n")[1]
    rows = [line.split("\t") for line in table.splitlines()]
    assert len(rows) == 100 * 4
    assert max(float(r[3]) for r in rows) <= 1e-10


def test_teleport_wrong_corrections_fail(capsys):
    code, _ = _run(capsys, "teleport", SCENARIOS / "teleport_wrong_corrections.json")
    assert code == 1


def test_teleport_classical_scenario(capsys):
    code, out = _run(capsys, "teleport", SCENARIOS / "teleport_classical.json", "--format", "json")
    assert code == 0, out


def test_command_functions_return_reports():
    from optw import cli
    rep = cli.cmd_analyze("zoo:classical:3")
    assert {r.name for r in rep.records} >= {"caratheodory dimension", "metric dimension"}
    assert cli.cmd_verify(FIXTURES / "bad_vertex.json").exit_code == 1
    assert cli.cmd_composite(SCENARIOS / "product.json").exit_code == 0
    assert cli.cmd_teleport(SCENARIOS / "teleport_classical.json").report.exit_code == 0
    D = cli.cmd_distance("zoo:classical:2", FIXTURES / "states_single.json")
    np.testing.assert_array_equal(D, [[0.0]])
