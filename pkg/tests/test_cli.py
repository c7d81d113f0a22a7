"""End-to-end checks of the command-line driver.

Everything runs in-process through cli.main so exit codes, artifacts, and
stderr diagnostics are all observable. The bundled 1-qubit model keeps each
invocation fast while still exercising the full optimize/derive/scan paths.
"""

import json

import numpy as np
import pytest

from vqederiv import cli

SQRT109 = float(np.sqrt(1.09))
MANIFEST_KEYS = {
    "tool",
    "version",
    "command",
    "inputs",
    "seed",
    "tolerances",
    "workers",
    "parameters",
}


@pytest.fixture(autouse=True)
def _clean_worker_env(monkeypatch):
    monkeypatch.delenv("VQEDERIV_WORKERS", raising=False)


def run(*argv) -> int:
    return cli.main(list(argv))


def load(path):
    with open(path) as f:
        return json.load(f)


def csv_lines(path):
    with open(path) as f:
        text = f.read()
    assert text.endswith("\n")
    return text[:-1].split("\n")


# ---------------------------------------------------------------------------
# derive on the bundled model


def test_derive_bundled_model_at_origin(tmp_path):
    out = tmp_path / "d.json"
    assert run("derive", "--x", "0", "--order", "2", "--out", str(out)) == 0
    payload = load(out)
    bundle = payload["bundle"]
    assert abs(bundle["grad_x"][0]) < 1e-9
    assert bundle["hessian_x"][0][0] == pytest.approx(-1.0, abs=1e-9)
    assert bundle["energy"] == pytest.approx(-1.0, abs=1e-10)
    manifest = payload["manifest"]
    assert set(manifest) == MANIFEST_KEYS
    assert manifest["command"] == "derive"
    ham = manifest["inputs"]["hamiltonian"]
    assert ham["path"].startswith("bundled:")
    assert len(ham["sha256"]) == 64


def test_derive_writes_json_to_stdout_without_out(capsys):
    assert run("derive", "--x", "0", "--order", "1") == 0
    captured = capsys.readouterr()
    payload = json.loads(captured.out)
    assert "manifest" in payload and "bundle" in payload
    # timings are stderr-only so artifacts stay deterministic
    assert "[timing]" in captured.err
    assert "timing" not in captured.out


def test_manifest_records_tolerances_and_backend(tmp_path):
    out = tmp_path / "d.json"
    assert (
        run(
            "derive", "--x", "0.3", "--backend", "ancilla",
            "--stationarity-tol", "1e-5", "--out", str(out),
        )
        == 0
    )
    manifest = load(out)["manifest"]
    assert manifest["tolerances"]["stationarity"] == 1e-5
    assert manifest["tolerances"]["optimizer"] == 1e-10
    assert manifest["parameters"]["backend"] == "ancilla"
    assert manifest["parameters"]["shots"] is None


# ---------------------------------------------------------------------------
# optimize and the theta round trip


def test_optimize_artifact(tmp_path):
    out = tmp_path / "opt.json"
    assert run("optimize", "--x", "0.3", "--out", str(out)) == 0
    payload = load(out)
    assert payload["converged"] is True
    assert payload["energy"] == pytest.approx(-SQRT109, abs=1e-9)
    assert payload["grad_norm"] < 1e-8
    assert len(payload["theta"]) == 1


def test_theta_round_trip_reproduces_energy(tmp_path):
    opt = tmp_path / "opt.json"
    der = tmp_path / "der.json"
    assert run("optimize", "--x", "0.3", "--out", str(opt)) == 0
    assert run("derive", "--x", "0.3", "--theta", str(opt), "--out", str(der)) == 0
    assert abs(load(der)["bundle"]["energy"] - load(opt)["energy"]) <= 1e-12


def test_derive_accepts_bare_theta_list(tmp_path):
    theta = tmp_path / "theta.json"
    theta.write_text(json.dumps([np.pi + np.arctan(0.3)]))
    out = tmp_path / "d.json"
    assert run("derive", "--x", "0.3", "--theta", str(theta), "--out", str(out)) == 0
    assert load(out)["bundle"]["energy"] == pytest.approx(-SQRT109, abs=1e-9)


# ---------------------------------------------------------------------------
# determinism


def test_exact_reruns_are_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    argv = ["derive", "--x", "0.3", "--order", "2", "--seed", "7"]
    assert cli.main(argv + ["--out", str(a)]) == 0
    assert cli.main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_sampled_reruns_are_byte_identical(tmp_path):
    a, b, c = tmp_path / "a.json", tmp_path / "b.json", tmp_path / "c.json"
    argv = [
        "derive", "--x", "0.3", "--backend", "lowdepth", "--shots", "500",
        "--order", "2", "--on-nonstationary", "warn",
    ]
    assert cli.main(argv + ["--seed", "9", "--out", str(a)]) == 0
    assert cli.main(argv + ["--seed", "9", "--out", str(b)]) == 0
    assert cli.main(argv + ["--seed", "10", "--out", str(c)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()


# ---------------------------------------------------------------------------
# pes


def test_pes_empty_range_emits_header_only(tmp_path):
    out = tmp_path / "pes.csv"
    assert (
        run("pes", "--from", "1.0", "--to", "0.0", "--step", "0.1", "--out", str(out))
        == 0
    )
    lines = csv_lines(out)
    assert len(lines) == 2
    assert lines[0].startswith("# {")
    assert lines[1] == "x,E_vqe,harmonic,cubic"


def test_pes_rows_match_closed_form(tmp_path):
    out = tmp_path / "pes.csv"
    assert (
        run("pes", "--from", "0.0", "--to", "0.2", "--step", "0.1", "--out", str(out))
        == 0
    )
    lines = csv_lines(out)
    rows = [line.split(",") for line in lines[2:]]
    assert len(rows) == 3
    for row, x in zip(rows, (0.0, 0.1, 0.2)):
        assert len(row) == 4
        # 17 significant digits round-trip through text exactly
        assert float(row[0]) == x
        assert float(row[1]) == pytest.approx(-np.sqrt(1 + x * x), abs=1e-8)
    # the quadratic truncation at the expansion point is the energy itself
    assert float(rows[0][2]) == pytest.approx(-1.0, abs=1e-8)


def test_pes_workers_change_manifest_not_data(tmp_path):
    one, two = tmp_path / "w1.csv", tmp_path / "w2.csv"
    argv = ["pes", "--from", "0.0", "--to", "0.2", "--step", "0.1"]
    assert cli.main(argv + ["--workers", "1", "--out", str(one)]) == 0
    assert cli.main(argv + ["--workers", "2", "--out", str(two)]) == 0
    lines_one, lines_two = csv_lines(one), csv_lines(two)
    assert lines_one[1:] == lines_two[1:]
    m1 = json.loads(lines_one[0][2:])
    m2 = json.loads(lines_two[0][2:])
    assert (m1.pop("workers"), m2.pop("workers")) == (1, 2)
    assert m1 == m2


def test_pes_requires_out(capsys):
    assert run("pes", "--from", "0.0", "--to", "0.2", "--step", "0.1") == 2
    assert "--out" in capsys.readouterr().err


def test_worker_env_var_feeds_manifest(tmp_path, monkeypatch):
    monkeypatch.setenv("VQEDERIV_WORKERS", "3")
    out = tmp_path / "pes.csv"
    assert (
        run("pes", "--from", "1.0", "--to", "0.0", "--step", "0.1", "--out", str(out))
        == 0
    )
    assert json.loads(csv_lines(out)[0][2:])["workers"] == 3


def test_worker_env_var_rejects_garbage(tmp_path, monkeypatch):
    monkeypatch.setenv("VQEDERIV_WORKERS", "many")
    out = tmp_path / "pes.csv"
    assert (
        run("pes", "--from", "1.0", "--to", "0.0", "--step", "0.1", "--out", str(out))
        == 2
    )


# ---------------------------------------------------------------------------
# euler


def test_euler_csv_columns_and_reopt_cadence(tmp_path):
    out = tmp_path / "euler.csv"
    assert (
        run(
            "euler", "--from", "0.0", "--to", "0.2", "--step", "0.1",
            "--reopt-every", "2", "--out", str(out),
        )
        == 0
    )
    lines = csv_lines(out)
    assert lines[1] == "x,E_euler,E_reopt,grad_norm"
    rows = [line.split(",") for line in lines[2:]]
    assert len(rows) == 3
    reopt_filled = [row[2] != "" for row in rows]
    assert reopt_filled == [True, False, True]
    assert float(rows[0][1]) == pytest.approx(-1.0, abs=1e-9)
    for row, x in zip(rows, (0.0, 0.1, 0.2)):
        assert float(row[0]) == x
        assert float(row[3]) >= 0.0
    assert float(rows[2][2]) == pytest.approx(-np.sqrt(1.04), abs=1e-8)


def test_euler_accepts_precomputed_anchor(tmp_path):
    opt = tmp_path / "opt.json"
    out = tmp_path / "euler.csv"
    assert run("optimize", "--x", "0.3", "--out", str(opt)) == 0
    assert (
        run(
            "euler", "--from", "0.3", "--to", "0.4", "--step", "0.1",
            "--theta", str(opt), "--out", str(out),
        )
        == 0
    )
    rows = [line.split(",") for line in csv_lines(out)[2:]]
    assert float(rows[0][1]) == pytest.approx(-SQRT109, abs=1e-9)


# ---------------------------------------------------------------------------
# excited


def test_excited_levels_and_gradient(tmp_path):
    out = tmp_path / "exc.json"
    assert (
        run("excited", "--x", "0.3", "--level", "1", "--order", "1", "--out", str(out))
        == 0
    )
    payload = load(out)
    levels = payload["levels"]
    assert levels[0]["energy"] == pytest.approx(-SQRT109, abs=1e-8)
    assert levels[1]["energy"] == pytest.approx(SQRT109, abs=1e-8)
    assert levels[0]["beta"] == pytest.approx(2.6, abs=1e-12)
    grad = payload["bundle"]["grad_x"][0]
    assert grad == pytest.approx(0.3 / SQRT109, abs=1e-6)
    assert payload["bundle"]["provenance"]["level"] == 1


def test_excited_zero_beta_is_a_guard_failure(tmp_path, capsys):
    out = tmp_path / "exc.json"
    assert (
        run(
            "excited", "--x", "0.3", "--level", "1", "--beta", "0",
            "--out", str(out),
        )
        == 3
    )
    assert "guard failure" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# validate and cost


def test_validate_model_second_order(tmp_path):
    out = tmp_path / "val.json"
    assert (
        run(
            "validate", "--x", "0.3", "--order", "2", "--fd-step", "1e-3",
            "--out", str(out),
        )
        == 0
    )
    payload = load(out)
    assert payload["max_abs_diff"] < 1e-6
    assert len(payload["analytical"]) == len(payload["numerical"])


def test_cost_backend_run_ratio(tmp_path):
    a, l = tmp_path / "a.json", tmp_path / "l.json"
    argv = [
        "cost", "--n-qubits", "4", "--n-params", "8", "--order", "2",
        "--epsilon", "1e-3",
    ]
    assert cli.main(argv + ["--backend", "ancilla", "--out", str(a)]) == 0
    assert cli.main(argv + ["--backend", "lowdepth", "--out", str(l)]) == 0
    ratio = load(l)["estimate"]["method_runs"] / load(a)["estimate"]["method_runs"]
    assert ratio == 2.0


# ---------------------------------------------------------------------------
# failure modes


def test_missing_input_file_exits_2(tmp_path, capsys):
    assert (
        run("derive", "--x", "0", "--hamiltonian", str(tmp_path / "nope.json")) == 2
    )
    assert "error:" in capsys.readouterr().err


def test_malformed_hamiltonian_exits_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("derive", "--x", "0", "--hamiltonian", str(bad)) == 2


def test_unparseable_x_exits_2(capsys):
    assert run("derive", "--x", "zero") == 2
    assert "could not parse" in capsys.readouterr().err


def test_exact_backend_rejects_shots(capsys):
    assert run("derive", "--x", "0", "--backend", "exact", "--shots", "100") == 2
    assert "shots" in capsys.readouterr().err


def test_theta_shape_mismatch_exits_2(tmp_path, capsys):
    theta = tmp_path / "theta.json"
    theta.write_text(json.dumps([0.1, 0.2]))
    assert run("derive", "--x", "0", "--theta", str(theta)) == 2
    assert "shape" in capsys.readouterr().err


def test_nonstationary_theta_is_a_guard_failure(tmp_path, capsys):
    theta = tmp_path / "theta.json"
    theta.write_text(json.dumps([1.0]))
    assert run("derive", "--x", "0.3", "--theta", str(theta)) == 3
    assert "guard failure" in capsys.readouterr().err


def test_sampled_guard_fires_without_downgrade(tmp_path):
    # shot noise in the measured gradient sits far above the 1e-6 guard
    out = tmp_path / "d.json"
    assert (
        run(
            "derive", "--x", "0.3", "--backend", "lowdepth", "--shots", "500",
            "--seed", "9", "--out", str(out),
        )
        == 3
    )


def test_missing_required_argument_exits_2():
    with pytest.raises(SystemExit) as exc:
        run("excited", "--x", "0.3")
    assert exc.value.code == 2


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        run("--version")
    assert exc.value.code == 0
    from vqederiv import __version__

    assert __version__ in capsys.readouterr().out
