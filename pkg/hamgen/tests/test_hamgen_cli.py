"""Generator command line: artifacts, determinism, exit codes."""

import json

from hamgen_fixtures import run_generator

SHORT = ("--from", "0.6", "--to", "0.8", "--step", "0.02")


def test_writes_scan_file(tmp_path):
    out = tmp_path / "h2.json"
    proc = run_generator("--molecule", "h2", *SHORT, "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    text = out.read_text()
    assert text.endswith("\n")
    data = json.loads(text)
    assert data["n_qubits"] == 4
    assert len(data["terms"]) == 15


def test_stdout_without_out_flag():
    proc = run_generator(*SHORT)
    assert proc.returncode == 0, proc.stderr
    data = json.loads(proc.stdout)
    assert data["x_dim"] == 1


def test_reruns_are_byte_identical(tmp_path):
    first = tmp_path / "a.json"
    second = tmp_path / "b.json"
    assert run_generator(*SHORT, "--out", str(first)).returncode == 0
    assert run_generator(*SHORT, "--out", str(second)).returncode == 0
    assert first.read_bytes() == second.read_bytes()


def test_encoding_flag_changes_the_terms(tmp_path):
    direct = tmp_path / "jw.json"
    encoded = tmp_path / "bk.json"
    assert run_generator(*SHORT, "--out", str(direct)).returncode == 0
    assert (
        run_generator(
            *SHORT, "--mapping", "bravyi-kitaev", "--out", str(encoded)
        ).returncode
        == 0
    )
    jw_labels = {t["pauli"] for t in json.loads(direct.read_text())["terms"]}
    bk_labels = {t["pauli"] for t in json.loads(encoded.read_text())["terms"]}
    assert jw_labels != bk_labels


def test_unknown_mapping_exits_2():
    proc = run_generator(*SHORT, "--mapping", "parity")
    assert proc.returncode == 2


def test_zero_step_exits_2():
    proc = run_generator("--from", "0.6", "--to", "0.8", "--step", "0")
    assert proc.returncode == 2
    assert "positive" in proc.stderr


def test_short_grid_exits_2():
    proc = run_generator("--from", "0.7", "--to", "0.74", "--step", "0.02")
    assert proc.returncode == 2
    assert "at least 5 points" in proc.stderr


def test_reversed_range_exits_2():
    proc = run_generator("--from", "0.8", "--to", "0.6", "--step", "0.02")
    assert proc.returncode == 2


def test_version_flag():
    proc = run_generator("--version")
    assert proc.returncode == 0
