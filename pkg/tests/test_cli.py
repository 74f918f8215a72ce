from __future__ import annotations

import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from qsimkit import __version__
from qsimkit.cli import EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK, config_hash, resolve_config, run
from qsimkit.dynamics import fit_loglog_slope
from qsimkit.hamio import pauli_sum_from_json, pauli_sum_to_json

from conftest import H2_FCIDUMP, random_pauli_sum


def invoke(tmp_path, *args: str, name: str = "out.json") -> tuple[int, dict | None]:
    out = tmp_path / name
    code = run([*args, "--output", str(out)])
    return code, json.loads(out.read_text()) if out.exists() else None


@pytest.fixture
def random_h_file(tmp_path):
    h = random_pauli_sum(np.random.default_rng(120), 4, 8)
    path = tmp_path / "h.json"
    path.write_text(pauli_sum_to_json(h))
    return path


class TestMap:
    def test_h2_jordan_wigner(self, tmp_path):
        code, env = invoke(tmp_path, "map", "--fcidump", str(H2_FCIDUMP), "--seed", "1")
        assert code == EXIT_OK
        assert env["result"]["hamiltonian"]["n_qubits"] == 4
        assert env["result"]["report"]["n_qubits"] == 4

    def test_h2_tapered(self, tmp_path, h2_exact):
        pauli = tmp_path / "tapered.json"
        code, env = invoke(tmp_path, "map", "--fcidump", str(H2_FCIDUMP), "--taper", "--pauli-out", str(pauli), "--seed", "1")
        assert code == EXIT_OK
        report = env["result"]["report"]
        assert report["tapered_qubits"] == 1 and len(report["generators"]) == 3
        h = pauli_sum_from_json(pauli.read_text())
        assert np.linalg.eigvalsh(h.to_dense())[0] == pytest.approx(h2_exact[0][0], abs=1e-10)

    def test_missing_file_writes_nothing(self, tmp_path, capsys):
        code, env = invoke(tmp_path, "map", "--fcidump", str(tmp_path / "absent.fcidump"))
        assert code == EXIT_INPUT and env is None
        assert list(tmp_path.iterdir()) == []
        assert "absent.fcidump" in capsys.readouterr().err

    def test_parse_error_names_file_and_line(self, tmp_path, capsys):
        bad = tmp_path / "bad.fcidump"
        bad.write_text("&FCI NORB=2, NELEC=2 &END\n0.1 1 1 0 0\nxyz 1 1 0 0\n")
        code, env = invoke(tmp_path, "map", "--fcidump", str(bad))
        assert code == EXIT_INPUT and env is None
        err = capsys.readouterr().err
        assert "bad.fcidump" in err and "line 3" in err


class TestCommands:
    def test_vqe_matches_spectrum(self, tmp_path):
        _, vqe = invoke(tmp_path, "vqe", "--fcidump", str(H2_FCIDUMP), "--seed", "3", name="vqe.json")
        _, spec = invoke(tmp_path, "spectrum", "--fcidump", str(H2_FCIDUMP), "--seed", "3", name="spec.json")
        assert abs(vqe["result"]["energy"] - spec["result"]["ground_energy"]) < 1e-6

    def test_evolve_csv_slopes(self, tmp_path, random_h_file):
        series = tmp_path / "sweep.csv"
        code = run(["evolve", "--hamiltonian", str(random_h_file), "--steps", "8,16,32,64", "--seed", "1",
                    "--csv", str(series), "--output", str(tmp_path / "ev.json")])
        assert code == EXIT_OK
        rows = list(csv.DictReader(series.open()))
        for order, want in (("1", -1.0), ("2", -2.0)):
            pts = [(int(r["n_steps"]), float(r["error"])) for r in rows if r["order"] == order]
            n, e = zip(*pts)
            assert abs(fit_loglog_slope(n, e) - want) < 0.1
            assert all(float(r["error"]) <= float(r["bound"]) for r in rows if r["order"] == order)

    def test_qite_and_qpe(self, tmp_path, h2_exact):
        _, q = invoke(tmp_path, "qite", "--fcidump", str(H2_FCIDUMP), "--steps", "40", "--seed", "1", name="q.json")
        assert q["result"]["max_deviation_from_dense"] < 1e-4
        _, p = invoke(tmp_path, "qpe", "--fcidump", str(H2_FCIDUMP), "--state", "ground", "--ancillae", "8",
                      "--e1", "-2", "--e2", "1", "--seed", "1", name="p.json")
        assert abs(p["result"]["energy"] - h2_exact[0][0]) <= p["result"]["resolution"]

    def test_mitigate_zne(self, tmp_path):
        data = tmp_path / "zne.json"
        data.write_text(json.dumps({"scales": [1, 2], "values": [0.8, 0.7]}))
        code, env = invoke(tmp_path, "mitigate", "--method", "zne", "--data", str(data), "--seed", "1")
        assert code == EXIT_OK and env["result"]["value"] == pytest.approx(0.9, abs=1e-15)

    def test_numerical_failure_exit_code(self, tmp_path, capsys):
        data = tmp_path / "ro.json"
        data.write_text(json.dumps({"calibration": [[1, 0], [1, 0]], "ideal": [[1, 0], [1, 0]], "distribution": [1, 0]}))
        code, env = invoke(tmp_path, "mitigate", "--data", str(data), "--seed", "1")
        assert code == EXIT_NUMERICAL and env is None
        assert "numerical failure" in capsys.readouterr().err

    def test_schema_violation(self, tmp_path):
        assert invoke(tmp_path, "vqe", "--fcidump", str(H2_FCIDUMP), "--optimizer", "newton")[0] == EXIT_INPUT
        assert invoke(tmp_path, "evolve", "--hamiltonian", str(H2_FCIDUMP), "--fcidump", str(H2_FCIDUMP))[0] == EXIT_INPUT


class TestReproducibility:
    def test_same_seed_byte_identical(self, tmp_path):
        args = ["vqe", "--fcidump", str(H2_FCIDUMP), "--optimizer", "spsa", "--maxiter", "30",
                "--mode", "shots", "--shots", "500", "--seed", "11"]
        run([*args, "--output", str(tmp_path / "a.json")])
        run([*args, "--output", str(tmp_path / "b.json")])
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_seed_generated_and_recorded(self, tmp_path):
        _, env = invoke(tmp_path, "spectrum", "--fcidump", str(H2_FCIDUMP))
        assert isinstance(env["seed"], int) and env["config"]["seed"] == env["seed"]
        assert env["version"] == __version__ and env["config_hash"] == config_hash(env["config"])

    def test_replay(self, tmp_path):
        first = tmp_path / "first.json"
        run(["qpe", "--fcidump", str(H2_FCIDUMP), "--shots", "200", "--output", str(first)])
        again = tmp_path / "again.json"
        assert run(["--replay", str(first), "--output", str(again)]) == EXIT_OK
        assert first.read_bytes() == again.read_bytes()

    def test_tampered_replay_rejected(self, tmp_path):
        first = tmp_path / "first.json"
        run(["spectrum", "--fcidump", str(H2_FCIDUMP), "--seed", "2", "--output", str(first)])
        env = json.loads(first.read_text())
        env["config"]["levels"] = 3
        first.write_text(json.dumps(env))
        assert run(["--replay", str(first)]) == EXIT_INPUT

    def test_flags_override_config_file(self, tmp_path):
        cfg = resolve_config("qite", {"dtau": 0.2, "steps": 5}, {"steps": "7"})
        assert cfg["dtau"] == 0.2 and cfg["steps"] == 7
        cfg_file = tmp_path / "cfg.json"
        cfg_file.write_text(json.dumps({"fcidump": str(H2_FCIDUMP), "steps": 5, "seed": 4}))
        _, env = invoke(tmp_path, "qite", "--config", str(cfg_file), "--steps", "3")
        assert env["config"]["steps"] == 3 and len(env["result"]["energies"]) == 4

    def test_unknown_config_key(self):
        with pytest.raises(ValueError):
            resolve_config("qite", {"bogus": 1}, {})


def test_console_script(tmp_path):
    out = subprocess.run(
        [sys.executable, "-m", "qsimkit.cli", "spectrum", "--fcidump", str(H2_FCIDUMP), "--seed", "0", "--levels", "2"],
        capture_output=True, text=True, check=True,
    )
    env = json.loads(out.stdout)
    assert len(env["result"]["eigenvalues"]) == 2
