import json
import subprocess

import pytest

vsl = pytest.importorskip("vsl")


def run(cli, *args):
    return subprocess.run([cli, *args, "--quiet"], capture_output=True, text=True)


def test_usage_errors_exit_2(cli):
    assert subprocess.run([cli], capture_output=True).returncode == 2
    assert run(cli, "sweep", "--n", "9").returncode == 2
    assert run(cli, "run", "--delta", "abc").returncode == 2


def test_gen_data_fields(cli, tmp_path):
    assert run(cli, "gen-data", "--n", "3", "--out-dir", str(tmp_path)).returncode == 0
    w, L, t, fid = vsl.read_field(str(tmp_path / "omega_L.bin"))
    assert w.shape == (256, 256) and L == 1.0 and t == 0.0 and fid == 1
    ladder = json.loads((tmp_path / "ladder.json").read_text())
    assert ladder["n"] == 3


def test_run_pair_tracers_schemas(cli, tmp_path):
    assert run(cli, "run", "--n", "3", "--N", "128", "--nu", "0", "--out-dir", str(tmp_path / "run")).returncode == 0
    rows = vsl.read_csv(tmp_path / "run" / "diagnostics.csv", "diagnostics")
    assert rows[0]["t"] == 0.0 and rows[-1]["t"] == pytest.approx(0.1)

    assert run(cli, "pair", "--n", "3", "--N", "128", "--samples", "2", "--out-dir", str(tmp_path / "pair")).returncode == 0
    gaps = vsl.read_csv(tmp_path / "pair" / "gaps.csv", "gaps")
    assert len(gaps) == 3 * 3
    assert all(r["I_L"] == 0.0 for r in gaps if r["t"] == 0.0)

    code = run(cli, "tracers", "--n", "3", "--N", "256", "--out-dir", str(tmp_path / "tr")).returncode
    assert code in (0, 1)
    tr = vsl.read_csv(tmp_path / "tr" / "tracers.csv", "tracers")
    assert all(abs(r["det"] - 1.0) < 1e-6 for r in tr)


def test_sweep_schema_and_determinism(cli, tmp_path):
    for name in ("a.csv", "b.csv"):
        assert run(cli, "sweep", "--n", "3", "--out", str(tmp_path / name), "--out-dir", str(tmp_path)).returncode == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    rows = vsl.read_csv(tmp_path / "a.csv", "sweep")
    assert [r["n"] for r in rows] == [3.0]
    manifest = json.loads((tmp_path / "a_manifest.json").read_text())
    assert manifest["energy_balance_ok"] is True
