import json
from pathlib import Path

import numpy as np
import pytest

from mipt_xeb import campaign
from mipt_xeb.audits import audit_compression, audit_inequality, audit_oracle
from mipt_xeb.campaign import CampaignConfig, ConfigError, ResultStore, load_rows, run_campaign
from mipt_xeb.circuits import Circuit, CircuitSpec, build_circuit
from mipt_xeb.cli import main
from mipt_xeb.compression import CompressedCircuit


def store(tmp_path, name="s.jsonl"):
    return str(tmp_path / name)


def test_minimal_campaign_is_one(tmp_path):
    for mode in ("run", "exact"):
        out = store(tmp_path, f"{mode}.jsonl")
        assert main([mode, "--L", "4", "--p", "0.0", "--rho", "zero", "--sigma", "zero", "--n-circuits", "5",
                     "--n-shots", "10", "--output", out, "--workers", "1"]) == 0
        (row,) = load_rows(out)
        assert row["chi_bar"] == 1.0 and row["eps"] == 0.0


def test_defaults_mirror_sweep_shape():
    cfg = CampaignConfig()
    assert cfg.n_circuits == 1000 and cfg.n_shots == 1000


def test_rerun_is_idempotent(tmp_path, monkeypatch):
    cfg = CampaignConfig(L_list=(4, 6), p_list=(0.1, 0.3), n_circuits=10, output_path=store(tmp_path), worker_count=1)
    run_campaign(cfg, "exact")
    before = Path(cfg.output_path).read_bytes()

    def boom(*a, **k):
        raise AssertionError("recomputed a finished cell")

    monkeypatch.setattr(campaign, "_cell_row", boom)
    run_campaign(cfg, "exact")
    assert Path(cfg.output_path).read_bytes() == before


def test_worker_count_does_not_change_results(tmp_path):
    kw = dict(L_list=(8,), p_list=(0.15, 0.25), n_circuits=12, n_shots=20, q=0.01)
    a = CampaignConfig(**kw, output_path=store(tmp_path, "a.jsonl"), worker_count=1)
    b = CampaignConfig(**kw, output_path=store(tmp_path, "b.jsonl"), worker_count=2)
    for mode in ("run",):
        run_campaign(a, mode)
        run_campaign(b, mode)
    assert Path(a.output_path).read_bytes() == Path(b.output_path).read_bytes()
    assert a.config_hash("run") == b.config_hash("run")


def test_resume_after_interruption(tmp_path, monkeypatch):
    kw = dict(L_list=(4, 6), p_list=(0.1, 0.2, 0.3), n_circuits=8, worker_count=1)
    full = CampaignConfig(**kw, output_path=store(tmp_path, "full.jsonl"))
    run_campaign(full, "exact")
    part = CampaignConfig(**kw, output_path=store(tmp_path, "part.jsonl"))
    real = campaign._cell_row
    calls = []

    def die_on_third(*a, **k):
        calls.append(1)
        if len(calls) == 3:
            raise KeyboardInterrupt
        return real(*a, **k)

    monkeypatch.setattr(campaign, "_cell_row", die_on_third)
    with pytest.raises(KeyboardInterrupt):
        run_campaign(part, "exact")
    # a torn final line from a crash mid-write is discarded on resume
    with open(part.output_path, "a") as f:
        f.write('{"L": 6, "p"')
    monkeypatch.setattr(campaign, "_cell_row", real)
    run_campaign(part, "exact")
    assert Path(part.output_path).read_bytes() == Path(full.output_path).read_bytes()


def test_config_hash_mismatch(tmp_path, capsys):
    out = store(tmp_path)
    assert main(["exact", "--L", "4", "--p", "0.1", "--n-circuits", "3", "--output", out, "--workers", "1"]) == 0
    assert main(["exact", "--L", "4", "--p", "0.1", "--n-circuits", "4", "--output", out, "--workers", "1"]) == 2
    assert "config" in capsys.readouterr().err
    with pytest.raises(ConfigError):
        ResultStore(out, CampaignConfig(L_list=(4,), p_list=(0.1,), n_circuits=4), "exact")


def test_config_file_and_errors(tmp_path):
    cfg_file = tmp_path / "c.cfg"
    cfg_file.write_text("# tiny\nL_list = 4, 6\np_list = 0.2\nn_circuits = 3\nrho = zero\nworker_count = 1\n")
    out = store(tmp_path)
    assert main(["exact", "--config", str(cfg_file), "--output", out]) == 0
    assert [r["L"] for r in load_rows(out)] == [4, 6]
    m = json.loads(Path(out).with_suffix(".manifest.json").read_text())
    assert m["config"]["rho"] == "zero" and m["completed"] == [[4, 0.2], [6, 0.2]]
    csv_rows = load_rows(Path(out).with_suffix(".csv"))
    assert [r["chi_bar"] for r in csv_rows] == [r["chi_bar"] for r in load_rows(out)]
    bad = tmp_path / "bad.cfg"
    bad.write_text("L_list = 4\nwat = 1\n")
    assert main(["exact", "--config", str(bad)]) == 2
    assert main(["exact", "--L", "5", "--p", "0.1"]) == 2
    assert main(["exact", "--L", "4", "--p", "0.1", "--rho", "magic"]) == 2
    with pytest.raises(SystemExit) as e:
        main(["bogus"])
    assert e.value.code == 2


def test_output_dir_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("MIPT_XEB_OUTPUT_DIR", str(tmp_path))
    assert main(["exact", "--L", "4", "--p", "0.1", "--n-circuits", "2", "--workers", "1"]) == 0
    path = Path(capsys.readouterr().out.strip())
    assert path.parent == tmp_path and path.exists()


def test_progress_goes_to_stderr(tmp_path, capsys):
    out = store(tmp_path)
    main(["run", "--L", "4", "--p", "0.2", "--n-circuits", "3", "--n-shots", "5", "--output", out, "--workers", "1"])
    cap = capsys.readouterr()
    assert cap.out.strip() == out
    assert "shots/s" in cap.err


def test_run_matches_exact_on_shared_seeds(tmp_path):
    kw = dict(L_list=(16,), p_list=(0.16,), n_circuits=300, n_shots=300, worker_count=1)
    run = run_campaign(CampaignConfig(**kw, output_path=store(tmp_path, "r.jsonl")), "run").rows[0]
    ex = run_campaign(CampaignConfig(**kw, output_path=store(tmp_path, "e.jsonl")), "exact").rows[0]
    assert abs(run["chi_bar"] - ex["chi_bar"]) <= 3 * run["eps"]


def test_exact_rho_equals_sigma(tmp_path):
    cfg = CampaignConfig(L_list=(8,), p_list=(0.2,), rho="mixed", sigma="mixed", n_circuits=20,
                         output_path=store(tmp_path), worker_count=1)
    (row,) = run_campaign(cfg, "exact").rows
    assert row["chi_bar"] == 1.0 and row["eps"] == 0.0


def synthetic_csv(path, nu=1.3, pc=0.16):
    rng = np.random.default_rng(0)
    lines = ["L,p,q,chi_bar,eps,n_circuits"]
    for L in (16, 32, 64, 128):
        for p in np.linspace(pc - 0.06, pc + 0.06, 13):
            q = L ** (1 / nu) * (p - pc)
            lines.append(f"{L},{p},0,{0.65 + 0.35 / (1 + np.exp(4 * q)) + rng.normal(0, 1e-3)},0.001,100")
    path.write_text("\n".join(lines) + "\n")


def test_fit_command(tmp_path, capsys):
    data = tmp_path / "sweep.csv"
    synthetic_csv(data)
    prefix = tmp_path / "fit" / "out"
    assert main(["fit", str(data), "--p-c-bounds", "0.1,0.22", "--nu-bounds", "0.5,3", "--grid", "21",
                 "--out", str(prefix)]) == 0
    res = json.loads(capsys.readouterr().out)
    assert abs(res["nu"] - 1.3) < 0.1 and abs(res["p_c"] - 0.16) < 0.01
    assert json.loads(Path(f"{prefix}.json").read_text()) == res
    assert Path(f"{prefix}-rescaled.csv").read_text().startswith("q,chi,L")
    assert len(Path(f"{prefix}-surface.csv").read_text().splitlines()) == 21 * 21 + 1
    assert main(["fit", str(data), "--nu-bounds", "0.5,3"]) == 2
    assert main(["fit", str(tmp_path / "missing.csv"), "--p-c-bounds", "0.1,0.2", "--nu-bounds", "1,2"]) == 2


def test_verify_command(capsys):
    assert main(["verify", "compression", "oracle", "--budget", "8"]) == 0
    assert main(["verify", "inequality", "--budget", "100", "--L", "6"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 3


def test_verify_negative_control():
    rep = audit_compression(budget=8, corrupt=True)
    assert not rep.passed and rep.failures


def test_compress_command(tmp_path, capsys):
    c = build_circuit(CircuitSpec(8, p=0.2, seed=3))
    src = tmp_path / "c.txt"
    src.write_text(c.to_text())
    out, gates = tmp_path / "cc.txt", tmp_path / "g.txt"
    assert main(["compress", str(src), str(out), "--gates", str(gates)]) == 0
    cc = CompressedCircuit.from_text(out.read_text())
    assert cc.k == 4 and cc.n_source == c.n_measurements
    assert Circuit.from_text(gates.read_text()).L == 4
    assert main(["compress", str(tmp_path / "nope.txt"), str(out)]) == 2


def test_report_command(capsys):
    assert main(["report", "--L", "20", "--p", "0.15", "--n-circuits", "3"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["compressed_hardware_qubits"] == 10
    assert rep["max_compressed_measurement_count"] <= 10
    assert rep["uncompressed_depth"] == 120 and rep["reference"]["depth"] == 120


def test_audits_smoke():
    assert audit_inequality(budget=50, L=6).passed
    assert audit_oracle(budget=6).passed
