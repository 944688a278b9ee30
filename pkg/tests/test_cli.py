import json

import numpy as np

from structcs.cli import main
from structcs.pgm import read_pgm


def _run(argv):
    return main(argv)


# -- gen -----------------------------------------------------------------------


def test_gen_writes_operator_json_with_derived_counts(tmp_path):
    out = tmp_path / "op.json"
    code = _run([
        "gen", "--scheme", "rsrm", "--n", "1024", "--nb", "256",
        "--subrate", "0.25", "--b", "8", "--seed", "3", "--out", str(out),
    ])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["derived"]["num_subsignals"] == 32
    assert doc["resolved_config"]["seed"] == 3
    assert {"seed_r", "seed_d", "seed_phi"} <= set(doc["resolved_config"])


def test_gen_invalid_block_size_exits_2(tmp_path, capsys):
    code = _run([
        "gen", "--scheme", "rsrm", "--n", "1000", "--nb", "256",
        "--subrate", "0.25", "--out", str(tmp_path / "x.json"),
    ])
    assert code == 2
    err = capsys.readouterr().err
    assert "block size" in err and "divide" in err


def test_gen_byte_identical_reruns(tmp_path):
    args = [
        "gen", "--scheme", "rsrm", "--n", "256", "--nb", "64",
        "--subrate", "0.25", "--b", "2", "--seed", "11",
    ]
    out_a, out_b = tmp_path / "a.json", tmp_path / "b.json"
    assert _run(args + ["--out", str(out_a)]) == 0
    assert _run(args + ["--out", str(out_b)]) == 0
    assert out_a.read_bytes() == out_b.read_bytes()


def test_gen_config_file_with_flag_override(tmp_path):
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(json.dumps({"scheme": "bcs", "n": 128, "nb": 32, "subrate": 0.5}))
    out = tmp_path / "op.json"
    code = _run(["gen", "--config", str(cfg_file), "--nb", "64", "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["config"]["scheme"] == "bcs"
    assert doc["config"]["block_size"] == 64  # flag wins over file


def test_gen_unknown_config_key_exits_2(tmp_path):
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(json.dumps({"blocksize": 64}))
    assert _run(["gen", "--config", str(cfg_file), "--out", str(tmp_path / "x.json")]) == 2


# -- rip-sweep -----------------------------------------------------------------


def test_rip_sweep_csv_schema_and_determinism(tmp_path):
    args = [
        "rip-sweep", "--schemes", "bcs,rsrm", "--n", "64", "--nb", "16",
        "--m", "24", "--signal", "random_sparse", "--s", "4",
        "--trials", "4", "--signals-per-trial", "10", "--seed", "5",
    ]
    out_a, out_b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert _run(args + ["--out", str(out_a)]) == 0
    assert _run(args + ["--out", str(out_b), "--jobs", "2"]) == 0
    text = out_a.read_text()
    lines = text.splitlines()
    assert lines[0].startswith("# config:")
    assert lines[1] == "scheme,n,n_B,m,b,signal_class,delta,fraction"
    assert len(lines) == 2 + 2 * 49  # two schemes, 49 grid points each
    # output independent of --jobs, except for the echoed config line
    body_a = [l for l in lines if not l.startswith("#")]
    body_b = [l for l in out_b.read_text().splitlines() if not l.startswith("#")]
    assert body_a == body_b


def test_rip_sweep_requires_measurements(tmp_path):
    assert _run(["rip-sweep", "--n", "64", "--nb", "16", "--out", str(tmp_path / "x.csv")]) == 2


# -- recon ---------------------------------------------------------------------


def test_recon_bundled_image_outputs(tmp_path):
    prefix = tmp_path / "restored"
    code = _run([
        "recon", "--bundled", "plasma", "--scheme", "kcs-rsrm", "--subrate", "0.25",
        "--nb", "64", "--lam", "1.0", "--iters", "120", "--seed", "2",
        "--out-prefix", str(prefix),
    ])
    assert code == 0
    metrics = json.loads(prefix.with_suffix(".json").read_text())
    assert {"psnr", "ssim", "iterations", "residual"} <= set(metrics)
    restored = read_pgm(prefix.with_suffix(".pgm"))
    assert restored.shape == (128, 128)


def test_recon_rejects_non_separable_scheme(tmp_path):
    code = _run([
        "recon", "--bundled", "plasma", "--scheme", "rsrm",
        "--out-prefix", str(tmp_path / "x"),
    ])
    assert code == 2


def test_recon_requires_image(tmp_path):
    code = _run(["recon", "--scheme", "kcs-rsrm", "--out-prefix", str(tmp_path / "x")])
    assert code == 2


# -- security ---------------------------------------------------------------------


def test_security_leakage_orders_bcs_above_rsrm(tmp_path):
    out = tmp_path / "sec.csv"
    code = _run([
        "security", "--metric", "leakage", "--bundled", "blobs",
        "--schemes", "bcs,rsrm", "--seed", "4", "--out", str(out),
        "--maps-dir", str(tmp_path / "maps"),
    ])
    assert code == 0
    rows = [l.split(",") for l in out.read_text().splitlines() if not l.startswith("#")][1:]
    values = {row[0]: float(row[2]) for row in rows}
    assert values["bcs"] > values["rsrm"]
    assert (tmp_path / "maps" / "energy_bcs.pgm").exists()
    assert (tmp_path / "maps" / "energy_rsrm.pgm").exists()


def test_security_adjacent_reports_pixel_row(tmp_path):
    out = tmp_path / "adj.csv"
    code = _run([
        "security", "--metric", "adjacent", "--bundled", "plasma",
        "--schemes", "rsrm", "--seed", "4", "--out", str(out),
    ])
    assert code == 0
    rows = [l.split(",") for l in out.read_text().splitlines() if not l.startswith("#")][1:]
    values = {row[0]: float(row[2]) for row in rows}
    assert values["pixels"] > 0.9
    assert abs(values["rsrm"]) < 0.1


def test_security_erasure_rate_row(tmp_path):
    out = tmp_path / "era.csv"
    code = _run([
        "security", "--metric", "erasure", "--schemes", "rsrm", "--n", "256",
        "--nb", "128", "--b", "2", "--s", "8", "--m", "96", "--fraction", "0.1",
        "--trials", "25", "--seed", "6", "--out", str(out),
    ])
    assert code == 0
    rows = [l.split(",") for l in out.read_text().splitlines() if not l.startswith("#")][1:]
    assert rows[0][0] == "rsrm"
    assert float(rows[0][2]) >= 0.8


def test_security_determinism(tmp_path):
    args = [
        "security", "--metric", "leakage", "--bundled", "gradient_bars",
        "--schemes", "bcs,rsrm", "--seed", "9",
    ]
    out_a, out_b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert _run(args + ["--out", str(out_a)]) == 0
    assert _run(args + ["--out", str(out_b)]) == 0
    assert [l for l in out_a.read_text().splitlines() if not l.startswith("#")] == [
        l for l in out_b.read_text().splitlines() if not l.startswith("#")
    ]


# -- storage ---------------------------------------------------------------------


def test_storage_separable_table_row(tmp_path):
    out = tmp_path / "st.csv"
    code = _run([
        "storage", "--mode", "separable", "--image", "256", "--subrate", "0.25",
        "--nb", "128", "--scheme", "rsrm", "--b", "1", "--out", str(out),
    ])
    assert code == 0
    rows = [l.split(",") for l in out.read_text().splitlines() if not l.startswith("#")][1:]
    (scheme, mode, n, n_b, subrate, b, r_ints, d_ints, phi_floats, mults, note) = rows[0]
    assert scheme == "rsrm" and mode == "separable"
    assert int(r_ints) == 2 * 256
    assert int(d_ints) == 2 * 128
    assert int(phi_floats) == 2 * 128 * 128
    assert note == ""


def test_storage_frame_rsrm_carries_discrepancy_note(tmp_path):
    out = tmp_path / "st.csv"
    code = _run([
        "storage", "--mode", "frame", "--image", "256", "--subrate", "0.25",
        "--nb", "128", "--scheme", "rsrm4", "--out", str(out),
    ])
    assert code == 0
    rows = [l.split(",") for l in out.read_text().splitlines() if not l.startswith("#")][1:]
    assert rows[0][-1] == "phi_counts_full_shared_blocks"


def test_storage_multiple_scheme_tokens(tmp_path):
    out = tmp_path / "st.csv"
    code = _run([
        "storage", "--mode", "separable", "--image", "256", "--subrate", "0.25",
        "--nb", "128", "--scheme", "bcs,bsrm,rsrm1,rsrm4", "--out", str(out),
    ])
    assert code == 0
    rows = [l.split(",") for l in out.read_text().splitlines() if not l.startswith("#")][1:]
    assert [r[0] for r in rows] == ["bcs", "bsrm", "rsrm1", "rsrm4"]


def test_storage_requires_image_side(tmp_path):
    assert _run(["storage", "--mode", "separable", "--out", str(tmp_path / "x.csv")]) == 2


# -- exit codes ---------------------------------------------------------------------


def test_unknown_scheme_token_exits_2(tmp_path):
    code = _run([
        "gen", "--scheme", "rsrmx", "--n", "64", "--nb", "16",
        "--subrate", "0.5", "--out", str(tmp_path / "x.json"),
    ])
    assert code == 2


def test_runtime_failure_exits_3(tmp_path):
    # constant image makes the leakage correlation undefined
    from structcs.pgm import write_pgm

    flat = tmp_path / "flat.pgm"
    write_pgm(flat, np.full((32, 32), 99))
    code = _run([
        "security", "--metric", "leakage", "--image", str(flat),
        "--schemes", "bcs", "--out", str(tmp_path / "x.csv"),
    ])
    assert code == 3
