import json

import numpy as np
import pytest

from embedcure import save_features, save_manifest
from embedcure.cli import main
from conftest import make_manifest, make_matrix


@pytest.fixture
def feature_file(tmp_path, rng):
    main = rng.randn(100, 6)
    satellite = rng.randn(8, 6) * 0.3 + 20.0
    m = make_matrix(np.vstack([main, satellite]))
    path = tmp_path / "f.featmat"
    save_features(m, path)
    return path


def run_cli(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_extract_info(feature_file, capsys):
    code, out, _ = run_cli(["extract-info", "--features", str(feature_file)],
                           capsys)
    assert code == 0
    info = json.loads(out)
    assert info["n_samples"] == 108
    assert info["n_dims"] == 6
    assert info["first_ids"] == ["s0", "s1", "s2", "s3", "s4"]


def test_extract_info_missing_file(tmp_path, capsys):
    code, _, err = run_cli(
        ["extract-info", "--features", str(tmp_path / "nope.featmat")], capsys)
    assert code == 4
    assert "error" in err


def test_embed_then_detect_then_export(feature_file, tmp_path, capsys):
    run_root = tmp_path / "runs"
    code, out, _ = run_cli(
        ["embed", "--features", str(feature_file), "--run-root", str(run_root),
         "--k", "8", "--epochs", "40", "--seed", "0"], capsys)
    assert code == 0
    payload = json.loads(out)
    run_dir = payload["run_dir"]
    assert (run_root / payload["run_id"] / "embedding.emb").exists()

    code, out, _ = run_cli(
        ["detect", "--run-dir", run_dir, "--min-pts", "4",
         "--main-fraction", "0.2"], capsys)
    assert code == 0
    assert "main" in out and "satellite" in out

    # flag the first satellite cluster, then export its members
    clusters = json.loads((run_root / payload["run_id"] / "clusters.json")
                          .read_text())
    satellite = next(c for c in clusters["clusters"] if c["kind"] == "satellite")
    from embedcure.runs import add_flag
    add_flag(run_dir, satellite["id"], "satellite")
    out_file = tmp_path / "outliers.jsonl"
    code, _, _ = run_cli(
        ["export", "--run-dir", run_dir, "--out", str(out_file)], capsys)
    assert code == 0
    rows = [json.loads(line) for line in out_file.read_text().splitlines()]
    assert len(rows) == satellite["size"]


def test_embed_repeat_reuses_run(feature_file, tmp_path, capsys):
    run_root = tmp_path / "runs"
    argv = ["embed", "--features", str(feature_file), "--run-root",
            str(run_root), "--k", "8", "--epochs", "20"]
    _, out1, _ = run_cli(argv, capsys)
    _, out2, _ = run_cli(argv, capsys)
    assert json.loads(out1)["run_id"] == json.loads(out2)["run_id"]


def test_embed_pca_method(feature_file, tmp_path, capsys):
    code, out, _ = run_cli(
        ["embed", "--features", str(feature_file), "--method", "pca",
         "--run-root", str(tmp_path / "runs")], capsys)
    assert code == 0
    assert "run_id" in json.loads(out)


def test_embed_invalid_parameter_exit_2(feature_file, tmp_path, capsys):
    code, _, err = run_cli(
        ["embed", "--features", str(feature_file), "--run-root",
         str(tmp_path / "runs"), "--k", "0"], capsys)
    assert code == 2
    assert "error" in err


def test_embed_k_too_large_exit_2(feature_file, tmp_path, capsys):
    code, _, _ = run_cli(
        ["embed", "--features", str(feature_file), "--run-root",
         str(tmp_path / "runs"), "--k", "500", "--epochs", "5"], capsys)
    assert code == 2


def test_detect_bad_eps_exit_2(tmp_path, capsys):
    code, _, _ = run_cli(
        ["detect", "--run-dir", str(tmp_path), "--eps", "-1"], capsys)
    assert code == 2


def test_detect_missing_run_exit_4(tmp_path, capsys):
    code, _, _ = run_cli(
        ["detect", "--run-dir", str(tmp_path / "absent")], capsys)
    assert code == 4


def test_export_before_detect_exit_2(feature_file, tmp_path, capsys):
    run_root = tmp_path / "runs"
    _, out, _ = run_cli(
        ["embed", "--features", str(feature_file), "--run-root", str(run_root),
         "--k", "8", "--epochs", "5"], capsys)
    run_dir = json.loads(out)["run_dir"]
    code, _, _ = run_cli(["export", "--run-dir", run_dir], capsys)
    assert code == 2


def test_seed_probe_cli(tmp_path, rng, capsys):
    target_vals = np.vstack([rng.randn(80, 6),
                             rng.randn(3, 6) + 15.0]).astype(np.float32)
    tids = [f"t{i}" for i in range(80)] + ["bad0", "bad1", "bad2"]
    target = make_matrix(target_vals)
    target = target.__class__(values=target_vals, ids=tuple(tids))
    seeds = make_matrix(rng.randn(25, 6) + 15.0, prefix="seed")
    tpath, spath = tmp_path / "t.featmat", tmp_path / "s.featmat"
    save_features(target, tpath)
    save_features(seeds, spath)
    smani = make_manifest(seeds.ids, source="reference")
    smani_path = tmp_path / "s.jsonl"
    save_manifest(smani, smani_path)

    code, out, _ = run_cli(
        ["seed-probe", "--target-features", str(tpath),
         "--seed-features", str(spath), "--seed-manifest", str(smani_path),
         "--k", "8", "--epochs", "80", "--k-vote", "8",
         "--run-dir", str(tmp_path / "probe-run")], capsys)
    assert code == 0
    result = json.loads(out)
    flagged = {f["id"] for f in result["flagged"]}
    assert flagged == {"bad0", "bad1", "bad2"}
    assert (tmp_path / "probe-run" / "probe_result.json").exists()


def test_serve_port_in_use_exit_4(tmp_path, capsys):
    import socket
    holder = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    holder.bind(("127.0.0.1", 0))
    port = holder.getsockname()[1]
    try:
        code, _, err = run_cli(
            ["serve", "--run-root", str(tmp_path), "--port", str(port)], capsys)
        assert code == 4
        assert "unavailable" in err
    finally:
        holder.close()
