import json
import os
import subprocess

import jsonschema


def run(cli, *args, env=None):
    full_env = dict(os.environ)
    full_env.update(env or {})
    return subprocess.run([cli, *args], capture_output=True, text=True, env=full_env)


def tree(path):
    return {p.relative_to(path).as_posix(): p.read_bytes() for p in sorted(path.rglob("*")) if p.is_file()}


def test_outputs_validate_against_schemas(cli, tmp_path, source_dir, schema):
    configs = source_dir / "configs"
    assert run(cli, "match", "--config", str(configs / "single_landmark.json"), "--out", str(tmp_path / "m")).returncode == 0
    r = run(cli, "uq", "--config", str(configs / "landmark_uq.json"), "--out", str(tmp_path / "u"), "--threads", "2")
    assert r.returncode == 0, r.stderr
    assert run(cli, "verify", "--config", str(configs / "verify_no_noise.json"), "--out", str(tmp_path / "v")).returncode == 0

    match = json.loads((tmp_path / "m" / "match_result.json").read_text())
    jsonschema.validate(match, schema("match_result"))
    assert abs(match["sigma0"][0][0] - 2.0 / 3.0) <= 1e-6
    jsonschema.validate(json.loads((tmp_path / "u" / "statistics.json").read_text()), schema("statistics"))
    report = json.loads((tmp_path / "v" / "verify.json").read_text())
    jsonschema.validate(report, schema("verify_report"))
    assert report["passed"]
    assert any(c["status"] == "skipped" for c in report["checks"])
    for d in ("m", "u"):
        jsonschema.validate(json.loads((tmp_path / d / "manifest.json").read_text()), schema("manifest"))
    for cfg in configs.glob("*.json"):
        jsonschema.validate(json.loads(cfg.read_text()), schema("config"))


def test_image_outputs_and_sidecars(cli, tmp_path, source_dir, schema):
    cfg = json.loads((source_dir / "configs" / "image_1d.json").read_text())
    cfg["match"] = dict(cfg.get("match", {}), max_iters=3)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    r = run(cli, "match", "--config", str(path), "--out", str(tmp_path / "out"))
    assert r.returncode in (0, 2), r.stderr
    jsonschema.validate(json.loads((tmp_path / "out" / "match_result.json").read_text()), schema("match_result"))
    side = json.loads((tmp_path / "out" / "sigma0.f64.json").read_text())
    jsonschema.validate(side, schema("raw_grid"))
    assert (tmp_path / "out" / "sigma0.f64").stat().st_size == 8 * side["shape"][0]


def test_reruns_are_byte_identical_across_thread_counts(cli, tmp_path, source_dir):
    cfg = str(source_dir / "configs" / "landmark_uq.json")
    assert run(cli, "uq", "--config", cfg, "--out", str(tmp_path / "a"), "--threads", "1").returncode == 0
    assert run(cli, "uq", "--config", cfg, "--out", str(tmp_path / "b"), "--threads", "3").returncode == 0
    assert run(cli, "uq", "--config", cfg, "--out", str(tmp_path / "c"), env={"METAMORPH_THREADS": "2"}).returncode == 0
    a = tree(tmp_path / "a")
    assert a == tree(tmp_path / "b") == tree(tmp_path / "c")
    assert run(cli, "uq", "--config", cfg, "--out", str(tmp_path / "d"), "--seed", "99").returncode == 0
    assert tree(tmp_path / "d")["samples.csv"] != a["samples.csv"]


def test_exit_codes(cli, tmp_path, source_dir):
    configs = source_dir / "configs"
    assert run(cli, "simulate", "--config", str(tmp_path / "missing.json")).returncode == 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"structure": "landmark", "initial": {"landmarks": [[0, 0]]}, "dt": -1}))
    r = run(cli, "simulate", "--config", str(bad), "--out", str(tmp_path / "x"))
    assert r.returncode == 1 and "'dt'" in r.stderr
    r = run(cli, "uq", "--config", str(configs / "landmark_uq.json"), "--out", str(tmp_path / "y"),
            env={"METAMORPH_THREADS": "zero"})
    assert r.returncode == 1

    blow = tmp_path / "blow.json"
    blow.write_text(json.dumps({"structure": "landmark", "initial": {"landmarks": [[0, 0]], "sigma": [[1e200, 0]]},
                                "dt": 0.1, "uq": {"n_samples": 2}}))
    assert run(cli, "uq", "--config", str(blow), "--out", str(tmp_path / "z")).returncode == 2

    r = run(cli, "verify", "--config", str(configs / "verify_coarse.json"))
    assert r.returncode == 3
    assert "hamiltonian_conservation" in r.stdout and "fail" in r.stdout
