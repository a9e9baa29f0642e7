import json

import numpy as np
import pytest
from click.testing import CliRunner

from motionbox.cli import main
from motionbox.videoio import load_video

TINY = dict(n=8, hw=16)


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


def _write_configs(root):
    (root / "world.json").write_text(json.dumps({
        "num_objects": 1, "sprite_size": 6, "velocity_range": 1,
        "n": 8, "height": 16, "width": 16, "seed": 3,
    }))
    (root / "motion.json").write_text(json.dumps({
        "latent_dim": 16, "base_channels": 4, "n": 8, "height": 16, "width": 16,
        "steps": 5, "batch_size": 2, "seed": 0,
    }))
    (root / "content.json").write_text(json.dumps({
        "latent_dim": 16, "base_channels": 4, "height": 16, "width": 16,
        "steps": 5, "batch_size": 2, "seed": 0,
    }))
    (root / "gen.json").write_text(json.dumps({
        "motion_latent_dim": 16, "content_latent_dim": 16, "noise_dim": 8,
        "base_channels": 4, "n": 8, "height": 16, "width": 16,
        "steps": 5, "batch_size": 2, "seed": 0,
    }))
    (root / "critic.json").write_text(json.dumps({
        "base_channels": 4, "batch_size": 2, "steps": 4, "critic_steps": 2, "seed": 0,
        "n": 8, "height": 16, "width": 16,
    }))


@pytest.fixture(scope="module")
def pipeline_dir(tmp_path_factory, runner):
    """Full tiny pipeline: synth -> preprocess -> train all stages."""
    root = tmp_path_factory.mktemp("cli_pipeline")
    _write_configs(root)
    data = root / "data"
    ckpt = root / "ckpt"

    steps = [
        ["synth", "--config", str(root / "world.json"), "--count", "4", "--out", str(data)],
        ["preprocess", "--data", str(data), "--train-background", "--steps", "60"],
        ["train", "motion-vae", "--data", str(data), "--config", str(root / "motion.json"),
         "--out", str(ckpt)],
        ["train", "content-vae", "--data", str(data), "--config", str(root / "content.json"),
         "--out", str(ckpt)],
        ["train", "decoder", "--data", str(data), "--config", str(root / "gen.json"),
         "--out", str(ckpt)],
        ["train", "gan", "--data", str(data), "--config", str(root / "critic.json"),
         "--out", str(ckpt)],
    ]
    for argv in steps:
        result = runner.invoke(main, argv, catch_exceptions=False)
        assert result.exit_code == 0, f"{argv}: {result.output}"
    return root


def test_full_smoke_generates_nonzero_frames(pipeline_dir, runner):
    root = pipeline_dir
    out = root / "generated"
    result = runner.invoke(main, [
        "generate", "--model", str(root / "ckpt"), "--mode", "controlled",
        "--content", str(root / "data" / "ep_0000" / "frames" / "0000.png"),
        "--tracks", str(root / "data" / "ep_0000" / "tracks.json"),
        "--seed", "1", "--out", str(out),
    ], catch_exceptions=False)
    assert result.exit_code == 0, result.output
    video = load_video(out)
    assert video.shape == (8, 16, 16, 3)
    assert video.sum() > 0  # nonzero PNG frames on disk


def test_training_artifacts_exist(pipeline_dir):
    ckpt = pipeline_dir / "ckpt"
    for stem in ("motion_vae", "content_vae", "decoder", "sr", "critic"):
        assert (ckpt / f"{stem}.pt").is_file()
        assert (ckpt / f"{stem}.json").is_file()
    assert (ckpt / "bundle.json").is_file()
    # delimited loss logs plus rendered figures
    for stem in ("motion_vae", "content_vae", "decoder", "gan"):
        assert (ckpt / f"{stem}_loss.csv").is_file()
        assert (ckpt / f"{stem}_loss.png").is_file()


def test_generate_deterministic_across_invocations(pipeline_dir, runner):
    root = pipeline_dir
    outs = []
    for name in ("g1", "g2"):
        out = root / name
        result = runner.invoke(main, [
            "generate", "--model", str(root / "ckpt"), "--mode", "unconditional",
            "--seed", "11", "--out", str(out),
        ], catch_exceptions=False)
        assert result.exit_code == 0
        outs.append((out / "0000.png").read_bytes())
    assert outs[0] == outs[1]


def test_generate_missing_tracks_exit_1(pipeline_dir, runner):
    result = runner.invoke(main, [
        "generate", "--model", str(pipeline_dir / "ckpt"), "--mode", "controlled",
        "--content", str(pipeline_dir / "data" / "ep_0000" / "frames" / "0000.png"),
        "--out", str(pipeline_dir / "nope"),
    ])
    assert result.exit_code == 1
    assert "--tracks" in result.output


def test_json_errors_flag(pipeline_dir, runner):
    result = runner.invoke(main, [
        "--json-errors", "generate", "--model", str(pipeline_dir / "ckpt"),
        "--mode", "controlled", "--out", str(pipeline_dir / "nope2"),
    ])
    assert result.exit_code == 1
    err = json.loads(result.output.strip().splitlines()[-1])
    assert err["error"] == "ValidationError"
    assert "--content" in err["message"]


def test_eval_adherence_ground_truth_prints_one(pipeline_dir, runner):
    root = pipeline_dir
    result = runner.invoke(main, [
        "eval", "adherence",
        "--generated", str(root / "data" / "ep_0000" / "frames"),
        "--tracks", str(root / "data" / "ep_0000" / "tracks.json"),
        "--data", str(root / "data"),
    ], catch_exceptions=False)
    assert result.exit_code == 0
    assert result.output.strip() == "1.0000"


def test_eval_fid_writes_report(pipeline_dir, runner, tmp_path):
    root = pipeline_dir
    protocol = tmp_path / "protocol.json"
    protocol.write_text(json.dumps({"num_sets": 2, "videos_per_set": 2}))
    out = tmp_path / "report"
    result = runner.invoke(main, [
        "eval", "fid", "--model", str(root / "ckpt"), "--protocol", str(protocol),
        "--data", str(root / "data"), "--out", str(out), "--seed", "0",
    ], catch_exceptions=False)
    assert result.exit_code == 0, result.output
    report = json.loads((out / "report.json").read_text())
    assert len(report["scores"]) == 2
    assert set(report) == {"scores", "mean", "variance", "best", "worst", "ci", "protocol"}
    assert (out / "scores.csv").is_file()
    assert (out / "fid_report.png").is_file()


def test_rasterize_roundtrip(pipeline_dir, runner, tmp_path):
    tracks = pipeline_dir / "data" / "ep_0000" / "tracks.json"
    out = tmp_path / "raster"
    raw = tmp_path / "raster.bin"
    result = runner.invoke(main, [
        "rasterize", "--tracks", str(tracks), "--out", str(out), "--raw", str(raw),
    ], catch_exceptions=False)
    assert result.exit_code == 0
    video = load_video(out)
    assert video.shape == (8, 16, 16, 1)
    flat = np.frombuffer(raw.read_bytes(), dtype=np.uint8).reshape(8, 16, 16)
    assert (flat == video[:, :, :, 0]).all()


def test_synth_validation_error_exit_1(runner, tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"num_objects": 0}))
    result = runner.invoke(main, ["synth", "--config", str(cfg), "--count", "1",
                                  "--out", str(tmp_path / "d")])
    assert result.exit_code == 1


def test_unknown_config_key_rejected(runner, tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"not_a_field": 1}))
    result = runner.invoke(main, ["synth", "--config", str(cfg), "--count", "1",
                                  "--out", str(tmp_path / "d")])
    assert result.exit_code == 1
    assert "not_a_field" in result.output


def _walk_commands(cmd, prefix):
    yield prefix, cmd
    if hasattr(cmd, "commands"):
        for name, sub in cmd.commands.items():
            yield from _walk_commands(sub, prefix + [name])


def test_help_documents_all_flags(runner):
    """Every subcommand's --help lists every declared option."""
    import click

    for path, cmd in _walk_commands(main, []):
        result = runner.invoke(main, path + ["--help"], catch_exceptions=False)
        assert result.exit_code == 0
        for param in cmd.params:
            if isinstance(param, click.Option):
                flag = sorted(param.opts, key=len)[-1]
                assert flag in result.output, f"{' '.join(path)} --help missing {flag}"
