"""Command-line entry point tying the pipeline together.

Subcommands: synth, preprocess, train (motion-vae | content-vae | decoder |
gan), generate, eval (fid | adherence), rasterize, serve. Config files are
flat key/value JSON; explicit CLI flags take precedence over file values.

Exit codes: 0 success, 1 validation error, 2 runtime error. With
--json-errors a machine-readable {"error", "message"} object is written to
stderr on failure.
"""

from __future__ import annotations

import dataclasses
import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .adversarial import CriticConfig, save_critic, train_gan
from .content_vae import ContentVaeConfig, load_content_vae, save_content_vae, train_content_vae
from .errors import MotionboxError, ValidationError
from .generator import (
    GeneratorBundle,
    GeneratorConfig,
    SuperResolver,
    load_decoder,
    load_sr,
    save_decoder,
    save_sr,
    train_decoder,
)
from .motion_vae import MotionVaeConfig, load_motion_vae, save_motion_vae, train_motion_vae
from .preprocess import (
    BackgroundTrainConfig,
    PrepConfig,
    load_background_model,
    prepare_dataset,
    rasterize_tracks,
    save_background_model,
    train_background_ae,
)
from .synth import WorldConfig, generate_dataset, load_dataset_background
from .trainutil import write_history_csv
from .videoio import decode_frame_png, load_tracks, load_video, save_video


def _fail(ctx_obj: dict, exc: Exception) -> None:
    code = 1 if isinstance(exc, ValidationError) else 2
    if ctx_obj.get("json_errors"):
        payload = {"error": type(exc).__name__, "message": str(exc)}
        click.echo(json.dumps(payload), err=True)
    else:
        click.echo(f"error: {exc}", err=True)
    sys.exit(code)


def handle_errors(fn):
    @functools.wraps(fn)
    @click.pass_context
    def wrapper(ctx, *args, **kwargs):
        try:
            return ctx.invoke(fn, *args, **kwargs)
        except MotionboxError as exc:
            _fail(ctx.obj or {}, exc)

    return wrapper


def load_flat_config(path, cls, overrides: dict | None = None):
    """Flat JSON key/value file -> config dataclass; CLI overrides win."""
    values = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ValidationError(f"config file not found: {p}")
        try:
            values = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config file {p} is not valid JSON: {exc}")
        if not isinstance(values, dict):
            raise ValidationError(f"config file {p} must hold a flat JSON object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(values) - known
    if unknown:
        raise ValidationError(f"unknown config keys for {cls.__name__}: {sorted(unknown)}")
    for key, val in (overrides or {}).items():
        if val is not None:
            values[key] = val
    return cls(**values)


def _load_index(data_dir) -> list[Path]:
    root = Path(data_dir)
    index = root / "index.json"
    if not index.is_file():
        raise ValidationError(f"no index.json under {root}; run `motionbox synth` first")
    names = json.loads(index.read_text())["episodes"]
    return [root / name for name in names]


def _load_prepared(data_dir, need_motion=True, need_masks=False) -> list[dict]:
    episodes = []
    for ep in _load_index(data_dir):
        entry = {"dir": ep, "video": load_video(ep / "frames")}
        if need_motion:
            motion_dir = ep / "motion"
            if not motion_dir.is_dir():
                raise ValidationError(f"{ep} has no motion/; run `motionbox preprocess` first")
            entry["motion"] = load_video(motion_dir)
        if need_masks:
            masks_dir = ep / "masks"
            if not masks_dir.is_dir():
                raise ValidationError(
                    f"{ep} has no masks/; run `motionbox preprocess --train-background` first"
                )
            entry["masks"] = load_video(masks_dir)
        episodes.append(entry)
    if not episodes:
        raise ValidationError(f"dataset at {data_dir} lists no episodes")
    return episodes


@click.group()
@click.version_option(__version__)
@click.option("--json-errors", is_flag=True, help="Emit machine-readable error JSON on stderr.")
@click.pass_context
def main(ctx, json_errors):
    """Controllable video generation from bounding-box motion tracks."""
    ctx.ensure_object(dict)
    ctx.obj["json_errors"] = json_errors


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None, help="WorldConfig JSON file.")
@click.option("--count", type=int, required=True, help="Number of episodes to generate.")
@click.option("--out", "out_dir", type=click.Path(), required=True, help="Output dataset directory.")
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@handle_errors
def synth(config_path, count, out_dir, seed):
    """Generate a synthetic sprite dataset with ground-truth tracks."""
    cfg = load_flat_config(config_path, WorldConfig, {"seed": seed})
    index = generate_dataset(cfg, count, out_dir)
    click.echo(f"wrote {len(index['episodes'])} episodes to {out_dir}")


@main.command()
@click.option("--data", "data_dir", type=click.Path(), required=True, help="Dataset directory.")
@click.option("--train-background", is_flag=True, help="Train the background AE before preparing.")
@click.option("--background-ckpt", type=click.Path(), default=None,
              help="Existing background AE checkpoint prefix (default: <data>/background_ae).")
@click.option("--steps", type=int, default=None, help="Background AE training steps.")
@click.option("--tau", type=float, default=None, help="Foreground threshold in (0,1).")
@click.option("--kernel", type=int, default=None, help="Gaussian widening kernel size.")
@handle_errors
def preprocess(data_dir, train_background, background_ckpt, steps, tau, kernel):
    """Rasterize tracks into motion/ and compute refined masks/."""
    root = Path(data_dir)
    prefix = Path(background_ckpt) if background_ckpt else root / "background_ae"
    bg_model = None
    if train_background:
        frames = []
        for ep in _load_index(root):
            video = load_video(ep / "frames")
            frames.extend(video)
        cfg = BackgroundTrainConfig(
            height=frames[0].shape[0], width=frames[0].shape[1], steps=steps or 400
        )
        bg_model, history = train_background_ae(frames, cfg)
        save_background_model(bg_model, cfg.steps, prefix)
        write_history_csv(history, root / "background_ae_loss.csv")
        click.echo(f"background AE saved to {prefix} (final loss {history[-1]['loss']:.4f})")
    elif prefix.with_suffix(".pt").is_file():
        bg_model = load_background_model(prefix)
    overrides = {}
    if tau is not None:
        overrides["mask_threshold"] = tau
    if kernel is not None:
        overrides["widen_kernel"] = kernel
    prep_cfg = PrepConfig(**overrides)
    episodes = prepare_dataset(root, bg_model, prep_cfg)
    wrote = "motion/ and masks/" if bg_model is not None else "motion/ (no background model: masks skipped)"
    click.echo(f"prepared {len(episodes)} episodes: {wrote}")


@main.group()
def train():
    """Training stages (run in order: motion-vae, content-vae, decoder, gan)."""


def _plot_losses(history, out_dir, name):
    from .reporting import plot_loss_curves

    write_history_csv(history, Path(out_dir) / f"{name}_loss.csv")
    plot_loss_curves(history, Path(out_dir) / f"{name}_loss.png", title=name)


@train.command("motion-vae")
@click.option("--data", "data_dir", type=click.Path(), required=True)
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--steps", type=int, default=None)
@click.option("--seed", type=int, default=None)
@handle_errors
def train_motion_vae_cmd(data_dir, config_path, out_dir, steps, seed):
    """Train the motion VAE on prepared motion-reference videos."""
    episodes = _load_prepared(data_dir, need_motion=True)
    videos = np.stack([e["motion"] for e in episodes])
    cfg = load_flat_config(config_path, MotionVaeConfig, {"steps": steps, "seed": seed})
    model, history = train_motion_vae(videos, cfg)
    out = Path(out_dir)
    save_motion_vae(model, cfg.steps, out / "motion_vae")
    _plot_losses(history, out, "motion_vae")
    click.echo(f"motion VAE saved to {out / 'motion_vae'} (final L_MW {history[-1]['l_mw']:.4f})")


@train.command("content-vae")
@click.option("--data", "data_dir", type=click.Path(), required=True)
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--steps", type=int, default=None)
@click.option("--seed", type=int, default=None)
@handle_errors
def train_content_vae_cmd(data_dir, config_path, out_dir, steps, seed):
    """Train the content VAE on first frames with their foreground masks."""
    cfg = load_flat_config(config_path, ContentVaeConfig, {"steps": steps, "seed": seed})
    need_masks = cfg.mask_source == "refined"
    episodes = _load_prepared(data_dir, need_motion=True, need_masks=need_masks)
    frames = np.stack([e["video"][0] for e in episodes])
    source = "masks" if need_masks else "motion"
    masks = np.stack([e[source][0] for e in episodes])
    model, history = train_content_vae(frames, masks, cfg)
    out = Path(out_dir)
    save_content_vae(model, cfg.steps, out / "content_vae")
    _plot_losses(history, out, "content_vae")
    click.echo(f"content VAE saved to {out / 'content_vae'} (final L_CW {history[-1]['l_cw']:.4f})")


@train.command("decoder")
@click.option("--data", "data_dir", type=click.Path(), required=True)
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--motion-ckpt", type=click.Path(), default=None, help="Motion VAE prefix (default <out>/motion_vae).")
@click.option("--content-ckpt", type=click.Path(), default=None, help="Content VAE prefix (default <out>/content_vae).")
@click.option("--steps", type=int, default=None)
@click.option("--seed", type=int, default=None)
@handle_errors
def train_decoder_cmd(data_dir, config_path, out_dir, motion_ckpt, content_ckpt, steps, seed):
    """Stage 1: fit the decoder on reconstruction with frozen VAEs."""
    out = Path(out_dir)
    motion_model = load_motion_vae(motion_ckpt or out / "motion_vae")
    content_model = load_content_vae(content_ckpt or out / "content_vae")
    cfg = load_flat_config(config_path, GeneratorConfig, {"steps": steps, "seed": seed})
    episodes = _load_prepared(data_dir, need_motion=True)
    pairs = [(e["video"], e["motion"]) for e in episodes]
    decoder, history = train_decoder(pairs, motion_model, content_model, cfg)
    save_decoder(decoder, cfg.steps, out / "decoder")
    sr = SuperResolver(cfg)
    save_sr(sr, 0, out / "sr")
    GeneratorBundle(motion_model, content_model, decoder, sr, trained_steps=cfg.steps).save(out)
    _plot_losses(history, out, "decoder")
    click.echo(f"decoder saved to {out / 'decoder'} (final L_D {history[-1]['loss']:.4f})")


@train.command("gan")
@click.option("--data", "data_dir", type=click.Path(), required=True)
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--steps", type=int, default=None)
@click.option("--seed", type=int, default=None)
@handle_errors
def train_gan_cmd(data_dir, config_path, out_dir, steps, seed):
    """Stage 2: adversarial training of the whole generator."""
    out = Path(out_dir)
    decoder = load_decoder(out / "decoder")
    sr = load_sr(out / "sr")
    motion_model = load_motion_vae(out / "motion_vae")
    content_model = load_content_vae(out / "content_vae")
    cfg = load_flat_config(config_path, CriticConfig, {"steps": steps, "seed": seed})
    episodes = _load_prepared(data_dir, need_motion=False)
    videos = np.stack([e["video"] for e in episodes])
    try:
        critic, history = train_gan(videos, decoder, sr, cfg)
    finally:
        # On abort the trainer restored the last-good snapshot; keep it.
        save_decoder(decoder, cfg.steps, out / "decoder")
        save_sr(sr, cfg.steps, out / "sr")
        GeneratorBundle(motion_model, content_model, decoder, sr, trained_steps=cfg.steps).save(out)
    save_critic(critic, cfg.steps, out / "critic")
    _plot_losses(history, out, "gan")
    click.echo(f"adversarial stage finished; generator bundle at {out}")


@main.command()
@click.option("--model", "model_dir", type=click.Path(), required=True, help="Generator bundle directory.")
@click.option("--mode", type=click.Choice(["controlled", "unconditional"]), default="controlled")
@click.option("--content", "content_path", type=click.Path(), default=None, help="Content reference PNG.")
@click.option("--tracks", "tracks_path", type=click.Path(), default=None, help="tracks.json with box tracks.")
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@handle_errors
def generate(model_dir, mode, content_path, tracks_path, seed, out_dir):
    """Generate one video and write its frames to a directory."""
    bundle = GeneratorBundle.load(model_dir)
    if mode == "controlled":
        if content_path is None:
            raise ValidationError("controlled mode requires --content")
        if tracks_path is None:
            raise ValidationError("controlled mode requires --tracks")
        frame = decode_frame_png(Path(content_path).read_bytes())
        tracks = load_tracks(tracks_path)
        video = bundle.generate(content_frame=frame, tracks=tracks, seed=seed, mode="controlled")
    else:
        video = bundle.generate(seed=seed, mode="unconditional")
    manifest = save_video(video, out_dir)
    click.echo(f"wrote {manifest['n']} frames to {out_dir}")


@main.group("eval")
def eval_group():
    """Quantitative evaluation (FID protocol, motion adherence)."""


@eval_group.command("fid")
@click.option("--model", "model_dir", type=click.Path(), required=True)
@click.option("--protocol", "protocol_path", type=click.Path(), default=None,
              help='JSON like {"num_sets":5,"videos_per_set":50}.')
@click.option("--data", "data_dir", type=click.Path(), required=True, help="Reference dataset directory.")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--seed", type=int, default=0)
@handle_errors
def eval_fid(model_dir, protocol_path, data_dir, out_dir, seed):
    """Unconditional FID protocol against a reference dataset."""
    from .evaluation import evaluate_model, train_feature_extractor, video_frames
    from .reporting import plot_eval_report, write_report_csv

    protocol = {"num_sets": 5, "videos_per_set": 50}
    if protocol_path is not None:
        protocol.update(json.loads(Path(protocol_path).read_text()))
    bundle = GeneratorBundle.load(model_dir)
    reference = [load_video(ep / "frames") for ep in _load_index(data_dir)]
    extractor = train_feature_extractor(video_frames(reference), seed=seed)
    report = evaluate_model(bundle, protocol, extractor, reference, seed=seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    write_report_csv(report, out / "scores.csv")
    plot_eval_report(report, out / "fid_report.png")
    click.echo(json.dumps(report.to_dict()["scores"]))
    click.echo(f"mean FID {report.mean:.4f} (CI {report.ci[0]:.4f}..{report.ci[1]:.4f}); report in {out}")


@eval_group.command("adherence")
@click.option("--generated", "generated_dir", type=click.Path(), required=True, help="Frame directory.")
@click.option("--tracks", "tracks_path", type=click.Path(), required=True)
@click.option("--background", "background_path", type=click.Path(), default=None,
              help="Background PNG (default: background.png next to the dataset index).")
@click.option("--data", "data_dir", type=click.Path(), default=None,
              help="Dataset directory holding background.png.")
@handle_errors
def eval_adherence(generated_dir, tracks_path, background_path, data_dir):
    """Mean IoU between commanded tracks and detections in a generated video."""
    from .evaluation import motion_adherence

    if background_path is None and data_dir is None:
        raise ValidationError("provide --background or --data for the clean background")
    bg = (
        decode_frame_png(Path(background_path).read_bytes())
        if background_path
        else load_dataset_background(data_dir)
    )
    video = load_video(generated_dir)
    tracks = load_tracks(tracks_path)
    score = motion_adherence(video, tracks, bg)
    click.echo(f"{score:.4f}")


@main.command()
@click.option("--tracks", "tracks_path", type=click.Path(), required=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--raw", "raw_path", type=click.Path(), default=None,
              help="Also write the flat n*H*W 0/1 byte array (client parity checks).")
@handle_errors
def rasterize(tracks_path, out_dir, raw_path):
    """Rasterize a track file into its binary motion-reference video."""
    tracks = load_tracks(tracks_path)
    video = rasterize_tracks(tracks)
    save_video(video, out_dir)
    if raw_path is not None:
        Path(raw_path).write_bytes(
            np.ascontiguousarray(video[:, :, :, 0], dtype=np.uint8).tobytes()
        )
    click.echo(f"rasterized {tracks.num_frames} frames to {out_dir}")


@main.command()
@click.option("--models-dir", type=click.Path(), required=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--ui-dir", type=click.Path(), default=None, help="Optional static frontend to mount at /ui.")
@handle_errors
def serve(models_dir, host, port, ui_dir):
    """Run the HTTP generation service."""
    import uvicorn

    from .service import create_app

    app = create_app(models_dir=models_dir, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
