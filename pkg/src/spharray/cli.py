"""Command-line interface.

Subcommands: simulate, transform, enhance, profile, init-weights, and
``geometry validate``.  Every file-producing run writes a JSON run manifest
next to each output (``<output>.manifest.json``) holding the resolved
arguments; ``--manifest`` replays a prior run (explicit flags still win over
manifest values, which win over defaults).  Exit codes: 0 success, 2 user
error (bad arguments or malformed content), 3 I/O failure.
"""

from __future__ import annotations

import dataclasses
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import __version__
from .errors import FileFormatError, ShapeError, SignalError, SpharrayError
from .frontend import sht_transform
from .geometry import far_field_min_distance, load_geometry, subset_geometry
from .harmonics import build_plan
from .io import read_tensor, read_wav, write_tensor, write_wav
from .profiling import (
    CONVENTION,
    blstm_cost_model,
    cost_curve,
    flop_reduction,
    shtnet_cost_model,
    write_cost_csv,
)
from .simulate import load_scene, render_scene
from .ssafn import (
    SsafnConfig,
    init_weights,
    load_weights,
    param_count,
    save_weights,
    ssafn_forward,
)
from .stft import StftConfig, stft


def _fail(code: int, message) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guarded(fn):
    """Map validation errors to exit 2 and I/O failures to exit 3."""

    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except SpharrayError as exc:
            _fail(2, exc)
        except OSError as exc:
            _fail(3, exc)

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _write_manifest(out_path, command: str, args: dict, extra: dict | None = None) -> None:
    payload = {"tool": "spharray", "version": __version__, "command": command, "args": args}
    if extra:
        payload.update(extra)
    manifest_path = Path(str(out_path) + ".manifest.json")
    manifest_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _load_manifest(path, command: str) -> dict:
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"manifest {path}: invalid JSON ({exc})") from exc
    if payload.get("command") != command:
        raise FileFormatError(
            f"manifest {path}: records command {payload.get('command')!r}, not {command!r}"
        )
    if not isinstance(payload.get("args"), dict):
        raise FileFormatError(f"manifest {path}: missing args table")
    return payload["args"]


def _merge_manifest(ctx: click.Context, manifest_args: dict, values: dict) -> dict:
    """Overlay manifest args under explicitly-set CLI values."""
    merged = dict(values)
    for key, stored in manifest_args.items():
        if key not in merged:
            continue
        source = ctx.get_parameter_source(key)
        if source in (
            click.core.ParameterSource.DEFAULT,
            click.core.ParameterSource.DEFAULT_MAP,
            None,
        ):
            if isinstance(merged[key], tuple) and isinstance(stored, list):
                stored = tuple(stored)
            merged[key] = stored
    return merged


def _parse_subset(text: str | None) -> list[int] | None:
    if text is None:
        return None
    try:
        return [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise SignalError(f"--subset must be comma-separated integers, got {text!r}")


def _resolve_outputs(inputs, output, out_dir, suffix: str) -> list[Path]:
    if output is not None and len(inputs) != 1:
        raise SignalError("-o/--output works with exactly one input; use --out-dir for many")
    if output is not None:
        return [Path(output)]
    if out_dir is None:
        raise SignalError("give -o/--output (single input) or --out-dir")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return [out_dir / (Path(p).stem + suffix) for p in inputs]


def _transform_one(task: dict) -> str:
    geometry = load_geometry(task["geometry"])
    subset = task["subset"]
    config = StftConfig(
        sample_rate=task["sample_rate"],
        fft_size=task["fft_size"],
        frame_len=task["frame_len"],
        hop=task["hop"],
        window=task["window"],
    )
    rate, wavs = read_wav(task["input"])
    if rate != config.sample_rate:
        raise SignalError(
            f"{task['input']}: sample rate {rate} != configured {config.sample_rate}"
        )
    if wavs.shape[0] != geometry.num_mics:
        raise ShapeError(
            f"{task['input']}: {wavs.shape[0]} channels but geometry has "
            f"{geometry.num_mics} mics"
        )
    if subset is not None:
        geometry = subset_geometry(geometry, subset)
        wavs = wavs[list(subset)]
    plan = build_plan(geometry, task["order"])
    tensor = np.abs(stft(sht_transform(wavs, plan), config))
    write_tensor(task["output"], tensor)
    return task["output"]


def _enhance_one(task: dict) -> str:
    weights = load_weights(task["weights"])
    tensor = read_tensor(task["input"])
    if tensor.ndim != 3:
        raise ShapeError(f"{task['input']}: expected a (C, T, F) tensor, got rank {tensor.ndim}")
    out = ssafn_forward(tensor.astype(float), weights)
    write_tensor(task["output"], out)
    return task["output"]


def _run_tasks(worker, tasks: list[dict], jobs: int) -> None:
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(worker, tasks))
    else:
        for task in tasks:
            worker(task)


@click.group()
@click.version_option(version=__version__, prog_name="spharray")
def main():
    """Spherical-harmonic array frontend: simulate, encode, enhance, profile."""


@main.command()
@click.argument("scene", required=False, type=click.Path())
@click.option("-o", "--output", type=click.Path(), help="Output multichannel WAV path.")
@click.option("--seed", type=int, default=None, help="Override the scene's noise seed.")
@click.option("--manifest", "manifest_path", type=click.Path(), default=None,
              help="Replay a previous run's manifest.")
@click.pass_context
@_guarded
def simulate(ctx, scene, output, seed, manifest_path):
    """Render a scene JSON file onto its array and write a multichannel WAV."""
    values = {"scene": scene, "output": output, "seed": seed}
    if manifest_path is not None:
        values = _merge_manifest(ctx, _load_manifest(manifest_path, "simulate"), values)
    if values["scene"] is None or values["output"] is None:
        raise SignalError("simulate needs SCENE and -o/--output (directly or via --manifest)")
    scene_data = load_scene(values["scene"])
    if values["seed"] is not None:
        scene_data["seed"] = values["seed"]
    wavs, rate = render_scene(scene_data)
    write_wav(values["output"], rate, wavs, fmt="float32")
    _write_manifest(values["output"], "simulate", values)
    click.echo(f"wrote {values['output']} ({wavs.shape[0]} channels, {wavs.shape[1]} samples)")


@main.command()
@click.argument("inputs", nargs=-1, type=click.Path())
@click.option("-o", "--output", type=click.Path(), default=None, help="Output tensor path.")
@click.option("--out-dir", type=click.Path(), default=None, help="Output directory.")
@click.option("--geometry", "geometry_path", type=click.Path(), default=None,
              help="Geometry JSON file.")
@click.option("--order", type=int, default=4, show_default=True, help="Harmonic order.")
@click.option("--subset", type=str, default=None,
              help="Comma-separated mic indices to keep (subset inference).")
@click.option("--sample-rate", type=int, default=16000, show_default=True)
@click.option("--fft-size", type=int, default=512, show_default=True)
@click.option("--frame-len", type=int, default=400, show_default=True)
@click.option("--hop", type=int, default=160, show_default=True)
@click.option("--window", type=click.Choice(["hann", "rect"]), default="hann", show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True,
              help="Parallel worker processes (over input files).")
@click.option("--manifest", "manifest_path", type=click.Path(), default=None,
              help="Replay a previous run's manifest.")
@click.pass_context
@_guarded
def transform(ctx, inputs, output, out_dir, geometry_path, order, subset, sample_rate,
              fft_size, frame_len, hop, window, jobs, manifest_path):
    """Encode multichannel WAV files into harmonic-domain magnitude tensors."""
    values = {
        "inputs": list(inputs), "output": output, "out_dir": out_dir,
        "geometry_path": geometry_path, "order": order, "subset": subset,
        "sample_rate": sample_rate, "fft_size": fft_size, "frame_len": frame_len,
        "hop": hop, "window": window,
    }
    if manifest_path is not None:
        values = _merge_manifest(ctx, _load_manifest(manifest_path, "transform"), values)
    if not values["inputs"]:
        raise SignalError("no input WAV files given")
    if values["geometry_path"] is None:
        raise SignalError("--geometry is required")
    subset_indices = _parse_subset(values["subset"])
    outputs = _resolve_outputs(values["inputs"], values["output"], values["out_dir"], ".sht1")
    tasks = [
        {
            "input": str(inp), "output": str(outp), "geometry": str(values["geometry_path"]),
            "subset": subset_indices, "order": values["order"],
            "sample_rate": values["sample_rate"], "fft_size": values["fft_size"],
            "frame_len": values["frame_len"], "hop": values["hop"], "window": values["window"],
        }
        for inp, outp in zip(values["inputs"], outputs)
    ]
    _run_tasks(_transform_one, tasks, jobs)
    for task, outp in zip(tasks, outputs):
        per_file = dict(values)
        per_file["inputs"] = [task["input"]]
        per_file["output"] = str(outp)
        _write_manifest(outp, "transform", per_file)
        click.echo(f"wrote {outp}")


@main.command()
@click.argument("inputs", nargs=-1, type=click.Path())
@click.option("-o", "--output", type=click.Path(), default=None, help="Output tensor path.")
@click.option("--out-dir", type=click.Path(), default=None, help="Output directory.")
@click.option("--weights", "weights_path", type=click.Path(), default=None,
              help="SSAF weight file.")
@click.option("--jobs", type=int, default=1, show_default=True,
              help="Parallel worker processes (over input files).")
@click.option("--manifest", "manifest_path", type=click.Path(), default=None,
              help="Replay a previous run's manifest.")
@click.pass_context
@_guarded
def enhance(ctx, inputs, output, out_dir, weights_path, jobs, manifest_path):
    """Run the attention network on magnitude tensors (C,T,F -> T,F)."""
    values = {
        "inputs": list(inputs), "output": output, "out_dir": out_dir,
        "weights_path": weights_path,
    }
    if manifest_path is not None:
        values = _merge_manifest(ctx, _load_manifest(manifest_path, "enhance"), values)
    if not values["inputs"]:
        raise SignalError("no input tensor files given")
    if values["weights_path"] is None:
        raise SignalError("--weights is required")
    outputs = _resolve_outputs(values["inputs"], values["output"], values["out_dir"], ".enhanced.sht1")
    tasks = [
        {"input": str(inp), "output": str(outp), "weights": str(values["weights_path"])}
        for inp, outp in zip(values["inputs"], outputs)
    ]
    _run_tasks(_enhance_one, tasks, jobs)
    for task, outp in zip(tasks, outputs):
        per_file = dict(values)
        per_file["inputs"] = [task["input"]]
        per_file["output"] = str(outp)
        _write_manifest(outp, "enhance", per_file)
        click.echo(f"wrote {outp}")


@main.command("init-weights")
@click.option("-o", "--output", type=click.Path(), required=True, help="Output SSAF path.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--channels", type=int, default=25, show_default=True)
@click.option("--freq-bins", type=int, default=257, show_default=True)
@click.option("--embed-dim", type=int, default=64, show_default=True)
@click.option("--num-heads", type=int, default=2, show_default=True)
@click.option("--attn-dim", type=int, default=64, show_default=True)
@click.option("--reduction", type=int, default=5, show_default=True)
@click.option("--cbam-kernels", type=str, default="9,7,5,3", show_default=True)
@click.option("--joint-attention/--no-joint-attention", default=True, show_default=True)
@click.option("--rsacc/--no-rsacc", default=True, show_default=True)
@click.option("--mhsa/--no-mhsa", default=True, show_default=True)
@_guarded
def init_weights_cmd(output, seed, channels, freq_bins, embed_dim, num_heads, attn_dim,
                     reduction, cbam_kernels, joint_attention, rsacc, mhsa):
    """Create a seeded SSAF weight file."""
    kernels = tuple(_parse_subset(cbam_kernels) or ())
    config = SsafnConfig(
        channels=channels, freq_bins=freq_bins, embed_dim=embed_dim, num_heads=num_heads,
        attn_dim=attn_dim, cbam_kernels=kernels, reduction=reduction,
        joint_attention=joint_attention, rsacc=rsacc, mhsa=mhsa,
    )
    weights = init_weights(config, seed=seed)
    save_weights(weights, output)
    _write_manifest(output, "init-weights", {
        "output": str(output), "seed": seed, "config": dataclasses.asdict(config),
    })
    click.echo(f"wrote {output} ({param_count(weights)} parameters)")


@main.command()
@click.option("--seconds", type=int, default=10, show_default=True,
              help="Profile durations 1..N seconds.")
@click.option("--mics", type=int, default=8, show_default=True)
@click.option("--models", type=str, default="shtnet,blstm", show_default=True)
@click.option("-o", "--output", type=click.Path(), default=None,
              help="Write the curve here instead of stdout.")
@click.option("--json", "as_json", is_flag=True, help="Emit JSON instead of CSV.")
@_guarded
def profile(seconds, mics, models, output, as_json):
    """Emit the analytic FLOP curve and the reduction versus the baseline."""
    if seconds < 1:
        raise SignalError(f"--seconds must be >= 1, got {seconds}")
    model_names = tuple(m.strip() for m in models.split(",") if m.strip())
    try:
        rows = cost_curve(range(1, seconds + 1), num_mics=mics, models=model_names)
    except KeyError as exc:
        raise SignalError(exc.args[0])
    reduction = None
    if {"shtnet", "blstm"} <= set(model_names):
        reduction = flop_reduction(float(seconds), num_mics=mics)
    if as_json:
        payload = {
            "convention": CONVENTION,
            "rows": rows,
            "params": {
                "shtnet": shtnet_cost_model(float(seconds), mics).total_params,
                "blstm": blstm_cost_model(float(seconds), mics).total_params,
            },
        }
        if reduction is not None:
            payload["reduction"] = {"seconds": seconds, "fraction": reduction}
        text = json.dumps(payload, indent=2) + "\n"
        if output is None:
            click.echo(text, nl=False)
        else:
            Path(output).write_text(text)
    else:
        if output is None:
            write_cost_csv(rows, sys.stdout)
        else:
            with open(output, "w") as fh:
                write_cost_csv(rows, fh)
    if output is not None:
        _write_manifest(output, "profile", {
            "seconds": seconds, "mics": mics, "models": list(model_names),
            "output": str(output), "json": as_json,
        }, extra={"convention": CONVENTION})
    if reduction is not None:
        line = f"FLOP reduction vs blstm at {seconds}s: {100.0 * reduction:.1f}%"
        click.echo(line, err=output is None)


@main.group()
def geometry():
    """Geometry utilities."""


@geometry.command()
@click.argument("path", type=click.Path())
@click.option("--f-max", type=float, default=8000.0, show_default=True,
              help="Frequency for the far-field distance report.")
@_guarded
def validate(path, f_max):
    """Validate a geometry JSON file and print a summary."""
    geo = load_geometry(path)
    centroid = np.linalg.norm(geo.positions.mean(axis=0))
    click.echo(f"name: {geo.name}")
    click.echo(f"mics: {geo.num_mics}")
    click.echo(f"max radius: {geo.max_radius:.6g} m")
    click.echo(f"centroid offset: {centroid:.3g} m")
    click.echo(f"far-field beyond: {far_field_min_distance(geo, f_max):.6g} m (at {f_max:g} Hz)")


if __name__ == "__main__":
    main()
