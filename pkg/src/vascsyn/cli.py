"""Command-line interface: sample generation, dataset batches,
morphometrics, labeling, statistics, and the HTTP service."""
from __future__ import annotations

import json
import logging
import os
import sys
import traceback
from pathlib import Path

import click
import numpy as np

from .assembly import LabeledMesh, aneurysm_submesh, extract_ostium_ring, \
    label_vertices
from .errors import VascsynError
from .mesh.io import read_ply
from .morpho import compute_morphometrics
from .pipeline import (PipelineConfig, compute_dataset_stats,
                       generate_dataset, generate_sample, sample_dir_name,
                       write_sample)
from .rng import sample_seed


def _setup_logging():
    level = os.environ.get("VASCSYN_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise click.ClickException(f"config file is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        raise click.ClickException("config file must hold a JSON object")
    return cfg


def _build_pipeline_config(config_file, **overrides) -> PipelineConfig:
    cfg = _load_config(config_file)
    for key, value in overrides.items():
        if value is not None:
            cfg[key] = value
    try:
        return PipelineConfig.from_dict(cfg)
    except VascsynError as exc:
        raise click.ClickException(str(exc))


def _emit(payload: dict, as_json: bool, human_lines: list[str]):
    if as_json:
        click.echo(json.dumps(payload, sort_keys=True))
    else:
        for line in human_lines:
            click.echo(line)


@click.group()
def cli():
    """Synthetic labeled vascular aneurysm surface meshes."""


@cli.command()
@click.option("--seed", type=int, required=True, help="Sample seed.")
@click.option("--out", "out_dir", type=click.Path(), required=True,
              help="Output directory for the sample files.")
@click.option("--config", "config_file", type=click.Path(exists=True),
              default=None, help="JSON config file.")
@click.option("--strategy",
              type=click.Choice(["bifurcation", "curvature",
                                 "curvature_out", "curvature_in"]),
              default=None, help="Force an ostium placement strategy.")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
def generate(seed, out_dir, config_file, strategy, as_json):
    """Generate one labeled sample."""
    config = _build_pipeline_config(config_file, ostium_strategy=strategy)
    sample = generate_sample(seed, config)
    write_sample(sample, out_dir)
    payload = {"out_dir": str(out_dir), "seed": seed,
               "morphometrics": sample.morpho,
               "has_bleb": sample.meta["has_bleb"],
               "vessel_attempts": sample.meta["vessel_attempts"],
               "aneurysm_attempts": sample.meta["aneurysm_attempts"]}
    _emit(payload, as_json, [
        f"sample written to {out_dir}",
        f"vertices: {sample.full.mesh.n_vertices}, "
        f"ring: {len(sample.ring.vertex_indices)}, "
        f"bleb: {sample.meta['has_bleb']}",
    ])


@cli.command()
@click.option("--n", "n_samples", type=int, required=True,
              help="Number of samples.")
@click.option("--seed", "master_seed", type=int, default=0,
              help="Master seed.")
@click.option("--workers", type=int, default=1, help="Parallel workers.")
@click.option("--out", "out_dir", type=click.Path(), required=True,
              help="Dataset directory.")
@click.option("--config", "config_file", type=click.Path(exists=True),
              default=None, help="JSON config file.")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
def dataset(n_samples, master_seed, workers, out_dir, config_file, as_json):
    """Generate a dataset of samples (resumable)."""
    config = _build_pipeline_config(config_file, n_samples=n_samples,
                                    master_seed=master_seed,
                                    workers=workers, out_dir=str(out_dir))
    manifest = generate_dataset(config)
    ok = sum(1 for r in manifest["records"] if r["status"] == "ok")
    failed = len(manifest["records"]) - ok
    payload = {"out_dir": str(out_dir), "ok": ok, "failed": failed}
    _emit(payload, as_json, [f"{ok} samples ok, {failed} failed, "
                             f"manifest at {out_dir}/manifest.json"])


def _read_labeled(mesh_path: str, labels_path: str) -> LabeledMesh:
    mesh, props = read_ply(mesh_path)
    if mesh is None:
        raise click.ClickException(f"{mesh_path} holds no triangle mesh")
    if labels_path:
        labels = np.loadtxt(labels_path, dtype=np.int64)
    elif props.get("label") is not None:
        labels = np.asarray(props["label"], dtype=np.int64)
    else:
        raise click.ClickException("no labels: pass --labels or use a PLY "
                                   "with a label property")
    try:
        return LabeledMesh(mesh, labels)
    except VascsynError as exc:
        raise click.ClickException(str(exc))


@cli.command()
@click.option("--mesh", "mesh_path", type=click.Path(exists=True),
              required=True, help="Labeled mesh (PLY).")
@click.option("--labels", "labels_path", type=click.Path(exists=True),
              default=None, help="labels.txt (one integer per vertex).")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
def morph(mesh_path, labels_path, as_json):
    """Morphometric descriptors of a labeled mesh."""
    lm = _read_labeled(mesh_path, labels_path)
    ring = extract_ostium_ring(lm)
    sub, _, sub_ring = aneurysm_submesh(lm, ring)
    result = compute_morphometrics(sub.mesh, sub_ring)
    if as_json:
        click.echo(json.dumps(result, sort_keys=True))
    else:
        click.echo(json.dumps(result, sort_keys=True, indent=2))


@cli.command()
@click.option("--mesh", "mesh_path", type=click.Path(exists=True),
              required=True, help="Assembled mesh (PLY).")
@click.option("--sac", "sac_path", type=click.Path(exists=True),
              required=True, help="Placed aneurysm reference mesh (PLY).")
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Write labels here instead of stdout.")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
def label(mesh_path, sac_path, out_path, as_json):
    """Label an assembled mesh against a placed sac reference."""
    mesh, _ = read_ply(mesh_path)
    sac, _ = read_ply(sac_path)
    if mesh is None or sac is None:
        raise click.ClickException("both inputs must hold triangle meshes")
    lm = label_vertices(mesh, sac)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write("\n".join(str(int(x)) for x in lm.labels) + "\n")
        _emit({"out": str(out_path),
               "counts": {str(k): int((lm.labels == k).sum())
                          for k in (0, 1, 2)}},
              as_json, [f"labels written to {out_path}"])
    elif as_json:
        click.echo(json.dumps({"labels": [int(x) for x in lm.labels]}))
    else:
        click.echo("\n".join(str(int(x)) for x in lm.labels))


@cli.command()
@click.option("--dir", "dataset_dir", type=click.Path(exists=True),
              required=True, help="Dataset directory with manifest.json.")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
def stats(dataset_dir, as_json):
    """Distribution statistics over a generated dataset."""
    result = compute_dataset_stats(dataset_dir)
    if as_json:
        click.echo(json.dumps(result, sort_keys=True))
    else:
        click.echo(f"{result['n_samples']} samples; stats.json and "
                   f"stats.csv written to {dataset_dir}")


@cli.command()
@click.option("--port", type=int, default=8000, help="Listen port.")
@click.option("--host", default="127.0.0.1", help="Bind address.")
@click.option("--state-dir", type=click.Path(), default=None,
              help="Directory for session exports.")
@click.option("--frontend", "frontend_dir", type=click.Path(), default=None,
              help="Built editor assets to serve at / (default: "
                   "frontend/dist next to the working directory, if built).")
def serve(port, host, state_dir, frontend_dir):
    """Run the HTTP editor service."""
    import uvicorn

    from .service import create_app
    if frontend_dir is None:
        candidate = Path("frontend") / "dist"
        if (candidate / "index.html").is_file():
            frontend_dir = str(candidate)
    uvicorn.run(create_app(state_dir=state_dir, frontend_dir=frontend_dir),
                host=host, port=port)


def main(argv=None) -> int:
    _setup_logging()
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        return 1
    except SystemExit as exc:
        code = exc.code or 0
        return 1 if code not in (0,) else 0
    except VascsynError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
