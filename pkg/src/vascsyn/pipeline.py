"""Batch sample generation: deterministic per-sample pipeline with a
bounded retry policy, parallel resumable dataset runs, and distribution
statistics over the emitted morphometrics."""
from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .aneurysm import AneurysmParams, generate_aneurysm
from .assembly import (LabeledSample, attach_aneurysm, cut_openings,
                       extract_ostium_ring, finalize_sample, label_vertices,
                       place_sac)
from .errors import (CutMissed, ExhaustedRetries, MergeFailed, NoCandidate,
                     RayMiss, RingInvalid, UnionDisconnected, VascsynError)
from .mesh.io import write_ply
from .morpho import FIELD_NAMES
from .ostium import estimate_curvature, select_ostium
from .rng import (STAGE_ANEURYSM, STAGE_OSTIUM, STAGE_VESSEL, sample_seed,
                  stage_rng)
from .vessel import VesselConfig, generate_healthy_vessel

log = logging.getLogger("vascsyn.pipeline")

LABEL_COLORS = {0: (0, 0, 255), 1: (255, 0, 0), 2: (0, 255, 0)}

STAT_GROUPS = {
    "lengths": ("D_max", "H_max", "W_max", "H_ortho", "W_ortho",
                "N_max", "N_avg"),
    "areas": ("A_A", "A_O1", "A_O2", "A_CH"),
    "volumes": ("V_A", "V_CH"),
    "indices": ("AR1", "AR2", "EI", "NSI", "UI"),
}


@dataclass
class PipelineConfig:
    n_samples: int = 1
    master_seed: int = 0
    workers: int = 1
    out_dir: str = "dataset"
    vessel: VesselConfig = field(default_factory=VesselConfig)
    aneurysm: AneurysmParams = field(default_factory=AneurysmParams)
    aneurysm_retries: int = 5
    vessel_resamples: int = 3
    ostium_strategy: str | None = None

    def __post_init__(self):
        if self.n_samples < 1:
            raise VascsynError("n_samples must be >= 1")
        if self.workers < 1:
            raise VascsynError("workers must be >= 1")

    def to_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "master_seed": self.master_seed,
            "workers": self.workers,
            "out_dir": str(self.out_dir),
            "vessel": self.vessel.to_dict(),
            "aneurysm": self.aneurysm.to_dict(),
            "aneurysm_retries": self.aneurysm_retries,
            "vessel_resamples": self.vessel_resamples,
            "ostium_strategy": self.ostium_strategy,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        d = dict(d)
        known = set(cls.__dataclass_fields__)
        bad = set(d) - known
        if bad:
            raise VascsynError(f"unknown pipeline config key(s): {sorted(bad)}")
        if "vessel" in d and isinstance(d["vessel"], dict):
            d["vessel"] = VesselConfig.from_dict(d["vessel"])
        if "aneurysm" in d and isinstance(d["aneurysm"], dict):
            d["aneurysm"] = AneurysmParams.from_dict(d["aneurysm"])
        return cls(**d)


_RETRYABLE = (UnionDisconnected, RingInvalid, CutMissed, MergeFailed, RayMiss)


def generate_sample(seed: int, config: PipelineConfig) -> LabeledSample:
    """One labeled sample, deterministic in (seed, config).

    On a retryable assembly failure the aneurysm is regenerated (fresh
    sub-stream); after `aneurysm_retries` failures the vessel itself is
    resampled, up to `vessel_resamples` vessels."""
    errors: list[str] = []
    total_attempts = 0
    for v_attempt in range(config.vessel_resamples):
        vessel = generate_healthy_vessel(
            config.vessel, stage_rng(seed, STAGE_VESSEL, v_attempt))
        try:
            curvature = estimate_curvature(vessel.mesh)
            o = select_ostium(vessel, stage_rng(seed, STAGE_OSTIUM, v_attempt),
                              strategy=config.ostium_strategy,
                              curvature=curvature)
        except (NoCandidate, VascsynError) as exc:
            errors.append(f"vessel {v_attempt}: ostium: {exc}")
            continue
        r_local = vessel.local_radius(o.position)

        for a_attempt in range(config.aneurysm_retries):
            total_attempts += 1
            rng_an = stage_rng(
                seed, STAGE_ANEURYSM,
                v_attempt * config.aneurysm_retries + a_attempt)
            try:
                sac = generate_aneurysm(r_local, o.normal,
                                        config.aneurysm, rng_an)
                merged = attach_aneurysm(vessel, sac, o)
                cut = cut_openings(merged, vessel)
                lm = label_vertices(cut, place_sac(sac, o))
                ring = extract_ostium_ring(lm)
                meta = {
                    "sample_seed": int(seed),
                    "ostium": o.to_dict(),
                    "vessel_attempts": v_attempt + 1,
                    "aneurysm_attempts": total_attempts,
                    "retry_errors": errors,
                    "vessel_meta": vessel.meta,
                }
                return finalize_sample(lm, ring, vessel, sac, meta=meta)
            except _RETRYABLE as exc:
                errors.append(
                    f"vessel {v_attempt} aneurysm {a_attempt}: {exc}")
                log.debug("retry %s", errors[-1])
    raise ExhaustedRetries(
        f"no valid sample after {config.vessel_resamples} vessels x "
        f"{config.aneurysm_retries} aneurysms: {errors}")


def _json_dump(obj, path: Path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _labels_txt(path: Path, labels: np.ndarray):
    with open(path, "w") as fh:
        fh.write("\n".join(str(int(x)) for x in labels))
        fh.write("\n")


def write_sample(sample: LabeledSample, out_dir: str | Path):
    """Per-sample directory with meshes, labels, point cloud, centerlines,
    ostium, morphometrics, and meta. meta.json is written last and marks
    the directory complete."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    write_ply(out / "mesh.ply", sample.full.mesh, labels=sample.full.labels)
    _labels_txt(out / "labels.txt", sample.full.labels)

    colors = np.array([LABEL_COLORS[int(l)] for l in sample.full.labels],
                      dtype=np.uint8)
    write_ply(out / "pointcloud.ply", points=sample.full.mesh.vertices,
              colors=colors)

    write_ply(out / "sub_vessel.ply", sample.sub_vessel.mesh,
              labels=sample.sub_vessel.labels)
    _labels_txt(out / "sub_vessel_labels.txt", sample.sub_vessel.labels)
    write_ply(out / "sub_aneurysm.ply", sample.sub_aneurysm.mesh,
              labels=sample.sub_aneurysm.labels)
    _labels_txt(out / "sub_aneurysm_labels.txt", sample.sub_aneurysm.labels)

    _json_dump(sample.centerlines, out / "centerlines.json")
    _json_dump(sample.ring.to_dict() | {
        "strategy": sample.meta.get("ostium", {}).get("strategy")},
        out / "ostium.json")
    _json_dump(sample.morpho, out / "morphometrics.json")
    _json_dump(sample.meta, out / "meta.json")


def sample_dir_name(sample_id: int) -> str:
    return f"sample_{sample_id:05d}"


def _sample_complete(d: Path) -> bool:
    return (d / "meta.json").is_file() and (d / "mesh.ply").is_file()


def _run_one(args) -> dict:
    sample_id, config_dict, out_dir = args
    config = PipelineConfig.from_dict(config_dict)
    seed = sample_seed(config.master_seed, sample_id)
    record = {"id": sample_id, "seed": int(seed)}
    try:
        sample = generate_sample(seed, config)
        write_sample(sample, Path(out_dir) / sample_dir_name(sample_id))
        record.update({
            "status": "ok",
            "vessel_attempts": sample.meta["vessel_attempts"],
            "aneurysm_attempts": sample.meta["aneurysm_attempts"],
            "morpho": sample.morpho,
        })
    except ExhaustedRetries as exc:
        record.update({"status": "failed", "error": str(exc)})
    except OSError as exc:
        record.update({"status": "failed", "error": f"io: {exc}"})
    return record


def generate_dataset(config: PipelineConfig) -> dict:
    """Resumable parallel dataset run; returns (and writes) the manifest."""
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    todo = []
    records: dict[int, dict] = {}
    for i in range(config.n_samples):
        d = out / sample_dir_name(i)
        if _sample_complete(d):
            meta = json.loads((d / "meta.json").read_text())
            morpho = json.loads((d / "morphometrics.json").read_text())
            records[i] = {
                "id": i, "seed": meta["sample_seed"], "status": "ok",
                "vessel_attempts": meta["vessel_attempts"],
                "aneurysm_attempts": meta["aneurysm_attempts"],
                "morpho": morpho,
            }
        else:
            todo.append(i)

    jobs = [(i, config.to_dict(), str(out)) for i in todo]
    if config.workers == 1 or len(jobs) <= 1:
        for job in jobs:
            rec = _run_one(job)
            records[rec["id"]] = rec
            log.info("sample %05d: %s", rec["id"], rec["status"])
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = [pool.submit(_run_one, job) for job in jobs]
            for fut in as_completed(futures):
                rec = fut.result()
                records[rec["id"]] = rec
                log.info("sample %05d: %s", rec["id"], rec["status"])

    manifest = {
        "master_seed": config.master_seed,
        "n_samples": config.n_samples,
        "config": config.to_dict(),
        "records": [records[i] for i in sorted(records)],
    }
    _json_dump(manifest, out / "manifest.json")
    return manifest


def _descriptor_stats(values: np.ndarray) -> dict:
    q1, med, q3 = np.percentile(values, [25, 50, 75])
    iqr = q3 - q1
    outliers = int(((values < q1 - 1.5 * iqr) |
                    (values > q3 + 1.5 * iqr)).sum())
    return {"min": float(values.min()), "q1": float(q1),
            "median": float(med), "q3": float(q3),
            "max": float(values.max()), "mean": float(values.mean()),
            "n_outliers": outliers}


def compute_dataset_stats(source: str | Path | dict,
                          write: bool = True) -> dict:
    """Boxplot-style summary of every descriptor over a dataset directory
    or an in-memory manifest; optionally writes stats.json and stats.csv."""
    out_dir = None
    if isinstance(source, dict):
        manifest = source
    else:
        out_dir = Path(source)
        manifest = json.loads((out_dir / "manifest.json").read_text())

    rows = [r["morpho"] for r in manifest["records"]
            if r.get("status") == "ok" and "morpho" in r]
    if len(rows) < 2:
        raise VascsynError("need at least 2 successful samples for stats")

    stats = {"n_samples": len(rows), "descriptors": {}, "groups": {}}
    for group, names in STAT_GROUPS.items():
        stats["groups"][group] = list(names)
    for name in FIELD_NAMES:
        vals = np.array([r[name] for r in rows], dtype=np.float64)
        stats["descriptors"][name] = _descriptor_stats(vals)

    if write and out_dir is not None:
        _json_dump(stats, out_dir / "stats.json")
        with open(out_dir / "stats.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            cols = ["descriptor", "group", "min", "q1", "median", "q3",
                    "max", "mean", "n_outliers"]
            w.writerow(cols)
            group_of = {n: g for g, names in STAT_GROUPS.items()
                        for n in names}
            for name in FIELD_NAMES:
                s = stats["descriptors"][name]
                w.writerow([name, group_of.get(name, "")] +
                           [s[c] for c in cols[2:]])
    return stats
