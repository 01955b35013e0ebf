"""Command-line interface: exit codes, file-based subcommands, and config
plumbing."""
import json

import numpy as np
import pytest

import vascsyn.cli as cli_mod
from vascsyn.cli import main
from vascsyn.pipeline import sample_dir_name, write_sample


def test_help_and_bad_args():
    assert main(["--help"]) == 0
    assert main(["no-such-command"]) == 1
    assert main(["generate"]) == 1          # missing required options
    assert main(["morph", "--mesh", "/nonexistent.ply"]) == 1


@pytest.fixture(scope="module")
def sample_dir(full_sample, tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "s0"
    write_sample(full_sample, out)
    return out


def test_morph_command(sample_dir, full_sample, capsys):
    rc = main(["morph", "--mesh", str(sample_dir / "mesh.ply"),
               "--labels", str(sample_dir / "labels.txt"), "--json"])
    assert rc == 0
    out = json.loads(capsys.readouterr().out)
    # recomputed from the serialized mesh (float32 round trip)
    assert out["AR1"] == pytest.approx(full_sample.morpho["AR1"], rel=1e-3)
    assert out["A_A"] == pytest.approx(full_sample.morpho["A_A"], rel=1e-3)


def test_morph_reads_embedded_labels(sample_dir, capsys):
    rc = main(["morph", "--mesh", str(sample_dir / "mesh.ply"), "--json"])
    assert rc == 0
    assert "AR1" in json.loads(capsys.readouterr().out)


def test_label_command(sample_dir, full_sample, tmp_path, capsys):
    # relabel the full mesh against the serialized sac submesh: the sac
    # region must be recovered (the open submesh stands in for the sac)
    out_path = tmp_path / "labels_out.txt"
    rc = main(["label", "--mesh", str(sample_dir / "mesh.ply"),
               "--sac", str(sample_dir / "sub_aneurysm.ply"),
               "--out", str(out_path), "--json"])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    labels = np.loadtxt(out_path, dtype=np.int64)
    assert len(labels) == full_sample.full.mesh.n_vertices
    assert set(payload["counts"]) == {"0", "1", "2"}
    agree = (labels == full_sample.full.labels).mean()
    assert agree > 0.9


def test_generate_command_uses_pipeline(monkeypatch, full_sample, tmp_path,
                                        capsys):
    seen = {}

    def fake_generate(seed, config):
        seen["seed"] = seed
        seen["strategy"] = config.ostium_strategy
        return full_sample

    monkeypatch.setattr(cli_mod, "generate_sample", fake_generate)
    out = tmp_path / "gen"
    rc = main(["generate", "--seed", "77", "--out", str(out),
               "--strategy", "bifurcation", "--json"])
    assert rc == 0
    assert seen == {"seed": 77, "strategy": "bifurcation"}
    payload = json.loads(capsys.readouterr().out)
    assert payload["morphometrics"]["AR1"] == pytest.approx(
        full_sample.morpho["AR1"])
    assert (out / "mesh.ply").is_file()


def test_stats_command(full_sample, tmp_path, capsys):
    ds = tmp_path / "ds"
    records = []
    for i in range(2):
        write_sample(full_sample, ds / sample_dir_name(i))
        records.append({"id": i, "seed": 1, "status": "ok",
                        "morpho": full_sample.morpho})
    (ds / "manifest.json").write_text(json.dumps(
        {"master_seed": 0, "n_samples": 2, "config": {},
         "records": records}))
    rc = main(["stats", "--dir", str(ds), "--json"])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["n_samples"] == 2
    assert (ds / "stats.csv").is_file()


def test_config_file_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["generate", "--seed", "1", "--out", str(tmp_path / "x"),
                 "--config", str(bad)]) == 1
    notdict = tmp_path / "list.json"
    notdict.write_text("[1, 2]")
    assert main(["generate", "--seed", "1", "--out", str(tmp_path / "x"),
                 "--config", str(notdict)]) == 1
