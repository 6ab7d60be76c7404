import numpy as np
import pytest

from fgo.cli import main, parse_manifest
from fgo.io import read_pgm, read_ppm

FAST = ["--set", "nScales=4"]


def synth(tmp_path, kind, name, extra=()):
    out = tmp_path / name
    assert main(["synth", kind, "--out", str(out), *extra]) == 0
    return out


def write_manifest(path, rows):
    path.write_text("".join(f"{row}\n" for row in rows))
    return path


@pytest.fixture()
def square_dir(tmp_path):
    return synth(tmp_path, "isolated-square", "square", ("--size", "48"))


@pytest.fixture()
def overlap_dir(tmp_path):
    return synth(tmp_path, "overlapping-squares", "overlap")


class TestSynth:
    def test_square_writes_image_and_gt(self, square_dir):
        assert sorted(p.name for p in square_dir.iterdir()) == ["gt.lm1", "image.ppm"]
        r, g, b = read_ppm(square_dir / "image.ppm")
        assert r.shape == (48, 48)
        np.testing.assert_array_equal(r, g)

    def test_overlap_writes_labels(self, overlap_dir):
        names = sorted(p.name for p in overlap_dir.iterdir())
        assert names == ["contours.lm1", "gt.lm1", "image.ppm", "segments.lm1"]

    def test_shaded_edge_has_labels_and_gradient_knob(self, tmp_path):
        out = synth(tmp_path, "shaded-edge", "shade", ("--gradient", "0.3"))
        names = sorted(p.name for p in out.iterdir())
        assert names == ["contours.lm1", "gt.lm1", "image.ppm", "segments.lm1"]

    def test_annulus_radius_knob(self, tmp_path):
        out = synth(tmp_path, "annulus", "ring", ("--radius", "12"))
        assert (out / "gt.lm1").exists()

    def test_unknown_kind_rejected(self, tmp_path, capsys):
        with pytest.raises(SystemExit):
            main(["synth", "blob", "--out", str(tmp_path / "x")])


class TestRun:
    def test_plain_run_outputs(self, square_dir, tmp_path, capsys):
        out = tmp_path / "run"
        code = main(
            ["run", "--image", str(square_dir / "image.ppm"), "--out", str(out), *FAST]
        )
        assert code == 0
        fm1s = sorted(out.glob("final_t*_s*.fm1"))
        assert len(fm1s) == 16
        assert (out / "direction.pgm").exists()
        assert not (out / "junctions.txt").exists()
        assert "wrote 17 files" in capsys.readouterr().out

    def test_gt_adds_fgca_and_correctness(self, square_dir, tmp_path, capsys):
        out = tmp_path / "run"
        code = main(
            [
                "run",
                "--image", str(square_dir / "image.ppm"),
                "--gt", str(square_dir / "gt.lm1"),
                "--out", str(out),
                *FAST,
            ]
        )
        assert code == 0
        assert "fgca=" in capsys.readouterr().out
        vis = read_pgm(out / "correctness.pgm")
        assert vis.shape == (48, 48)
        assert set(np.unique(vis)) <= {0, 128, 192, 255}

    def test_labels_add_junprecords(self, overlap_dir, tmp_path):
        out = tmp_path / "run"
        code = main(
            [
                "run",
                "--image", str(overlap_dir / "image.ppm"),
                "--contours", str(overlap_dir / "contours.lm1"),
                "--segments", str(overlap_dir / "segments.lm1"),
                "--weights", "0.2,0,0.8",
                "--out", str(out),
                *FAST,
            ]
        )
        assert code == 0
        junctions = (out / "junctions.txt").read_text().strip().splitlines()
        assert len(junctions) == 2

    def test_deterministic_outputs(self, square_dir, tmp_path):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert main(
                ["run", "--image", str(square_dir / "image.ppm"), "--out", str(out), *FAST]
            ) == 0
            outs.append(out)
        for fm1 in sorted(outs[0].glob("*.fm1")):
            assert fm1.read_bytes() == (outs[1] / fm1.name).read_bytes()

    def test_tj_weight_without_labels_falls_back(self, square_dir, tmp_path, caplog):
        out = tmp_path / "run"
        code = main(
            [
                "run",
                "--image", str(square_dir / "image.ppm"),
                "--weights", "0.3,0,0.7",
                "--out", str(out),
                *FAST,
            ]
        )
        assert code == 0
        assert (out / "direction.pgm").exists()

    def test_contours_without_segments_fails(self, overlap_dir, tmp_path, capsys):
        code = main(
            [
                "run",
                "--image", str(overlap_dir / "image.ppm"),
                "--contours", str(overlap_dir / "contours.lm1"),
                "--out", str(tmp_path / "run"),
                *FAST,
            ]
        )
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_missing_image_fails(self, tmp_path, capsys):
        code = main(
            ["run", "--image", str(tmp_path / "nope.ppm"), "--out", str(tmp_path / "o")]
        )
        assert code == 1

    def test_bad_set_key_fails(self, square_dir, tmp_path, capsys):
        code = main(
            [
                "run",
                "--image", str(square_dir / "image.ppm"),
                "--out", str(tmp_path / "o"),
                "--set", "bogus=1",
            ]
        )
        assert code == 1
        assert "bogus" in capsys.readouterr().err

    def test_bad_weight_triple_fails(self, square_dir, tmp_path, capsys):
        code = main(
            [
                "run",
                "--image", str(square_dir / "image.ppm"),
                "--out", str(tmp_path / "o"),
                "--weights", "0.5,0.5",
            ]
        )
        assert code == 1


@pytest.fixture()
def dataset(tmp_path):
    a = synth(tmp_path, "isolated-square", "a", ("--size", "48"))
    b = synth(tmp_path, "shaded-edge", "b", ("--size", "48"))
    manifest = write_manifest(
        tmp_path / "data.txt",
        [
            "# id image gt1 gt2 [contours segments]",
            "sq a/image.ppm a/gt.lm1 -",
            "sh b/image.ppm b/gt.lm1 - b/contours.lm1 b/segments.lm1",
        ],
    )
    return manifest


class TestManifest:
    def test_paths_resolve_relative(self, dataset):
        entries = parse_manifest(dataset)
        assert [e.image_id for e in entries] == ["sq", "sh"]
        assert entries[0].contours is None
        assert entries[1].contours.endswith("contours.lm1")
        assert len(entries[0].gts) == 1

    def test_duplicate_ids_rejected(self, tmp_path):
        manifest = write_manifest(
            tmp_path / "m.txt", ["x i.ppm g.lm1 -", "x i.ppm g.lm1 -"]
        )
        with pytest.raises(ValueError):
            parse_manifest(manifest)

    def test_bad_field_count_rejected(self, tmp_path):
        manifest = write_manifest(tmp_path / "m.txt", ["x i.ppm g.lm1"])
        with pytest.raises(ValueError):
            parse_manifest(manifest)

    def test_gt_required(self, tmp_path):
        manifest = write_manifest(tmp_path / "m.txt", ["x i.ppm - -"])
        with pytest.raises(ValueError):
            parse_manifest(manifest)


class TestEval:
    def test_single_preset_report(self, dataset, tmp_path, capsys):
        out = tmp_path / "eval"
        code = main(
            ["eval", "--manifest", str(dataset), "--out", str(out),
             "--preset", "reference", *FAST]
        )
        assert code == 0
        assert (out / "report.txt").exists()
        kv = (out / "report.kv").read_text()
        assert "aggregateFGCA=" in kv
        assert "images=2" in kv
        assert "aggregate=" in capsys.readouterr().out

    def test_compare_writes_p_value(self, dataset, tmp_path, capsys):
        out = tmp_path / "eval"
        code = main(
            ["eval", "--manifest", str(dataset), "--out", str(out),
             "--compare", "reference,with-sa", *FAST]
        )
        assert code == 0
        for stem in ("report_reference", "report_with-sa"):
            assert (out / f"{stem}.txt").exists()
            assert (out / f"{stem}.kv").exists()
        compare = (out / "compare.kv").read_text()
        assert "pValue=" in compare
        assert "presetA=reference" in compare

    def test_parallel_jobs_match_serial(self, dataset, tmp_path):
        serial = tmp_path / "serial"
        parallel = tmp_path / "parallel"
        for out, jobs in ((serial, "1"), (parallel, "2")):
            assert main(
                ["eval", "--manifest", str(dataset), "--out", str(out),
                 "--jobs", jobs, *FAST]
            ) == 0
        assert (serial / "report.txt").read_text() == (parallel / "report.txt").read_text()

    def test_broken_row_skipped(self, dataset, tmp_path, capsys):
        rows = dataset.read_text().splitlines()
        rows.append("ghost missing.ppm missing.lm1 -")
        manifest = write_manifest(tmp_path / "broken.txt", rows)
        out = tmp_path / "eval"
        code = main(["eval", "--manifest", str(manifest), "--out", str(out), *FAST])
        assert code == 0
        captured = capsys.readouterr()
        assert "skipped ghost" in captured.err
        assert "images=2" in (out / "report.kv").read_text()

    def test_all_failed_exits_nonzero(self, tmp_path, capsys):
        manifest = write_manifest(
            tmp_path / "m.txt", ["ghost missing.ppm missing.lm1 -"]
        )
        code = main(
            ["eval", "--manifest", str(manifest), "--out", str(tmp_path / "e")]
        )
        assert code == 1
        assert "all images failed" in capsys.readouterr().err

    def test_bad_compare_spec_fails(self, dataset, tmp_path, capsys):
        code = main(
            ["eval", "--manifest", str(dataset), "--out", str(tmp_path / "e"),
             "--compare", "reference"]
        )
        assert code == 1


class TestTune:
    def test_writes_weights_and_trace(self, dataset, tmp_path, capsys):
        out = tmp_path / "tune"
        code = main(
            ["tune", "--manifest", str(dataset), "--out", str(out),
             "--coarse-step", "0.5", *FAST]
        )
        assert code == 0
        kv = dict(
            line.split("=", 1)
            for line in (out / "weights.kv").read_text().splitlines()
        )
        total = float(kv["alphaRef"]) + float(kv["alphaSA"]) + float(kv["alphaTJ"])
        assert total == pytest.approx(1.0, abs=1e-6)
        assert kv["trainIds"]
        assert kv["testIds"]
        trace = (out / "trace.txt").read_text().splitlines()
        assert trace[0].startswith("round ")
        assert len(trace) > 1
        assert "tuned:" in capsys.readouterr().out

    def test_seed_env_controls_split(self, dataset, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("FGO_SEED", "5")
        out = tmp_path / "tune"
        code = main(
            ["tune", "--manifest", str(dataset), "--out", str(out),
             "--coarse-step", "0.5", *FAST]
        )
        assert code == 0
        assert "seed=5" in (out / "weights.kv").read_text()

    def test_unknown_weight_name_fails(self, dataset, tmp_path, capsys):
        code = main(
            ["tune", "--manifest", str(dataset), "--out", str(tmp_path / "t"),
             "--weights", "alphaRef,wOpp"]
        )
        assert code == 1
        assert "unknown weight name" in capsys.readouterr().err
