"""CLI surface tests: subcommands, outputs, and exit codes."""

import numpy as np
import pytest

from multiq.cli import main
from multiq.imaging import write_image
from multiq.pipeline import load_model


@pytest.fixture()
def cli_dataset(tmp_path):
    root = tmp_path / "tiles"
    code = main(["make-dataset", "--out", str(root), "--tiles", "4", "--size", "32",
                 "--seed", "7", "--composite", str(tmp_path / "composite.ppm")])
    assert code == 0
    return root


class TestMakeDataset:
    def test_layout(self, cli_dataset, tmp_path):
        for name in ("aquatic", "urban", "vegetation"):
            tiles = sorted((cli_dataset / name).glob("*.ppm"))
            assert len(tiles) == 4
        assert (tmp_path / "composite.ppm").exists()

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["make-dataset", "--out", str(a), "--tiles", "2", "--seed", "5"]) == 0
        assert main(["make-dataset", "--out", str(b), "--tiles", "2", "--seed", "5"]) == 0
        for rel in ("aquatic/tile_000.ppm", "urban/tile_001.ppm"):
            assert (a / rel).read_bytes() == (b / rel).read_bytes()


class TestTrain:
    def test_writes_model(self, cli_dataset, tmp_path, capsys):
        model_path = tmp_path / "m.model"
        code = main(["train", "--data", str(cli_dataset), "--classifier", "knn3",
                     "--folds", "2", "--seed", "11", "--out", str(model_path)])
        assert code == 0
        out = capsys.readouterr().out
        assert "seed 11" in out
        assert "60 features" in out
        model = load_model(model_path)
        assert model.classifier_name == "knn3"
        assert model.labels == ("aquatic", "urban", "vegetation")

    def test_model_bytes_deterministic(self, cli_dataset, tmp_path):
        p1, p2 = tmp_path / "m1", tmp_path / "m2"
        args = ["train", "--data", str(cli_dataset), "--classifier", "svm",
                "--folds", "2", "--seed", "3"]
        assert main(args + ["--out", str(p1)]) == 0
        assert main(args + ["--out", str(p2)]) == 0
        assert p1.read_bytes() == p2.read_bytes()

    def test_single_class_data_exits_3(self, tmp_path):
        solo = tmp_path / "solo" / "only"
        solo.mkdir(parents=True)
        write_image(solo / "t.ppm", np.zeros((16, 16, 3), dtype=np.uint8))
        code = main(["train", "--data", str(tmp_path / "solo"), "--out", str(tmp_path / "m")])
        assert code == 3

    def test_oversized_selection_target_exits_1(self, cli_dataset, tmp_path):
        code = main(["train", "--data", str(cli_dataset), "--method", "multiq-selected",
                     "--select-count", "99", "--folds", "2", "--out", str(tmp_path / "m")])
        assert code == 1

    def test_bad_qgrid_exits_1(self, cli_dataset, tmp_path):
        code = main(["train", "--data", str(cli_dataset), "--qgrid", "nope",
                     "--out", str(tmp_path / "m")])
        assert code == 1


class TestEvaluate:
    def test_table_csv_and_figure(self, cli_dataset, tmp_path, capsys):
        csv_path = tmp_path / "rates.csv"
        code = main(["evaluate", "--data", str(cli_dataset),
                     "--methods", "multiq", "bgs", "--classifiers", "knn1", "bftree",
                     "--folds", "2", "--seed", "4", "--out-csv", str(csv_path)])
        assert code == 0
        out = capsys.readouterr().out
        assert "seed 4" in out
        lines = csv_path.read_text().splitlines()
        assert lines[0] == "classifier,method,feature_count,folds,seed,hit_rate_percent"
        assert len(lines) == 1 + 4
        png = tmp_path / "rates.png"
        assert png.exists()
        assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_csv_bytes_deterministic(self, cli_dataset, tmp_path):
        args = ["evaluate", "--data", str(cli_dataset), "--methods", "bgs",
                "--classifiers", "knn3", "--folds", "2", "--seed", "9", "--no-plot"]
        p1, p2 = tmp_path / "r1.csv", tmp_path / "r2.csv"
        assert main(args + ["--out-csv", str(p1)]) == 0
        assert main(args + ["--out-csv", str(p2)]) == 0
        assert p1.read_bytes() == p2.read_bytes()


class TestSegment:
    def test_segment_and_rerun_identical(self, cli_dataset, tmp_path):
        model_path = tmp_path / "m.model"
        assert main(["train", "--data", str(cli_dataset), "--folds", "2",
                     "--out", str(model_path)]) == 0
        image = tmp_path / "composite.ppm"
        out1, out2 = tmp_path / "o1.ppm", tmp_path / "o2.ppm"
        args = ["segment", "--image", str(image), "--model", str(model_path),
                "--alpha", "0.5"]
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2), "--workers", "2"]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_block_counts_printed(self, cli_dataset, tmp_path, capsys):
        model_path = tmp_path / "m.model"
        main(["train", "--data", str(cli_dataset), "--folds", "2", "--out", str(model_path)])
        capsys.readouterr()
        assert main(["segment", "--image", str(tmp_path / "composite.ppm"),
                     "--model", str(model_path), "--out", str(tmp_path / "o.ppm")]) == 0
        out = capsys.readouterr().out
        assert "blocks" in out
        assert "model seed" in out

    def test_missing_image_exits_2(self, cli_dataset, tmp_path):
        model_path = tmp_path / "m.model"
        main(["train", "--data", str(cli_dataset), "--folds", "2", "--out", str(model_path)])
        code = main(["segment", "--image", str(tmp_path / "missing.ppm"),
                     "--model", str(model_path), "--out", str(tmp_path / "o.ppm")])
        assert code == 2

    def test_corrupt_model_exits_2(self, cli_dataset, tmp_path):
        bad = tmp_path / "bad.model"
        bad.write_text("nonsense\n")
        code = main(["segment", "--image", str(tmp_path / "composite.ppm"),
                     "--model", str(bad), "--out", str(tmp_path / "o.ppm")])
        assert code == 2

    def test_bad_alpha_exits_1(self, cli_dataset, tmp_path):
        model_path = tmp_path / "m.model"
        main(["train", "--data", str(cli_dataset), "--folds", "2", "--out", str(model_path)])
        code = main(["segment", "--image", str(tmp_path / "composite.ppm"),
                     "--model", str(model_path), "--alpha", "2.0",
                     "--out", str(tmp_path / "o.ppm")])
        assert code == 1


class TestExtract:
    def test_single_image_csv(self, tmp_path):
        img = tmp_path / "tile.ppm"
        write_image(img, np.random.default_rng(3).integers(0, 256, (16, 16, 3), dtype=np.uint8))
        out = tmp_path / "f.csv"
        assert main(["extract", "--image", str(img), "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 2
        assert len(lines[0].split(",")) == 61  # label + 60 features

    def test_bgs_columns(self, cli_dataset, tmp_path):
        out = tmp_path / "bgs.csv"
        assert main(["extract", "--data", str(cli_dataset), "--method", "bgs",
                     "--out", str(out)]) == 0
        assert len(out.read_text().splitlines()[0].split(",")) == 4

    def test_constant_tile_gives_zero_row(self, tmp_path):
        img = tmp_path / "flat.ppm"
        write_image(img, np.full((16, 16, 3), 9, dtype=np.uint8))
        out = tmp_path / "flat.csv"
        assert main(["extract", "--image", str(img), "--out", str(out)]) == 0
        values = out.read_text().splitlines()[1].split(",")[1:]
        assert all(float(v) == 0.0 for v in values)


class TestUsageErrors:
    def test_missing_required_argument_exits_1(self, capsys):
        assert main(["train"]) == 1
        capsys.readouterr()

    def test_unknown_subcommand_exits_1(self, capsys):
        assert main(["transmogrify"]) == 1
        capsys.readouterr()

    def test_help_exits_0(self, capsys):
        assert main(["--help"]) == 0
        assert "train" in capsys.readouterr().out
