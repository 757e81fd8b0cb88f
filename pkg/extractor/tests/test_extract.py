"""Extractor contract: outputs parse cleanly and pooling agrees with the core."""

from __future__ import annotations

import numpy as np
import pytest
from PIL import Image

from verse_extractor.cli import main
from verse_extractor.extract import ExtractJob, ImageDecodeError, extract

from verse.tensor_io import pool_patch_grid, read_embeddings, read_patch_grids

TINY_VIT = (
    "torchvision:vit?image_size=32&patch_size=8&num_layers=1"
    "&num_heads=2&hidden_dim=16&mlp_dim=32"
)


def write_images(directory, count=3, size=32):
    directory.mkdir(exist_ok=True)
    rng = np.random.default_rng(4)
    names = []
    for i in range(count):
        pixels = rng.integers(0, 256, size=(size, size, 3), dtype=np.uint8)
        name = f"doc_{i}.png"
        Image.fromarray(pixels).save(directory / name)
        names.append(name)
    return names


class TestExtract:
    def test_vpgr_export_parses_with_zero_validation_errors(self, tmp_path):
        names = write_images(tmp_path / "imgs")
        out = tmp_path / "out.vpgr"
        count = extract(ExtractJob(model=TINY_VIT, images=tmp_path / "imgs", out=out))
        assert count == 3
        grids = list(read_patch_grids(out))
        assert [g.sample_id for g in grids] == names  # sorted file order
        assert all(g.rows == 4 and g.cols == 4 and g.dim == 16 for g in grids)

    def test_pool_flag_writes_vemb(self, tmp_path):
        write_images(tmp_path / "imgs")
        out = tmp_path / "out.vemb"
        extract(ExtractJob(model=TINY_VIT, images=tmp_path / "imgs", out=out, pool=True))
        matrix = read_embeddings(out)
        assert matrix.n == 3 and matrix.dim == 16

    def test_pool_matches_core_pooling(self, tmp_path):
        """Cross-component contract: adapter pooling vs toolkit pooling ≤1e-5."""
        write_images(tmp_path / "imgs", count=4)
        vpgr = tmp_path / "grids.vpgr"
        vemb = tmp_path / "pooled.vemb"
        extract(ExtractJob(model=TINY_VIT, images=tmp_path / "imgs", out=vpgr))
        extract(ExtractJob(model=TINY_VIT, images=tmp_path / "imgs", out=vemb, pool=True))

        matrix = read_embeddings(vemb)
        for grid, (sample_id, row) in zip(read_patch_grids(vpgr), zip(matrix.ids, matrix.data)):
            assert grid.sample_id == sample_id
            pooled = pool_patch_grid(grid)
            assert np.max(np.abs(pooled - row.astype(np.float64))) < 1e-5

    def test_undecodable_images_skipped(self, tmp_path, caplog):
        names = write_images(tmp_path / "imgs", count=2)
        (tmp_path / "imgs" / "broken.png").write_bytes(b"not an image")
        out = tmp_path / "out.vpgr"
        count = extract(ExtractJob(model=TINY_VIT, images=tmp_path / "imgs", out=out))
        assert count == 2
        assert [g.sample_id for g in read_patch_grids(out)] == names

    def test_all_images_broken_errors_without_output(self, tmp_path):
        bad = tmp_path / "imgs"
        bad.mkdir()
        (bad / "a.png").write_bytes(b"junk")
        out = tmp_path / "out.vpgr"
        with pytest.raises(ImageDecodeError):
            extract(ExtractJob(model=TINY_VIT, images=bad, out=out))
        assert not out.exists()

    def test_empty_directory_errors(self, tmp_path):
        empty = tmp_path / "imgs"
        empty.mkdir()
        with pytest.raises(ImageDecodeError):
            extract(ExtractJob(model=TINY_VIT, images=empty, out=tmp_path / "o.vpgr"))


class TestCli:
    def test_cli_round_trip(self, tmp_path, capsys):
        write_images(tmp_path / "imgs")
        out = tmp_path / "cli.vpgr"
        code = main(["--model", TINY_VIT, "--images", str(tmp_path / "imgs"),
                     "--out", str(out)])
        assert code == 0
        assert "wrote 3 image(s)" in capsys.readouterr().out
        assert len(list(read_patch_grids(out))) == 3

    def test_unknown_model_exits_2(self, tmp_path, capsys):
        write_images(tmp_path / "imgs")
        code = main(["--model", "torchvision:nonsense", "--images",
                     str(tmp_path / "imgs"), "--out", str(tmp_path / "o.vpgr")])
        assert code == 2
        assert "error" in capsys.readouterr().err

    def test_empty_dir_exits_2(self, tmp_path, capsys):
        (tmp_path / "imgs").mkdir()
        code = main(["--model", TINY_VIT, "--images", str(tmp_path / "imgs"),
                     "--out", str(tmp_path / "o.vpgr")])
        assert code == 2
