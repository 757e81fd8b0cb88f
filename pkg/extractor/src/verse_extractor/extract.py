"""Run an encoder over an image directory and export VPGR (or pooled VEMB)."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .encoders import PatchEncoder, load_encoder
from .formats import write_vemb, write_vpgr

log = logging.getLogger("verse_extractor")

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".gif", ".tif", ".tiff", ".webp"}


class ImageDecodeError(Exception):
    pass


@dataclass
class ExtractJob:
    model: str
    images: Path
    out: Path
    pool: bool = False
    device: str = "cpu"
    seed: int = 0


def _image_paths(directory: Path) -> list[Path]:
    return sorted(
        p for p in directory.iterdir()
        if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
    )


def extract(job: ExtractJob) -> int:
    """Encode every image (sorted by file name) and write the output file.

    Undecodable images are skipped with a log line; if everything fails, no
    file is written and ImageDecodeError is raised. Returns the number of
    exported images.
    """
    paths = _image_paths(Path(job.images))
    if not paths:
        raise ImageDecodeError(f"no images found under {job.images}")

    encoder: PatchEncoder = load_encoder(job.model, seed=job.seed)
    log.info(
        "model %s: %d×%d patches of dimension %d",
        encoder.name, encoder.grid[0], encoder.grid[1], encoder.dim,
    )

    grids: list[tuple[str, np.ndarray]] = []
    for path in paths:
        try:
            with Image.open(path) as image:
                grid = encoder.encode(image)
        except (UnidentifiedImageError, OSError) as exc:
            log.warning("skipping %s: %s", path.name, exc)
            continue
        grids.append((path.name, grid))

    if not grids:
        raise ImageDecodeError(f"every image under {job.images} failed to decode")

    if job.pool:
        pooled = [(name, values.reshape(-1, values.shape[-1]).mean(axis=0))
                  for name, values in grids]
        write_vemb(pooled, job.out)
    else:
        write_vpgr(grids, job.out)
    return len(grids)
