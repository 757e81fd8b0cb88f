import argparse
import logging
import sys
from pathlib import Path

from .encoders import ModelLoadError
from .extract import ExtractJob, ImageDecodeError, extract


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="verse-extract",
        description="Export patch-grid (VPGR) or pooled (VEMB) embeddings "
        "from a vision encoder over an image directory.",
    )
    parser.add_argument("--model", required=True,
                        help="torchvision:<name|vit?dims> or hf:<repo-id>")
    parser.add_argument("--images", required=True, help="directory of images")
    parser.add_argument("--out", required=True, help="output .vpgr/.vemb file")
    parser.add_argument("--pool", action="store_true",
                        help="write one pooled vector per image (VEMB)")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--seed", type=int, default=0,
                        help="weight seed for models without downloaded weights")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    job = ExtractJob(
        model=args.model,
        images=Path(args.images),
        out=Path(args.out),
        pool=args.pool,
        device=args.device,
        seed=args.seed,
    )
    try:
        count = extract(job)
    except (ModelLoadError, ImageDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {count} image(s) to {job.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
