"""Adapter exporting VPGR/VEMB embedding files from live vision encoders."""

from .encoders import ModelLoadError, PatchEncoder, load_encoder
from .extract import ExtractJob, ImageDecodeError, extract

__all__ = [
    "ExtractJob",
    "ImageDecodeError",
    "ModelLoadError",
    "PatchEncoder",
    "extract",
    "load_encoder",
]
