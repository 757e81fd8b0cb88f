"""Adapters that turn a model spec string into a patch-grid encoder.

Supported specs:

* ``torchvision:vit_b_16`` (any ``torchvision.models.vit_*`` constructor);
  weights are random unless the torchvision cache provides them, which is
  fine for format/pooling contracts.
* ``torchvision:vit?image_size=32&patch_size=8&num_layers=1&num_heads=2&hidden_dim=16&mlp_dim=32``
  — an explicit VisionTransformer configuration, handy for small CPU runs.
* ``hf:<repo-id>`` — a transformers vision model (or the vision tower of a
  multimodal model); requires the transformers extra and reachable weights.

Hidden states are taken from the output of the visual block and cast to
float32; nothing else is post-processed here. Pooling semantics live in the
analysis toolkit.
"""

from __future__ import annotations

from dataclasses import dataclass
from urllib.parse import parse_qs, urlsplit

import numpy as np
import torch
from PIL import Image


class ModelLoadError(Exception):
    pass


@dataclass
class PatchEncoder:
    """A loaded encoder: image → rows×cols×L hidden-state grid."""

    name: str
    image_size: int
    grid: tuple[int, int]
    dim: int
    _forward: "callable"

    def encode(self, image: Image.Image) -> np.ndarray:
        tensor = self._preprocess(image)
        with torch.no_grad():
            hidden = self._forward(tensor.unsqueeze(0))
        rows, cols = self.grid
        out = hidden.reshape(rows, cols, self.dim).to(torch.float32).numpy()
        return np.ascontiguousarray(out)

    def _preprocess(self, image: Image.Image) -> torch.Tensor:
        resized = image.convert("RGB").resize(
            (self.image_size, self.image_size), Image.Resampling.BILINEAR
        )
        array = np.asarray(resized, dtype=np.float32) / 255.0
        tensor = torch.from_numpy(array).permute(2, 0, 1)
        return (tensor - 0.5) / 0.5


def _vit_from_kwargs(**kwargs) -> "torch.nn.Module":
    from torchvision.models import VisionTransformer

    return VisionTransformer(**kwargs)


def _torchvision_encoder(spec: str, seed: int) -> PatchEncoder:
    from torchvision import models

    parts = urlsplit(spec)
    name = parts.path
    params = {k: int(v[0]) for k, v in parse_qs(parts.query).items()}
    torch.manual_seed(seed)  # reproducible weights when none are downloaded
    if name == "vit":
        required = {"image_size", "patch_size", "num_layers", "num_heads",
                    "hidden_dim", "mlp_dim"}
        missing = required - set(params)
        if missing:
            raise ModelLoadError(f"torchvision:vit spec missing {sorted(missing)}")
        model = _vit_from_kwargs(**params)
    else:
        ctor = getattr(models, name, None)
        if ctor is None:
            raise ModelLoadError(f"unknown torchvision model {name!r}")
        try:
            model = ctor(weights=None)
        except TypeError as exc:
            raise ModelLoadError(f"{name!r} is not a constructible model") from exc
    if not hasattr(model, "_process_input") or not hasattr(model, "encoder"):
        raise ModelLoadError(f"{name!r} does not expose a ViT patch encoder")
    model.eval()

    image_size = model.image_size
    grid_side = image_size // model.patch_size
    dim = model.hidden_dim

    def forward(batch: torch.Tensor) -> torch.Tensor:
        tokens = model._process_input(batch)
        cls = model.class_token.expand(tokens.shape[0], -1, -1)
        hidden = model.encoder(torch.cat([cls, tokens], dim=1))
        return hidden[:, 1:, :]  # drop the class token, keep the patch grid

    return PatchEncoder(
        name=spec,
        image_size=image_size,
        grid=(grid_side, grid_side),
        dim=dim,
        _forward=forward,
    )


def _hf_encoder(repo: str) -> PatchEncoder:
    try:
        from transformers import AutoImageProcessor, AutoModel
    except ImportError as exc:
        raise ModelLoadError("transformers is not installed (pip extra: hf)") from exc
    try:
        processor = AutoImageProcessor.from_pretrained(repo)
        model = AutoModel.from_pretrained(repo)
    except Exception as exc:
        raise ModelLoadError(f"cannot load {repo!r}: {exc}") from exc
    vision = getattr(model, "vision_model", model)
    vision.eval()
    config = getattr(vision, "config", model.config)
    image_size = int(getattr(config, "image_size"))
    patch_size = int(getattr(config, "patch_size"))
    grid_side = image_size // patch_size
    dim = int(getattr(config, "hidden_size"))

    def forward(batch: torch.Tensor) -> torch.Tensor:
        hidden = vision(pixel_values=batch).last_hidden_state
        if hidden.shape[1] == grid_side * grid_side + 1:
            hidden = hidden[:, 1:, :]  # class token
        return hidden

    encoder = PatchEncoder(
        name=f"hf:{repo}",
        image_size=image_size,
        grid=(grid_side, grid_side),
        dim=dim,
        _forward=forward,
    )

    def preprocess(image: Image.Image) -> torch.Tensor:
        inputs = processor(images=image.convert("RGB"), return_tensors="pt")
        return inputs["pixel_values"][0]

    encoder._preprocess = preprocess  # type: ignore[method-assign]
    return encoder


def load_encoder(spec: str, seed: int = 0) -> PatchEncoder:
    if spec.startswith("torchvision:"):
        return _torchvision_encoder(spec[len("torchvision:") :], seed)
    if spec.startswith("hf:"):
        return _hf_encoder(spec[len("hf:") :])
    raise ModelLoadError(
        f"unrecognized model spec {spec!r}; use torchvision:<name> or hf:<repo>"
    )
