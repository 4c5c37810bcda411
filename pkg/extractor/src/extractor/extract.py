"""Activation extraction: run images through a CNN in eval mode and dump
each tap point as one FCPG tensor file per (layer, split)."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
import torch
from torchvision import models, transforms

from .format import write_tensor
from .taps import get_architecture, resolve_module

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


@dataclass
class ExtractionSpec:
    arch: str = "resnet18"
    dataset: str = "synthetic"  # "synthetic" or a directory with <split>/ subfolders
    split: str = "val"
    out_dir: str = "features"
    weights: str = "pretrained"  # or "random" (deterministic, for smoke runs)
    batch_size: int = 8
    device: str = "cpu"
    num_images: int | None = None  # cap; required for synthetic
    image_size: int = 224  # center-crop size
    stride: int = 1  # optional spatial subsampling of the feature maps
    seed: int = 0

    def __post_init__(self) -> None:
        get_architecture(self.arch)
        if self.weights not in ("pretrained", "random"):
            raise ValueError(f"weights must be 'pretrained' or 'random', got {self.weights!r}")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if self.dataset == "synthetic" and not self.num_images:
            raise ValueError("synthetic dataset needs num_images")


def build_model(spec: ExtractionSpec):
    torch.manual_seed(spec.seed)
    ctor = getattr(models, spec.arch)
    if spec.weights == "pretrained":
        try:
            model = ctor(weights="IMAGENET1K_V1")
        except Exception as exc:
            raise RuntimeError(
                f"pretrained weights for {spec.arch} are not available locally: {exc}"
            ) from exc
    else:
        model = ctor(weights=None)
    model.eval()
    return model.to(spec.device)


def _image_batches(spec: ExtractionSpec):
    if spec.dataset == "synthetic":
        gen = torch.Generator().manual_seed(spec.seed)
        remaining = spec.num_images
        while remaining > 0:
            count = min(spec.batch_size, remaining)
            yield torch.randn(count, 3, spec.image_size, spec.image_size, generator=gen)
            remaining -= count
        return

    from torchvision.datasets import ImageFolder

    tf = transforms.Compose(
        [
            transforms.Resize(256),
            transforms.CenterCrop(spec.image_size),
            transforms.ToTensor(),
            transforms.Normalize(IMAGENET_MEAN, IMAGENET_STD),
        ]
    )
    folder = ImageFolder(os.path.join(spec.dataset, spec.split), transform=tf)
    loader = torch.utils.data.DataLoader(
        folder, batch_size=spec.batch_size, shuffle=False, num_workers=0
    )
    seen = 0
    for batch, _ in loader:
        if spec.num_images is not None:
            batch = batch[: max(0, spec.num_images - seen)]
            if batch.shape[0] == 0:
                return
        seen += batch.shape[0]
        yield batch


def extract(spec: ExtractionSpec) -> list[str]:
    """Run the extraction; returns the written file paths in depth order."""
    arch = get_architecture(spec.arch)
    model = build_model(spec)
    captured: dict[str, list[np.ndarray]] = {name: [] for name in arch.tap_names}
    hooks = []

    def _make_hook(name):
        def hook(module, inputs, output):
            feat = output.detach()
            if spec.stride > 1:
                feat = feat[:, :, :: spec.stride, :: spec.stride]
            captured[name].append(feat.cpu().numpy().astype(np.float32))

        return hook

    for name in arch.tap_names:
        hooks.append(resolve_module(model, name).register_forward_hook(_make_hook(name)))
    try:
        with torch.no_grad():
            total = 0
            for batch in _image_batches(spec):
                model(batch.to(spec.device))
                total += batch.shape[0]
        if total == 0:
            raise ValueError("no images to extract")
    finally:
        for h in hooks:
            h.remove()

    os.makedirs(spec.out_dir, exist_ok=True)
    paths = []
    for layer, name in enumerate(arch.tap_names):
        stacked = np.concatenate(captured[name], axis=0)
        expected = arch.filters[layer]
        if stacked.shape[1] != expected:
            raise RuntimeError(
                f"{spec.arch} layer {layer}: expected {expected} filters, "
                f"tapped {stacked.shape[1]}"
            )
        if float(stacked.min()) < 0.0:
            raise RuntimeError(f"layer {layer} produced negative activations")
        path = os.path.join(
            spec.out_dir, f"{spec.arch}_{spec.split}_layer{layer}.fcpg"
        )
        write_tensor(path, stacked)
        paths.append(path)
    return paths
