"""Tap points: the post-ReLU output of every major convolutional block.

For the resnets the taps are the stem pool plus the four residual stages
(each stage output passes through a final ReLU); for vgg19 they are the
five max-pool outputs, which directly follow ReLUs. Every tapped tensor
is therefore non-negative.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Architecture:
    name: str
    tap_names: tuple[str, ...]
    filters: tuple[int, ...]  # channel count at each tap, in depth order


_RESNET_TAPS = ("maxpool", "layer1", "layer2", "layer3", "layer4")

# vgg19.features indices of the five MaxPool2d modules
_VGG19_TAPS = ("features.4", "features.9", "features.18", "features.27", "features.36")

ARCHITECTURES = {
    "resnet18": Architecture("resnet18", _RESNET_TAPS, (64, 64, 128, 256, 512)),
    "resnet50": Architecture("resnet50", _RESNET_TAPS, (64, 256, 512, 1024, 2048)),
    "vgg19": Architecture("vgg19", _VGG19_TAPS, (64, 128, 256, 512, 512)),
}


def get_architecture(name: str) -> Architecture:
    try:
        return ARCHITECTURES[name]
    except KeyError:
        raise ValueError(
            f"unknown architecture {name!r}; expected one of {sorted(ARCHITECTURES)}"
        ) from None


def resolve_module(model, dotted: str):
    mod = model
    for part in dotted.split("."):
        mod = mod[int(part)] if part.isdigit() else getattr(mod, part)
    return mod
