"""Lightweight single-image super-resolution: core ops, network, fusion, metrics."""

from ._core import (
    Model,
    __version__,
    attention_receptive_field,
    bicubic_resize,
    conv2d,
    count_multadds,
    count_params,
    gelu,
    pixel_norm,
    pixel_shuffle,
    pixel_unshuffle,
    psnr,
    ssim,
)

__all__ = [
    "Model",
    "__version__",
    "attention_receptive_field",
    "bicubic_resize",
    "conv2d",
    "count_multadds",
    "count_params",
    "gelu",
    "pixel_norm",
    "pixel_shuffle",
    "pixel_unshuffle",
    "psnr",
    "ssim",
]
