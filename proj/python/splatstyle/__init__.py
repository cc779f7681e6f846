# Copyright Contributors to the splatstyle Project
# SPDX-License-Identifier: Apache-2.0
#
"""Feature-Gaussian zero-shot style transfer: rasterizer, stylizer and training stages."""

import json as _json

from ._core import (
    Camera,
    ConfigError,
    FormatError,
    GaussianSet,
    IoError,
    ShapeError,
    Stylizer,
    ValidationError,
    adain,
    channel_stats,
    encode,
    load_gaussians,
    load_image,
    load_scene,
    load_weights,
    make_toy_scene,
    make_toy_styles,
    pretrain_geometry,
    random_weights,
    rasterize,
    save_gaussians,
    save_image,
    save_scene,
    save_weights,
    set_thread_count,
    ssim,
    train_style,
)


def ablation_report(stylizer, gaussians, cameras, views, style, scene_scale=1.0):
    """Integrated vs view-specific consistency report as a dict."""
    return _json.loads(stylizer.ablation_report(gaussians, cameras, views, style, scene_scale))


__all__ = [name for name in dir() if not name.startswith("_")]
