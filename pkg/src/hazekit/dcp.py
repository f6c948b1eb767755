"""Dark channel prior baseline and the top-fraction airlight estimator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dehaze import DehazeResult, estimate_gray_offset, recover_radiance
from .imaging import (
    FilterParams,
    GrayMap,
    RgbImage,
    as_gray,
    as_rgb,
    channel_mean,
    guided_filter,
    min_channel,
    min_filter,
)


@dataclass(frozen=True)
class DcpParams:
    patch_radius: int = 4
    omega: float = 0.95
    t_floor: float = 0.1
    top_fraction: float = 0.001
    guided: FilterParams = field(default_factory=FilterParams)

    def __post_init__(self):
        if int(self.patch_radius) != self.patch_radius or self.patch_radius < 1:
            raise ValueError(f"patch_radius must be an integer >= 1, got {self.patch_radius}")
        if not 0.0 < self.omega < 1.0:
            raise ValueError(f"omega must lie in (0, 1), got {self.omega}")
        if not 0.0 < self.t_floor < 0.5:
            raise ValueError(f"t_floor must lie in (0, 0.5), got {self.t_floor}")
        if not 0.0 < self.top_fraction <= 0.05:
            raise ValueError(f"top_fraction must lie in (0, 0.05], got {self.top_fraction}")


def dark_channel(img: RgbImage, patch_radius: int = 4) -> GrayMap:
    return min_filter(min_channel(as_rgb(img)), patch_radius)


def estimate_airlight_dcp(img: RgbImage, dark: GrayMap, top_fraction: float = 0.001) -> np.ndarray:
    """Brightest pixel (by channel sum) among the top dark-channel pixels.

    Candidates are the ``ceil(top_fraction * N)`` largest dark-channel
    values; both rankings break ties by the lowest row-major index.
    Returns an RGB triple.
    """
    img = as_rgb(img)
    dark = as_gray(dark)
    flat = img.reshape(-1, 3)
    n = flat.shape[0]
    n_top = min(n, max(1, math.ceil(top_fraction * n)))

    # stable sort on the negated values keeps lower indices first on ties
    order = np.argsort(-dark.ravel(), kind="stable")[:n_top]
    intensity = flat[order].sum(axis=1)
    best = np.flatnonzero(intensity == intensity.max())
    pick = order[best].min()
    a = flat[pick].copy()
    if not np.any(a > 0):
        # an all-black candidate would make the ratio image undefined
        a = np.full(3, 1.0 / 255.0)
    return np.maximum(a, 1.0 / 255.0)


def dcp_transmission(img: RgbImage, a, params: DcpParams | None = None) -> GrayMap:
    params = params or DcpParams()
    img = as_rgb(img)
    a = np.asarray(a, dtype=np.float64).reshape(3)
    if np.any(a <= 0):
        raise ValueError("airlight must be strictly positive in every channel")
    raw = 1.0 - params.omega * min_filter(min_channel(img / a), params.patch_radius)
    refined = guided_filter(channel_mean(img), raw, params.guided)
    return np.clip(refined, params.t_floor, 1.0)


def dcp_dehaze(img: RgbImage, params: DcpParams | None = None) -> DehazeResult:
    params = params or DcpParams()
    img = as_rgb(img)
    dark = dark_channel(img, params.patch_radius)
    a = estimate_airlight_dcp(img, dark, params.top_fraction)
    t = dcp_transmission(img, a, params)
    j = recover_radiance(img, t, a, params.t_floor)
    return DehazeResult(
        radiance=j,
        transmission=t,
        k_map=np.full(img.shape[:2], float(a.mean())),
        haze_intensity=dark,
        gray_offset=estimate_gray_offset(img),
        normalizer=0.0,
        airlight=a,
    )
