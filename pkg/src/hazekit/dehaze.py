"""Airlight-coefficient (K-map) dehazing.

The hazy image is modelled per pixel as

    I(x) = J(x) t(x) + K(x) (1 - t(x))

where ``K`` is a local airlight coefficient that tracks haze density
instead of a single global airlight colour. The pipeline estimates ``K``
from a brightness-offset grayscale of the input, derives the
transmission from the min-channel ratio ``I / K`` and inverts the model.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .imaging import (
    FilterParams,
    GrayMap,
    RgbImage,
    as_gray,
    as_rgb,
    box_mean_filter,
    channel_mean,
    guided_filter,
    min_channel,
    min_filter,
)


@dataclass(frozen=True)
class DehazeParams:
    omega: float = 0.95
    patch_radius: int = 4
    k_floor: float = 0.8
    t_floor: float = 0.1
    guided: FilterParams = field(default_factory=FilterParams)
    avg_radius: int = 15
    # False reads the min-channel ratio per pixel instead of over a patch
    patch_min: bool = True

    def __post_init__(self):
        if not 0.0 < self.omega < 1.0:
            raise ValueError(f"omega must lie in (0, 1), got {self.omega}")
        if not 0.5 <= self.k_floor < 1.0:
            raise ValueError(f"k_floor must lie in [0.5, 1), got {self.k_floor}")
        if not 0.0 < self.t_floor < 0.5:
            raise ValueError(f"t_floor must lie in (0, 0.5), got {self.t_floor}")
        for name in ("patch_radius", "avg_radius"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be an integer >= 1, got {v}")


@dataclass(frozen=True)
class GrayOffset:
    alpha: float
    mu_i: float
    mu_mc: float


@dataclass(frozen=True)
class HazeSynthesisParams:
    """Transmission and airlight coefficient used to add haze.

    Both fields accept a scalar or an ``(H, W)`` map; values must lie in (0, 1].
    """

    transmission: float | np.ndarray = 1.0
    airlight_k: float | np.ndarray = 1.0

    def __post_init__(self):
        for name in ("transmission", "airlight_k"):
            v = np.asarray(getattr(self, name), dtype=np.float64)
            if not np.all(np.isfinite(v)) or v.min() <= 0.0 or v.max() > 1.0:
                raise ValueError(f"{name} must lie in (0, 1]")

    @classmethod
    def from_depth(cls, depth, scatter: float, airlight_k=1.0) -> "HazeSynthesisParams":
        """Transmission ``exp(-scatter * depth)`` from a depth map."""
        depth = np.asarray(depth, dtype=np.float64)
        if scatter < 0 or depth.min() < 0:
            raise ValueError("scatter coefficient and depth must be non-negative")
        return cls(transmission=np.exp(-scatter * depth), airlight_k=airlight_k)


@dataclass(frozen=True)
class DehazeResult:
    radiance: RgbImage
    transmission: GrayMap
    k_map: GrayMap
    haze_intensity: GrayMap
    gray_offset: GrayOffset
    normalizer: float
    # set by the dark-channel baseline only
    airlight: np.ndarray | None = None


def estimate_gray_offset(img: RgbImage) -> GrayOffset:
    img = as_rgb(img)
    mu_i = float(np.mean(img))
    mu_mc = float(np.mean(min_channel(img)))
    return GrayOffset(alpha=mu_i - mu_mc, mu_i=mu_i, mu_mc=mu_mc)


def haze_intensity(img: RgbImage, offset: GrayOffset) -> GrayMap:
    """Offset grayscale ``C = mean_c(I) + alpha`` clamped to [0, 1]."""
    return np.clip(channel_mean(as_rgb(img)) + offset.alpha, 0.0, 1.0)


def estimate_k_map(img: RgbImage, params: DehazeParams | None = None) -> GrayMap:
    """Airlight-coefficient map, bounded to ``[params.k_floor, 1]``.

    The haze intensity is box-averaged at ``avg_radius`` and then
    edge-aligned with a guided filter whose guide is the image grayscale.
    """
    params = params or DehazeParams()
    img = as_rgb(img)
    c = haze_intensity(img, estimate_gray_offset(img))
    smoothed = box_mean_filter(c, params.avg_radius)
    k = guided_filter(channel_mean(img), smoothed, params.guided)
    return np.clip(k, params.k_floor, 1.0)


def transmission_normalizer(img: RgbImage) -> float:
    """Global mean of ``mean_c(I) - min_c(I)``.

    Equal to the gray offset alpha by linearity of the mean. Bounded
    above by 2/3, so ``1 - normalizer`` is always safely positive.
    """
    img = as_rgb(img)
    return max(float(np.mean(channel_mean(img) - min_channel(img))), 0.0)


def estimate_transmission(
    img: RgbImage, k_map: GrayMap, params: DehazeParams | None = None
) -> GrayMap:
    params = params or DehazeParams()
    img = as_rgb(img)
    k_map = as_gray(np.broadcast_to(k_map, img.shape[:2]))
    if np.any(k_map <= 0.0):
        raise ValueError("airlight coefficient map must be strictly positive")

    ratio = min_channel(img) / k_map
    if params.patch_min:
        ratio = min_filter(ratio, params.patch_radius)
    raw = 1.0 - params.omega * ratio
    t = raw / (1.0 - transmission_normalizer(img))
    return np.clip(t, params.t_floor, 1.0)


def _airlight_for(img: np.ndarray, k) -> np.ndarray:
    """Broadcast a scalar, ``(H, W)`` map or per-channel triple against ``img``."""
    k = np.asarray(k, dtype=np.float64)
    if k.ndim == 2:
        return k[..., None]
    return np.broadcast_to(k, img.shape)


def recover_radiance(img: RgbImage, t: GrayMap, k, t_floor: float = 0.1) -> RgbImage:
    """Invert the haze model: ``J = (I - K (1 - t)) / max(t, t_floor)``, clamped to [0, 1]."""
    img = as_rgb(img)
    t = np.broadcast_to(np.asarray(t, dtype=np.float64), img.shape[:2])[..., None]
    k = _airlight_for(img, k)
    j = (img - k * (1.0 - t)) / np.maximum(t, t_floor)
    return np.clip(j, 0.0, 1.0)


def synthesize_haze(clean: RgbImage, p: HazeSynthesisParams) -> RgbImage:
    clean = as_rgb(clean)
    t = np.broadcast_to(np.asarray(p.transmission, dtype=np.float64), clean.shape[:2])[..., None]
    k = _airlight_for(clean, p.airlight_k)
    return clean * t + k * (1.0 - t)


def dehaze_pipeline(img: RgbImage, params: DehazeParams | None = None) -> DehazeResult:
    params = params or DehazeParams()
    img = as_rgb(img)
    offset = estimate_gray_offset(img)
    c = haze_intensity(img, offset)
    k = estimate_k_map(img, params)
    norm = transmission_normalizer(img)
    t = estimate_transmission(img, k, params)
    j = recover_radiance(img, t, k, params.t_floor)
    return DehazeResult(
        radiance=j,
        transmission=t,
        k_map=k,
        haze_intensity=c,
        gray_offset=offset,
        normalizer=norm,
    )


def neglected_term_score(clean: RgbImage, t: GrayMap) -> float:
    """Mean of ``min_c(J) * t``, the product dropped when deriving the transmission."""
    clean = as_rgb(clean)
    t = as_gray(t)
    if t.shape != clean.shape[:2]:
        raise ValueError(f"transmission shape {t.shape} does not match image {clean.shape[:2]}")
    return float(np.mean(min_channel(clean) * t))
