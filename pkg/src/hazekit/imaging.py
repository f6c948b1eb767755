"""Image containers, I/O and the windowed filter kernels.

Images are plain numpy arrays in float64:

* an RGB image is ``(H, W, 3)`` with every value in ``[0, 1]``
* a gray map is ``(H, W)``

All windowed filters use a square window of side ``2 * radius + 1``
intersected with the image, so no padding values are ever invented and
border means are normalized by the true window area.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy import ndimage

RgbImage = np.ndarray
GrayMap = np.ndarray


class ImageIOError(OSError):
    """Raised when an image cannot be read or written."""


@dataclass(frozen=True)
class FilterParams:
    radius: int = 30
    epsilon: float = 1e-3

    def __post_init__(self):
        if int(self.radius) != self.radius or self.radius < 1:
            raise ValueError(f"filter radius must be an integer >= 1, got {self.radius}")
        if not self.epsilon > 0:
            raise ValueError(f"guided filter epsilon must be > 0, got {self.epsilon}")


def as_rgb(img) -> RgbImage:
    """Validate and return ``img`` as a float64 ``(H, W, 3)`` array in [0, 1]."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) image, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError("image must be at least 1x1")
    if not np.all(np.isfinite(arr)):
        raise ValueError("image contains non-finite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("image values must lie in [0, 1]")
    return arr


def as_gray(m) -> GrayMap:
    arr = np.asarray(m, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"expected a non-empty (H, W) map, got shape {arr.shape}")
    return arr


def _check_radius(radius: int) -> int:
    if int(radius) != radius or radius < 1:
        raise ValueError(f"radius must be an integer >= 1, got {radius}")
    return int(radius)


def min_channel(img: RgbImage) -> GrayMap:
    return np.min(img, axis=2)


def channel_mean(img: RgbImage) -> GrayMap:
    # explicit sum keeps the result bit-identical to (r + g + b) / 3
    return (img[..., 0] + img[..., 1] + img[..., 2]) / 3.0


def min_filter(m: GrayMap, radius: int) -> GrayMap:
    """Sliding-window minimum over a ``(2r+1)``-square window.

    Replicated borders give the same result as clipping the window to the
    image, because the replicated values are already inside the window.
    """
    radius = _check_radius(radius)
    m = as_gray(m)
    return ndimage.minimum_filter(m, size=2 * radius + 1, mode="nearest")


def _window_sum_1d(a: np.ndarray, radius: int, axis: int) -> np.ndarray:
    n = a.shape[axis]
    c = np.cumsum(a, axis=axis)
    zero_shape = list(a.shape)
    zero_shape[axis] = 1
    c = np.concatenate([np.zeros(zero_shape), c], axis=axis)
    idx = np.arange(n)
    hi = np.minimum(idx + radius + 1, n)
    lo = np.maximum(idx - radius, 0)
    return np.take(c, hi, axis=axis) - np.take(c, lo, axis=axis)


def _window_area(shape: tuple[int, int], radius: int) -> np.ndarray:
    h, w = shape
    rows = np.minimum(np.arange(h) + radius + 1, h) - np.maximum(np.arange(h) - radius, 0)
    cols = np.minimum(np.arange(w) + radius + 1, w) - np.maximum(np.arange(w) - radius, 0)
    return np.outer(rows, cols).astype(np.float64)


def box_mean_filter(m: GrayMap, radius: int) -> GrayMap:
    """Windowed mean in O(N) using separable running sums."""
    radius = _check_radius(radius)
    m = as_gray(m)
    s = _window_sum_1d(_window_sum_1d(m, radius, 0), radius, 1)
    return s / _window_area(m.shape, radius)


def guided_filter(guide: GrayMap, src: GrayMap, params: FilterParams | None = None) -> GrayMap:
    """Single-channel guided filter (He et al.) with box means at ``params.radius``."""
    params = params or FilterParams()
    guide = as_gray(guide)
    src = as_gray(src)
    if guide.shape != src.shape:
        raise ValueError(f"guide shape {guide.shape} does not match input shape {src.shape}")
    r, eps = params.radius, params.epsilon

    mean_i = box_mean_filter(guide, r)
    mean_p = box_mean_filter(src, r)
    cov_ip = box_mean_filter(guide * src, r) - mean_i * mean_p
    var_i = box_mean_filter(guide * guide, r) - mean_i * mean_i

    a = cov_ip / (var_i + eps)
    b = mean_p - a * mean_i
    return box_mean_filter(a, r) * guide + box_mean_filter(b, r)


def load_image(path) -> RgbImage:
    """Decode an 8-bit PNG/JPEG into a float RGB image (``byte / 255``)."""
    path = Path(path)
    try:
        with Image.open(path) as im:
            if im.mode not in ("RGB", "L", "RGBA", "P", "LA"):
                raise ImageIOError(f"{path}: unsupported image mode {im.mode!r}")
            arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except FileNotFoundError as exc:
        raise ImageIOError(f"{path}: file not found") from exc
    except UnidentifiedImageError as exc:
        raise ImageIOError(f"{path}: unsupported or corrupt image file") from exc
    except OSError as exc:
        if isinstance(exc, ImageIOError):
            raise
        raise ImageIOError(f"{path}: cannot read image ({exc})") from exc
    return arr.astype(np.float64) / 255.0


def to_bytes(a: np.ndarray) -> np.ndarray:
    return np.rint(np.clip(a, 0.0, 1.0) * 255.0).astype(np.uint8)


def save_image(img: np.ndarray, path) -> Path:
    """Write an RGB image or a gray map as 8-bit; format follows the suffix."""
    path = Path(path)
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim not in (2, 3):
        raise ValueError(f"cannot save array of shape {arr.shape}")
    try:
        Image.fromarray(to_bytes(arr)).save(path)
    except (OSError, ValueError, KeyError) as exc:
        raise ImageIOError(f"{path}: cannot write image ({exc})") from exc
    return path
