"""No-reference haze-removal metrics.

Classical blind contrast scores:

* ``e``      rate of newly visible edges
* ``r_bar``  geometric mean gradient ratio at visible edges
* ``sigma``  percentage of pixels newly saturated to black or white

and two haze-theory scores:

* ``alpha_dc`` mean squared difference of the dark channels before and after
* ``beta_hl``  mean squared difference of per-haze-line magnitude spreads

Undefined scores (no reference edges, no retained clusters) are returned
as ``nan`` so they never read as a legitimate zero.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .dcp import dark_channel, estimate_airlight_dcp
from .imaging import RgbImage, as_rgb, channel_mean, to_bytes

GRADIENT_EPS = 1e-6
# visibility also needs a real gradient; keeps ln(grad) finite in r_bar
MIN_EDGE_GRADIENT = 1e-4
NULL_CLUSTER = -1


@dataclass(frozen=True)
class EdgeMask:
    visible: np.ndarray
    gradient: np.ndarray
    contrast: np.ndarray

    @property
    def count(self) -> int:
        return int(self.visible.sum())


@dataclass(frozen=True)
class HazeLineClustering:
    directions: np.ndarray
    assignment: np.ndarray
    counts: np.ndarray


@dataclass(frozen=True)
class MetricParams:
    edge_threshold: float = 0.05
    patch_radius: int = 4
    n_directions: int = 1000
    min_cluster: int = 20
    top_fraction: float = 0.001

    def __post_init__(self):
        if not self.edge_threshold > 0:
            raise ValueError(f"edge_threshold must be > 0, got {self.edge_threshold}")
        if self.n_directions < 2:
            raise ValueError(f"n_directions must be >= 2, got {self.n_directions}")
        if self.min_cluster < 2:
            raise ValueError(f"min_cluster must be >= 2, got {self.min_cluster}")
        if int(self.patch_radius) != self.patch_radius or self.patch_radius < 1:
            raise ValueError(f"patch_radius must be an integer >= 1, got {self.patch_radius}")


@dataclass(frozen=True)
class MetricReport:
    e: float
    r_bar: float
    sigma: float
    alpha_dc: float
    beta_hl: float
    neglected_term: float | None = None

    def as_dict(self) -> dict:
        d = asdict(self)
        if d["neglected_term"] is None:
            del d["neglected_term"]
        return d


def _luminance_gradient(lum: np.ndarray) -> np.ndarray:
    # central differences inside, one-sided on the border rows/cols
    if min(lum.shape) < 2:
        return np.zeros_like(lum)
    gy, gx = np.gradient(lum)
    return np.hypot(gx, gy)


def visible_edges(img: RgbImage, contrast_threshold: float = 0.05) -> EdgeMask:
    """Pixels with a non-trivial luminance gradient and 5x5 Michelson contrast above threshold."""
    if not contrast_threshold > 0:
        raise ValueError("contrast_threshold must be > 0")
    lum = channel_mean(as_rgb(img))
    grad = _luminance_gradient(lum)
    hi = ndimage.maximum_filter(lum, size=5, mode="nearest")
    lo = ndimage.minimum_filter(lum, size=5, mode="nearest")
    denom = hi + lo
    contrast = np.divide(hi - lo, denom, out=np.zeros_like(lum), where=denom > 0)
    visible = (contrast > contrast_threshold) & (grad > MIN_EDGE_GRADIENT)
    return EdgeMask(visible=visible, gradient=grad, contrast=contrast)


def _check_pair(hazy, dehazed):
    hazy, dehazed = as_rgb(hazy), as_rgb(dehazed)
    if hazy.shape != dehazed.shape:
        raise ValueError(f"image shapes differ: {hazy.shape} vs {dehazed.shape}")
    return hazy, dehazed


def metric_e(hazy: RgbImage, dehazed: RgbImage, contrast_threshold: float = 0.05) -> float:
    hazy, dehazed = _check_pair(hazy, dehazed)
    n_o = visible_edges(hazy, contrast_threshold).count
    n_r = visible_edges(dehazed, contrast_threshold).count
    if n_o == 0:
        return math.nan
    return (n_r - n_o) / n_o


def metric_rbar(hazy: RgbImage, dehazed: RgbImage, contrast_threshold: float = 0.05) -> float:
    hazy, dehazed = _check_pair(hazy, dehazed)
    edges = visible_edges(dehazed, contrast_threshold)
    if edges.count == 0:
        return math.nan
    g_h = _luminance_gradient(channel_mean(hazy))[edges.visible]
    g_r = edges.gradient[edges.visible]
    return float(np.exp(np.mean(np.log(g_r / np.maximum(g_h, GRADIENT_EPS)))))


def _saturated(img: np.ndarray) -> np.ndarray:
    q = to_bytes(img)
    return np.any((q == 0) | (q == 255), axis=2)


def metric_sigma(hazy: RgbImage, dehazed: RgbImage) -> float:
    """Percentage of pixels saturated in ``dehazed`` but not in ``hazy`` (8-bit judged)."""
    hazy, dehazed = _check_pair(hazy, dehazed)
    new = _saturated(dehazed) & ~_saturated(hazy)
    return 100.0 * float(new.sum()) / new.size


def metric_alpha_dc(hazy: RgbImage, dehazed: RgbImage, patch_radius: int = 4) -> float:
    hazy, dehazed = _check_pair(hazy, dehazed)
    d = dark_channel(hazy, patch_radius) - dark_channel(dehazed, patch_radius)
    return float(np.mean(d * d))


def fibonacci_sphere(n: int) -> np.ndarray:
    """``n`` near-uniform unit vectors on the golden-angle spiral."""
    if n < 2:
        raise ValueError("need at least 2 directions")
    i = np.arange(n, dtype=np.float64)
    z = 1.0 - (2.0 * i + 1.0) / n
    rho = np.sqrt(1.0 - z * z)
    phi = i * math.pi * (3.0 - math.sqrt(5.0))
    v = np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def to_spherical(v: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(r, azimuth phi, polar theta) of ``(..., 3)`` vectors."""
    r = np.linalg.norm(v, axis=-1)
    phi = np.arctan2(v[..., 1], v[..., 0])
    theta = np.arccos(np.clip(np.divide(v[..., 2], r, out=np.zeros_like(r), where=r > 0), -1, 1))
    return r, phi, theta


def _from_angles(phi: np.ndarray, theta: np.ndarray) -> np.ndarray:
    s = np.sin(theta)
    return np.stack([s * np.cos(phi), s * np.sin(phi), np.cos(theta)], axis=-1)


def cluster_haze_lines(
    hazy: RgbImage,
    a,
    n_directions: int = 1000,
    min_cluster: int = 20,
    directions: np.ndarray | None = None,
) -> HazeLineClustering:
    """Assign every pixel of ``hazy - a`` to its nearest sphere direction.

    Pixels that coincide with the airlight (zero-length offset) go to
    ``NULL_CLUSTER`` and never take part in scoring. ``directions``
    overrides the golden-angle lattice.
    """
    if min_cluster < 2:
        raise ValueError("min_cluster must be >= 2")
    hazy = as_rgb(hazy)
    if directions is None:
        directions = fibonacci_sphere(n_directions)
    else:
        directions = np.asarray(directions, dtype=np.float64)
        directions = directions / np.linalg.norm(directions, axis=1, keepdims=True)

    offsets = (hazy - np.asarray(a, dtype=np.float64).reshape(1, 1, 3)).reshape(-1, 3)
    r, phi, theta = to_spherical(offsets)
    live = r >= 1e-9
    assignment = np.full(r.shape, NULL_CLUSTER, dtype=np.int64)
    if live.any():
        # chord distance is monotone in angular distance on the unit sphere
        _, idx = cKDTree(directions).query(_from_angles(phi[live], theta[live]))
        assignment[live] = idx
    counts = np.bincount(assignment[live], minlength=len(directions))
    return HazeLineClustering(
        directions=directions,
        assignment=assignment.reshape(hazy.shape[:2]),
        counts=counts,
    )


def cluster_deviations(
    img: RgbImage, a, clustering: HazeLineClustering, min_cluster: int = 20
) -> dict[int, float]:
    """Population std of ``|img - a|`` per cluster with at least ``min_cluster`` pixels."""
    mags = np.linalg.norm(as_rgb(img) - np.asarray(a, dtype=np.float64).reshape(1, 1, 3), axis=2).ravel()
    labels = clustering.assignment.ravel()
    live = labels != NULL_CLUSTER
    labels, mags = labels[live], mags[live]
    size = len(clustering.counts)
    n = np.bincount(labels, minlength=size).astype(np.float64)
    mean = np.bincount(labels, weights=mags, minlength=size) / np.maximum(n, 1.0)
    dev = mags - mean[labels]
    var = np.bincount(labels, weights=dev * dev, minlength=size) / np.maximum(n, 1.0)
    return {int(i): float(np.sqrt(var[i])) for i in np.flatnonzero(n >= min_cluster)}


def beta_from_clustering(
    hazy: RgbImage, dehazed: RgbImage, a, clustering: HazeLineClustering, min_cluster: int = 20
) -> float:
    hazy, dehazed = _check_pair(hazy, dehazed)
    cd_i = cluster_deviations(hazy, a, clustering, min_cluster)
    if not cd_i:
        return math.nan
    cd_j = cluster_deviations(dehazed, a, clustering, min_cluster)
    keys = sorted(cd_i)
    diffs = np.array([cd_i[k] - cd_j[k] for k in keys])
    return float(np.mean(diffs * diffs))


def metric_beta_hl(
    hazy: RgbImage,
    dehazed: RgbImage,
    a=None,
    n_directions: int = 1000,
    min_cluster: int = 20,
    patch_radius: int = 4,
    top_fraction: float = 0.001,
) -> float:
    """Haze-line spread score; clusters come from ``hazy`` only, so it is not symmetric.

    ``a`` defaults to the dark-channel airlight of ``hazy``.
    """
    hazy, dehazed = _check_pair(hazy, dehazed)
    if a is None:
        a = estimate_airlight_dcp(hazy, dark_channel(hazy, patch_radius), top_fraction)
    clustering = cluster_haze_lines(hazy, a, n_directions, min_cluster)
    return beta_from_clustering(hazy, dehazed, a, clustering, min_cluster)


def assess_pair(hazy: RgbImage, dehazed: RgbImage, params: MetricParams | None = None) -> MetricReport:
    params = params or MetricParams()
    hazy, dehazed = _check_pair(hazy, dehazed)
    return MetricReport(
        e=metric_e(hazy, dehazed, params.edge_threshold),
        r_bar=metric_rbar(hazy, dehazed, params.edge_threshold),
        sigma=metric_sigma(hazy, dehazed),
        alpha_dc=metric_alpha_dc(hazy, dehazed, params.patch_radius),
        beta_hl=metric_beta_hl(
            hazy,
            dehazed,
            n_directions=params.n_directions,
            min_cluster=params.min_cluster,
            patch_radius=params.patch_radius,
            top_fraction=params.top_fraction,
        ),
    )
