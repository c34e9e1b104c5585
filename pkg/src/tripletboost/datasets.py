"""Bundled synthetic datasets for experiments and the CLI.

Two generators cover the desk-scale experiment shapes: concentric circles
(two informative dimensions drowned in Gaussian noise dimensions, where a
learned metric must recover the informative plane) and overlapping Gaussian
classes with per-dimension scale distortion (a plain classification task at
a chosen size).
"""

import numpy as np

from .constraints import Dataset


def _class_sizes(n_points, n_classes):
    if n_classes < 2:
        raise ValueError("need at least 2 classes")
    if n_points < 2 * n_classes:
        raise ValueError("need at least 2 points per class")
    sizes = np.full(n_classes, n_points // n_classes)
    sizes[: n_points % n_classes] += 1
    return sizes


def make_circles(
    n_points=1000,
    n_classes=4,
    dim=10,
    noise_scale=1.5,
    radius_step=1.0,
    radial_jitter=0.1,
    seed=0,
):
    """Concentric class circles in dims 0-1, Gaussian noise in dims 2+.

    Class c sits on a circle of radius (c + 1) * radius_step with small
    radial jitter, so classes are ordered rings in the first two dimensions.
    Every remaining dimension is independent zero-mean Gaussian noise of
    standard deviation ``noise_scale``, which degrades plain Euclidean
    neighborhoods without touching the informative plane.
    """
    if dim < 3:
        raise ValueError("dim must be >= 3 so there is at least one noise dim")
    if radius_step <= 0 or radial_jitter < 0 or noise_scale < 0:
        raise ValueError("radius_step must be > 0; jitters must be >= 0")
    sizes = _class_sizes(n_points, n_classes)
    rng = np.random.default_rng(seed)
    features = np.empty((n_points, dim))
    labels = np.empty(n_points, dtype=int)
    row = 0
    for cls, size in enumerate(sizes):
        angles = rng.uniform(0.0, 2.0 * np.pi, size)
        radii = (cls + 1) * radius_step + rng.normal(0.0, radial_jitter, size)
        block = slice(row, row + size)
        features[block, 0] = radii * np.cos(angles)
        features[block, 1] = radii * np.sin(angles)
        features[block, 2:] = rng.normal(0.0, noise_scale, (size, dim - 2))
        labels[block] = cls
        row += size
    return Dataset(features=features, labels=labels)


def make_gaussian_classes(
    n_points=683,
    n_classes=2,
    dim=10,
    separation=3.0,
    scale_low=0.5,
    scale_high=3.0,
    seed=0,
):
    """Overlapping Gaussian class clouds with uneven per-dimension scales.

    Class centers are drawn at distance ~``separation`` apart, points are
    unit Gaussians around them, and each dimension is then stretched by a
    random factor in [scale_low, scale_high]. The stretching makes raw
    Euclidean distance a poor fit, so there is something for a metric to
    learn, while the overlap keeps error rates away from zero.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if separation <= 0 or not 0 < scale_low <= scale_high:
        raise ValueError("separation must be > 0 and 0 < scale_low <= scale_high")
    sizes = _class_sizes(n_points, n_classes)
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((n_classes, dim))
    centers *= separation / np.linalg.norm(centers, axis=1, keepdims=True)
    scales = rng.uniform(scale_low, scale_high, dim)
    features = np.empty((n_points, dim))
    labels = np.empty(n_points, dtype=int)
    row = 0
    for cls, size in enumerate(sizes):
        block = slice(row, row + size)
        features[block] = centers[cls] + rng.standard_normal((size, dim))
        labels[block] = cls
        row += size
    features *= scales
    return Dataset(features=features, labels=labels)
