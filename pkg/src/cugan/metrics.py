"""Sample-quality metrics for low-dimensional synthetic data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, MissingMetadataError


@dataclass
class MetricReport:
    sliced_wasserstein: float
    mode_coverage: float | None = None
    hq_fraction: float | None = None


def random_directions(dim: int, n_projections: int, rng: np.random.Generator) -> np.ndarray:
    """``n_projections`` unit vectors drawn uniformly from the sphere, as columns."""
    d = rng.standard_normal((dim, n_projections))
    return d / np.linalg.norm(d, axis=0, keepdims=True)


def sliced_wasserstein(real, fake, n_projections: int = 128, rng=None, directions=None) -> float:
    """Mean 1-D Wasserstein-1 distance over random projections.

    The larger sample set is subsampled (without replacement, seeded by
    ``rng``) to the size of the smaller so sorted projections pair up.
    Passing ``directions`` (``dim x p``) fixes the projection axes.
    """
    real = np.asarray(getattr(real, "samples", real), dtype=np.float64)
    fake = np.asarray(fake, dtype=np.float64)
    if real.ndim != 2 or fake.ndim != 2 or real.shape[1] != fake.shape[1]:
        raise ConfigError(f"dimension mismatch: real {real.shape} vs fake {fake.shape}")
    rng = rng if rng is not None else np.random.default_rng(0)
    if directions is None:
        if n_projections < 1:
            raise ConfigError("n_projections must be >= 1")
        directions = random_directions(real.shape[1], n_projections, rng)
    else:
        directions = np.asarray(directions, dtype=np.float64).reshape(real.shape[1], -1)
    n = min(len(real), len(fake))
    if len(real) > n:
        real = real[np.sort(rng.choice(len(real), n, replace=False))]
    elif len(fake) > n:
        fake = fake[np.sort(rng.choice(len(fake), n, replace=False))]
    pr = np.sort(real @ directions, axis=0)
    pf = np.sort(fake @ directions, axis=0)
    per_direction = np.abs(pr - pf).mean(axis=0)
    return float(per_direction.mean())


def _nearest_mode(fake, mode_means, sigma, threshold_multiple):
    if mode_means is None or sigma is None:
        raise MissingMetadataError("mode metrics need the mixture's mode means and sigma")
    fake = np.asarray(fake, dtype=np.float64)
    means = np.asarray(mode_means, dtype=np.float64)
    radius = threshold_multiple * np.broadcast_to(np.asarray(sigma, dtype=np.float64), (len(means),))
    dist = np.linalg.norm(fake[:, None, :] - means[None, :, :], axis=2)
    return dist <= radius[None, :]


def mode_coverage(fake, mode_means, sigma, threshold_multiple: float = 3.0) -> float:
    """Fraction of modes with at least one fake sample within ``threshold_multiple * sigma``."""
    within = _nearest_mode(fake, mode_means, sigma, threshold_multiple)
    return float(within.any(axis=0).mean())


def hq_fraction(fake, mode_means, sigma, threshold_multiple: float = 3.0) -> float:
    """Fraction of fake samples within ``threshold_multiple * sigma`` of some mode mean."""
    within = _nearest_mode(fake, mode_means, sigma, threshold_multiple)
    if within.shape[0] == 0:
        return 0.0
    return float(within.any(axis=1).mean())


def evaluate(dataset, fake, rng, n_projections: int = 128, threshold_multiple: float = 3.0) -> MetricReport:
    """All metrics for one batch of generated samples."""
    sw = sliced_wasserstein(dataset.samples, fake, n_projections, rng)
    if not dataset.has_metadata:
        return MetricReport(sw)
    return MetricReport(
        sw,
        mode_coverage(fake, dataset.mode_means, dataset.mode_sigmas, threshold_multiple),
        hq_fraction(fake, dataset.mode_means, dataset.mode_sigmas, threshold_multiple),
    )
