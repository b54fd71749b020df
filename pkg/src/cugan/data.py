"""Synthetic Gaussian mixtures with known structure, and CSV ingestion."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DatasetError


@dataclass(frozen=True)
class Dataset:
    """An ``n x d`` float64 sample matrix, plus mixture metadata when synthetic.

    Attributes:
        samples: the data, one row per sample.
        mode_index: generating mode of each sample (synthetic only).
        mode_means: ``n_modes x d`` mode centres (synthetic only).
        mode_sigmas: isotropic standard deviation of each mode (synthetic only).
    """

    samples: np.ndarray
    mode_index: np.ndarray | None = None
    mode_means: np.ndarray | None = None
    mode_sigmas: np.ndarray | None = None

    def __post_init__(self):
        if self.samples.ndim != 2 or self.samples.shape[0] < 2:
            raise DatasetError(f"dataset needs at least 2 samples, got shape {self.samples.shape}")
        if not np.all(np.isfinite(self.samples)):
            raise DatasetError("dataset contains non-finite values")
        self.samples.setflags(write=False)

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    @property
    def has_metadata(self) -> bool:
        return self.mode_means is not None


@dataclass(frozen=True)
class GmmSpec:
    means: np.ndarray
    sigmas: np.ndarray
    counts: np.ndarray
    seed: int = 0

    def __post_init__(self):
        if np.any(np.asarray(self.sigmas) <= 0):
            raise ConfigError("mode sigmas must be positive")
        if np.any(np.asarray(self.counts) < 1):
            raise ConfigError("every mode needs at least one sample")


def sample_gmm(spec: GmmSpec) -> Dataset:
    """Draw each mode's block of samples in turn from one seeded stream."""
    rng = np.random.default_rng(spec.seed)
    means = np.asarray(spec.means, dtype=np.float64)
    sigmas = np.asarray(spec.sigmas, dtype=np.float64)
    counts = np.asarray(spec.counts, dtype=np.int64)
    blocks = []
    for mean, sigma, count in zip(means, sigmas, counts):
        blocks.append(mean + sigma * rng.standard_normal((int(count), means.shape[1])))
    samples = np.concatenate(blocks, axis=0)
    mode_index = np.repeat(np.arange(len(means)), counts)
    return Dataset(samples, mode_index=mode_index, mode_means=means, mode_sigmas=sigmas)


def ring_means(n_modes: int, radius: float) -> np.ndarray:
    angles = 2.0 * math.pi * np.arange(n_modes) / n_modes
    return radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)


def make_ring_gmm(n_modes: int, radius: float, sigma: float, samples_per_mode: int, seed: int = 0) -> Dataset:
    """Modes equally spaced on a circle, mode ``j`` at angle ``2*pi*j/n_modes``."""
    return make_graded_mixture(n_modes, sigma, sigma, radius=radius, samples_per_mode=samples_per_mode, seed=seed)


def make_graded_mixture(
    n_modes: int,
    sigma_min: float,
    sigma_max: float,
    radius: float = 2.0,
    samples_per_mode: int = 1000,
    seed: int = 0,
) -> Dataset:
    """Ring mixture whose mode sigmas grow geometrically from ``sigma_min`` to ``sigma_max``.

    With ``sigma_min == sigma_max`` this is exactly :func:`make_ring_gmm`.
    """
    if n_modes < 1:
        raise ConfigError("n_modes must be >= 1")
    if radius < 0:
        raise ConfigError("radius must be >= 0")
    if not 0 < sigma_min <= sigma_max:
        raise ConfigError(f"need 0 < sigma_min <= sigma_max, got {sigma_min}, {sigma_max}")
    if n_modes == 1 or sigma_min == sigma_max:
        sigmas = np.full(n_modes, float(sigma_min))
    else:
        frac = np.arange(n_modes) / (n_modes - 1)
        sigmas = sigma_min * (sigma_max / sigma_min) ** frac
    spec = GmmSpec(ring_means(n_modes, radius), sigmas, np.full(n_modes, samples_per_mode), seed)
    return sample_gmm(spec)


def load_csv_dataset(path) -> Dataset:
    """Load a headerless, comma-separated numeric matrix."""
    path = Path(path)
    rows = []
    width = None
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            cells = text.split(",")
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise DatasetError(f"{path}:{lineno}: expected {width} columns, found {len(cells)}")
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                raise DatasetError(f"{path}:{lineno}: non-numeric cell in {text!r}") from None
    if len(rows) < 2:
        raise DatasetError(f"{path}: dataset too small ({len(rows)} rows, need at least 2)")
    return Dataset(np.asarray(rows, dtype=np.float64))


def write_csv_dataset(path, dataset: Dataset) -> None:
    """Write samples with 17 significant digits so reloading is bit-exact."""
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for row in dataset.samples:
            fh.write(",".join(f"{v:.17g}" for v in row))
            fh.write("\n")


def parse_dataset_spec(text: str, seed: int = 0) -> Dataset:
    """Build a dataset from a ``--dataset`` flag value.

    Accepted forms::

        ring:<modes>,<radius>,<sigma>[,<samples_per_mode>]
        graded:<modes>,<radius>,<sigma_min>,<sigma_max>[,<samples_per_mode>]
        csv:<path>

    ``samples_per_mode`` defaults to 1000.
    """
    kind, _, rest = text.partition(":")
    if kind == "csv":
        if not rest:
            raise ConfigError("csv dataset needs a path: csv:<path>")
        return load_csv_dataset(rest)
    try:
        fields = [f for f in rest.split(",") if f]
        if kind == "ring" and len(fields) in (3, 4):
            per_mode = int(fields[3]) if len(fields) == 4 else 1000
            return make_ring_gmm(int(fields[0]), float(fields[1]), float(fields[2]), per_mode, seed)
        if kind == "graded" and len(fields) in (4, 5):
            per_mode = int(fields[4]) if len(fields) == 5 else 1000
            return make_graded_mixture(
                int(fields[0]), float(fields[2]), float(fields[3]),
                radius=float(fields[1]), samples_per_mode=per_mode, seed=seed,
            )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"malformed dataset spec {text!r}: {exc}") from None
    raise ConfigError(
        f"unrecognized dataset spec {text!r}; expected ring:<modes>,<radius>,<sigma>, "
        "graded:<modes>,<radius>,<sigma_min>,<sigma_max> or csv:<path>"
    )
