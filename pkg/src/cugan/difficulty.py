"""Difficulty scores: normalization, ranking, and pluggable score sources.

Raw scores come from a predictor (here: a score file or an analytic proxy on
synthetic mixtures) and are mapped affinely onto ``[-1, 1]``, where ``-1`` is
the easiest sample of the set and ``+1`` the hardest.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from .errors import DatasetError, InvalidScoreError, UnsupportedSourceError

if TYPE_CHECKING:
    from .data import Dataset

PROXIES = ("mahalanobis", "euclidean")


def normalize_scores(raw) -> np.ndarray:
    """Map raw difficulty scores onto [-1, 1] with min -> -1 and max -> +1.

    The map is ``2 * (raw - min) / (max - min) - 1``. A constant input has no
    spread, so every sample gets the midpoint score 0.

    Raises:
        InvalidScoreError: if ``raw`` is empty or contains NaN/inf.
    """
    raw = np.asarray(raw, dtype=np.float64).ravel()
    if raw.size == 0:
        raise InvalidScoreError("cannot normalize an empty score list")
    if not np.all(np.isfinite(raw)):
        bad = int(np.flatnonzero(~np.isfinite(raw))[0])
        raise InvalidScoreError(f"non-finite raw score at index {bad}: {raw[bad]!r}")
    lo = raw.min()
    hi = raw.max()
    if hi == lo:
        return np.zeros_like(raw)
    s = (raw - lo) / (hi - lo) * 2.0 - 1.0
    # pin the endpoints, rounding can leave them one ulp off
    s[raw == lo] = -1.0
    s[raw == hi] = 1.0
    return np.clip(s, -1.0, 1.0)


def rank_by_difficulty(scores) -> np.ndarray:
    """Indices sorted easiest first; ties keep ascending original index."""
    scores = np.asarray(scores, dtype=np.float64).ravel()
    return np.argsort(scores, kind="stable")


def analytic_difficulty(sample, mode_mean, sigma, proxy: str = "mahalanobis") -> float:
    """Distance of one sample from the mean of the mode that generated it.

    ``mahalanobis`` divides by the mode's isotropic sigma; ``euclidean`` does
    not, which keeps wide modes harder than narrow ones.
    """
    if mode_mean is None or sigma is None:
        raise UnsupportedSourceError("analytic difficulty needs the generating mode's mean and sigma")
    d = float(np.linalg.norm(np.asarray(sample, dtype=np.float64) - np.asarray(mode_mean, dtype=np.float64)))
    if proxy == "mahalanobis":
        return d / float(sigma)
    if proxy == "euclidean":
        return d
    raise UnsupportedSourceError(f"unknown difficulty proxy {proxy!r}; expected one of {PROXIES}")


def analytic_scores(dataset: Dataset, proxy: str = "mahalanobis") -> np.ndarray:
    """Vectorized :func:`analytic_difficulty` over a whole synthetic dataset."""
    if not dataset.has_metadata:
        raise UnsupportedSourceError(
            "analytic difficulty needs a synthetic dataset with mode metadata; "
            "use a score file for CSV datasets"
        )
    if proxy not in PROXIES:
        raise UnsupportedSourceError(f"unknown difficulty proxy {proxy!r}; expected one of {PROXIES}")
    means = dataset.mode_means[dataset.mode_index]
    d = np.linalg.norm(dataset.samples - means, axis=1)
    if proxy == "mahalanobis":
        d = d / dataset.mode_sigmas[dataset.mode_index]
    return d


def read_score_file(path) -> np.ndarray:
    """Read one raw score per line (no header)."""
    path = Path(path)
    values = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError:
                raise InvalidScoreError(f"{path}:{lineno}: not a number: {text!r}") from None
    return np.asarray(values, dtype=np.float64)


def write_score_file(path, raw) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for v in np.asarray(raw, dtype=np.float64).ravel():
            fh.write(f"{float(v)!r}\n")


@dataclass(frozen=True)
class ScoreSource:
    """Where raw difficulty scores come from.

    Attributes:
        kind: ``"file"``, ``"analytic"`` or ``"constant"``.
        path: score file, for ``kind="file"``.
        proxy: distance proxy, for ``kind="analytic"``.
    """

    kind: str = "analytic"
    path: str | None = None
    proxy: str = "euclidean"

    @classmethod
    def parse(cls, text: str, proxy: str = "euclidean") -> ScoreSource:
        """Parse the ``--scores`` flag value: ``analytic``, ``constant`` or a path."""
        if text == "analytic":
            return cls("analytic", proxy=proxy)
        if text == "constant":
            return cls("constant", proxy=proxy)
        return cls("file", path=text, proxy=proxy)

    def raw_scores(self, dataset: Dataset) -> np.ndarray:
        if self.kind == "analytic":
            return analytic_scores(dataset, self.proxy)
        if self.kind == "constant":
            return np.zeros(dataset.n, dtype=np.float64)
        if self.kind == "file":
            raw = read_score_file(self.path)
            if raw.size != dataset.n:
                raise DatasetError(
                    f"score file {self.path} has {raw.size} scores but the dataset has {dataset.n} samples"
                )
            return raw
        raise UnsupportedSourceError(f"unknown score source kind {self.kind!r}")

    def scores(self, dataset: Dataset) -> np.ndarray:
        """Normalized difficulty scores in [-1, 1], aligned with ``dataset``."""
        return normalize_scores(self.raw_scores(dataset))

    def describe(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "file":
            out["path"] = self.path
        if self.kind == "analytic":
            out["proxy"] = self.proxy
        return out
