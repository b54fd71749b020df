"""Difficulty-based curriculum policies for the real side of GAN training.

Three strategies are supported besides the plain baseline:

* ``batches``: train on the easiest ``1/m`` of the data first, then add the
  next difficulty tier at each stage cut, keeping earlier tiers in the pool.
* ``weighting``: scale each real sample's discriminator loss by an easiness
  weight ``1 - k * s * exp(-gamma * t)`` that decays to 1.
* ``sampling``: draw real samples with probability proportional to the same
  easiness weight (shifted by ``k - 1`` when ``k > 1`` so it stays >= 0).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, DegenerateDistributionError

STRATEGIES = ("none", "batches", "weighting", "sampling")
WEIGHTING_MODES = ("additive", "multiplicative")

# Reference schedule: 80000 iterations with stage cuts at 15000 and 25000.
REFERENCE_TOTAL = 80000
REFERENCE_CUTS = (15000, 25000)


def default_stage_cuts(total_iterations: int, m: int = 3) -> list[int]:
    """Stage cuts scaled from the 15000/25000-of-80000 reference schedule.

    For ``m == 3`` that is 18.75% and 31.25% of ``total_iterations``. Other
    batch counts get evenly spaced cuts over the first 31.25% of the run.
    """
    if m <= 1:
        return []
    if m == 3:
        fracs = [c / REFERENCE_TOTAL for c in REFERENCE_CUTS]
    else:
        last = REFERENCE_CUTS[-1] / REFERENCE_TOTAL
        fracs = [last * (j + 1) / (m - 1) for j in range(m - 1)]
    cuts = []
    for f in fracs:
        # tiny budgets would otherwise round two cuts onto the same iteration
        cuts.append(max(int(round(f * total_iterations)), cuts[-1] + 1 if cuts else 0))
    return cuts


@dataclass
class CurriculumConfig:
    """Strategy selector and its hyperparameters.

    ``stage_cuts`` defaults to :func:`default_stage_cuts` for the given
    ``total_iterations`` when left as ``None``.
    """

    strategy: str = "none"
    k: float = 1.0
    gamma: float = 5e-5
    m: int = 3
    stage_cuts: list[int] | None = None
    weighting_mode: str = "multiplicative"
    total_iterations: int = 80000

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")
        if self.weighting_mode not in WEIGHTING_MODES:
            raise ConfigError(f"unknown weighting mode {self.weighting_mode!r}; expected one of {WEIGHTING_MODES}")
        if not (self.k > 0 and math.isfinite(self.k)):
            raise ConfigError(f"k must be a positive finite number, got {self.k}")
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise ConfigError(f"gamma must be a positive finite number, got {self.gamma}")
        if self.m < 1:
            raise ConfigError(f"m must be >= 1, got {self.m}")
        if self.total_iterations < 0:
            raise ConfigError("total_iterations must be >= 0")
        if self.stage_cuts is None:
            self.stage_cuts = default_stage_cuts(self.total_iterations, self.m)
        self.stage_cuts = [int(c) for c in self.stage_cuts]
        if len(self.stage_cuts) != self.m - 1:
            raise ConfigError(f"need m-1 = {self.m - 1} stage cuts, got {len(self.stage_cuts)}")
        if any(b <= a for a, b in zip(self.stage_cuts, self.stage_cuts[1:])):
            raise ConfigError(f"stage cuts must be strictly increasing: {self.stage_cuts}")
        if self.total_iterations > 0 and any(c >= self.total_iterations for c in self.stage_cuts):
            raise ConfigError(f"stage cuts {self.stage_cuts} must all be < total_iterations={self.total_iterations}")

    def to_dict(self) -> dict:
        return asdict(self)


def easiness_weight(s, t, k, gamma):
    """``1 - k * s * exp(-gamma * t)``; works element-wise on arrays."""
    return 1.0 - k * np.asarray(s, dtype=np.float64) * np.exp(-gamma * np.asarray(t, dtype=np.float64))


def batch_weights(scores, t: int, config: CurriculumConfig) -> np.ndarray:
    """Per-sample easiness weights at iteration ``t``."""
    return easiness_weight(np.asarray(scores, dtype=np.float64), t, config.k, config.gamma)


def sample_probabilities(scores, t: int, config: CurriculumConfig) -> np.ndarray:
    """Categorical distribution over samples proportional to the shifted easiness weights.

    Raises:
        DegenerateDistributionError: if every shifted weight is zero.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise ConfigError("cannot build a sampling distribution over zero samples")
    w = batch_weights(scores, t, config) + max(0.0, config.k - 1.0)
    # rounding can leave -1e-17 where the exact value is 0
    w = np.maximum(w, 0.0)
    total = w.sum()
    if not total > 0:
        raise DegenerateDistributionError(
            f"all sampling weights are zero at t={t} (k={config.k}): every sample has difficulty +1; "
            "use k < 1, scores with some spread, or the uniform baseline"
        )
    return w / total


def draw_indices(probs, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` i.i.d. draws with replacement via the inverse CDF.

    Consumes exactly ``count`` uniforms from ``rng``; zero-probability indices
    are never returned.
    """
    probs = np.asarray(probs, dtype=np.float64)
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    u = rng.random(count)
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, probs.size - 1)


def pool_size(t: int, config: CurriculumConfig, n: int) -> int:
    """Number of easiest samples eligible at iteration ``t`` under ``batches``."""
    stage = 1 + sum(1 for c in config.stage_cuts if c <= t)
    return min(n, -(-stage * n // config.m))


def active_pool(t: int, config: CurriculumConfig, ranking) -> np.ndarray:
    """Indices of the cumulative easy-to-hard pool at iteration ``t``."""
    ranking = np.asarray(ranking)
    return ranking[: pool_size(t, config, ranking.size)]


@dataclass
class IterationPlan:
    """What the trainer should do with the real data at one iteration.

    Exactly one of ``eligible`` / ``probabilities`` is set: ``eligible`` means
    draw uniformly from those indices, ``probabilities`` means draw from that
    categorical distribution over all samples. ``weights`` are per-sample loss
    weights over the full dataset.
    """

    t: int
    eligible: np.ndarray | None
    probabilities: np.ndarray | None
    weights: np.ndarray
    weighting_mode: str = "multiplicative"
    meta: dict = field(default_factory=dict)

    def implied_probabilities(self) -> np.ndarray:
        """The sampling distribution over all samples this plan induces."""
        if self.probabilities is not None:
            return self.probabilities
        p = np.zeros(self.weights.size)
        p[self.eligible] = 1.0 / self.eligible.size
        return p


def plan_for_iteration(t: int, config: CurriculumConfig, scores, ranking=None) -> IterationPlan:
    """Unified per-iteration view of the four strategies."""
    scores = np.asarray(scores, dtype=np.float64)
    n = scores.size
    ones = np.ones(n)
    everyone = np.arange(n)
    if config.strategy == "none":
        return IterationPlan(t, everyone, None, ones)
    if config.strategy == "batches":
        if ranking is None:
            ranking = np.argsort(scores, kind="stable")
        return IterationPlan(t, active_pool(t, config, ranking), None, ones)
    if config.strategy == "weighting":
        return IterationPlan(t, everyone, None, batch_weights(scores, t, config), config.weighting_mode)
    return IterationPlan(t, None, sample_probabilities(scores, t, config), ones)
