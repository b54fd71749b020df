"""Difficulty-based curriculum learning for GAN training on synthetic data."""

from .curriculum import (
    CurriculumConfig,
    active_pool,
    batch_weights,
    draw_indices,
    easiness_weight,
    plan_for_iteration,
    sample_probabilities,
)
from .data import Dataset, load_csv_dataset, make_graded_mixture, make_ring_gmm
from .difficulty import ScoreSource, analytic_difficulty, normalize_scores, rank_by_difficulty
from .gan import GanConfig, RunLog, Trainer, discriminator_loss, generator_loss, train
from .metrics import hq_fraction, mode_coverage, sliced_wasserstein
from .nn import Adam, Mlp, SpectralNorm, spectral_normalize

__version__ = "0.1.0"
