"""Alternating minimax training with a curriculum on the real samples.

The discriminator minimizes ``E[l(D(x))] + E[l(-D(G(z)))]`` where ``l`` is the
hinge ``max(0, 1 - y)`` or the logistic ``softplus(-y)``. The generator
minimizes ``-E[D(G(z))]`` (hinge) or the non-saturating ``E[softplus(-D(G(z)))]``.
The curriculum only touches the real term: which samples are drawn, and with
what per-sample weight.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import metrics
from .curriculum import CurriculumConfig, draw_indices, plan_for_iteration
from .difficulty import rank_by_difficulty
from .errors import ConfigError, DivergedTrainingError
from .nn import Adam, Mlp, adam_step

LOSS_KINDS = ("hinge", "cross_entropy")
RUNLOG_COLUMNS = (
    "iteration", "d_loss_real", "d_loss_fake", "g_loss", "mean_weight",
    "sliced_wasserstein", "mode_coverage", "hq_fraction",
)


@dataclass
class GanConfig:
    loss_kind: str = "hinge"
    batch_size: int = 64
    total_iterations: int = 20000
    d_steps_per_g_step: int = 1
    noise_dim: int = 8
    hidden: int = 64
    lr_g: float = 2e-4
    lr_d: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    spectral_norm: bool = True
    eval_every: int = 500
    n_eval: int = 2048
    n_projections: int = 128
    threshold_multiple: float = 3.0
    seed: int = 0

    def __post_init__(self):
        if self.loss_kind == "cross-entropy":
            self.loss_kind = "cross_entropy"
        if self.loss_kind not in LOSS_KINDS:
            raise ConfigError(f"unknown loss kind {self.loss_kind!r}; expected one of {LOSS_KINDS}")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.d_steps_per_g_step < 1:
            raise ConfigError("d_steps_per_g_step must be >= 1")
        if self.total_iterations < 0:
            raise ConfigError("total_iterations must be >= 0")
        if self.eval_every < 1:
            raise ConfigError("eval_every must be >= 1")
        if self.n_eval < 256:
            raise ConfigError("metrics need at least 256 generated samples (n_eval >= 256)")

    def to_dict(self) -> dict:
        return asdict(self)


# -- losses ------------------------------------------------------------------


def _softplus(x):
    return np.logaddexp(0.0, x)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _check_finite(*arrays, what="loss"):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise DivergedTrainingError(f"non-finite {what} encountered")


@dataclass
class DiscriminatorLoss:
    loss: float
    real_term: float
    fake_term: float
    grad_real: np.ndarray
    grad_fake: np.ndarray


def discriminator_loss(real_out, fake_out, weights=None, loss_kind="hinge", weighting_mode="multiplicative"):
    """Discriminator objective and its gradient w.r.t. the discriminator outputs.

    ``weights`` are per-real-sample easiness weights. In ``multiplicative``
    mode they scale each real sample's loss; in ``additive`` mode their mean
    is added to the real term, which shifts the loss but leaves every
    gradient unchanged.
    """
    real_out = np.asarray(real_out, dtype=np.float64)
    fake_out = np.asarray(fake_out, dtype=np.float64)
    _check_finite(real_out, fake_out, what="discriminator output")
    if loss_kind == "hinge":
        real_l = np.maximum(0.0, 1.0 - real_out)
        real_dl = -(real_out < 1.0).astype(np.float64)
        fake_l = np.maximum(0.0, 1.0 + fake_out)
        fake_dl = (fake_out > -1.0).astype(np.float64)
    elif loss_kind in ("cross_entropy", "cross-entropy"):
        real_l = _softplus(-real_out)
        real_dl = -_sigmoid(-real_out)
        fake_l = _softplus(fake_out)
        fake_dl = _sigmoid(fake_out)
    else:
        raise ConfigError(f"unknown loss kind {loss_kind!r}")

    n_real = max(real_out.shape[0], 1)
    if weights is None or weighting_mode == "additive":
        real_term = float(real_l.sum() / n_real)
        grad_real = real_dl / n_real
        if weights is not None:
            real_term += float(np.mean(weights))
    elif weighting_mode == "multiplicative":
        w = np.asarray(weights, dtype=np.float64).reshape((-1,) + (1,) * (real_out.ndim - 1))
        real_term = float((w * real_l).sum() / n_real)
        grad_real = w * real_dl / n_real
    else:
        raise ConfigError(f"unknown weighting mode {weighting_mode!r}")

    n_fake = fake_out.shape[0]
    if n_fake:
        fake_term = float(fake_l.sum() / n_fake)
        grad_fake = fake_dl / n_fake
    else:
        fake_term, grad_fake = 0.0, fake_dl
    loss = real_term + fake_term
    _check_finite(loss)
    return DiscriminatorLoss(loss, real_term, fake_term, grad_real, grad_fake)


def generator_loss(fake_out, loss_kind="hinge"):
    """Return ``(loss, grad)`` of the generator objective w.r.t. ``D(G(z))``."""
    fake_out = np.asarray(fake_out, dtype=np.float64)
    if fake_out.shape[0] == 0:
        raise ConfigError("generator loss needs a non-empty fake batch")
    _check_finite(fake_out, what="discriminator output")
    n = fake_out.shape[0]
    if loss_kind == "hinge":
        loss = float(-fake_out.sum() / n)
        grad = np.full_like(fake_out, -1.0 / n)
    elif loss_kind in ("cross_entropy", "cross-entropy"):
        loss = float(_softplus(-fake_out).sum() / n)
        grad = -_sigmoid(-fake_out) / n
    else:
        raise ConfigError(f"unknown loss kind {loss_kind!r}")
    _check_finite(loss)
    return loss, grad


# -- run log -----------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


@dataclass
class RunLog:
    rows: list[dict] = field(default_factory=list)

    def append(self, row: dict) -> None:
        self.rows.append(row)

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        return np.array([np.nan if r[name] is None else r[name] for r in self.rows], dtype=np.float64)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(RUNLOG_COLUMNS)
        for row in self.rows:
            writer.writerow([_fmt(row[c]) for c in RUNLOG_COLUMNS])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> RunLog:
        reader = csv.DictReader(io.StringIO(text))
        rows = []
        for rec in reader:
            row = {}
            for c in RUNLOG_COLUMNS:
                cell = rec[c]
                if c == "iteration":
                    row[c] = int(cell)
                else:
                    row[c] = None if cell == "" else float(cell)
            rows.append(row)
        return cls(rows)


# -- trainer -----------------------------------------------------------------


@dataclass
class LossReport:
    d_loss_real: float
    d_loss_fake: float
    g_loss: float
    mean_weight: float
    real_indices: np.ndarray = field(repr=False, default=None)


class Trainer:
    """Owns both networks, their optimizers, the rng streams and the run log.

    The root seed is split into independent streams for initialization,
    generator noise, real-sample selection and evaluation.
    """

    def __init__(self, config: GanConfig, dataset, scores, curriculum: CurriculumConfig | None = None):
        self.config = config
        self.dataset = dataset
        self.scores = np.asarray(scores, dtype=np.float64)
        if self.scores.shape != (dataset.n,):
            raise ConfigError(f"need one difficulty score per sample: {self.scores.shape} vs n={dataset.n}")
        self.curriculum = curriculum or CurriculumConfig(total_iterations=config.total_iterations)
        self.ranking = rank_by_difficulty(self.scores)

        init_ss, noise_ss, sampler_ss, eval_ss = np.random.SeedSequence(config.seed).spawn(4)
        init_rng = np.random.default_rng(init_ss)
        h = config.hidden
        dim = dataset.dim
        self.generator = Mlp([config.noise_dim, h, h, dim], ["tanh", "tanh", "identity"], init_rng)
        self.discriminator = Mlp(
            [dim, h, h, 1], ["leaky_relu", "leaky_relu", "identity"], init_rng,
            spectral_norm=config.spectral_norm,
        )
        self.opt_g = Adam(self.generator.params(), config.lr_g, config.beta1, config.beta2)
        self.opt_d = Adam(self.discriminator.params(), config.lr_d, config.beta1, config.beta2)
        self.noise_rng = np.random.default_rng(noise_ss)
        self.sampler_rng = np.random.default_rng(sampler_ss)
        eval_rng = np.random.default_rng(eval_ss)
        self.eval_noise = eval_rng.standard_normal((config.n_eval, config.noise_dim))
        self.eval_seed = int(eval_rng.integers(0, 2**63 - 1))

        self.t = 0
        self.log = RunLog()
        self._window = []

    # sampling the real side

    def _draw_real(self, plan) -> np.ndarray:
        b = self.config.batch_size
        if plan.probabilities is not None:
            return draw_indices(plan.probabilities, b, self.sampler_rng)
        eligible = plan.eligible
        return eligible[self.sampler_rng.integers(0, eligible.size, b)]

    def train_step(self) -> LossReport:
        """One iteration: ``d_steps_per_g_step`` discriminator updates, then one generator update."""
        cfg = self.config
        if self.t >= cfg.total_iterations:
            raise ConfigError(f"already trained for total_iterations={cfg.total_iterations}")
        b = cfg.batch_size
        G, D = self.generator, self.discriminator
        plan = plan_for_iteration(self.t, self.curriculum, self.scores, self.ranking)
        weighted = self.curriculum.strategy == "weighting"

        all_idx = []
        d_real = d_fake = w_mean = 0.0
        for _ in range(cfg.d_steps_per_g_step):
            idx = self._draw_real(plan)
            all_idx.append(idx)
            z = self.noise_rng.standard_normal((b, cfg.noise_dim))
            fake = G(z)
            D.update_spectral_norm()
            out, cache = D.forward(np.concatenate([self.dataset.samples[idx], fake]))
            w = plan.weights[idx]
            dl = discriminator_loss(
                out[:b], out[b:], w if weighted else None, cfg.loss_kind, plan.weighting_mode,
            )
            grads, _ = D.backward(cache, np.concatenate([dl.grad_real, dl.grad_fake]))
            adam_step(self.opt_d, D, grads)
            d_real += dl.real_term
            d_fake += dl.fake_term
            w_mean += float(w.mean())

        z = self.noise_rng.standard_normal((b, cfg.noise_dim))
        fake, g_cache = G.forward(z)
        out, d_cache = D.forward(fake)
        g_loss, g_grad = generator_loss(out, cfg.loss_kind)
        _, grad_fake = D.backward(d_cache, g_grad, need_params=False)
        g_grads, _ = G.backward(g_cache, grad_fake)
        for g in g_grads:
            _check_finite(g, what="generator gradient")
        adam_step(self.opt_g, G, g_grads)

        self.t += 1
        k = cfg.d_steps_per_g_step
        report = LossReport(d_real / k, d_fake / k, g_loss, w_mean / k, np.concatenate(all_idx))
        self._window.append((report.d_loss_real, report.d_loss_fake, report.g_loss, report.mean_weight))
        if self.t % cfg.eval_every == 0:
            self._log_row()
        return report

    def _log_row(self) -> None:
        window = np.asarray(self._window)
        self._window = []
        m = self.evaluate()
        self.log.append({
            "iteration": self.t,
            "d_loss_real": float(window[:, 0].mean()),
            "d_loss_fake": float(window[:, 1].mean()),
            "g_loss": float(window[:, 2].mean()),
            "mean_weight": float(window[:, 3].mean()),
            "sliced_wasserstein": m.sliced_wasserstein,
            "mode_coverage": m.mode_coverage,
            "hq_fraction": m.hq_fraction,
        })

    def generate(self, noise=None) -> np.ndarray:
        return self.generator(self.eval_noise if noise is None else noise)

    def evaluate(self) -> metrics.MetricReport:
        """Metrics on the frozen evaluation noise bank, with a fixed projection seed."""
        fake = self.generate()
        _check_finite(fake, what="generator output")
        rng = np.random.default_rng(self.eval_seed)
        return metrics.evaluate(
            self.dataset, fake, rng, self.config.n_projections, self.config.threshold_multiple,
        )

    def checkpoint(self) -> dict:
        return {
            "iteration": self.t,
            "generator": self.generator.to_dict(),
            "discriminator": self.discriminator.to_dict(),
        }


def checkpoint_json(checkpoint: dict) -> str:
    import json

    return json.dumps(checkpoint, sort_keys=True, indent=1) + "\n"


def train(config: GanConfig, dataset, scores, curriculum: CurriculumConfig | None = None, on_step=None):
    """Run ``config.total_iterations`` steps and return ``(runlog, trainer)``.

    ``on_step(trainer, report)`` is called after every step. On divergence a
    :class:`DivergedTrainingError` carrying the partial log is raised.
    """
    if curriculum is not None and curriculum.total_iterations != config.total_iterations:
        raise ConfigError(
            f"curriculum total_iterations={curriculum.total_iterations} differs from "
            f"gan total_iterations={config.total_iterations}"
        )
    trainer = Trainer(config, dataset, scores, curriculum)
    with np.errstate(over="ignore", invalid="ignore"):
        while trainer.t < config.total_iterations:
            try:
                report = trainer.train_step()
            except DivergedTrainingError as exc:
                raise DivergedTrainingError(
                    f"training diverged at iteration {trainer.t}: {exc}",
                    partial_log=trainer.log, iteration=trainer.t,
                ) from exc
            if on_step is not None:
                on_step(trainer, report)
    return trainer.log, trainer
