"""Multi-seed experiment runs, strategy comparisons and weight-curve dumps.

Seeds train in parallel worker processes (capped by ``CUGAN_THREADS``); every
file is written afterwards by the parent so the output is a pure function of
the experiment spec.
"""

from __future__ import annotations

import json
import logging
import os
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import jsonschema
import numpy as np

from . import plots
from .curriculum import CurriculumConfig, easiness_weight
from .data import parse_dataset_spec
from .difficulty import ScoreSource
from .errors import ConfigError, DivergedTrainingError
from .gan import GanConfig, RunLog, checkpoint_json, train

log = logging.getLogger(__name__)

SUMMARY_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "status", "config", "seeds", "runs"],
    "properties": {
        "schema_version": {"const": 1},
        "status": {"enum": ["ok", "failed"]},
        "config": {
            "type": "object",
            "required": ["dataset", "data_seed", "scores", "gan", "curriculum"],
        },
        "seeds": {"type": "array", "items": {"type": "integer"}, "minItems": 1},
        "runs": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["seed", "status", "iterations_completed", "final_metrics", "error"],
                "properties": {
                    "seed": {"type": "integer"},
                    "status": {"enum": ["ok", "failed"]},
                    "iterations_completed": {"type": "integer", "minimum": 0},
                    "final_metrics": {
                        "type": ["object", "null"],
                        "properties": {
                            "sliced_wasserstein": {"type": "number", "minimum": 0},
                            "mode_coverage": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
                            "hq_fraction": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
                        },
                    },
                    "error": {"type": ["string", "null"]},
                },
            },
        },
    },
}

METRICS = ("sliced_wasserstein", "mode_coverage", "hq_fraction")
HIGHER_IS_BETTER = {"sliced_wasserstein": False, "mode_coverage": True, "hq_fraction": True}


def validate_summary(summary: dict) -> None:
    jsonschema.validate(summary, SUMMARY_SCHEMA)


@dataclass
class ExperimentSpec:
    """Everything needed to reproduce a set of seeded training runs."""

    dataset: str = "ring:8,2,0.05"
    data_seed: int = 0
    scores: str = "analytic"
    proxy: str = "euclidean"
    gan: GanConfig = field(default_factory=GanConfig)
    curriculum: CurriculumConfig = field(default_factory=CurriculumConfig)
    seeds: list[int] = field(default_factory=lambda: [1])
    out: str = "runs/out"

    def __post_init__(self):
        if not self.seeds:
            raise ConfigError("need at least one seed")
        if self.curriculum.total_iterations != self.gan.total_iterations:
            raise ConfigError("curriculum and gan configs disagree on total_iterations")

    def config_echo(self) -> dict:
        gan = self.gan.to_dict()
        gan.pop("seed")
        return {
            "dataset": self.dataset,
            "data_seed": self.data_seed,
            "scores": ScoreSource.parse(self.scores, self.proxy).describe(),
            "gan": gan,
            "curriculum": self.curriculum.to_dict(),
        }


def _thread_cap() -> int:
    raw = os.environ.get("CUGAN_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ConfigError(f"CUGAN_THREADS must be an integer, got {raw!r}") from None
    return os.cpu_count() or 1


@dataclass
class SeedResult:
    seed: int
    status: str
    csv: str
    checkpoint: str
    scatter: str
    iterations_completed: int
    final_metrics: dict | None
    error: str | None
    wall_clock: float


def _train_seed(dataset_spec: str, data_seed: int, scores: str, proxy: str,
                gan: GanConfig, curriculum: CurriculumConfig) -> SeedResult:
    start = time.perf_counter()
    dataset = parse_dataset_spec(dataset_spec, data_seed)
    difficulty = ScoreSource.parse(scores, proxy).scores(dataset)
    try:
        runlog, trainer = train(gan, dataset, difficulty, curriculum)
    except DivergedTrainingError as exc:
        partial = exc.partial_log or RunLog()
        return SeedResult(gan.seed, "failed", partial.to_csv(), "", "", exc.iteration or 0, None,
                          str(exc), time.perf_counter() - start)
    final = None
    if runlog.rows:
        last = runlog.rows[-1]
        final = {m: last[m] for m in METRICS}
    fake = trainer.generate()
    real = dataset.samples[np.random.default_rng(trainer.eval_seed).permutation(dataset.n)[:len(fake)]]
    scatter = plots.scatter_plot({"real": real, "generated": fake},
                                 title=f"{curriculum.strategy}, seed {gan.seed}, t={trainer.t}")
    return SeedResult(gan.seed, "ok", runlog.to_csv(), checkpoint_json(trainer.checkpoint()), scatter,
                      trainer.t, final, None, time.perf_counter() - start)


def _train_many(jobs: list[tuple]) -> list[SeedResult]:
    workers = min(_thread_cap(), len(jobs))
    if workers <= 1:
        return [_train_seed(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_train_seed, *zip(*jobs)))


def _jobs(spec: ExperimentSpec) -> list[tuple]:
    return [
        (spec.dataset, spec.data_seed, spec.scores, spec.proxy, replace(spec.gan, seed=seed), spec.curriculum)
        for seed in spec.seeds
    ]


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_run(spec: ExperimentSpec, out: Path, results: list[SeedResult]) -> dict:
    runs = []
    for res in results:
        seed_dir = out / f"seed-{res.seed}"
        _write_text(seed_dir / "runlog.csv", res.csv)
        if res.status == "ok":
            _write_text(seed_dir / "checkpoint.json", res.checkpoint)
            _write_text(seed_dir / "samples.svg", res.scatter)
        runs.append({
            "seed": res.seed,
            "status": res.status,
            "iterations_completed": res.iterations_completed,
            "final_metrics": res.final_metrics,
            "error": res.error,
        })
    summary = {
        "schema_version": 1,
        "status": "ok" if all(r["status"] == "ok" for r in runs) else "failed",
        "config": spec.config_echo(),
        "seeds": list(spec.seeds),
        "runs": runs,
    }
    validate_summary(summary)
    _write_text(out / "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    # wall-clock lives outside summary.json so that file stays byte-reproducible
    _write_text(out / "timing.txt", "".join(f"seed {r.seed}: {r.wall_clock:.3f} s\n" for r in results))
    return summary


def run(spec: ExperimentSpec) -> dict:
    """Train every seed of ``spec`` and write its run directory; returns the summary."""
    out = Path(spec.out)
    # fail on bad data/score config before spawning workers
    dataset = parse_dataset_spec(spec.dataset, spec.data_seed)
    ScoreSource.parse(spec.scores, spec.proxy).scores(dataset)
    log.info("run %s: %d seed(s), %d iterations", spec.curriculum.strategy, len(spec.seeds), spec.gan.total_iterations)
    results = _train_many(_jobs(spec))
    return _write_run(spec, out, results)


# -- comparison ----------------------------------------------------------------


def parse_strategy(text: str, base: CurriculumConfig) -> tuple[str, CurriculumConfig]:
    """Parse ``name[:key=value...]``, e.g. ``sampling:k=4`` or ``weighting:k=2:mode=additive``.

    Unspecified ``k`` takes the tuned default for the strategy (2 for
    weighting, 4 for sampling).
    """
    name, *opts = text.split(":")
    overrides: dict = {"strategy": name}
    for opt in opts:
        key, sep, value = opt.partition("=")
        if not sep:
            raise ConfigError(f"bad strategy option {opt!r} in {text!r}; expected key=value")
        if key == "k":
            overrides["k"] = float(value)
        elif key == "gamma":
            overrides["gamma"] = float(value)
        elif key == "m":
            overrides["m"] = int(value)
            overrides["stage_cuts"] = None
        elif key in ("mode", "weighting_mode"):
            overrides["weighting_mode"] = value
        else:
            raise ConfigError(f"unknown strategy option {key!r} in {text!r}")
    if "k" not in overrides:
        overrides["k"] = default_k(name)
    return text, replace(base, **overrides)


def default_k(strategy: str) -> float:
    return {"weighting": 2.0, "sampling": 4.0}.get(strategy, 1.0)


def _label_dir(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.=-]+", "_", label)


def iterations_to_threshold(iterations, curve, threshold) -> int | None:
    """First logged iteration whose value is at or below ``threshold``."""
    for it, v in zip(iterations, curve):
        if v is not None and np.isfinite(v) and v <= threshold:
            return int(it)
    return None


def _verdict(a, b, higher_is_better: bool, tol: float = 1e-12) -> str:
    if a is None and b is None:
        return "tie"
    if a is None:
        return "loss"
    if b is None:
        return "win"
    if abs(a - b) <= tol:
        return "tie"
    better = a > b if higher_is_better else a < b
    return "win" if better else "loss"


def summarize_comparison(curves: dict[str, dict], iterations: list[int], baseline: str, total_iterations: int) -> dict:
    """Median curves in, iterations-to-threshold and verdicts out.

    The threshold is the baseline's final median sliced-Wasserstein value.
    """
    base_sw = curves[baseline]["sliced_wasserstein"]
    threshold = float(base_sw[-1]) if base_sw else None
    to_threshold = {}
    verdicts = {}
    for label, c in curves.items():
        to_threshold[label] = (
            iterations_to_threshold(iterations, c["sliced_wasserstein"], threshold) if threshold is not None else None
        )
    for label, c in curves.items():
        v = {"sliced_wasserstein": _verdict(to_threshold[label], to_threshold[baseline], False)}
        for metric in ("mode_coverage", "hq_fraction"):
            mine = [x for x in c[metric] if x is not None and np.isfinite(x)]
            theirs = [x for x in curves[baseline][metric] if x is not None and np.isfinite(x)]
            if mine and theirs:
                v[metric] = _verdict(float(np.mean(mine)), float(np.mean(theirs)), True)
            else:
                v[metric] = "tie"
        verdicts[label] = v
    return {
        "baseline": baseline,
        "threshold": {"metric": "sliced_wasserstein", "value": threshold,
                      "definition": "baseline final median sliced_wasserstein"},
        "total_iterations": total_iterations,
        "iterations": list(iterations),
        "median_curves": curves,
        "iterations_to_threshold": to_threshold,
        "fraction_of_budget": {
            k: (None if v is None else v / total_iterations) for k, v in to_threshold.items()
        },
        "verdicts": verdicts,
    }


def _median_curves(results: list[SeedResult]) -> tuple[list[int], dict]:
    logs = [RunLog.from_csv(r.csv) for r in results]
    lengths = {len(l) for l in logs}
    if len(lengths) != 1:
        raise DivergedTrainingError("cannot take median curves: some seeds failed before finishing")
    iterations = [int(i) for i in logs[0].column("iteration")]
    curves = {}
    for metric in METRICS:
        stack = np.stack([l.column(metric) for l in logs])
        if np.all(np.isnan(stack)):
            curves[metric] = [None] * stack.shape[1]
        else:
            curves[metric] = [float(v) for v in np.median(stack, axis=0)]
    return iterations, curves


def compare(specs: dict[str, ExperimentSpec], out, baseline: str | None = None) -> dict:
    """Run several strategies on a shared dataset, seed set and budget; summarize.

    Writes one run directory per label under ``out``, plus
    ``comparison.json`` and ``convergence.svg``.
    """
    if not specs:
        raise ConfigError("nothing to compare")
    labels = list(specs)
    ref = specs[labels[0]]
    for label, s in specs.items():
        same = (
            s.dataset == ref.dataset and s.data_seed == ref.data_seed and list(s.seeds) == list(ref.seeds)
            and s.gan.total_iterations == ref.gan.total_iterations and s.gan.eval_every == ref.gan.eval_every
            and s.scores == ref.scores and s.proxy == ref.proxy
        )
        if not same:
            raise ConfigError(f"strategy {label!r} does not share dataset, seeds and iteration budget with {labels[0]!r}")
    if baseline is None:
        baseline = next((l for l in labels if specs[l].curriculum.strategy == "none"), labels[0])
    if baseline not in specs:
        raise ConfigError(f"baseline {baseline!r} is not among the compared strategies")

    out = Path(out)
    dataset = parse_dataset_spec(ref.dataset, ref.data_seed)
    ScoreSource.parse(ref.scores, ref.proxy).scores(dataset)

    jobs, owners = [], []
    for label in labels:
        for job in _jobs(specs[label]):
            jobs.append(job)
            owners.append(label)
    results = _train_many(jobs)

    curves, iterations, statuses = {}, [], {}
    for label in labels:
        mine = [r for r, o in zip(results, owners) if o == label]
        summary = _write_run(replace(specs[label], out=str(out / _label_dir(label))), out / _label_dir(label), mine)
        statuses[label] = summary["status"]
        if summary["status"] == "ok":
            iterations, curves[label] = _median_curves(mine)
    if any(s != "ok" for s in statuses.values()):
        failed = [l for l, s in statuses.items() if s != "ok"]
        raise DivergedTrainingError(f"training diverged for {failed}; see their summary.json")

    comparison = summarize_comparison(curves, iterations, baseline, ref.gan.total_iterations)
    comparison["labels"] = {l: _label_dir(l) for l in labels}
    comparison["seeds"] = list(ref.seeds)
    _write_text(out / "comparison.json", json.dumps(comparison, indent=2, sort_keys=True) + "\n")
    _write_text(out / "convergence.svg", convergence_svg(comparison))
    return comparison


def convergence_svg(comparison: dict) -> str:
    its = comparison["iterations"]
    series = {label: (its, c["sliced_wasserstein"]) for label, c in comparison["median_curves"].items()}
    hl = {}
    if comparison["threshold"]["value"] is not None:
        hl["baseline final"] = comparison["threshold"]["value"]
    return plots.line_plot(series, "median sliced Wasserstein", "iteration", "sliced Wasserstein", hlines=hl)


# -- weight curves ---------------------------------------------------------------


def weight_table(scores, k: float, gamma: float, t_grid) -> tuple[list[str], list[list[float]]]:
    """Easiness-weight trajectories: one row per ``t``, one column per score."""
    header = ["t"] + [f"s={s:g}" for s in scores]
    rows = []
    for t in t_grid:
        rows.append([float(t)] + [float(w) for w in easiness_weight(np.asarray(scores, float), t, k, gamma)])
    return header, rows


def dump_weights(scores, k: float, gamma: float, t_grid, out) -> tuple[Path, Path]:
    """Write ``weights.csv`` and ``weights.svg`` under ``out``."""
    out = Path(out)
    header, rows = weight_table(scores, k, gamma, t_grid)
    lines = [",".join(header)] + [",".join(repr(v) for v in row) for row in rows]
    csv_path, svg_path = out / "weights.csv", out / "weights.svg"
    _write_text(csv_path, "\n".join(lines) + "\n")
    ts = [r[0] for r in rows]
    series = {f"easiness {1 - k * s:g}": (ts, [r[j + 1] for r in rows]) for j, s in enumerate(scores)}
    _write_text(svg_path, plots.line_plot(series, f"easiness weight, k={k:g}, gamma={gamma:g}", "iteration", "weight"))
    return csv_path, svg_path


def auto_gamma(total_iterations: int) -> float:
    """Decay rate keeping the reference ``gamma * total = 5e-5 * 80000 = 4`` ratio."""
    return 4.0 / max(total_iterations, 1)
