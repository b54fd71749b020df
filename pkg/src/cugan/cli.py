"""Command-line entry point: ``cugan {run,compare,dump-weights,dump-dataset}``.

Exit codes: 0 ok, 2 configuration error, 3 training diverged, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import runner
from .curriculum import STRATEGIES, WEIGHTING_MODES, CurriculumConfig
from .data import parse_dataset_spec, write_csv_dataset
from .difficulty import PROXIES, ScoreSource, write_score_file
from .errors import ConfigError, CuganError, DatasetError, DivergedTrainingError, InvalidScoreError, UnsupportedSourceError
from .gan import GanConfig

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_IO = 0, 2, 3, 4


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", default="ring:8,2,0.05",
                   help="ring:<modes>,<radius>,<sigma>[,<per_mode>] | graded:<modes>,<radius>,<smin>,<smax>[,<per_mode>] | csv:<path>")
    p.add_argument("--data-seed", type=int, default=0)
    p.add_argument("--scores", default="analytic", help="'analytic', 'constant', or a score file (one per line)")
    p.add_argument("--proxy", choices=PROXIES, default="euclidean", help="distance used by --scores analytic")


def _add_train_flags(p: argparse.ArgumentParser, with_strategy: bool = True) -> None:
    _add_data_flags(p)
    if with_strategy:
        p.add_argument("--strategy", choices=STRATEGIES, default="none")
        p.add_argument("--k", type=float, default=None, help="default: 2 for weighting, 4 for sampling, else 1")
    p.add_argument("--gamma", type=float, default=None, help="default: 4 / iters")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--stage-cuts", type=_int_list, default=None, help="default: 18.75%%,31.25%% of iters")
    p.add_argument("--weighting-mode", choices=WEIGHTING_MODES, default="multiplicative")
    p.add_argument("--loss", choices=("hinge", "cross-entropy"), default="hinge")
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--iters", type=int, default=2000)
    p.add_argument("--eval-every", type=int, default=None, help="default: iters / 20")
    p.add_argument("--d-steps", type=int, default=1)
    p.add_argument("--lr", type=float, default=2e-4)
    p.add_argument("--beta1", type=float, default=0.5)
    p.add_argument("--beta2", type=float, default=0.999)
    p.add_argument("--noise-dim", type=int, default=8)
    p.add_argument("--hidden", type=int, default=64)
    p.add_argument("--no-spectral-norm", action="store_true")
    p.add_argument("--seeds", type=_int_list, default=[1])
    p.add_argument("--out", required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cugan", description="Difficulty curricula for GAN training on toy data.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="train one strategy over one or more seeds")
    _add_train_flags(p)

    p = sub.add_parser("compare", help="train several strategies on shared data/seeds and compare convergence")
    _add_train_flags(p, with_strategy=False)
    p.add_argument("--strategies", default="none,batches,weighting,sampling",
                   help="comma list of name[:k=..][:gamma=..][:mode=additive]")
    p.add_argument("--baseline", default=None, help="label of the reference strategy (default: first 'none')")

    p = sub.add_parser("dump-weights", help="write easiness-weight decay curves (CSV + SVG)")
    p.add_argument("--scores", type=_float_list, default=[-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0],
                   help="difficulty scores to trace, e.g. --scores=-1,0,1")
    p.add_argument("--k", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=5e-5)
    p.add_argument("--t-max", type=float, default=None, help="default: 10 / gamma")
    p.add_argument("--t-points", type=int, default=201)
    p.add_argument("--out", required=True)

    p = sub.add_parser("dump-dataset", help="write a dataset (and optionally its raw scores) to CSV")
    _add_data_flags(p)
    p.add_argument("--out", required=True, help="CSV path")
    p.add_argument("--scores-out", default=None, help="also write raw difficulty scores here")
    return parser


def _configs(args, strategy: str, k: float | None) -> tuple[GanConfig, CurriculumConfig]:
    if args.iters < 0:
        raise ConfigError("--iters must be >= 0")
    eval_every = args.eval_every or max(1, args.iters // 20)
    gan = GanConfig(
        loss_kind=args.loss, batch_size=args.batch_size, total_iterations=args.iters,
        d_steps_per_g_step=args.d_steps, noise_dim=args.noise_dim, hidden=args.hidden,
        lr_g=args.lr, lr_d=args.lr, beta1=args.beta1, beta2=args.beta2,
        spectral_norm=not args.no_spectral_norm, eval_every=eval_every,
    )
    curriculum = CurriculumConfig(
        strategy=strategy,
        k=runner.default_k(strategy) if k is None else k,
        gamma=args.gamma if args.gamma is not None else runner.auto_gamma(args.iters),
        m=args.m, stage_cuts=args.stage_cuts, weighting_mode=args.weighting_mode,
        total_iterations=args.iters,
    )
    return gan, curriculum


def _spec(args, gan, curriculum, out) -> runner.ExperimentSpec:
    return runner.ExperimentSpec(
        dataset=args.dataset, data_seed=args.data_seed, scores=args.scores, proxy=args.proxy,
        gan=gan, curriculum=curriculum, seeds=args.seeds, out=str(out),
    )


def cmd_run(args) -> int:
    gan, curriculum = _configs(args, args.strategy, args.k)
    summary = runner.run(_spec(args, gan, curriculum, args.out))
    for r in summary["runs"]:
        print(f"seed {r['seed']}: {r['status']} final={json.dumps(r['final_metrics'])}")
    return EXIT_OK if summary["status"] == "ok" else EXIT_DIVERGED


def cmd_compare(args) -> int:
    gan, base = _configs(args, "none", None)
    specs = {}
    for item in args.strategies.split(","):
        label, cc = runner.parse_strategy(item.strip(), base)
        if label in specs:
            raise ConfigError(f"duplicate strategy label {label!r}")
        specs[label] = _spec(args, gan, cc, Path(args.out) / label)
    result = runner.compare(specs, args.out, baseline=args.baseline)
    print(f"threshold (baseline final median SW): {result['threshold']['value']:.6g}")
    for label in specs:
        it = result["iterations_to_threshold"][label]
        print(f"{label:40s} reaches threshold at {it if it is not None else 'never'}  {result['verdicts'][label]}")
    return EXIT_OK


def cmd_dump_weights(args) -> int:
    if args.gamma <= 0 or args.t_points < 2:
        raise ConfigError("need gamma > 0 and t-points >= 2")
    t_max = args.t_max if args.t_max is not None else 10.0 / args.gamma
    grid = np.linspace(0.0, t_max, args.t_points)
    csv_path, svg_path = runner.dump_weights(args.scores, args.k, args.gamma, grid, args.out)
    print(f"wrote {csv_path} and {svg_path}")
    return EXIT_OK


def cmd_dump_dataset(args) -> int:
    dataset = parse_dataset_spec(args.dataset, args.data_seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv_dataset(out, dataset)
    if args.scores_out:
        write_score_file(args.scores_out, ScoreSource.parse(args.scores, args.proxy).raw_scores(dataset))
    print(f"wrote {dataset.n} x {dataset.dim} samples to {out}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "dump-weights": cmd_dump_weights, "dump-dataset": cmd_dump_dataset}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except DivergedTrainingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ConfigError, DatasetError, InvalidScoreError, UnsupportedSourceError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except CuganError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
