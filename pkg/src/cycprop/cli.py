"""Command-line entry point: ``cycprop train|baseline|sweep|eval``.

Exit codes: 0 success, 1 runtime failure, 2 usage error. Errors go to stderr.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import export
from .baselines import BaselineConfig, run_baseline
from .config import ConfigError, Hyperparams, coerce, load_config
from .encoder import EncoderError
from .ingest import Dataset, DatasetError, SplitError, load_dataset, read_id_list, read_labels, split_labels
from .metrics import MetricsReport, micro_macro_f1, predict
from .propagation import InfeasibleError
from .trainer import train

log = logging.getLogger("cycprop")

SWEEP_PARAMS = {"alpha": "alpha", "d": "d", "lambda0": "lambda0", "r": "r"}


class UsageError(Exception):
    pass


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", required=True, help="edge list TSV")
    p.add_argument("--attrs", required=True, help="attribute file")
    p.add_argument("--labels", required=True, help="label TSV")
    p.add_argument("--seed", type=int, default=None, help="split and init seed")
    p.add_argument("--train-fraction", type=float, default=0.3)
    p.add_argument("--val-count", type=int, default=100)


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="key = value hyperparameter file")
    p.add_argument("--variant", choices=("full", "lp-only", "gnn-only"), default=None)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one hyperparameter (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cycprop", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log every outer iteration")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train CycProp and write predictions")
    _add_data_args(p)
    _add_model_args(p)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("baseline", help="run GFHF or LLGC on raw-attribute weights")
    _add_data_args(p)
    p.add_argument("--method", choices=("gfhf", "llgc"), required=True)
    p.add_argument("--beta", type=float, default=BaselineConfig.beta)
    p.add_argument("--delta-raw", default="median-heuristic",
                   help="kernel length scale, or median-heuristic")
    p.add_argument("--max-iters", type=int, default=BaselineConfig.max_iters)
    p.add_argument("--tolerance", type=float, default=BaselineConfig.tolerance)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("sweep", help="repeat training over values of one hyperparameter")
    _add_data_args(p)
    _add_model_args(p)
    p.add_argument("--param", choices=sorted(SWEEP_PARAMS), required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--out", required=True, help="output directory for sweep.json")

    p = sub.add_parser("eval", help="score a predictions file against labels")
    p.add_argument("--predictions", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--test-ids", required=True)
    p.add_argument("--out", default="metrics.json", help="metrics.json path")
    return parser


def _hyperparams(args) -> Hyperparams:
    hp = load_config(args.config)
    changes = {}
    for item in args.set:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        try:
            changes[key.strip()] = coerce(key.strip(), value)
        except ConfigError as exc:
            raise UsageError(str(exc)) from None
    if args.variant is not None:
        changes["variant"] = args.variant
    if args.seed is not None:
        changes["seed"] = args.seed
    return hp.replace(**changes) if changes else hp


def _load(args) -> Dataset:
    return load_dataset(args.graph, args.attrs, args.labels)


def _split(data: Dataset, args, seed: int):
    return split_labels(data.labels, args.train_fraction, args.val_count, seed, data.num_classes)


def _evaluate(F, data: Dataset, split, **extra) -> MetricsReport:
    return micro_macro_f1(predict(F, split.test), data.labels[split.test], data.num_classes, **extra)


def train_once(data: Dataset, hp: Hyperparams, args):
    split = _split(data, args, hp.seed)
    result = train(data, split, hp)
    if result.aborted:
        log.warning("%s; returning the last good snapshot", result.aborted)
    report = _evaluate(result.F, data, split, seed=hp.seed, variant=hp.variant, config=hp.to_dict())
    return split, result, report


def cmd_train(args) -> int:
    hp = _hyperparams(args)
    data = _load(args)
    split, result, report = train_once(data, hp, args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    export.write_metrics(out / "metrics.json", report)
    export.write_predictions(out / "predictions.tsv", data.node_ids, result.F)
    export.write_embeddings(out / "embeddings.tsv", data.node_ids, result.E)
    export.write_history(out / "history.jsonl", result.history)
    export.write_ids(out / "test_ids.txt", data.node_ids[split.test])
    print(f"micro_f1={report.micro_f1:.4f} macro_f1={report.macro_f1:.4f} n_eval={report.n_eval}")
    return 0


def cmd_baseline(args) -> int:
    delta = args.delta_raw if args.delta_raw == "median-heuristic" else float(args.delta_raw)
    cfg = BaselineConfig(args.method, args.beta, delta, args.max_iters, args.tolerance)
    seed = 0 if args.seed is None else args.seed
    data = _load(args)
    split = _split(data, args, seed)
    F = run_baseline(data.graph, data.attributes, split, cfg)
    config = {"method": cfg.method, "beta": cfg.beta, "delta_raw": cfg.delta_raw,
              "max_iters": cfg.max_iters, "tolerance": cfg.tolerance}
    report = _evaluate(F, data, split, seed=seed, variant=cfg.method, config=config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    export.write_metrics(out / "metrics.json", report)
    export.write_predictions(out / "predictions.tsv", data.node_ids, F)
    export.write_ids(out / "test_ids.txt", data.node_ids[split.test])
    print(f"micro_f1={report.micro_f1:.4f} macro_f1={report.macro_f1:.4f} n_eval={report.n_eval}")
    return 0


def _parse_values(param: str, text: str) -> list:
    values = [v for v in (t.strip() for t in text.split(",")) if v]
    if not values:
        raise UsageError("--values is empty")
    try:
        return [coerce(SWEEP_PARAMS[param], v) for v in values]
    except ConfigError as exc:
        raise UsageError(str(exc)) from None


def cmd_sweep(args) -> int:
    if args.repeats < 1:
        raise UsageError("--repeats must be >= 1")
    values = _parse_values(args.param, args.values)
    base = _hyperparams(args)
    data = _load(args)
    entries = []
    for value in values:
        micro, macro = [], []
        for rep in range(args.repeats):
            hp = base.replace(**{SWEEP_PARAMS[args.param]: value, "seed": base.seed + rep})
            _, _, report = train_once(data, hp, args)
            micro.append(report.micro_f1)
            macro.append(report.macro_f1)
            log.info("%s=%s repeat %d micro_f1=%.4f", args.param, value, rep, report.micro_f1)
        entries.append({
            "value": value,
            "mean": float(np.mean(micro)),
            "std": float(np.std(micro)),
            "macro_mean": float(np.mean(macro)),
            "macro_std": float(np.std(macro)),
            "runs": micro,
        })
        print(f"{args.param}={value}: micro_f1 {entries[-1]['mean']:.4f} +- {entries[-1]['std']:.4f}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    export.write_json(out / "sweep.json", {
        "param": args.param, "repeats": args.repeats, "base_seed": base.seed,
        "config": base.to_dict(), "results": entries,
    })
    return 0


def cmd_eval(args) -> int:
    ids, pred, _ = export.read_predictions(args.predictions)
    labels = read_labels(args.labels)
    test_ids = read_id_list(args.test_ids)
    position = {int(i): k for k, i in enumerate(ids)}
    missing = [int(i) for i in test_ids if int(i) not in position or int(i) not in labels]
    if missing:
        raise DatasetError(f"test id {missing[0]} has no prediction or no label "
                           f"({len(missing)} such ids)")
    p = np.array([pred[position[int(i)]] for i in test_ids], dtype=np.int64)
    t = np.array([labels[int(i)] for i in test_ids], dtype=np.int64)
    report = micro_macro_f1(p, t)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    export.write_metrics(args.out, report)
    print(f"micro_f1={report.micro_f1:.4f} macro_f1={report.macro_f1:.4f} n_eval={report.n_eval}")
    return 0


COMMANDS = {"train": cmd_train, "baseline": cmd_baseline, "sweep": cmd_sweep, "eval": cmd_eval}


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"cycprop {args.command}: usage error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, DatasetError, SplitError, EncoderError, InfeasibleError,
            ValueError, OSError) as exc:
        print(f"cycprop {args.command}: error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
