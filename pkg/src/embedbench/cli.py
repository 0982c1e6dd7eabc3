"""``embedbench prepare|run|bench|report``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import DatasetConfig, bench_matrix, experiment_from_dict, load_config_file
from .embed import METHODS
from .errors import EmbedBenchError
from .pipeline import prepare, run_bench, run_experiment
from .report import report_from_csv

log = logging.getLogger("embedbench")


def _single_config(args):
    raw = load_config_file(args.config)
    if args.dataset is None and "dataset" not in raw:
        raise SystemExit("a dataset is required: pass --dataset or set it in --config")
    cfg = experiment_from_dict(raw, DatasetConfig(name=args.dataset) if "dataset" not in raw else None)
    return cfg.with_overrides(dataset=args.dataset, method=args.method, seed=args.seed, out=args.out)


def cmd_prepare(args) -> int:
    cfg = _single_config(args)
    dataset, manifest = prepare(cfg)
    print(
        f"{cfg.dataset.name}: {len(dataset)} graphs, {dataset.num_classes} classes, "
        f"split {len(manifest.train)}/{len(manifest.val)}/{len(manifest.test)} (seed {manifest.seed})"
    )
    return 0


def cmd_run(args) -> int:
    cfg = _single_config(args)
    row = run_experiment(cfg)
    print(",".join(row.as_csv()))
    return 0 if row.status == "ok" else 2


def cmd_bench(args) -> int:
    raw = load_config_file(args.config)
    if args.dataset:
        raw["datasets"] = [{"name": args.dataset}]
    if args.method:
        raw["methods"] = [args.method]
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.out is not None:
        raw["out"] = args.out
    configs, methods = bench_matrix(raw)
    if not configs:
        raise SystemExit("bench needs datasets: pass --dataset or list them in --config")
    rows = run_bench(configs, methods)
    failed = sum(r.status != "ok" for r in rows)
    print(f"{len(rows)} runs, {failed} not ok; results in {Path(configs[0].out) / 'results.csv'}")
    return 0


def cmd_report(args) -> int:
    out = Path(args.out or "runs")
    results = Path(args.results) if args.results else out / "results.csv"
    text = report_from_csv(results)
    target = out / "report.md"
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text, encoding="utf-8")
    print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="embedbench", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--dataset", help="dataset name (directory under data/ unless the config gives a path)")
        p.add_argument("--method", choices=sorted(METHODS))
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory (default: runs)")

    for name, fn, help_ in (
        ("prepare", cmd_prepare, "parse, featurize, cache descriptors, write the split"),
        ("run", cmd_run, "train and test one dataset/method pair"),
        ("bench", cmd_bench, "run every dataset x method"),
    ):
        p = sub.add_parser(name, help=help_)
        common(p)
        p.set_defaults(func=fn)

    p = sub.add_parser("report", help="render results CSV as Markdown")
    p.add_argument("--results", help="results CSV (default: <out>/results.csv)")
    p.add_argument("--out", help="output directory (default: runs)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except EmbedBenchError as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
