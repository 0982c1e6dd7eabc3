"""Markdown summary of a results CSV, one block per dataset."""

from __future__ import annotations

import csv
import logging
from collections import OrderedDict
from pathlib import Path

from .embed import METHOD_ORDER, METHODS

log = logging.getLogger(__name__)


def _num(text: str) -> float | None:
    return float(text) if text not in ("", None) else None


def _cell(value: float | None, best: float | None) -> str:
    if value is None:
        return "n/a"
    s = f"{value:.4f}"
    return f"**{s}**" if best is not None and value == best else s


def render_report(rows: list[dict]) -> str:
    """Best Acc and best Macro-F1 per dataset are bolded (all maximizers on ties).

    When a (dataset, method) pair appears more than once the last row wins.
    """
    if not rows:
        log.warning("results file is empty; report has no tables")
        return ""
    by_ds: OrderedDict[str, dict[str, dict]] = OrderedDict()
    for r in rows:
        by_ds.setdefault(r["dataset"], {})[r["method"]] = r
    out = []
    for ds, methods in by_ds.items():
        ordered = [m for m in METHOD_ORDER if m in methods] + sorted(m for m in methods if m not in METHODS)
        accs = [_num(methods[m]["acc"]) for m in ordered]
        f1s = [_num(methods[m]["macro_f1"]) for m in ordered]
        best_acc = max((a for a in accs if a is not None), default=None)
        best_f1 = max((f for f in f1s if f is not None), default=None)
        out.append(f"### {ds}\n")
        out.append("| Method | Tr. | Acc | F1 | P/R |")
        out.append("|---|---|---|---|---|")
        for m, acc, f1 in zip(ordered, accs, f1s):
            r = methods[m]
            label = METHODS[m].label if m in METHODS else m
            p, rc = _num(r["macro_p"]), _num(r["macro_r"])
            pr = "n/a" if p is None or rc is None else f"{p:.4f}/{rc:.4f}"
            out.append(f"| {label} | {r['trainable']} | {_cell(acc, best_acc)} | {_cell(f1, best_f1)} | {pr} |")
        out.append("")
    return "\n".join(out)


def read_results(path: str | Path) -> list[dict]:
    path = Path(path)
    if not path.is_file() or path.stat().st_size == 0:
        return []
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def report_from_csv(path: str | Path) -> str:
    return render_report(read_results(path))
