"""Evaluation harness over generated datasets.

Replays every instruction through the parser and the source-color
predictor, measures prediction accuracy as a function of the confidence
threshold, and writes the report as JSON plus a delimited table and a
rendered figure.
"""

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .bundle import load_bundle
from .errors import DatasetError, RecolorError
from .instructions import SourceDescriptor, parse_instruction
from .sourcecolor import predict_source_colors
from .synth import dataset_cases

MATCH_TOLERANCE = 6  # per-channel tolerance for counting a prediction correct
THRESHOLD_GRID = [round(0.05 * i, 2) for i in range(1, 20)]  # 0.05 .. 0.95


@dataclass
class EvalReport:
    n_cases: int
    n_instructions: int
    parser_round_trip_rate: float
    color_mse: float
    accuracy_vs_threshold: list  # rows: {threshold, accuracy, predictions, gt_coverage}
    best_threshold: float
    per_class: dict
    match_tolerance: int = MATCH_TOLERANCE


def _matches(pred, gts, tol):
    arr = np.asarray(gts, dtype=np.int64)
    d = np.abs(arr - np.asarray(pred, dtype=np.int64)).max(axis=1)
    return bool((d <= tol).any())


def _best_gt(pred, gts):
    arr = np.asarray(gts, dtype=np.float64)
    sse = ((arr - np.asarray(pred, dtype=np.float64)) ** 2).sum(axis=1)
    return arr[int(np.argmin(sse))]


def eval_dataset(dataset_dir, thresholds=THRESHOLD_GRID, match_tol=MATCH_TOLERANCE):
    """Evaluate a generated dataset directory."""
    cases = dataset_cases(dataset_dir)
    if not cases:
        raise DatasetError(f"no cases under {dataset_dir}", code="empty-dataset")

    n_instr = 0
    rt_ok = 0
    sq_err = []
    per_class = {}
    # per threshold: [correct, total, gt_matched, gt_total]
    tallies = {t: [0, 0, 0, 0] for t in thresholds}

    for case_dir in cases:
        bundle = load_bundle(case_dir)
        doc = json.loads((case_dir / "instructions.json").read_text(encoding="utf-8"))
        for item in doc["instructions"]:
            n_instr += 1
            try:
                ast = parse_instruction(item["text"])
                parsed_src = {
                    "cls": ast.source.cls,
                    "attr": ast.source.attr,
                    "quantifier": ast.source.quantifier,
                }
                parsed_regions = [
                    {"phrase": r.phrase, "color_adj": r.color_adj} for r in ast.regions
                ]
                if parsed_src == item["source"] and parsed_regions == item["regions"]:
                    rt_ok += 1
            except RecolorError:
                pass

            src = SourceDescriptor(**item["source"])
            gts = item["gt_source_colors"]
            try:
                result = predict_source_colors(bundle, src, threshold=0.0)
            except RecolorError:
                for t in thresholds:
                    tallies[t][3] += len(gts)
                continue

            cls_stats = per_class.setdefault(
                src.cls, {"count": 0, "sq_err": [], "exact": 0}
            )
            cls_stats["count"] += 1
            top = result.colors[0]
            best = _best_gt(top.color, gts)
            err = (np.asarray(top.color, float) - best) ** 2
            sq_err.append(err.mean())
            cls_stats["sq_err"].append(err.mean())
            if _matches(top.color, gts, 0):
                cls_stats["exact"] += 1

            for t in thresholds:
                preds = [sc for sc in result.colors if sc.confidence > t]
                tallies[t][1] += len(preds)
                tallies[t][0] += sum(_matches(sc.color, gts, match_tol) for sc in preds)
                tallies[t][3] += len(gts)
                tallies[t][2] += sum(
                    any(_matches(sc.color, [gt], match_tol) for sc in preds) for gt in gts
                )

    curve = []
    for t in thresholds:
        correct, total, gt_hit, gt_total = tallies[t]
        curve.append(
            {
                "threshold": t,
                "accuracy": correct / total if total else 0.0,
                "predictions": total,
                "gt_coverage": gt_hit / gt_total if gt_total else 0.0,
            }
        )
    best = max(curve, key=lambda row: (row["accuracy"], -row["threshold"]))

    per_class_out = {}
    for cls, st in sorted(per_class.items()):
        per_class_out[cls] = {
            "count": st["count"],
            "mse": float(np.mean(st["sq_err"])) if st["sq_err"] else 0.0,
            "exact_rate": st["exact"] / st["count"] if st["count"] else 0.0,
        }

    return EvalReport(
        n_cases=len(cases),
        n_instructions=n_instr,
        parser_round_trip_rate=rt_ok / n_instr if n_instr else 0.0,
        color_mse=float(np.mean(sq_err)) if sq_err else 0.0,
        accuracy_vs_threshold=curve,
        best_threshold=best["threshold"],
        per_class=per_class_out,
        match_tolerance=match_tol,
    )


def element_recovery(dataset_dir, tol=0):
    """Per-element recovery rates, split text-based vs filled-based.

    Each annotated element is queried through its own leaf class; recovery
    means some confident prediction lands within ``tol`` per channel of the
    annotated color.
    """
    from .bundle import is_text_based

    cases = dataset_cases(dataset_dir)
    if not cases:
        raise DatasetError(f"no cases under {dataset_dir}", code="empty-dataset")
    hit = {"text": 0, "filled": 0}
    total = {"text": 0, "filled": 0}
    worst = {"text": 0, "filled": 0}
    for case_dir in cases:
        bundle = load_bundle(case_dir)
        for el in bundle.elements:
            if el.color is None:
                continue
            kind = "text" if is_text_based(el.cls) else "filled"
            total[kind] += 1
            try:
                result = predict_source_colors(bundle, SourceDescriptor(cls=el.cls))
            except RecolorError:
                worst[kind] = 255
                continue
            errs = [
                int(np.abs(np.asarray(sc.color, np.int64) - np.asarray(el.color, np.int64)).max())
                for sc in result.colors
            ]
            best = min(errs)
            worst[kind] = max(worst[kind], best)
            if best <= tol:
                hit[kind] += 1
    return {
        kind: {
            "total": total[kind],
            "recovered": hit[kind],
            "rate": hit[kind] / total[kind] if total[kind] else 1.0,
            "worst_error": worst[kind],
        }
        for kind in ("text", "filled")
    }


def write_report(report, out_dir):
    """Persist a report: JSON + CSV table + rendered threshold curve."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(
        json.dumps(asdict(report), sort_keys=True, indent=1), encoding="utf-8"
    )

    csv_path = out / "accuracy_vs_threshold.csv"
    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["threshold", "accuracy", "predictions", "gt_coverage"]
        )
        writer.writeheader()
        for row in report.accuracy_vs_threshold:
            writer.writerow(row)

    ts = [row["threshold"] for row in report.accuracy_vs_threshold]
    acc = [row["accuracy"] for row in report.accuracy_vs_threshold]
    cov = [row["gt_coverage"] for row in report.accuracy_vs_threshold]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(ts, acc, marker="o", label="accuracy")
    ax.plot(ts, cov, marker="s", linestyle="--", label="gt coverage")
    ax.axvline(report.best_threshold, color="grey", alpha=0.5, linewidth=1)
    ax.annotate(
        f"best {report.best_threshold:.2f}",
        xy=(report.best_threshold, max(acc) if acc else 1.0),
        fontsize=8,
        ha="left",
    )
    ax.set_xlabel("confidence threshold")
    ax.set_ylabel("rate")
    ax.set_ylim(-0.02, 1.05)
    ax.set_title(f"prediction accuracy vs threshold (MSE {report.color_mse:.2f})")
    ax.legend(loc="lower left", fontsize=8)
    fig.tight_layout()
    fig.savefig(out / "accuracy_vs_threshold.png", dpi=120)
    plt.close(fig)
    return out / "report.json"
