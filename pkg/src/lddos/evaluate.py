"""Confusion-based metrics, stratified cross-validation, holdout timing,
and report rendering (CSV plus aligned text table)."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import classifiers
from .dataset import LabeledDataset, fit_normalizer, split, stratified_kfold
from .errors import LengthMismatch
from .utils import derive_seed, fmt_float

METRIC_ROWS = ("accuracy", "fpr", "fnr", "eval_time")


def confusion(y_true, y_pred) -> tuple[int, int, int, int]:
    """(tp, fp, tn, fn) with the attack class (1) as positive."""
    t = np.asarray(y_true, dtype=np.int64)
    p = np.asarray(y_pred, dtype=np.int64)
    if t.shape != p.shape:
        raise LengthMismatch(
            f"got {t.shape[0]} labels but {p.shape[0]} predictions"
        )
    tp = int(np.sum((t == 1) & (p == 1)))
    fp = int(np.sum((t == 0) & (p == 1)))
    tn = int(np.sum((t == 0) & (p == 0)))
    fn = int(np.sum((t == 1) & (p == 0)))
    return tp, fp, tn, fn


def confusion_metrics(tp: int, fp: int, tn: int, fn: int):
    """Percent accuracy, false-positive rate, false-negative rate.

    Rates whose denominator is zero come back as None rather than a
    made-up number."""
    total = tp + fp + tn + fn
    accuracy = 100.0 * (tp + tn) / total if total else None
    fpr = 100.0 * fp / (fp + tn) if (fp + tn) else None
    fnr = 100.0 * fn / (fn + tp) if (fn + tp) else None
    return accuracy, fpr, fnr


@dataclass
class EvalResult:
    dataset: str
    algorithm: str
    source: str  # "cv" or "holdout"
    confusion: tuple[int, int, int, int]
    accuracy: float | None
    fpr: float | None
    fnr: float | None
    eval_time: float | None = None
    fold_metrics: list[dict] = field(default_factory=list)

    @property
    def fold_accuracies(self) -> list[float]:
        return [m["accuracy"] for m in self.fold_metrics]


def cross_validate(
    dataset: LabeledDataset,
    algorithm: str,
    hyperparameters: dict | None = None,
    k: int = 10,
    seed: int = 0,
    normalization: str = "minmax",
    dataset_name: str = "",
) -> EvalResult:
    """Stratified k-fold evaluation.

    Each fold fits its own normalizer on the training rows only, so no
    statistic of a test fold ever reaches the model. Reported accuracy
    is the mean of fold accuracies; rates come from the pooled
    confusion counts."""
    folds = stratified_kfold(dataset, k, seed)
    all_idx = np.arange(len(dataset))
    fold_metrics: list[dict] = []
    pooled = np.zeros(4, dtype=np.int64)
    for fold_no, test_idx in enumerate(folds):
        mask = np.ones(len(dataset), dtype=bool)
        mask[test_idx] = False
        train_idx = all_idx[mask]
        Xtr = dataset.rows[train_idx]
        Xte = dataset.rows[test_idx]
        if normalization != "none":
            norm = fit_normalizer(Xtr, dataset.schema, normalization)
            Xtr = norm.apply(Xtr)
            Xte = norm.apply(Xte)
        model = classifiers.fit(
            algorithm,
            Xtr,
            dataset.labels[train_idx],
            dataset.schema,
            hyperparameters,
            seed=derive_seed(seed, "cv-fold", fold_no),
        )
        pred = model.predict(Xte)
        c = confusion(dataset.labels[test_idx], pred)
        pooled += np.asarray(c)
        acc, fpr, fnr = confusion_metrics(*c)
        fold_metrics.append({"accuracy": acc, "fpr": fpr, "fnr": fnr})
    tp, fp, tn, fn = (int(v) for v in pooled)
    _, fpr, fnr = confusion_metrics(tp, fp, tn, fn)
    mean_acc = float(np.mean([m["accuracy"] for m in fold_metrics]))
    return EvalResult(
        dataset=dataset_name,
        algorithm=algorithm,
        source="cv",
        confusion=(tp, fp, tn, fn),
        accuracy=mean_acc,
        fpr=fpr,
        fnr=fnr,
        fold_metrics=fold_metrics,
    )


def timed_predict(model, rows: np.ndarray) -> tuple[np.ndarray, float]:
    """Median wall-clock of three identical predict calls, so a single
    scheduler hiccup cannot skew the figure."""
    times = []
    pred = None
    for _ in range(3):
        start = time.perf_counter()
        pred = model.predict(rows)
        times.append(time.perf_counter() - start)
    return pred, sorted(times)[1]


def holdout_evaluate(
    dataset: LabeledDataset,
    algorithm: str,
    hyperparameters: dict | None = None,
    train_fraction: float = 0.5,
    seed: int = 0,
    normalization: str = "minmax",
    dataset_name: str = "",
    with_timing: bool = True,
) -> EvalResult:
    """Single stratified train/test split; optionally times prediction
    over the test rows."""
    train, test = split(dataset, train_fraction, stratified=True, seed=seed)
    Xtr, Xte = train.rows, test.rows
    if normalization != "none":
        norm = fit_normalizer(Xtr, dataset.schema, normalization)
        Xtr = norm.apply(Xtr)
        Xte = norm.apply(Xte)
    model = classifiers.fit(
        algorithm,
        Xtr,
        train.labels,
        dataset.schema,
        hyperparameters,
        seed=derive_seed(seed, "holdout"),
    )
    if with_timing:
        pred, elapsed = timed_predict(model, Xte)
    else:
        pred, elapsed = model.predict(Xte), None
    tp, fp, tn, fn = confusion(test.labels, pred)
    accuracy, fpr, fnr = confusion_metrics(tp, fp, tn, fn)
    return EvalResult(
        dataset=dataset_name,
        algorithm=algorithm,
        source="holdout",
        confusion=(tp, fp, tn, fn),
        accuracy=accuracy,
        fpr=fpr,
        fnr=fnr,
        eval_time=elapsed,
    )


# ---------------------------------------------------------------------------
# rendering

def _cell(value: float | None, decimals: int) -> str:
    return "N/A" if value is None else f"{value:.{decimals}f}"


def _metric_value(result: EvalResult, metric: str) -> float | None:
    return getattr(result, metric if metric != "eval_time" else "eval_time")


def report_csv(results: list[EvalResult]) -> str:
    """Rows of dataset,algorithm,metric,value; metric names carry the
    evaluation source so cv and holdout rows stay distinct."""
    lines = ["dataset,algorithm,metric,value"]
    for r in results:
        for metric in METRIC_ROWS:
            value = getattr(r, metric)
            if metric == "eval_time" and r.source == "cv":
                continue
            rendered = "N/A" if value is None else fmt_float(value)
            lines.append(f"{r.dataset},{r.algorithm},{metric}_{r.source},{rendered}")
    return "\n".join(lines) + "\n"


def report_table(results: list[EvalResult], metadata: dict | None = None) -> str:
    """Human-readable blocks, one per (dataset, source), metrics as rows
    and algorithms as columns."""
    out: list[str] = []
    if metadata:
        out.append("# evaluation metadata")
        for key in sorted(metadata):
            out.append(f"#   {key}: {metadata[key]}")
        out.append("")
    groups: dict[tuple[str, str], list[EvalResult]] = {}
    for r in results:
        groups.setdefault((r.dataset, r.source), []).append(r)
    labels = {
        "accuracy": "accuracy [%]",
        "fpr": "fpr [%]",
        "fnr": "fnr [%]",
        "eval_time": "eval time [s]",
    }
    for (dataset_name, source), group in groups.items():
        algos = [r.algorithm for r in group]
        header = ["metric"] + algos
        rows = []
        for metric in METRIC_ROWS:
            decimals = 4 if metric == "eval_time" else 2
            cells = [_cell(getattr(r, metric), decimals) for r in group]
            rows.append([labels[metric]] + cells)
        widths = [
            max(len(header[i]), *(len(row[i]) for row in rows))
            for i in range(len(header))
        ]
        out.append(f"== {dataset_name or 'dataset'} ({source}) ==")
        out.append(
            "  ".join(header[i].ljust(widths[i]) for i in range(len(header)))
        )
        for row in rows:
            out.append(
                "  ".join(row[i].ljust(widths[i]) for i in range(len(header)))
            )
        out.append("")
    return "\n".join(out)
