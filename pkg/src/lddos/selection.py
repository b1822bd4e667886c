"""Recursive feature elimination with cross-validated scoring, plus
Pearson correlation analysis and rank-aware pruning."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .classifiers.linear import LinearSVM
from .dataset import LabeledDataset, stratified_kfold
from .errors import DegenerateWeights, SchemaMismatch
from .utils import derive_seed, fmt_float


@dataclass
class SelectionReport:
    """Outcome of one elimination run.

    ranking lists features in elimination order (first eliminated is
    least important, last survivor most important); accuracy_curve holds
    (feature_count, mean CV accuracy) pairs, one per cardinality."""

    schema: list[str]
    ranking: list[str]
    accuracy_curve: list[tuple[int, float]]
    chosen: list[str]
    correlation: np.ndarray
    metadata: dict = field(default_factory=dict)


def correlation_matrix(rows: np.ndarray) -> np.ndarray:
    """Pearson r per feature pair; constant columns correlate 0 with
    everything else and 1 with themselves."""
    X = np.asarray(rows, dtype=np.float64)
    n, f = X.shape
    centered = X - X.mean(axis=0)
    norms = np.sqrt(np.einsum("ij,ij->j", centered, centered))
    safe = np.where(norms == 0, 1.0, norms)
    r = (centered.T @ centered) / np.outer(safe, safe)
    r[norms == 0, :] = 0.0
    r[:, norms == 0] = 0.0
    np.fill_diagonal(r, 1.0)
    return np.clip(r, -1.0, 1.0)


def _fold_accuracy_and_weights(dataset, cols, folds, seed, hyper):
    """Mean held-out accuracy and mean |weight| per column for the
    linear-margin estimator across fixed folds."""
    accs = []
    weights = np.zeros(len(cols))
    all_idx = np.arange(len(dataset))
    names = [dataset.schema[c] for c in cols]
    for fold_no, test_idx in enumerate(folds):
        train_mask = np.ones(len(dataset), dtype=bool)
        train_mask[test_idx] = False
        train_idx = all_idx[train_mask]
        Xtr = dataset.rows[np.ix_(train_idx, cols)]
        Xte = dataset.rows[np.ix_(test_idx, cols)]
        model = LinearSVM.fit(
            Xtr, dataset.labels[train_idx], names, hyper,
            seed=derive_seed(seed, "rfecv-fold", fold_no),
        )
        pred = model.predict(Xte)
        accs.append(float(np.mean(pred == dataset.labels[test_idx])))
        weights += model.feature_weights()
    return float(np.mean(accs)), weights / len(folds)


def rfecv(
    dataset: LabeledDataset,
    k: int = 10,
    seed: int = 0,
    estimator_hyperparameters: dict | None = None,
    plateau_tolerance: float = 0.001,
) -> SelectionReport:
    """Eliminate one feature per step by smallest mean |weight| (ties
    remove the higher schema index); chosen is the smallest cardinality
    whose accuracy reaches the curve maximum within the tolerance.

    The same stratified folds are reused at every step so curve points
    differ only in the feature set.
    """
    if len(dataset.schema) == 0:
        raise SchemaMismatch("dataset has no features to select from", [])
    folds = stratified_kfold(dataset, k, seed)
    remaining = list(range(len(dataset.schema)))
    eliminated: list[int] = []
    curve: dict[int, float] = {}

    while remaining:
        acc, weights = _fold_accuracy_and_weights(
            dataset, remaining, folds, seed, estimator_hyperparameters
        )
        curve[len(remaining)] = acc
        if len(remaining) == 1:
            eliminated.append(remaining.pop())
            break
        if np.all(weights == 0):
            raise DegenerateWeights(
                "all estimator weights are zero; features look constant"
            )
        # smallest mean |weight|; reversed argmin keeps the LAST minimum,
        # i.e. the higher schema index goes first on ties
        drop_pos = len(weights) - 1 - int(np.argmin(weights[::-1]))
        eliminated.append(remaining.pop(drop_pos))

    best = max(curve.values())
    chosen_n = min(n for n, a in curve.items() if a >= best - plateau_tolerance)
    # the features still standing when cardinality was chosen_n
    chosen_cols = sorted(eliminated[len(eliminated) - chosen_n :])
    report = SelectionReport(
        schema=list(dataset.schema),
        ranking=[dataset.schema[c] for c in eliminated],
        accuracy_curve=sorted(curve.items()),
        chosen=[dataset.schema[c] for c in chosen_cols],
        correlation=correlation_matrix(dataset.rows),
        metadata={"k": k, "seed": seed, "estimator": "svm-linear"},
    )
    return report


def prune_correlated(report: SelectionReport, threshold: float = 0.95) -> list[str]:
    """Drop the lower-ranked member of each highly correlated pair among
    the chosen features; the higher-ranked member always survives."""
    idx = {name: i for i, name in enumerate(report.schema)}
    # later elimination = higher rank
    rank = {name: i for i, name in enumerate(report.ranking)}
    ordered = sorted(report.chosen, key=lambda n: rank[n], reverse=True)
    kept: list[str] = []
    for name in ordered:
        clash = any(
            abs(report.correlation[idx[name], idx[other]]) >= threshold
            for other in kept
        )
        if not clash:
            kept.append(name)
    return sorted(kept, key=lambda n: idx[n])


# ---------------------------------------------------------------------------
# report text format

def serialize_report(report: SelectionReport) -> str:
    lines = ["[metadata]"]
    for key in sorted(report.metadata):
        lines.append(f"{key}={report.metadata[key]}")
    lines.append("[chosen]")
    lines.extend(report.chosen)
    lines.append("[ranking]")
    lines.extend(report.ranking)
    lines.append("[curve]")
    lines.append("n_features,accuracy")
    for n, acc in report.accuracy_curve:
        lines.append(f"{n},{fmt_float(acc)}")
    lines.append("[correlation]")
    lines.append("," + ",".join(report.schema))
    for i, name in enumerate(report.schema):
        lines.append(
            name + "," + ",".join(fmt_float(v) for v in report.correlation[i])
        )
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> SelectionReport:
    sections: dict[str, list[str]] = {}
    current: list[str] | None = None
    for line in text.splitlines():
        if line.startswith("[") and line.endswith("]"):
            current = sections.setdefault(line[1:-1], [])
        elif current is not None and line:
            current.append(line)
    schema_header = sections.get("correlation", [])
    schema = schema_header[0].split(",")[1:] if schema_header else []
    corr_rows = [
        [float(v) for v in line.split(",")[1:]] for line in schema_header[1:]
    ]
    curve = []
    for line in sections.get("curve", [])[1:]:
        n, acc = line.split(",")
        curve.append((int(n), float(acc)))
    metadata = {}
    for line in sections.get("metadata", []):
        key, _, value = line.partition("=")
        metadata[key] = value
    return SelectionReport(
        schema=schema,
        ranking=sections.get("ranking", []),
        accuracy_curve=curve,
        chosen=sections.get("chosen", []),
        correlation=np.asarray(corr_rows, dtype=np.float64)
        if corr_rows
        else np.zeros((0, 0)),
        metadata=metadata,
    )
