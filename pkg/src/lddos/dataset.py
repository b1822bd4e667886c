"""Labeled feature datasets: merging, normalization, splits, folds, CSV.

Rows are float64 matrices over a named schema; labels are binary with
attack = 1.  Normalizers are fit strictly on training rows and applied
elsewhere, keeping every pipeline path leakage-free.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ClassTooSmall, NonNumeric, RaggedRow, SchemaMismatch
from .features import FEATURE_NAMES, FlowFeatures
from .utils import fmt_float, make_rng

LABEL_MAP = {"attack": 1, "legit": 0, "1": 1, "0": 0}


@dataclass
class Normalizer:
    """Fitted per-feature scaling: min-max by default, z-score optional."""

    kind: str  # "minmax" or "zscore"
    names: list[str]
    p1: np.ndarray  # per-feature min (minmax) or mean (zscore)
    p2: np.ndarray  # per-feature max (minmax) or std (zscore)

    def apply(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.float64)
        if self.kind == "minmax":
            span = self.p2 - self.p1
        else:
            span = self.p2.copy()
        safe = np.where(span == 0, 1.0, span)
        out = (rows - self.p1) / safe
        # constant features carry no information: map them to 0
        out[:, span == 0] = 0.0
        return out

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "names": list(self.names),
            "p1": [float(v) for v in self.p1],
            "p2": [float(v) for v in self.p2],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Normalizer":
        return cls(
            kind=d["kind"],
            names=list(d["names"]),
            p1=np.asarray(d["p1"], dtype=np.float64),
            p2=np.asarray(d["p2"], dtype=np.float64),
        )


def fit_normalizer(
    rows: np.ndarray, names: list[str], kind: str = "minmax"
) -> Normalizer:
    rows = np.asarray(rows, dtype=np.float64)
    if rows.size == 0:
        zero = np.zeros(len(names))
        return Normalizer(kind, list(names), zero, zero.copy())
    if kind == "minmax":
        return Normalizer(kind, list(names), rows.min(axis=0), rows.max(axis=0))
    if kind == "zscore":
        return Normalizer(kind, list(names), rows.mean(axis=0), rows.std(axis=0))
    raise ValueError(f"unknown normalizer kind {kind!r}")


@dataclass
class LabeledDataset:
    """Immutable-by-convention feature matrix with labels and provenance."""

    schema: list[str]
    rows: np.ndarray
    labels: np.ndarray
    provenance: list[str] = field(default_factory=list)
    normalization: Normalizer | None = None
    extra_columns: dict[str, list[str]] = field(default_factory=dict)

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        width = len(self.schema)
        if width == 0:
            # zero-width datasets carry no values; row count follows labels
            self.rows = np.zeros((len(self.labels), 0))
        else:
            self.rows = np.asarray(self.rows, dtype=np.float64).reshape(-1, width)
        if len(self.labels) != len(self.rows):
            raise SchemaMismatch(
                f"{len(self.rows)} rows vs {len(self.labels)} labels", self.schema
            )
        if not self.provenance:
            self.provenance = [""] * len(self.rows)

    def __len__(self) -> int:
        return len(self.rows)

    def class_counts(self) -> tuple[int, int]:
        """(legit, attack) row counts."""
        attack = int(np.sum(self.labels == 1))
        return len(self.labels) - attack, attack

    def subset(self, indices) -> "LabeledDataset":
        idx = np.asarray(indices, dtype=int)
        return LabeledDataset(
            schema=list(self.schema),
            rows=self.rows[idx],
            labels=self.labels[idx],
            provenance=[self.provenance[i] for i in idx],
            normalization=self.normalization,
        )

    def select_features(self, names: list[str]) -> "LabeledDataset":
        missing = [n for n in names if n not in self.schema]
        if missing:
            raise SchemaMismatch(f"features not in dataset: {missing}", missing)
        cols = [self.schema.index(n) for n in names]
        return LabeledDataset(
            schema=list(names),
            rows=self.rows[:, cols],
            labels=self.labels,
            provenance=list(self.provenance),
        )

    def normalized(self, normalizer: Normalizer) -> "LabeledDataset":
        if normalizer.names != self.schema:
            raise SchemaMismatch(
                "normalizer fitted on a different schema", normalizer.names
            )
        return LabeledDataset(
            schema=list(self.schema),
            rows=normalizer.apply(self.rows),
            labels=self.labels,
            provenance=list(self.provenance),
            normalization=normalizer,
        )


def from_features(
    features: list[FlowFeatures],
    labels: list[int],
    tag: str = "",
    names: list[str] | None = None,
) -> LabeledDataset:
    """Vectorize extracted flow features into a dataset."""
    if names is None:
        names = list(FEATURE_NAMES)
    rows = np.array([f.vector(names) for f in features], dtype=np.float64).reshape(
        -1, len(names)
    )
    return LabeledDataset(
        schema=names,
        rows=rows,
        labels=np.asarray(labels, dtype=np.int64),
        provenance=[tag] * len(rows),
    )


def merge(datasets: list[LabeledDataset], intersect: bool = False) -> LabeledDataset:
    """Concatenate datasets row-wise, preserving source order.

    Schemas must be identical unless `intersect`, which restricts to the
    shared columns in first-source order.
    """
    if not datasets:
        return LabeledDataset(schema=[], rows=np.zeros((0, 0)), labels=[])
    if intersect:
        shared = [
            n for n in datasets[0].schema
            if all(n in d.schema for d in datasets)
        ]
        datasets = [d.select_features(shared) for d in datasets]
    else:
        first = datasets[0].schema
        for d in datasets[1:]:
            if d.schema != first:
                diff = sorted(set(first) ^ set(d.schema)) or ["(column order)"]
                raise SchemaMismatch(f"schemas differ on: {diff}", diff)
    return LabeledDataset(
        schema=list(datasets[0].schema),
        rows=np.concatenate([d.rows for d in datasets], axis=0),
        labels=np.concatenate([d.labels for d in datasets]),
        provenance=[p for d in datasets for p in d.provenance],
    )


def _class_indices(labels: np.ndarray) -> list[np.ndarray]:
    return [np.flatnonzero(labels == cls) for cls in (0, 1)]


def split(
    dataset: LabeledDataset,
    train_fraction: float,
    stratified: bool = True,
    seed: int = 0,
) -> tuple[LabeledDataset, LabeledDataset]:
    """Deterministic train/test split, per-class exact to within one row
    when stratified."""
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must be in (0, 1)")
    rng = make_rng(seed, "split")
    n = len(dataset)
    if stratified:
        train_idx = []
        test_idx = []
        for idx in _class_indices(dataset.labels):
            if len(idx) == 0:
                raise ClassTooSmall("both classes required for a stratified split")
            perm = rng.permutation(idx)
            take = int(round(train_fraction * len(idx)))
            train_idx.append(perm[:take])
            test_idx.append(perm[take:])
        train = np.sort(np.concatenate(train_idx))
        test = np.sort(np.concatenate(test_idx))
    else:
        perm = rng.permutation(n)
        take = int(round(train_fraction * n))
        train = np.sort(perm[:take])
        test = np.sort(perm[take:])
    return dataset.subset(train), dataset.subset(test)


def stratified_kfold(
    dataset: LabeledDataset, k: int, seed: int = 0
) -> list[np.ndarray]:
    """k disjoint covering folds; per-fold class counts within one of
    proportional, and fold sizes within one of n/k."""
    if k < 2:
        raise ValueError("k must be >= 2")
    rng = make_rng(seed, "kfold")
    folds: list[list[int]] = [[] for _ in range(k)]
    start = 0  # rotate which folds receive remainder rows across classes
    for idx in _class_indices(dataset.labels):
        if len(idx) < k:
            raise ClassTooSmall(f"class with {len(idx)} rows cannot fill {k} folds")
        perm = rng.permutation(idx)
        base, extra = divmod(len(idx), k)
        pos = 0
        for j in range(k):
            take = base + (1 if j < extra else 0)
            folds[(start + j) % k].extend(perm[pos : pos + take].tolist())
            pos += take
        start = (start + extra) % k
    return [np.sort(np.asarray(f, dtype=int)) for f in folds]


# ---------------------------------------------------------------------------
# persistence

def write_csv(path: str, dataset: LabeledDataset, meta: dict | None = None) -> None:
    """Write features + label (+ provenance, + preserved extras); values
    serialized so they parse back to identical doubles."""
    extras = list(dataset.extra_columns)
    has_prov = any(dataset.provenance)
    header = list(dataset.schema) + extras
    if has_prov:
        header.append("provenance")
    header.append("label")
    tmp = f"{path}.tmp"
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(len(dataset)):
            row = [fmt_float(v) for v in dataset.rows[i]]
            row += [dataset.extra_columns[c][i] for c in extras]
            if has_prov:
                row.append(dataset.provenance[i])
            row.append(int(dataset.labels[i]))
            w.writerow(row)
    os.replace(tmp, path)
    if meta is not None or dataset.normalization is not None:
        payload = dict(meta or {})
        if dataset.normalization is not None:
            payload["normalization"] = dataset.normalization.to_dict()
        write_meta(f"{path}.meta.json", payload)


def write_meta(path: str, payload: dict) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def read_csv(path: str, schema: list[str] | None = None) -> LabeledDataset:
    """Load a feature CSV.

    With an explicit schema, only those columns (all required) become
    features and any other column is preserved as text; without one,
    every column except `label` and `provenance` must be numeric.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaMismatch("empty file: no header row", [])
        if "label" not in header:
            raise SchemaMismatch("no `label` column", header)
        label_col = header.index("label")
        prov_col = header.index("provenance") if "provenance" in header else None
        if schema is not None:
            missing = [n for n in schema if n not in header]
            if missing:
                raise SchemaMismatch(f"missing feature columns: {missing}", missing)
            feat_names = list(schema)
        else:
            feat_names = [
                h for i, h in enumerate(header)
                if i != label_col and i != prov_col
            ]
        feat_cols = [header.index(n) for n in feat_names]
        feat_set = set(feat_cols) | {label_col} | ({prov_col} if prov_col is not None else set())
        extra_cols = [i for i in range(len(header)) if i not in feat_set]

        rows: list[list[float]] = []
        labels: list[int] = []
        prov: list[str] = []
        extras: dict[str, list[str]] = {header[i]: [] for i in extra_cols}
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise RaggedRow(line_no, len(header), len(row))
            vals = []
            for c in feat_cols:
                try:
                    vals.append(float(row[c]))
                except ValueError:
                    raise NonNumeric(line_no, header[c], row[c]) from None
            raw = row[label_col].strip()
            if raw not in LABEL_MAP:
                raise NonNumeric(line_no, "label", raw)
            rows.append(vals)
            labels.append(LABEL_MAP[raw])
            prov.append(row[prov_col] if prov_col is not None else "")
            for i in extra_cols:
                extras[header[i]].append(row[i])

    return LabeledDataset(
        schema=feat_names,
        rows=np.asarray(rows, dtype=np.float64).reshape(-1, len(feat_names)),
        labels=np.asarray(labels, dtype=np.int64),
        provenance=prov,
        extra_columns=extras,
    )
