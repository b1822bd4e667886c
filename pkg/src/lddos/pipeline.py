"""High-level operations behind the service endpoints and the CLI:
each takes plain paths/params and returns a JSON-able summary."""

from __future__ import annotations

import json
import os

import numpy as np

from . import classifiers, synth
from .dataset import (
    LabeledDataset,
    fit_normalizer,
    merge,
    read_csv,
    write_csv,
)
from .errors import InvalidProfile, SchemaMismatch
from .evaluate import cross_validate, holdout_evaluate, report_csv, report_table
from .features import FEATURE_NAMES, extract_features, resolve_feature_names
from .flows import AssemblyCounters, assemble
from .pcap import DecodeCounters, iter_tcp_segments, write_capture_file
from .selection import parse_report, prune_correlated, rfecv, serialize_report
from .utils import atomic_write_text, derive_seed, fmt_float

LABEL_NAMES = {0: "legit", 1: "attack"}


# ---------------------------------------------------------------------------
# synth

def load_profiles(spec: dict | list, base_seed: int | None = None):
    """Accept either a bare list of profile dicts or an object with
    "profiles" and an optional "interleave_seed". Profiles without an
    explicit seed get one derived from the base seed and their index."""
    if isinstance(spec, list):
        entries, interleave = spec, None
    elif isinstance(spec, dict):
        entries = spec.get("profiles")
        interleave = spec.get("interleave_seed")
        if not isinstance(entries, list):
            raise InvalidProfile('spec must contain a "profiles" list')
    else:
        raise InvalidProfile("spec must be a JSON object or list")
    if base_seed is not None:
        interleave = base_seed
    elif interleave is None:
        interleave = 0
    profiles = []
    for idx, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise InvalidProfile(f"profile {idx} is not an object")
        entry = dict(entry)
        if "seed" not in entry:
            entry["seed"] = derive_seed(interleave, "profile", idx)
        profiles.append(synth.profile_from_dict(entry))
    return profiles, int(interleave)


def run_synth(spec: dict | list, out: str, labels_out: str | None, seed: int | None = None) -> dict:
    profiles, interleave = load_profiles(spec, seed)
    records, labels = synth.corpus(profiles, interleave_seed=interleave)
    write_capture_file(out, records)
    if labels_out:
        synth.write_labels(labels_out, labels)
    return {
        "capture": out,
        "labels": labels_out,
        "packets": len(records),
        "flows": len(labels),
        "attack_flows": sum(1 for lab in labels if lab.label == "attack"),
        "interleave_seed": interleave,
    }


# ---------------------------------------------------------------------------
# extract

def _label_index(labels):
    index: dict[tuple, list] = {}
    for lab in labels:
        key = (lab.src_ip, lab.src_port, lab.dst_ip, lab.dst_port)
        index.setdefault(key, []).append(lab)
    return index


def _match_label(index, conn):
    init, resp = conn.initiator, conn.responder
    candidates = index.get((init[0], init[1], resp[0], resp[1]), [])
    best = None
    for lab in candidates:
        gap = abs(lab.open_time - conn.open_time)
        if gap <= 1e-3 and (best is None or gap < best[0]):
            best = (gap, lab)
    return best[1] if best else None


def extract_rows(
    capture_path: str,
    labels_path: str | None = None,
    include_partial: bool = False,
    idle_timeout: float = 300.0,
    feature_names: list[str] | None = None,
):
    """Decode, assemble, and featurize one capture.

    Returns (rows, labels_or_None, idents, summary); idents carry the
    initiator 4-tuple and open time per emitted row."""
    names = feature_names or FEATURE_NAMES
    decode_counters = DecodeCounters()
    with open(capture_path, "rb") as fh:
        segments = list(iter_tcp_segments(fh, decode_counters))
    assembly_counters = AssemblyCounters()
    connections = assemble(segments, idle_timeout=idle_timeout, counters=assembly_counters)

    index = None
    if labels_path is not None:
        index = _label_index(synth.read_labels(labels_path))

    rows, labels, idents = [], [], []
    skipped_partial = 0
    unlabeled = 0
    for conn in connections:
        if not conn.saw_syn and not include_partial:
            skipped_partial += 1
            continue
        feats = extract_features(conn)
        label = None
        if index is not None:
            match = _match_label(index, conn)
            if match is None:
                unlabeled += 1
                continue
            label = 1 if match.label == "attack" else 0
        rows.append(feats.vector(names))
        labels.append(label)
        idents.append(
            (
                conn.initiator[0],
                conn.initiator[1],
                conn.responder[0],
                conn.responder[1],
                conn.open_time,
            )
        )
    matrix = (
        np.asarray(rows, dtype=np.float64)
        if rows
        else np.zeros((0, len(names)), dtype=np.float64)
    )
    summary = {
        "packets": decode_counters.total,
        "tcp_segments": decode_counters.tcp,
        "malformed": decode_counters.malformed,
        "fragments_dropped": decode_counters.fragments_dropped,
        "connections": assembly_counters.connections,
        "segments_after_close": assembly_counters.segments_after_close,
        "syn_retransmits": assembly_counters.syn_retransmits,
        "skipped_partial": skipped_partial,
        "unlabeled": unlabeled,
        "rows": len(rows),
    }
    label_arr = None if index is None else np.asarray(labels, dtype=np.int64)
    return matrix, label_arr, idents, summary


def run_extract(
    capture: str,
    out: str,
    labels: str | None = None,
    include_partial: bool = False,
    idle_timeout: float = 300.0,
) -> dict:
    matrix, label_arr, _, summary = extract_rows(
        capture, labels, include_partial, idle_timeout
    )
    if label_arr is not None:
        dataset = LabeledDataset(
            schema=list(FEATURE_NAMES), rows=matrix, labels=label_arr
        )
        write_csv(out, dataset, meta={"source": os.path.basename(capture), **summary})
    else:
        lines = [",".join(FEATURE_NAMES)]
        for row in matrix:
            lines.append(",".join(fmt_float(v) for v in row))
        atomic_write_text(out, "\n".join(lines) + "\n")
    summary["out"] = out
    return summary


# ---------------------------------------------------------------------------
# merge / select

def run_merge(inputs: list[str], out: str, intersect: bool = False) -> dict:
    datasets = [read_csv(path) for path in inputs]
    merged = merge(datasets, intersect=intersect)
    write_csv(out, merged, meta={"sources": [os.path.basename(p) for p in inputs]})
    legit, attack = merged.class_counts()
    return {"out": out, "rows": len(merged), "legit": legit, "attack": attack}


def run_select(
    data: str,
    report_path: str,
    method: str = "rfecv",
    folds: int = 10,
    seed: int = 0,
    preset: str | None = None,
    normalization: str = "minmax",
) -> dict:
    if method != "rfecv":
        raise ValueError(f"unknown selection method: {method!r}")
    dataset = read_csv(data)
    if preset:
        dataset = dataset.select_features(resolve_feature_names(preset))
    if normalization != "none":
        norm = fit_normalizer(dataset.rows, dataset.schema, normalization)
        dataset = dataset.normalized(norm)
    report = rfecv(dataset, k=folds, seed=seed)
    atomic_write_text(report_path, serialize_report(report))
    pruned = prune_correlated(report)
    best_n, best_acc = max(report.accuracy_curve, key=lambda p: (p[1], -p[0]))
    return {
        "report": report_path,
        "chosen": report.chosen,
        "pruned": pruned,
        "best_accuracy": best_acc,
        "best_cardinality": best_n,
    }


# ---------------------------------------------------------------------------
# train / evaluate / classify

def resolve_features_arg(value: str | None) -> list[str] | None:
    """A --features value is a selection-report path, a preset name, or
    a comma-separated list; None means the full schema."""
    if value is None or value == "all":
        return None
    if os.path.exists(value):
        with open(value, "r", encoding="utf-8") as fh:
            chosen = parse_report(fh.read()).chosen
        if not chosen:
            raise SchemaMismatch(f"selection report {value} lists no features", [])
        return chosen
    return resolve_feature_names(value)


def run_train(
    algo: str,
    data: str,
    model_out: str,
    features: str | None = None,
    seed: int = 0,
    hyperparameters: dict | None = None,
    normalization: str = "minmax",
) -> dict:
    dataset = read_csv(data)
    names = resolve_features_arg(features)
    if names is not None:
        dataset = dataset.select_features(names)
    rows = dataset.rows
    norm = None
    if normalization != "none":
        norm = fit_normalizer(rows, dataset.schema, normalization)
        rows = norm.apply(rows)
    model = classifiers.fit(
        algo, rows, dataset.labels, dataset.schema, hyperparameters, seed=seed
    )
    model.normalization = norm
    classifiers.save_model(model_out, model)
    train_acc = 100.0 * float(np.mean(model.predict(rows) == dataset.labels))
    return {
        "model": model_out,
        "algorithm": algo,
        "features": list(dataset.schema),
        "rows": len(dataset),
        "train_accuracy": train_acc,
        "seed": seed,
    }


def run_evaluate(
    algos: list[str] | str,
    data: str,
    report_out: str,
    folds: int = 10,
    train_fraction: float = 0.5,
    seed: int = 0,
    features: str | None = None,
    normalization: str = "minmax",
    hyperparameters: dict | None = None,
    with_timing: bool = True,
    dataset_name: str | None = None,
) -> dict:
    if isinstance(algos, str):
        algos = (
            list(classifiers.ALGORITHMS)
            if algos == "all"
            else [a.strip() for a in algos.split(",") if a.strip()]
        )
    for algo in algos:
        if algo not in classifiers.REGISTRY:
            raise ValueError(f"unknown algorithm: {algo!r}")
    dataset = read_csv(data)
    names = resolve_features_arg(features)
    if names is not None:
        dataset = dataset.select_features(names)
    name = dataset_name or os.path.splitext(os.path.basename(data))[0]

    results = []
    for algo in algos:
        results.append(
            cross_validate(
                dataset, algo, hyperparameters, k=folds, seed=seed,
                normalization=normalization, dataset_name=name,
            )
        )
    for algo in algos:
        results.append(
            holdout_evaluate(
                dataset, algo, hyperparameters, train_fraction, seed=seed,
                normalization=normalization, dataset_name=name,
                with_timing=with_timing,
            )
        )
    metadata = {
        "dataset": name,
        "rows": len(dataset),
        "algorithms": ",".join(algos),
        "folds": folds,
        "train_fraction": train_fraction,
        "seed": seed,
        "normalization": normalization,
        "features": ",".join(dataset.schema),
    }
    csv_text = report_csv(results)
    table_text = report_table(results, metadata)
    atomic_write_text(report_out, csv_text)
    table_path = os.path.splitext(report_out)[0] + ".txt"
    atomic_write_text(table_path, table_text)
    meta_doc = dict(metadata)
    meta_doc["per_fold"] = {
        r.algorithm: r.fold_metrics for r in results if r.source == "cv"
    }
    atomic_write_text(
        report_out + ".meta.json",
        json.dumps(meta_doc, indent=2, sort_keys=True) + "\n",
    )
    summary = {"report": report_out, "table": table_path, "results": []}
    for r in results:
        summary["results"].append(
            {
                "dataset": r.dataset,
                "algorithm": r.algorithm,
                "source": r.source,
                "accuracy": r.accuracy,
                "fpr": r.fpr,
                "fnr": r.fnr,
                "eval_time": r.eval_time,
                "confusion": list(r.confusion),
            }
        )
    return summary


def run_classify(
    model_path: str,
    capture: str,
    out: str,
    include_partial: bool = False,
    idle_timeout: float = 300.0,
) -> dict:
    model = classifiers.load_model(model_path)
    unknown = [n for n in model.schema if n not in set(FEATURE_NAMES)]
    if unknown:
        raise SchemaMismatch(
            "model was trained on features the extractor does not produce",
            unknown,
        )
    matrix, _, idents, summary = extract_rows(
        capture,
        include_partial=include_partial,
        idle_timeout=idle_timeout,
        feature_names=list(model.schema),
    )
    rows = model.normalization.apply(matrix) if model.normalization else matrix
    if len(rows):
        pred = model.predict(rows)
        scores = model.scores(rows)
    else:
        pred = np.zeros(0, dtype=np.int64)
        scores = None
    lines = ["src_ip,src_port,dst_ip,dst_port,open_time,label,score"]
    attack_count = 0
    for i, ident in enumerate(idents):
        label = LABEL_NAMES[int(pred[i])]
        attack_count += int(pred[i])
        score = "" if scores is None else fmt_float(scores[i])
        lines.append(
            f"{ident[0]},{ident[1]},{ident[2]},{ident[3]},"
            f"{fmt_float(ident[4])},{label},{score}"
        )
    atomic_write_text(out, "\n".join(lines) + "\n")
    summary.update({"out": out, "flows": len(idents), "attack": attack_count})
    return summary
