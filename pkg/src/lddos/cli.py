"""Command-line front end.

Every subcommand is a thin client over the HTTP service; by default the
service runs in-process, with --server pointing at a remote instance.
Exit codes: 0 success, 1 runtime failure, 2 usage error."""

from __future__ import annotations

import argparse
import json
import sys

import httpx

from .client import ServiceClient


def _parse_hyper(pairs: list[str] | None) -> dict | None:
    if not pairs:
        return None
    hyper = {}
    for pair in pairs:
        key, sep, raw = pair.partition("=")
        if not sep or not key:
            raise argparse.ArgumentTypeError(
                f"--hyper expects key=value, got {pair!r}"
            )
        try:
            hyper[key] = json.loads(raw)
        except json.JSONDecodeError:
            hyper[key] = raw
    return hyper


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lddos",
        description="Detect low-rate application-layer DoS flows in pcap captures.",
    )
    parser.add_argument(
        "--server",
        default=None,
        help="base URL of a running service; default runs the pipeline in-process",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a labeled capture from a profile spec")
    p.add_argument("--spec", required=True, help="JSON file of traffic profiles")
    p.add_argument("--seed", type=int, default=None, help="interleave seed override")
    p.add_argument("--out", required=True, help="output pcap path")
    p.add_argument("--labels", default=None, help="output label sidecar CSV")

    p = sub.add_parser("extract", help="extract per-connection features from a capture")
    p.add_argument("--capture", required=True)
    p.add_argument("--labels", default=None, help="label sidecar to join on")
    p.add_argument("--out", required=True, help="output features CSV")
    p.add_argument("--include-partial", action="store_true",
                   help="keep connections whose SYN was not captured")
    p.add_argument("--idle-timeout", type=float, default=300.0)

    p = sub.add_parser("merge", help="merge feature CSVs into one dataset")
    p.add_argument("--in", dest="inputs", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--intersect", action="store_true",
                   help="keep the common feature subset instead of requiring equal schemas")

    p = sub.add_parser("select", help="rank features by recursive elimination")
    p.add_argument("--data", required=True)
    p.add_argument("--method", default="rfecv", choices=["rfecv"])
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", required=True, help="output selection report path")
    p.add_argument("--preset", default=None,
                   help="restrict candidates to a named preset (e.g. table3)")
    p.add_argument("--normalize", default="minmax",
                   choices=["minmax", "zscore", "none"])

    p = sub.add_parser("train", help="fit a classifier and save it")
    p.add_argument("--algo", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--features", default=None,
                   help="selection report path, preset name, or comma list")
    p.add_argument("--model", required=True, help="output model path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hyper", action="append", default=None, metavar="KEY=VALUE",
                   help="hyperparameter override, repeatable")
    p.add_argument("--normalize", default="minmax",
                   choices=["minmax", "zscore", "none"])

    p = sub.add_parser("evaluate", help="cross-validate and holdout-test classifiers")
    p.add_argument("--algos", default="all", help='"all" or comma-separated names')
    p.add_argument("--data", required=True)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--train-fraction", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", required=True, help="output report CSV path")
    p.add_argument("--features", default=None)
    p.add_argument("--normalize", default="minmax",
                   choices=["minmax", "zscore", "none"])
    p.add_argument("--hyper", action="append", default=None, metavar="KEY=VALUE")
    p.add_argument("--no-timing", action="store_true",
                   help="skip wall-clock timing for byte-stable reports")
    p.add_argument("--name", default=None, help="dataset name used in the report")

    p = sub.add_parser("classify", help="label the flows of a capture with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--capture", required=True)
    p.add_argument("--out", required=True, help="output verdicts CSV")
    p.add_argument("--include-partial", action="store_true")
    p.add_argument("--idle-timeout", type=float, default=300.0)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def _request(args: argparse.Namespace) -> tuple[str, dict]:
    if args.command == "synth":
        with open(args.spec, "r", encoding="utf-8") as fh:
            spec = json.load(fh)
        return "/synth", {
            "spec": spec, "out": args.out, "labels": args.labels, "seed": args.seed,
        }
    if args.command == "extract":
        return "/extract", {
            "capture": args.capture, "out": args.out, "labels": args.labels,
            "include_partial": args.include_partial, "idle_timeout": args.idle_timeout,
        }
    if args.command == "merge":
        return "/merge", {
            "inputs": args.inputs, "out": args.out, "intersect": args.intersect,
        }
    if args.command == "select":
        return "/select", {
            "data": args.data, "report": args.report, "method": args.method,
            "folds": args.folds, "seed": args.seed, "preset": args.preset,
            "normalization": args.normalize,
        }
    if args.command == "train":
        return "/train", {
            "algo": args.algo, "data": args.data, "model": args.model,
            "features": args.features, "seed": args.seed,
            "hyperparameters": _parse_hyper(args.hyper),
            "normalization": args.normalize,
        }
    if args.command == "evaluate":
        return "/evaluate", {
            "algos": args.algos, "data": args.data, "report": args.report,
            "folds": args.folds, "train_fraction": args.train_fraction,
            "seed": args.seed, "features": args.features,
            "normalization": args.normalize,
            "hyperparameters": _parse_hyper(args.hyper),
            "with_timing": not args.no_timing, "dataset_name": args.name,
        }
    if args.command == "classify":
        return "/classify", {
            "model": args.model, "capture": args.capture, "out": args.out,
            "include_partial": args.include_partial, "idle_timeout": args.idle_timeout,
        }
    raise AssertionError(args.command)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except argparse.ArgumentTypeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.command == "serve":
        import uvicorn

        from .service.app import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return 0

    try:
        path, body = _request(args)
    except argparse.ArgumentTypeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    try:
        with ServiceClient(args.server) as client:
            response = client.post(path, body)
    except httpx.HTTPError as exc:
        print(f"error: cannot reach service: {exc}", file=sys.stderr)
        return 1

    if response.status_code == 422:
        print(f"error: invalid request: {response.text}", file=sys.stderr)
        return 2
    if response.status_code != 200:
        try:
            detail = response.json()
            message = f"{detail.get('error', 'error')}: {detail.get('detail', '')}"
        except ValueError:
            message = response.text
        print(f"error: {message}", file=sys.stderr)
        return 1

    print(json.dumps(response.json(), indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
