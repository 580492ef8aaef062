"""Command-line interface: ingest, reduce, predict, evaluate, analyze.

Exit codes: 0 success, 2 data error (bad store, corrupt files, degenerate
inputs), 64 usage error. Every output file or stream starts with a comment
row recording the tool version, the seed in play, and a hash of the full
configuration, so identical invocations produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import __version__
from .consistency import consistency_scatter, emit_scatter, si_predictor_eval
from .errors import DataError
from .evaluation import WORKERS_ENV, run_protocol
from .prediction import Aggregation, predict
from .retrieval import RetrievalConfig, RetrievalMode
from .store import (
    FORMAT_VERSION,
    load_store,
    load_store_files,
    reduce_features,
    save_store,
)

EXIT_OK = 0
EXIT_DATA = 2
EXIT_USAGE = 64

_METRICS = ["cosine", "euclidean", "manhattan", "js"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _config_hash(args: argparse.Namespace) -> str:
    # the hash covers everything that shapes the result; where the result is
    # written does not belong in it
    payload = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out")}
    blob = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _preamble(args: argparse.Namespace, seed=None, extra: dict | None = None) -> list[str]:
    lines = [f"# rfiqa {__version__} seed={'-' if seed is None else seed} config={_config_hash(args)}"]
    if extra:
        lines.append("# " + json.dumps(extra, sort_keys=True))
    return lines


def _retrieval_config(args: argparse.Namespace, exclude_group=None) -> RetrievalConfig:
    return RetrievalConfig(
        k_prime=args.k_prime,
        k_double_prime=args.k_double_prime,
        metric=args.metric,
        mode=RetrievalMode.HIERARCHICAL if args.mode == "hierarchical" else RetrievalMode.FLAT_CONCAT,
        exclude_group=exclude_group,
    )


def _add_retrieval_flags(p: argparse.ArgumentParser):
    p.add_argument("--k-prime", type=int, default=4, help="pristine groups to retrieve (k')")
    p.add_argument("--k-double-prime", type=int, default=1, help="instances per group (k'')")
    p.add_argument("--metric", choices=_METRICS, default="cosine", help="feature distance metric")
    p.add_argument(
        "--mode",
        choices=["hierarchical", "flat"],
        default="hierarchical",
        help="two-stage retrieval, or a single scan over concatenated features",
    )
    p.add_argument(
        "--aggregate",
        choices=["simple", "weighted"],
        default="weighted",
        help="how retrieved opinion scores combine into one prediction",
    )


def cmd_ingest(args) -> int:
    store = load_store_files(args.manifest, args.vectors)
    save_store(store, args.out)
    n_dist = len(store.distorted_record_ids)
    print(
        f"ingested {len(store)} records ({n_dist} distorted) in {store.n_groups} groups; "
        f"semantic_dim={store.manifest.semantic_dim} "
        f"distortion_dim={store.manifest.distortion_dim} "
        f"reduction_factor={store.manifest.reduction_factor}"
    )
    return EXIT_OK


def cmd_reduce(args) -> int:
    store = load_store(args.store)
    reduced = reduce_features(store, args.factor)
    save_store(reduced, args.out)
    print(
        f"reduced {args.factor}x: semantic_dim {store.manifest.semantic_dim} -> "
        f"{reduced.manifest.semantic_dim}, distortion_dim "
        f"{store.manifest.distortion_dim} -> {reduced.manifest.distortion_dim}"
    )
    return EXIT_OK


def _load_query(args, store):
    if args.query_id:
        rec = store.record(args.query_id)
        return args.query_id, rec.semantic_vec, rec.distortion_vec
    with open(args.query_features, "r", encoding="utf-8") as f:
        doc = json.load(f)
    return doc.get("query_id", "query"), doc["semantic"], doc["distortion"]


def cmd_predict(args) -> int:
    store = load_store(args.store)
    query_id, qs, qd = _load_query(args, store)
    config = _retrieval_config(args, exclude_group=args.exclude_group)
    result = predict(store, qs, qd, config, Aggregation(args.aggregate))
    out = sys.stdout
    for line in _preamble(args):
        print(line, file=out)
    print("query_id,score", file=out)
    print(f"{query_id},{result.score!r}", file=out)
    print("record_id,group_id,d_s,d_d,mos", file=out)
    for inst in result.instances:
        print(f"{inst.record_id},{inst.group_id},{inst.d_s!r},{inst.d_d!r},{inst.mos!r}", file=out)
    return EXIT_OK


def _fmt(value) -> str:
    return "" if value is None else repr(value)


def cmd_evaluate(args) -> int:
    store = load_store(args.store)
    config = _retrieval_config(args)
    report = run_protocol(
        store,
        config,
        Aggregation(args.aggregate),
        train_fraction=args.train_fraction,
        n_repeats=args.repeats,
        base_seed=args.seed,
        fit_logistic=args.fit_logistic,
        per_distortion_seed=args.seed if args.per_distortion else None,
        pool_fraction=args.pool_fraction,
    )
    lines = _preamble(args, seed=args.seed, extra=report.protocol)
    lines.append(f"# failed_repeats={report.failed_repeats}")
    cols = "row,key,n_test,srocc,plcc,rmse"
    if args.fit_logistic:
        cols += ",plcc_fitted,rmse_fitted"
    lines.append(cols)
    for rep in report.repeats:
        row = f"repeat,{rep.seed},{rep.n_test},{rep.srocc!r},{rep.plcc!r},{rep.rmse!r}"
        if args.fit_logistic:
            row += f",{_fmt(rep.plcc_fitted)},{_fmt(rep.rmse_fitted)}"
        lines.append(row)
    med = f"median,,,{report.median_srocc!r},{report.median_plcc!r},{report.median_rmse!r}"
    if args.fit_logistic:
        med += f",{_fmt(report.median_plcc_fitted)},{_fmt(report.median_rmse_fitted)}"
    lines.append(med)
    if report.per_distortion is not None:
        for dtype, value in report.per_distortion.items():
            row = f"distortion,{dtype},,{value!r},,"
            if args.fit_logistic:
                row += ",,"
            lines.append(row)
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}: median srocc {report.median_srocc!r}, plcc {report.median_plcc!r}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_analyze(args) -> int:
    store = load_store(args.store)
    points = consistency_scatter(store, args.top_n)
    if not points:
        print("no group pairs with enough aligned cells", file=sys.stderr)
        return EXIT_DATA
    emit_scatter(points, args.out, preamble=_preamble(args))
    print(f"wrote {args.out}: {len(points)} pairs")
    if args.si_pairing:
        with open(args.si_pairing, "r", encoding="utf-8") as f:
            pairing = json.load(f)
        stats = si_predictor_eval(store, pairing)
        print("si_srocc,si_plcc,si_rmse")
        print(f"{stats['srocc']!r},{stats['plcc']!r},{stats['rmse']!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="rfiqa",
        description=(
            "Blind image-quality prediction by nearest-neighbor retrieval over "
            "an annotated feature store."
        ),
        epilog=(
            f"Store directories hold manifest.json plus vectors.bin "
            f"(magic RFIQAFS1, format version {FORMAT_VERSION}, packed little-endian "
            f"float32 vectors). Set {WORKERS_ENV} to parallelize evaluate repeats; "
            f"outputs are identical at any worker count."
        ),
    )
    parser.add_argument("--version", action="version", version=f"rfiqa {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a manifest/vector pair and write a canonical store")
    p.add_argument("--manifest", required=True, help="path to manifest.json")
    p.add_argument("--vectors", required=True, help="path to vectors.bin")
    p.add_argument("--out", required=True, help="output store directory")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("reduce", help="max-pool every stored vector by an integer factor")
    p.add_argument("--store", required=True, help="input store directory")
    p.add_argument("--factor", type=int, required=True, help="pooling window / stride")
    p.add_argument("--out", required=True, help="output store directory")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("predict", help="score one query against a store")
    p.add_argument("--store", required=True, help="store directory")
    q = p.add_mutually_exclusive_group(required=True)
    q.add_argument("--query-id", help="use an in-store record's vectors as the query")
    q.add_argument(
        "--query-features",
        help='JSON file with "semantic" and "distortion" arrays (optional "query_id")',
    )
    p.add_argument("--exclude-group", default=None, help="group never returned as a neighbor")
    _add_retrieval_flags(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="run the split/repeat protocol and report medians")
    p.add_argument("--store", required=True, help="store directory")
    _add_retrieval_flags(p)
    p.add_argument("--repeats", type=int, default=15, help="number of random splits")
    p.add_argument("--seed", type=int, default=0, help="base seed; repeat r uses seed+r")
    p.add_argument("--train-fraction", type=float, default=0.8, help="train-side share")
    p.add_argument(
        "--pool-fraction",
        type=float,
        default=1.0,
        help="fraction of the train side kept as retrieval pool (group-wise on synthetic stores)",
    )
    p.add_argument("--fit-logistic", action="store_true", help="also report logistic-mapped PLCC/RMSE")
    p.add_argument("--per-distortion", action="store_true", help="append per-type SROCC rows (single split at --seed)")
    p.add_argument("--out", default=None, help="report CSV path (default: stdout)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("analyze", help="content-distortion consistency scatter")
    p.add_argument("--store", required=True, help="store directory")
    p.add_argument("--top-n", type=int, default=10, help="similar groups listed per group")
    p.add_argument("--out", required=True, help="scatter CSV path")
    p.add_argument("--si-pairing", default=None, help="JSON group->partner map for the similar-instance predictor")
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DataError, OSError) as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_DATA
    except KeyError as e:
        print(f"KeyError: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
