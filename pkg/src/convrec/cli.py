"""Command-line interface: build, eval, add-item, serve.

Exit codes: 0 success, 1 input error, 2 internal error. Configuration
precedence is flags, then CONVREC_* environment variables, then the
built-in defaults (k1=1.6, b=0.7, M=5, lambda=0.05).
"""

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from . import augment, bm25, docbuilder, evalharness
from .artifacts import ArtifactError, add_item_to_build, load_build, save_build
from .corpus import (
    ALL_AGENT_MENTIONS,
    FIRST_MENTION_ONLY,
    Item,
    ItemMetadata,
    ParseError,
    extract_all_examples,
    merge_catalogs,
    parse_metadata,
    parse_redial,
)
from .evalharness import liked_by_dialogue, make_fused_retriever, make_plain_retriever
from .userselect import JACCARD, OVERLAP, FusionConfig, build_profiles

logger = logging.getLogger(__name__)


def _env_default(name: str, fallback: float, cast=float):
    raw = os.environ.get(name)
    if raw is None:
        return fallback
    try:
        return cast(raw)
    except ValueError:
        logger.warning("ignoring bad %s=%r", name, raw)
        return fallback


def _parse_ints(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="convrec",
        description="Conversational item recommendation via BM25 retrieval.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="parse a corpus and build the index artifacts")
    p.add_argument("--train", required=True, help="ReDial-format training dialogues")
    p.add_argument("--metadata", help="line-delimited item metadata")
    p.add_argument(
        "--mode",
        choices=docbuilder.MODES,
        default=docbuilder.FULL,
        help="document content: metadata+contexts, contexts only, or metadata only",
    )
    p.add_argument("--out", required=True, help="output directory for artifacts")
    p.add_argument("--augmented", help="synthetic dialogues to merge into training")
    p.add_argument("--max-per-item", type=int, default=20,
                   help="cap of synthetic dialogues per item when merging")
    p.add_argument("--k1", type=float, default=None)
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--idf-variant", choices=("nonnegative", "robertson"),
                   default="nonnegative")
    p.add_argument("--policy", choices=(ALL_AGENT_MENTIONS, FIRST_MENTION_ONLY),
                   default=ALL_AGENT_MENTIONS)
    p.add_argument("--strict", action="store_true",
                   help="abort on the first malformed input line")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("eval", help="evaluate Recall@k on a test corpus")
    p.add_argument("--index", required=True, help="build directory")
    p.add_argument("--test", required=True, help="ReDial-format test dialogues")
    p.add_argument("--ks", default="1,10,50")
    p.add_argument("--user-select", action="store_true",
                   help="fuse per-user scores from similar users")
    p.add_argument("--M", type=int, default=None, help="similar users to select")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="fusion coefficient on user scores")
    p.add_argument("--metric", choices=(JACCARD, OVERLAP), default=JACCARD)
    p.add_argument("--policy", choices=(ALL_AGENT_MENTIONS, FIRST_MENTION_ONLY),
                   default=ALL_AGENT_MENTIONS)
    p.add_argument("--buckets", action="store_true",
                   help="report recall by training-frequency bucket")
    p.add_argument("--bucket-edges", default="0,2,5,10,20,50")
    p.add_argument("--sweep", help="augmentation sweep counts, e.g. 0,5,10,20")
    p.add_argument("--synthetic", help="synthetic dialogue pool for --sweep")
    p.add_argument("--out", help="report directory (default: <index>/eval)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("add-item", help="register a new item without rebuilding")
    p.add_argument("--index", required=True, help="build directory to update")
    p.add_argument("--item", required=True,
                   help="JSON file: {item_id, title, plot?, director?, actors?}")
    p.add_argument("--contexts", help='JSONL file of expansion contexts: {"text": ...}')
    p.set_defaults(func=cmd_add_item)

    p = sub.add_parser("serve", help="run the HTTP recommendation service")
    p.add_argument("--index", required=True, help="build directory")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=cmd_serve)

    return parser


def cmd_build(args) -> int:
    started = time.perf_counter()
    k1 = args.k1 if args.k1 is not None else _env_default("CONVREC_K1", 1.6)
    b = args.b if args.b is not None else _env_default("CONVREC_B", 0.7)
    params = bm25.BM25Params(k1=k1, b=b, idf_variant=args.idf_variant)

    catalog, dialogues = parse_redial(args.train, strict=args.strict)
    metadata: dict[str, ItemMetadata] = {}
    if args.metadata:
        metadata, metadata_items = parse_metadata(args.metadata, strict=args.strict)
        catalog = merge_catalogs(catalog, metadata_items)
    examples = extract_all_examples(dialogues, args.policy)

    synthetic_dialogues = []
    if args.augmented:
        synthetic_catalog, synthetic_dialogues = parse_redial(
            args.augmented, strict=args.strict
        )
        catalog = merge_catalogs(catalog, synthetic_catalog)
        examples = augment.merge(
            examples,
            synthetic_dialogues,
            augment.AugmentConfig(max_dialogues_per_item=args.max_per_item),
        )

    documents = docbuilder.build_documents(catalog, metadata, examples, args.mode)
    index = docbuilder.index_documents(documents, params)
    profiles = build_profiles(examples, dialogues + synthetic_dialogues, catalog, params)

    report = {
        "dialogues": len(dialogues),
        "synthetic_dialogues": len(synthetic_dialogues),
        "items": len(catalog),
        "examples": len(examples),
        "users": len(profiles),
        "mode": args.mode,
        "wall_time_seconds": round(time.perf_counter() - started, 3),
    }
    save_build(
        args.out, args.mode, params, catalog, metadata, examples,
        documents, index, profiles, report,
    )
    print(json.dumps(report, sort_keys=True))
    return 0


def cmd_eval(args) -> int:
    store = load_build(args.index)
    ks = _parse_ints(args.ks)
    if not ks or any(k < 1 for k in ks):
        raise ValueError(f"--ks must be positive integers, got {args.ks!r}")
    m = args.M if args.M is not None else int(_env_default("CONVREC_M", 5, int))
    lam = args.lam if args.lam is not None else _env_default("CONVREC_LAMBDA", 0.05)

    _, test_dialogues = parse_redial(args.test)
    test_examples = extract_all_examples(test_dialogues, args.policy)
    genuine = [e for e in test_examples if not e.synthetic]
    if len(genuine) != len(test_examples):
        logger.warning(
            "dropped %d synthetic examples from the test set",
            len(test_examples) - len(genuine),
        )
    test_examples = genuine

    depth = max(evalharness.TOP_DEPTH, max(ks))
    if args.user_select:
        config = FusionConfig(m=m, lam=lam, metric=args.metric)
        retriever = make_fused_retriever(
            store.index, store.profiles, liked_by_dialogue(test_dialogues),
            config, depth,
        )
    else:
        retriever = make_plain_retriever(store.index, depth)

    snapshot = {
        "mode": store.mode,
        "k1": store.params.k1,
        "b": store.params.b,
        "idf_variant": store.params.idf_variant,
        "user_select": args.user_select,
        "M": m,
        "lambda": lam,
        "policy": args.policy,
        "ks": ks,
    }
    report = evalharness.evaluate(retriever, test_examples, ks, snapshot)
    if args.buckets:
        edges = _parse_ints(args.bucket_edges)
        report.buckets = evalharness.frequency_buckets(
            store.train_examples, report, edges
        )

    out_dir = Path(args.out) if args.out else Path(args.index) / "eval"
    out_dir.mkdir(parents=True, exist_ok=True)
    evalharness.write_records(report, out_dir / "records.jsonl")
    evalharness.write_summary(report, out_dir / "summary.txt")
    if report.buckets is not None:
        evalharness.write_bucket_csv(report.buckets, out_dir / "buckets.csv", ks)

    if args.sweep:
        if not args.synthetic:
            raise ValueError("--sweep requires --synthetic POOL")
        counts = _parse_ints(args.sweep)
        _, pool = parse_redial(args.synthetic)
        rows = evalharness.augmentation_sweep(
            store.train_examples, pool, counts, test_examples,
            store.catalog, store.metadata, store.mode, store.params, ks,
        )
        evalharness.write_sweep_csv(rows, out_dir / "sweep.csv", ks)

    sys.stdout.write(evalharness.format_summary(report))
    return 0


def cmd_add_item(args) -> int:
    with open(args.item, "r", encoding="utf-8") as fh:
        row = json.load(fh)
    item = Item(str(row["item_id"]), str(row["title"]))
    meta = ItemMetadata(
        item_id=item.item_id,
        plot=str(row.get("plot", "")),
        director=str(row.get("director", "")),
        actors=tuple(str(a) for a in row.get("actors", ())),
    )
    contexts = []
    if args.contexts:
        with open(args.contexts, "r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    contexts.append(str(json.loads(line)["text"]))
    add_item_to_build(args.index, item, meta, contexts)
    print(f"added {item.item_id} ({item.title}) with {len(contexts)} contexts")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    store = load_build(args.index)
    app = create_app(store)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("CONVREC_LOG", "WARNING"),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, json.JSONDecodeError, ParseError, ArtifactError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # internal failure, distinct exit code
        logger.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
