"""Recall@k evaluation, frequency-bucketed cold-start breakdowns, and
augmentation sweeps.

A retriever is any callable taking a RecExample and returning a RankedList;
helpers below wrap a plain index or the fused user-selection path. Reports
are written as a line-delimited record file plus a human-readable summary;
bucket and sweep tables go to CSV with columns
``bucket_or_count, examples, r1, r10, r50`` for external plotting.
"""

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from . import augment, bm25, docbuilder
from .corpus import Dialogue, Item, ItemMetadata, RecExample, liked_items
from .textnorm import tokenize
from .userselect import FusionConfig, UserProfile, fused_search

logger = logging.getLogger(__name__)

DEFAULT_KS = (1, 10, 50)
TOP_DEPTH = 50

# frequency bucket upper bounds: 0, 1-2, 3-5, 6-10, 11-20, 21-50, 51+
DEFAULT_BUCKET_EDGES = (0, 2, 5, 10, 20, 50)

Retriever = Callable[[RecExample], bm25.RankedList]


@dataclass(frozen=True)
class ExampleResult:
    example_id: str
    gold_item_id: str
    rank: int | None                       # 1-based; None when outside the depth
    top: tuple[tuple[str, float], ...]     # top-TOP_DEPTH (doc_ref, score)


@dataclass(frozen=True)
class BucketStats:
    label: str
    item_count: int
    example_count: int
    recall: dict[int, float]


@dataclass
class EvalReport:
    results: tuple[ExampleResult, ...]
    recall: dict[int, float]               # k -> mean hit rate; {} when empty
    ks: tuple[int, ...]
    config: dict = field(default_factory=dict)
    buckets: list[BucketStats] | None = None


def recall_at_k(ranked: bm25.RankedList, gold_item_id: str, k: int) -> int:
    """1 iff the gold item appears among the first k entries."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return int(any(ref == gold_item_id for ref, _ in ranked[:k]))


def make_plain_retriever(index: bm25.InvertedIndex, depth: int = TOP_DEPTH) -> Retriever:
    def retrieve(example: RecExample) -> bm25.RankedList:
        return index.search(tokenize(example.query_text), depth)

    return retrieve


def liked_by_dialogue(dialogues: Iterable[Dialogue]) -> dict[str, set[str]]:
    """Seeker-liked sets per dialogue, for query-time user selection."""
    return {d.dialogue_id: liked_items(d) for d in dialogues}


def make_fused_retriever(
    index: bm25.InvertedIndex,
    profiles: dict[int, UserProfile],
    liked: dict[str, set[str]],
    config: FusionConfig | None = None,
    depth: int = TOP_DEPTH,
) -> Retriever:
    config = config or FusionConfig()

    def retrieve(example: RecExample) -> bm25.RankedList:
        query_liked = liked.get(example.dialogue_id, set())
        return fused_search(
            index, profiles, tokenize(example.query_text), query_liked, config, depth
        )

    return retrieve


def evaluate(
    retriever: Retriever,
    test_examples: Sequence[RecExample],
    ks: Sequence[int] = DEFAULT_KS,
    config: dict | None = None,
) -> EvalReport:
    """Aggregate Recall@k for every test example.

    Gold items the retriever cannot return (e.g. missing from the catalog)
    count as misses. An empty test set yields an empty recall map rather
    than zeros.
    """
    ks = tuple(sorted(ks))
    results = []
    hits = {k: 0 for k in ks}
    depth = max(TOP_DEPTH, ks[-1]) if ks else TOP_DEPTH
    for example in test_examples:
        ranked = retriever(example)
        rank = None
        for position, (ref, _) in enumerate(ranked[:depth], start=1):
            if ref == example.gold_item_id:
                rank = position
                break
        for k in ks:
            if rank is not None and rank <= k:
                hits[k] += 1
        results.append(
            ExampleResult(
                example_id=example.example_id,
                gold_item_id=example.gold_item_id,
                rank=rank,
                top=tuple(ranked[:TOP_DEPTH]),
            )
        )
    n = len(results)
    recall = {k: hits[k] / n for k in ks} if n else {}
    return EvalReport(
        results=tuple(results), recall=recall, ks=ks, config=dict(config or {})
    )


# -- frequency buckets ---------------------------------------------------------


def item_frequencies(train_examples: Iterable[RecExample]) -> dict[str, int]:
    """Genuine training occurrence count per gold item.

    Synthetic examples are ignored so that cold items stay in their
    original frequency bucket after augmentation.
    """
    freqs: dict[str, int] = {}
    for example in train_examples:
        if example.synthetic:
            continue
        freqs[example.gold_item_id] = freqs.get(example.gold_item_id, 0) + 1
    return freqs


def bucket_labels(edges: Sequence[int]) -> list[str]:
    labels = []
    lower = 0
    for edge in edges:
        labels.append(str(edge) if edge == lower else f"{lower}-{edge}")
        lower = edge + 1
    labels.append(f"{lower}+")
    return labels


def _bucket_of(freq: int, edges: Sequence[int]) -> int:
    for i, edge in enumerate(edges):
        if freq <= edge:
            return i
    return len(edges)


def frequency_buckets(
    train_examples: Iterable[RecExample],
    report: EvalReport,
    edges: Sequence[int] = DEFAULT_BUCKET_EDGES,
) -> list[BucketStats]:
    """Per-bucket recall, bucketing each test example by how often its gold
    item occurred in training (0 for items never seen)."""
    edges = tuple(edges)
    if any(b <= a for a, b in zip(edges, edges[1:])) or (edges and edges[0] < 0):
        raise ValueError(f"bucket edges must be non-negative and strictly increasing: {edges}")
    freqs = item_frequencies(train_examples)
    labels = bucket_labels(edges)
    members: list[list[ExampleResult]] = [[] for _ in labels]
    items: list[set[str]] = [set() for _ in labels]
    for result in report.results:
        bucket = _bucket_of(freqs.get(result.gold_item_id, 0), edges)
        members[bucket].append(result)
        items[bucket].add(result.gold_item_id)
    stats = []
    for label, bucket_results, bucket_items in zip(labels, members, items):
        n = len(bucket_results)
        recall = {
            k: (
                sum(1 for r in bucket_results if r.rank is not None and r.rank <= k) / n
                if n
                else 0.0
            )
            for k in report.ks
        }
        stats.append(
            BucketStats(
                label=label,
                item_count=len(bucket_items),
                example_count=n,
                recall=recall,
            )
        )
    return stats


# -- augmentation sweep ----------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    count: int                 # synthetic dialogues allowed per item
    synthetic_examples: int    # examples actually merged at this count
    recall: dict[int, float]


def augmentation_sweep(
    base_train: Sequence[RecExample],
    synthetic_dialogues: Sequence[Dialogue],
    counts: Sequence[int],
    test_examples: Sequence[RecExample],
    catalog: dict[str, Item],
    metadata: dict[str, ItemMetadata],
    mode: str = docbuilder.FULL,
    params: bm25.BM25Params | None = None,
    ks: Sequence[int] = DEFAULT_KS,
) -> list[SweepRow]:
    """Rebuild documents with up to ``count`` synthetic dialogues per item
    and re-evaluate, for each count. Count 0 is the untouched baseline;
    items whose pool is smaller than a requested count use what exists."""
    pool_sizes: dict[str, int] = {}
    for dialogue in synthetic_dialogues:
        key = dialogue.target_item_id or dialogue.dialogue_id
        pool_sizes[key] = pool_sizes.get(key, 0) + 1
    rows = []
    for count in counts:
        short = sum(1 for size in pool_sizes.values() if size < count)
        if short:
            logger.warning(
                "sweep count %d: %d item(s) have fewer synthetic dialogues than requested",
                count,
                short,
            )
        config = augment.AugmentConfig(max_dialogues_per_item=count)
        merged = augment.merge(base_train, synthetic_dialogues, config)
        n_synthetic = sum(1 for e in merged if e.synthetic)
        documents = docbuilder.build_documents(catalog, metadata, merged, mode)
        index = docbuilder.index_documents(documents, params)
        report = evaluate(make_plain_retriever(index), test_examples, ks)
        rows.append(
            SweepRow(count=count, synthetic_examples=n_synthetic, recall=report.recall)
        )
    return rows


# -- report files -----------------------------------------------------------------


def write_records(report: EvalReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for result in report.results:
            fh.write(
                json.dumps(
                    {
                        "example_id": result.example_id,
                        "gold_item_id": result.gold_item_id,
                        "rank": result.rank,
                        "top": [[ref, score] for ref, score in result.top],
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def format_summary(report: EvalReport) -> str:
    lines = [f"examples: {len(report.results)}"]
    if report.config:
        lines.append("config: " + json.dumps(report.config, sort_keys=True))
    if not report.recall:
        lines.append("recall: (no examples)")
    for k in report.ks:
        if k in report.recall:
            lines.append(f"R@{k:<3d} {report.recall[k]:.4f}  ({100 * report.recall[k]:.2f}%)")
    if report.buckets is not None:
        lines.append("")
        lines.append(f"{'bucket':>8}  {'items':>6}  {'examples':>8}  " +
                     "  ".join(f"{'r' + str(k):>7}" for k in report.ks))
        for stats in report.buckets:
            lines.append(
                f"{stats.label:>8}  {stats.item_count:>6}  {stats.example_count:>8}  "
                + "  ".join(f"{stats.recall[k]:>7.4f}" for k in report.ks)
            )
    return "\n".join(lines) + "\n"


def write_summary(report: EvalReport, path: str | Path) -> None:
    Path(path).write_text(format_summary(report), encoding="utf-8")


def _recall_columns(ks: Sequence[int]) -> list[str]:
    return [f"r{k}" for k in ks]


def write_bucket_csv(
    buckets: Sequence[BucketStats], path: str | Path, ks: Sequence[int] = DEFAULT_KS
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bucket_or_count", "examples"] + _recall_columns(ks))
        for stats in buckets:
            writer.writerow(
                [stats.label, stats.example_count]
                + [f"{stats.recall[k]:.6f}" for k in ks]
            )


def write_sweep_csv(
    rows: Sequence[SweepRow], path: str | Path, ks: Sequence[int] = DEFAULT_KS
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bucket_or_count", "examples"] + _recall_columns(ks))
        for row in rows:
            writer.writerow(
                [row.count, row.synthetic_examples]
                + [f"{row.recall[k]:.6f}" for k in ks]
            )
