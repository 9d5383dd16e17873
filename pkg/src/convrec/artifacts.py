"""On-disk layout for a built recommender, shared by the CLI and service.

A build directory holds:

    index.jsonl           the global BM25 index (bm25 module format)
    catalog.jsonl         {"item_id", "title"} per line, build order
    metadata.jsonl        metadata rows actually used (corpus schema)
    train_examples.jsonl  serialized RecExamples, training order
    profiles.jsonl        one user per line: liked items + inline index
    manifest.json         mode, params, counts, catalog hash, per-item stats
    build_report.json     corpus counts and wall time

Everything except the build report's wall time is a pure function of the
inputs, so rebuilds are byte-identical. Updates (add-item) write temp
files and atomically swap them in so concurrent readers never observe a
half-written state.
"""

import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from . import bm25, docbuilder
from .corpus import Item, ItemMetadata, RecExample
from .userselect import UserProfile

logger = logging.getLogger(__name__)

INDEX_FILE = "index.jsonl"
CATALOG_FILE = "catalog.jsonl"
METADATA_FILE = "metadata.jsonl"
EXAMPLES_FILE = "train_examples.jsonl"
PROFILES_FILE = "profiles.jsonl"
MANIFEST_FILE = "manifest.json"
BUILD_REPORT_FILE = "build_report.json"


class ArtifactError(RuntimeError):
    """Missing or inconsistent build artifacts."""


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True)


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def catalog_hash(catalog: dict[str, Item]) -> str:
    digest = hashlib.sha256()
    for item_id in sorted(catalog):
        digest.update(item_id.encode("utf-8"))
        digest.update(b"\x00")
        digest.update(catalog[item_id].title.encode("utf-8"))
        digest.update(b"\x01")
    return digest.hexdigest()


# -- individual tables --------------------------------------------------------


def write_catalog(catalog: dict[str, Item], path: Path) -> None:
    lines = [_dump({"item_id": i.item_id, "title": i.title}) for i in catalog.values()]
    _atomic_write(path, "".join(line + "\n" for line in lines))


def read_catalog(path: Path) -> dict[str, Item]:
    catalog = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        row = json.loads(line)
        catalog[row["item_id"]] = Item(row["item_id"], row["title"])
    return catalog


def write_metadata(
    metadata: dict[str, ItemMetadata], catalog: dict[str, Item], path: Path
) -> None:
    lines = []
    for item_id, meta in metadata.items():
        title = catalog[item_id].title if item_id in catalog else ""
        lines.append(
            _dump(
                {
                    "item_id": meta.item_id,
                    "title": title,
                    "plot": meta.plot,
                    "director": meta.director,
                    "actors": list(meta.actors),
                }
            )
        )
    _atomic_write(path, "".join(line + "\n" for line in lines))


def read_metadata(path: Path) -> dict[str, ItemMetadata]:
    metadata = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        row = json.loads(line)
        metadata[row["item_id"]] = ItemMetadata(
            item_id=row["item_id"],
            plot=row.get("plot", ""),
            director=row.get("director", ""),
            actors=tuple(row.get("actors", ())),
        )
    return metadata


def example_to_record(example: RecExample) -> dict:
    return {
        "example_id": example.example_id,
        "dialogue_id": example.dialogue_id,
        "user_id": example.user_id,
        "query_text": example.query_text,
        "gold_item_id": example.gold_item_id,
        "turn_index": example.turn_index,
        "masked_response": example.masked_response,
        "synthetic": example.synthetic,
    }


def example_from_record(row: dict) -> RecExample:
    return RecExample(
        example_id=row["example_id"],
        dialogue_id=row["dialogue_id"],
        user_id=row["user_id"],
        query_text=row["query_text"],
        gold_item_id=row["gold_item_id"],
        turn_index=row["turn_index"],
        masked_response=row["masked_response"],
        synthetic=row.get("synthetic", False),
    )


def write_examples(examples: Sequence[RecExample], path: Path) -> None:
    lines = [_dump(example_to_record(e)) for e in examples]
    _atomic_write(path, "".join(line + "\n" for line in lines))


def read_examples(path: Path) -> list[RecExample]:
    return [
        example_from_record(json.loads(line))
        for line in path.read_text(encoding="utf-8").splitlines()
    ]


def write_profiles(profiles: dict[int, UserProfile], path: Path) -> None:
    lines = []
    for user_id in sorted(profiles):
        profile = profiles[user_id]
        lines.append(
            _dump(
                {
                    "user_id": profile.user_id,
                    "liked": sorted(profile.liked),
                    "index": profile.user_index.to_dict(),
                }
            )
        )
    _atomic_write(path, "".join(line + "\n" for line in lines))


def read_profiles(path: Path) -> dict[int, UserProfile]:
    profiles = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        row = json.loads(line)
        profiles[row["user_id"]] = UserProfile(
            user_id=row["user_id"],
            liked=frozenset(row["liked"]),
            user_index=bm25.InvertedIndex.from_dict(row["index"]),
        )
    return profiles


# -- the bundle ---------------------------------------------------------------


@dataclass
class BuildArtifacts:
    directory: Path
    mode: str
    params: bm25.BM25Params
    catalog: dict[str, Item]
    metadata: dict[str, ItemMetadata]
    train_examples: list[RecExample]
    index: bm25.InvertedIndex
    profiles: dict[int, UserProfile]
    manifest: dict = field(default_factory=dict)


def make_manifest(
    mode: str,
    params: bm25.BM25Params,
    catalog: dict[str, Item],
    documents: Iterable[docbuilder.ItemDocument],
    example_count: int,
) -> dict:
    return {
        "mode": mode,
        "k1": params.k1,
        "b": params.b,
        "idf_variant": params.idf_variant,
        "item_count": len(catalog),
        "example_count": example_count,
        "catalog_hash": catalog_hash(catalog),
        "items": [
            {"item_id": d.item_id, "contexts": len(d.contexts), "tokens": len(d.tokens)}
            for d in documents
        ],
    }


def save_build(
    directory: str | Path,
    mode: str,
    params: bm25.BM25Params,
    catalog: dict[str, Item],
    metadata: dict[str, ItemMetadata],
    train_examples: Sequence[RecExample],
    documents: Sequence[docbuilder.ItemDocument],
    index: bm25.InvertedIndex,
    profiles: dict[int, UserProfile],
    build_report: dict,
) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    index.save(directory / INDEX_FILE)
    write_catalog(catalog, directory / CATALOG_FILE)
    write_metadata(metadata, catalog, directory / METADATA_FILE)
    write_examples(train_examples, directory / EXAMPLES_FILE)
    write_profiles(profiles, directory / PROFILES_FILE)
    manifest = make_manifest(mode, params, catalog, documents, len(train_examples))
    _atomic_write(directory / MANIFEST_FILE, _dump(manifest) + "\n")
    _atomic_write(directory / BUILD_REPORT_FILE, _dump(build_report) + "\n")


def load_build(directory: str | Path) -> BuildArtifacts:
    directory = Path(directory)
    manifest_path = directory / MANIFEST_FILE
    if not manifest_path.exists():
        raise ArtifactError(f"{directory}: no {MANIFEST_FILE}; not a build directory")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    catalog = read_catalog(directory / CATALOG_FILE)
    if manifest.get("catalog_hash") != catalog_hash(catalog):
        raise ArtifactError(
            f"{directory}: catalog does not match the manifest "
            "(mixed artifacts from different builds?)"
        )
    index = bm25.InvertedIndex.load(directory / INDEX_FILE)
    if set(index.doc_ids) != set(catalog):
        raise ArtifactError(f"{directory}: index documents do not match the catalog")
    return BuildArtifacts(
        directory=directory,
        mode=manifest["mode"],
        params=index.params,
        catalog=catalog,
        metadata=read_metadata(directory / METADATA_FILE),
        train_examples=read_examples(directory / EXAMPLES_FILE),
        index=index,
        profiles=read_profiles(directory / PROFILES_FILE),
        manifest=manifest,
    )


def add_item_to_build(
    directory: str | Path,
    item: Item,
    meta: ItemMetadata | None = None,
    contexts: Sequence[str] = (),
) -> None:
    """Register one new item and swap the updated artifacts into place."""
    store = load_build(directory)
    if item.item_id in store.catalog:
        raise ArtifactError(f"duplicate item: {item.item_id!r}")
    doc = docbuilder.register_new_item(
        {}, store.index, item, meta, contexts, store.mode
    )
    store.catalog[item.item_id] = item
    if meta is not None:
        store.metadata[item.item_id] = meta
    manifest = store.manifest
    manifest["item_count"] = len(store.catalog)
    manifest["catalog_hash"] = catalog_hash(store.catalog)
    manifest["items"].append(
        {"item_id": doc.item_id, "contexts": len(doc.contexts), "tokens": len(doc.tokens)}
    )
    directory = Path(directory)
    store.index.save(directory / (INDEX_FILE + ".tmp"))
    os.replace(directory / (INDEX_FILE + ".tmp"), directory / INDEX_FILE)
    write_catalog(store.catalog, directory / CATALOG_FILE)
    write_metadata(store.metadata, store.catalog, directory / METADATA_FILE)
    _atomic_write(directory / MANIFEST_FILE, _dump(manifest) + "\n")
