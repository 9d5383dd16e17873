"""Item retrieval documents: flat metadata text expanded with every
training conversation that recommended the item.

Three modes:

* ``full`` — title + plot + director + actors, then the training contexts.
* ``no_metadata`` — title and the training contexts only.
* ``metadata_only`` — title + metadata with no expansion (cold baseline).

The title is part of the document in every mode. Contexts keep their
training-set order and are not deduplicated: repetition is the popularity
signal term frequency picks up.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

from . import bm25
from .corpus import Item, ItemMetadata, RecExample
from .textnorm import tokenize

logger = logging.getLogger(__name__)

FULL = "full"
NO_METADATA = "no_metadata"
METADATA_ONLY = "metadata_only"
MODES = (FULL, NO_METADATA, METADATA_ONLY)


@dataclass(frozen=True)
class ItemDocument:
    item_id: str
    metadata_text: str                 # the non-context part actually indexed
    contexts: tuple[str, ...]          # expansion query texts, training order
    tokens: tuple[str, ...]            # cached combined token stream


def metadata_text(item: Item, meta: ItemMetadata | None, mode: str) -> str:
    """The document's base text for the given mode (always includes the title)."""
    if mode not in MODES:
        raise ValueError(f"unknown mode: {mode!r}")
    if mode == NO_METADATA or meta is None:
        return item.title
    parts = [item.title, meta.plot, meta.director, " ".join(meta.actors)]
    return " ".join(part for part in parts if part)


def make_document(
    item: Item,
    meta: ItemMetadata | None,
    contexts: Sequence[str],
    mode: str,
) -> ItemDocument:
    base = metadata_text(item, meta, mode)
    kept = tuple(contexts) if mode != METADATA_ONLY else ()
    tokens = list(tokenize(base))
    for context in kept:
        tokens.extend(tokenize(context))
    return ItemDocument(item.item_id, base, kept, tuple(tokens))


def group_contexts_by_item(
    train_examples: Iterable[RecExample],
) -> dict[str, list[str]]:
    """Gold item -> its training query texts, in training-set order."""
    grouped: dict[str, list[str]] = {}
    for example in train_examples:
        grouped.setdefault(example.gold_item_id, []).append(example.query_text)
    return grouped


def build_documents(
    catalog: dict[str, Item],
    metadata: dict[str, ItemMetadata],
    train_examples: Iterable[RecExample],
    mode: str = FULL,
) -> list[ItemDocument]:
    """One document per catalog item, in catalog order.

    Metadata rows for unknown items are ignored with a warning; items with
    no training contexts get just their base text.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode: {mode!r}")
    for item_id in metadata:
        if item_id not in catalog:
            logger.warning("metadata for unknown item %s ignored", item_id)
    contexts = group_contexts_by_item(train_examples)
    return [
        make_document(item, metadata.get(item_id), contexts.get(item_id, ()), mode)
        for item_id, item in catalog.items()
    ]


def index_documents(
    documents: Iterable[ItemDocument], params: bm25.BM25Params | None = None
) -> bm25.InvertedIndex:
    return bm25.build(((doc.item_id, doc.tokens) for doc in documents), params)


def register_new_item(
    documents: dict[str, ItemDocument],
    index: bm25.InvertedIndex,
    item: Item,
    meta: ItemMetadata | None = None,
    contexts: Sequence[str] = (),
    mode: str = FULL,
) -> ItemDocument:
    """Add an item after the build: no retraining, just an index append.

    ``contexts`` may carry synthetic expansion texts for a cold item. The
    resulting index is identical to a fresh build over the union.
    """
    if item.item_id in documents or item.item_id in index:
        raise ValueError(f"duplicate item: {item.item_id!r}")
    doc = make_document(item, meta, contexts, mode)
    index.add_document(doc.item_id, doc.tokens)
    documents[doc.item_id] = doc
    return doc
