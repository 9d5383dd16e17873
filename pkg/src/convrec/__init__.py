"""Conversational item recommendation as sparse retrieval.

Conversations are queries, items are documents expanded with the training
conversations that recommended them, and an Okapi BM25 index does the
ranking — optionally fused with per-user scores from similar users, and
hardened against cold-start items by merging generated dialogues into the
training pool.
"""

from .bm25 import BM25Params, InvertedIndex, RankedList, build
from .corpus import (
    Dialogue,
    Item,
    ItemMetadata,
    RecExample,
    Turn,
    extract_all_examples,
    extract_examples,
    liked_items,
    parse_metadata,
    parse_redial,
)
from .docbuilder import ItemDocument, build_documents, index_documents, register_new_item
from .evalharness import EvalReport, evaluate, frequency_buckets, recall_at_k
from .textnorm import REC_TOKEN, tokenize
from .userselect import FusionConfig, UserProfile, build_profiles, fused_search, similar_users

__version__ = "0.1.0"

__all__ = [
    "BM25Params",
    "Dialogue",
    "EvalReport",
    "FusionConfig",
    "InvertedIndex",
    "Item",
    "ItemDocument",
    "ItemMetadata",
    "REC_TOKEN",
    "RankedList",
    "RecExample",
    "Turn",
    "UserProfile",
    "build",
    "build_documents",
    "build_profiles",
    "evaluate",
    "extract_all_examples",
    "extract_examples",
    "frequency_buckets",
    "fused_search",
    "index_documents",
    "liked_items",
    "parse_metadata",
    "parse_redial",
    "recall_at_k",
    "register_new_item",
    "similar_users",
    "tokenize",
    "__version__",
]
