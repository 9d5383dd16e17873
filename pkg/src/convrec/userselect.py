"""User-aware re-ranking: per-user BM25 indices over each user's own
training contexts, similar-user selection by liked-item overlap, and a
linear fusion of global and user-specific scores.

final(doc) = global_bm25(q, doc) + lambda * sum over the M selected users
of that user's index score for doc (0 when the user never discussed it).
With lambda = 0, M = 0 or an empty liked set this reduces exactly to the
plain global ranking.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

from . import bm25
from .corpus import (
    SYNTHETIC_SEEKER_ID,
    Dialogue,
    Item,
    RecExample,
    liked_items,
)
from .textnorm import tokenize

logger = logging.getLogger(__name__)

JACCARD = "jaccard"
OVERLAP = "overlap"


@dataclass(frozen=True)
class UserProfile:
    user_id: int
    liked: frozenset[str]
    user_index: bm25.InvertedIndex  # one doc per item this user was recommended


@dataclass(frozen=True)
class FusionConfig:
    m: int = 5            # similar users to select
    lam: float = 0.05     # weight on the user-specific scores
    metric: str = JACCARD

    def __post_init__(self):
        if self.m < 0:
            raise ValueError(f"m must be >= 0, got {self.m}")
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if self.metric not in (JACCARD, OVERLAP):
            raise ValueError(f"unknown metric: {self.metric!r}")


def build_profiles(
    train_examples: Iterable[RecExample],
    dialogues: Iterable[Dialogue],
    catalog: dict[str, Item],
    params: bm25.BM25Params | None = None,
    include_synthetic: bool = False,
) -> dict[int, UserProfile]:
    """One profile per training seeker.

    A user's index holds one document per item recommended to them, built
    from their own contexts for that item (title included). Synthetic
    dialogues are excluded unless ``include_synthetic`` is set.
    """
    liked: dict[int, set[str]] = {}
    for dialogue in dialogues:
        if dialogue.synthetic and not include_synthetic:
            continue
        liked.setdefault(dialogue.seeker_id, set()).update(liked_items(dialogue))

    # user -> item -> that user's contexts for the item, training order
    contexts: dict[int, dict[str, list[str]]] = {}
    for example in train_examples:
        if example.synthetic and not include_synthetic:
            continue
        per_item = contexts.setdefault(example.user_id, {})
        per_item.setdefault(example.gold_item_id, []).append(example.query_text)

    profiles = {}
    for user_id in liked:
        index = bm25.InvertedIndex(params)
        for item_id, item_contexts in contexts.get(user_id, {}).items():
            item = catalog.get(item_id)
            tokens = list(tokenize(item.title)) if item else []
            for context in item_contexts:
                tokens.extend(tokenize(context))
            index.add_document(item_id, tokens)
        profiles[user_id] = UserProfile(
            user_id=user_id,
            liked=frozenset(liked[user_id]),
            user_index=index,
        )
    return profiles


def _similarity(a: set[str] | frozenset[str], b: frozenset[str], metric: str) -> float:
    overlap = len(a & b)
    if overlap == 0:
        return 0.0
    if metric == OVERLAP:
        return float(overlap)
    return overlap / len(a | b)


def similar_users(
    profiles: dict[int, UserProfile],
    query_liked: set[str] | frozenset[str],
    m: int,
    metric: str = JACCARD,
) -> list[int]:
    """The at-most-m most similar users by liked-item overlap.

    Zero-similarity users are excluded; ties break by ascending user id.
    """
    scored = []
    for user_id, profile in profiles.items():
        sim = _similarity(set(query_liked), profile.liked, metric)
        if sim > 0.0:
            scored.append((user_id, sim))
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return [user_id for user_id, _ in scored[:m]]


def fused_search(
    global_index: bm25.InvertedIndex,
    profiles: dict[int, UserProfile],
    query: Sequence[str],
    query_liked: set[str] | frozenset[str],
    config: FusionConfig | None = None,
    k: int = 50,
) -> bm25.RankedList:
    config = config or FusionConfig()
    scores = global_index.score_vector(query)
    if config.m > 0 and config.lam > 0 and query_liked:
        positions = global_index.doc_positions
        for user_id in similar_users(profiles, query_liked, config.m, config.metric):
            for item_id, s in profiles[user_id].user_index.matched_scores(query).items():
                pos = positions.get(item_id)
                if pos is None:
                    logger.debug("user %s item %s not in global index", user_id, item_id)
                    continue
                scores[pos] += config.lam * s
    return global_index.rank(scores, k)
