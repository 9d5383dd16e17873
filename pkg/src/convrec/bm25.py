"""Okapi BM25 ranked retrieval over an inverted index built from scratch.

The index maps each term to a posting list of (document position, term
frequency) pairs and keeps per-document lengths, so scores come out of

    idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len(d) / avgdl))

summed over the query tokens. The IDF defaults to the non-negative variant
``ln(1 + (N - df + 0.5) / (df + 0.5))``; the classic Robertson form
``ln((N - df + 0.5) / (df + 0.5))`` is available behind ``idf_variant``.

Documents can be appended after the initial build; an index grown
incrementally is observationally identical to one built from scratch on
the final document set. Scoring is vectorized with numpy per query term,
with caches invalidated by appends.

Persistence format (versioned, line-delimited JSON, gzip when the path
ends in ``.gz``):

    line 1            {"magic": "convrec-bm25", "version": 1,
                       "k1": ..., "b": ..., "idf_variant": ...,
                       "doc_count": N}
    next N lines      {"d": <doc_ref>, "n": <token count>}   (index order)
    remaining lines   {"t": <term>, "p": [[doc_pos, tf], ...]}  (sorted terms)

``doc_pos`` refers to the position of the document in the N-line block.
"""

import gzip
import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

MAGIC = "convrec-bm25"
FORMAT_VERSION = 1

# (doc_ref, score) pairs, descending score, ties by ascending doc_ref.
RankedList = list[tuple[str, float]]


@dataclass(frozen=True)
class BM25Params:
    k1: float = 1.6
    b: float = 0.7
    idf_variant: str = "nonnegative"  # or "robertson"

    def __post_init__(self):
        if self.k1 < 0:
            raise ValueError(f"k1 must be non-negative, got {self.k1}")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"b must be in [0, 1], got {self.b}")
        if self.idf_variant not in ("nonnegative", "robertson"):
            raise ValueError(f"unknown idf_variant: {self.idf_variant!r}")


class InvertedIndex:
    """Postings, document lengths and BM25 scoring, with incremental adds.

    Searching is safe for concurrent readers; ``add_document`` needs
    exclusive access (callers that serve traffic should snapshot-and-swap).
    """

    def __init__(self, params: BM25Params | None = None):
        self.params = params or BM25Params()
        self._doc_ids: list[str] = []          # position == doc_pos
        self._doc_pos: dict[str, int] = {}
        self._doc_lengths: list[int] = []
        self._total_length = 0
        # term -> ([doc_pos...], [tf...]); doc_pos strictly increasing
        self._postings: dict[str, tuple[list[int], list[int]]] = {}
        # lazy caches, dropped on mutation
        self._posting_arrays: dict[str, tuple[np.ndarray, np.ndarray]] = {}
        self._norm: np.ndarray | None = None
        self._ref_rank: np.ndarray | None = None

    # -- construction ----------------------------------------------------

    def add_document(self, doc_ref: str, tokens: Sequence[str]) -> None:
        if doc_ref in self._doc_pos:
            raise ValueError(f"duplicate doc_ref: {doc_ref!r}")
        pos = len(self._doc_ids)
        self._doc_ids.append(doc_ref)
        self._doc_pos[doc_ref] = pos
        self._doc_lengths.append(len(tokens))
        self._total_length += len(tokens)
        for term, tf in Counter(tokens).items():
            refs, tfs = self._postings.setdefault(term, ([], []))
            refs.append(pos)
            tfs.append(tf)
            self._posting_arrays.pop(term, None)
        self._norm = None
        self._ref_rank = None

    # -- basic accessors -------------------------------------------------

    @property
    def doc_count(self) -> int:
        return len(self._doc_ids)

    @property
    def doc_ids(self) -> list[str]:
        return list(self._doc_ids)

    @property
    def doc_positions(self) -> dict[str, int]:
        """doc_ref -> position in ``doc_ids``; treat as read-only."""
        return self._doc_pos

    @property
    def avg_doc_length(self) -> float:
        if not self._doc_ids:
            return 0.0
        return self._total_length / len(self._doc_ids)

    def doc_length(self, doc_ref: str) -> int:
        return self._doc_lengths[self._doc_pos[doc_ref]]

    @property
    def doc_lengths(self) -> dict[str, int]:
        return {ref: self._doc_lengths[i] for i, ref in enumerate(self._doc_ids)}

    def doc_freq(self, term: str) -> int:
        entry = self._postings.get(term)
        return len(entry[0]) if entry else 0

    @property
    def doc_freqs(self) -> dict[str, int]:
        return {t: len(refs) for t, (refs, _) in self._postings.items()}

    def postings(self, term: str) -> list[tuple[str, int]]:
        entry = self._postings.get(term)
        if entry is None:
            return []
        return [(self._doc_ids[p], tf) for p, tf in zip(*entry)]

    @property
    def vocabulary(self) -> set[str]:
        return set(self._postings)

    def __contains__(self, doc_ref: str) -> bool:
        return doc_ref in self._doc_pos

    # -- scoring ---------------------------------------------------------

    def idf(self, term: str) -> float:
        n = self.doc_count
        if n == 0:
            return 0.0
        df = self.doc_freq(term)
        if self.params.idf_variant == "robertson":
            return math.log((n - df + 0.5) / (df + 0.5))
        return math.log(1.0 + (n - df + 0.5) / (df + 0.5))

    def _norm_array(self) -> np.ndarray:
        # k1 * (1 - b + b * len / avgdl), precomputed per document
        if self._norm is None:
            k1, b = self.params.k1, self.params.b
            lengths = np.asarray(self._doc_lengths, dtype=np.float64)
            avg = self.avg_doc_length
            rel = lengths / avg if avg > 0 else np.zeros_like(lengths)
            self._norm = k1 * (1.0 - b + b * rel)
        return self._norm

    def _ref_rank_array(self) -> np.ndarray:
        # lexicographic rank of each doc_ref, for deterministic tie-breaks
        if self._ref_rank is None:
            order = np.argsort(np.asarray(self._doc_ids, dtype=object), kind="stable")
            rank = np.empty(len(order), dtype=np.int64)
            rank[order] = np.arange(len(order))
            self._ref_rank = rank
        return self._ref_rank

    def _term_arrays(self, term: str) -> tuple[np.ndarray, np.ndarray] | None:
        cached = self._posting_arrays.get(term)
        if cached is not None:
            return cached
        entry = self._postings.get(term)
        if entry is None:
            return None
        arrays = (
            np.asarray(entry[0], dtype=np.int64),
            np.asarray(entry[1], dtype=np.float64),
        )
        self._posting_arrays[term] = arrays
        return arrays

    def score_vector(self, query: Sequence[str]) -> np.ndarray:
        """BM25 scores for every document, aligned with ``doc_ids``.

        Query tokens are not deduplicated: a token appearing twice
        contributes twice. Accumulation order is fixed (ascending term)
        for bit-reproducibility.
        """
        scores = np.zeros(self.doc_count, dtype=np.float64)
        if self.doc_count == 0:
            return scores
        k1 = self.params.k1
        norm = self._norm_array()
        for term, count in sorted(Counter(query).items()):
            arrays = self._term_arrays(term)
            if arrays is None:
                continue
            positions, tfs = arrays
            contrib = self.idf(term) * tfs * (k1 + 1.0) / (tfs + norm[positions])
            if count != 1:
                contrib = contrib * count
            scores[positions] += contrib
        return scores

    def score(self, query: Sequence[str], doc_ref: str) -> float:
        """Score a single document for ``query``.

        Raises KeyError for a doc_ref that is not in the index.
        """
        pos = self._doc_pos[doc_ref]
        k1 = self.params.k1
        norm = float(self._norm_array()[pos])
        total = 0.0
        for term, count in sorted(Counter(query).items()):
            arrays = self._term_arrays(term)
            if arrays is None:
                continue
            positions, tfs = arrays
            where = int(np.searchsorted(positions, pos))
            if where == len(positions) or positions[where] != pos:
                continue
            tf = float(tfs[where])
            total += count * self.idf(term) * tf * (k1 + 1.0) / (tf + norm)
        return total

    def rank(self, scores: np.ndarray, k: int) -> RankedList:
        """Top-k documents for a full score vector.

        Every document conceptually has a score (0.0 when it matched
        nothing), so zero-score documents fill out the tail in ascending
        doc_ref order when fewer than k scored positive.
        """
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        n = self.doc_count
        if n == 0:
            return []
        k = min(k, n)
        order = np.lexsort((self._ref_rank_array(), -scores))
        return [(self._doc_ids[i], float(scores[i])) for i in order[:k]]

    def matched_scores(self, query: Sequence[str]) -> dict[str, float]:
        """Scores for documents sharing at least one term with the query."""
        scores = self.score_vector(query)
        matched = np.flatnonzero(scores != 0.0)
        return {self._doc_ids[i]: float(scores[i]) for i in matched}

    def search(self, query: Sequence[str], k: int) -> RankedList:
        return self.rank(self.score_vector(query), k)

    # -- persistence -----------------------------------------------------

    def to_dict(self) -> dict:
        """Plain-JSON form; used inline where one index per line is wanted
        (per-user profile files)."""
        return {
            "k1": self.params.k1,
            "b": self.params.b,
            "idf_variant": self.params.idf_variant,
            "docs": [[r, n] for r, n in zip(self._doc_ids, self._doc_lengths)],
            "postings": {
                t: [[p, f] for p, f in zip(*entry)]
                for t, entry in sorted(self._postings.items())
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "InvertedIndex":
        index = cls(
            BM25Params(k1=data["k1"], b=data["b"], idf_variant=data["idf_variant"])
        )
        for ref, length in data["docs"]:
            pos = len(index._doc_ids)
            index._doc_ids.append(ref)
            index._doc_pos[ref] = pos
            index._doc_lengths.append(length)
            index._total_length += length
        for term, pairs in data["postings"].items():
            index._postings[term] = ([p for p, _ in pairs], [f for _, f in pairs])
        return index

    def save(self, path: str | Path) -> None:
        path = Path(path)
        opener = gzip.open if path.suffix == ".gz" else open
        with opener(path, "wt", encoding="utf-8") as fh:
            header = {
                "magic": MAGIC,
                "version": FORMAT_VERSION,
                "k1": self.params.k1,
                "b": self.params.b,
                "idf_variant": self.params.idf_variant,
                "doc_count": self.doc_count,
            }
            fh.write(json.dumps(header, sort_keys=True) + "\n")
            for ref, length in zip(self._doc_ids, self._doc_lengths):
                fh.write(json.dumps({"d": ref, "n": length}) + "\n")
            for term in sorted(self._postings):
                refs, tfs = self._postings[term]
                row = {"t": term, "p": [[r, f] for r, f in zip(refs, tfs)]}
                fh.write(json.dumps(row) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "InvertedIndex":
        path = Path(path)
        opener = gzip.open if path.suffix == ".gz" else open
        with opener(path, "rt", encoding="utf-8") as fh:
            header = json.loads(fh.readline())
            if header.get("magic") != MAGIC:
                raise ValueError(f"{path}: not a {MAGIC} file")
            if header.get("version") != FORMAT_VERSION:
                raise ValueError(f"{path}: unsupported version {header.get('version')}")
            params = BM25Params(
                k1=header["k1"], b=header["b"], idf_variant=header["idf_variant"]
            )
            index = cls(params)
            for _ in range(header["doc_count"]):
                row = json.loads(fh.readline())
                pos = len(index._doc_ids)
                index._doc_ids.append(row["d"])
                index._doc_pos[row["d"]] = pos
                index._doc_lengths.append(row["n"])
                index._total_length += row["n"]
            for line in fh:
                if not line.strip():
                    continue
                row = json.loads(line)
                refs = [p[0] for p in row["p"]]
                tfs = [p[1] for p in row["p"]]
                index._postings[row["t"]] = (refs, tfs)
        return index


def build(
    docs: Iterable[tuple[str, Sequence[str]]], params: BM25Params | None = None
) -> InvertedIndex:
    """Build an index from (doc_ref, tokens) pairs. doc_refs must be unique."""
    index = InvertedIndex(params)
    for doc_ref, tokens in docs:
        index.add_document(doc_ref, tokens)
    return index
