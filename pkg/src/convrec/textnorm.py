"""Deterministic tokenization shared by indexing and querying.

Rules: text is lowercased, maximal runs of alphanumeric characters become
tokens, everything else separates. The mask sentinel ``[REC]`` survives as
a single token regardless of input case.
"""

import re
from pathlib import Path

REC_TOKEN = "[REC]"

# Sentinel first so it wins over the plain alphanumeric run "rec".
# [^\W_] = unicode alphanumerics (word chars minus underscore).
_TOKEN_RE = re.compile(r"\[rec\]|[^\W_]+")


def tokenize(text: str, stopwords: frozenset[str] | None = None) -> list[str]:
    """Split ``text`` into normalized tokens.

    ``stopwords`` is an optional set of lowercase tokens to drop; by
    default nothing is removed.
    """
    tokens = []
    for match in _TOKEN_RE.finditer(text.lower()):
        token = REC_TOKEN if match.group() == "[rec]" else match.group()
        if stopwords and token in stopwords:
            continue
        tokens.append(token)
    return tokens


def load_stopwords(path: str | Path) -> frozenset[str]:
    """Read a stopword file: plain text, one lowercase token per line."""
    words = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        word = line.strip()
        if word:
            words.append(word)
    return frozenset(words)
