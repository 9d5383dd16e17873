#!/usr/bin/env python3
"""User-aware re-ranking: per-user indices, similar-user selection by
liked-item Jaccard overlap, and linear score fusion against the global
ranking."""

import json

from convrec import synthdata
from convrec.corpus import extract_all_examples, parse_metadata, parse_redial
from convrec.docbuilder import FULL, build_documents, index_documents
from convrec.evalharness import (
    evaluate,
    liked_by_dialogue,
    make_fused_retriever,
    make_plain_retriever,
)
from convrec.userselect import FusionConfig, build_profiles, similar_users


def stream(records):
    return "\n".join(json.dumps(r) for r in records).encode()


def main():
    records, metadata_records = synthdata.make_corpus(
        n_dialogues=400, n_items=60, n_users=30, seed=17
    )
    catalog, train_dialogues = parse_redial(stream(records[:340]))
    _, test_dialogues = parse_redial(stream(records[340:]))
    metadata, _ = parse_metadata(stream(metadata_records))

    train = extract_all_examples(train_dialogues)
    test = extract_all_examples(test_dialogues)
    index = index_documents(build_documents(catalog, metadata, train, FULL))
    profiles = build_profiles(train, train_dialogues, catalog)
    print(f"{len(profiles)} user profiles; "
          f"median liked-set size = "
          f"{sorted(len(p.liked) for p in profiles.values())[len(profiles) // 2]}\n")

    liked = liked_by_dialogue(test_dialogues)
    sample = next(d for d in test_dialogues if liked[d.dialogue_id])
    neighbors = similar_users(profiles, liked[sample.dialogue_id], 5)
    print(f"dialogue {sample.dialogue_id} liked {sorted(liked[sample.dialogue_id])}")
    print(f"  -> 5 most similar training users: {neighbors}\n")

    plain = evaluate(make_plain_retriever(index), test)
    for lam in (0.0, 0.05, 0.5):
        config = FusionConfig(m=5, lam=lam)
        fused = evaluate(make_fused_retriever(index, profiles, liked, config), test)
        marker = "(identical to plain by construction)" if lam == 0.0 else ""
        recalls = "  ".join(f"R@{k}={v:.3f}" for k, v in sorted(fused.recall.items()))
        print(f"lambda={lam:<5} {recalls} {marker}")
    recalls = "  ".join(f"R@{k}={v:.3f}" for k, v in sorted(plain.recall.items()))
    print(f"plain        {recalls}")


if __name__ == "__main__":
    main()
