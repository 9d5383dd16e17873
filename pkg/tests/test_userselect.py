import math

import pytest

from convrec import bm25
from convrec.corpus import Item, extract_all_examples, liked_items
from convrec.docbuilder import FULL, build_documents, index_documents
from convrec.textnorm import tokenize
from convrec.userselect import (
    OVERLAP,
    FusionConfig,
    UserProfile,
    build_profiles,
    fused_search,
    similar_users,
)

from oracles import brute_force_scores
from conftest import make_record, records_to_stream


def profile(user_id, liked, docs=()):
    index = bm25.InvertedIndex()
    for ref, tokens in docs:
        index.add_document(ref, tokens)
    return UserProfile(user_id=user_id, liked=frozenset(liked), user_index=index)


# -- similar_users -----------------------------------------------------------


def test_empty_query_liked_selects_nobody():
    profiles = {1: profile(1, {"a"}), 2: profile(2, {"b"})}
    assert similar_users(profiles, set(), 5) == []


def test_jaccard_ranking_fixture():
    profiles = {
        1: profile(1, {"a", "b"}),
        2: profile(2, {"a"}),
        3: profile(3, {"c"}),
    }
    ranked = similar_users(profiles, {"a", "b"}, 2)
    assert ranked == [1, 2]  # J=1.0, then J=1/3; user 3 excluded at J=0


def test_jaccard_matches_brute_force(rng):
    items = [f"i{n}" for n in range(12)]
    profiles = {
        user: profile(user, {i for i in items if rng.random() < 0.4})
        for user in range(25)
    }
    query = {i for i in items if rng.random() < 0.4}
    expected = []
    for user, p in profiles.items():
        union = query | p.liked
        inter = query & p.liked
        sim = len(inter) / len(union) if union and inter else 0.0
        if sim > 0:
            expected.append((user, sim))
    expected.sort(key=lambda pair: (-pair[1], pair[0]))
    assert similar_users(profiles, query, 7) == [u for u, _ in expected[:7]]


def test_m_exceeds_candidates_returns_all_ranked():
    profiles = {1: profile(1, {"a"}), 2: profile(2, {"a", "b"}), 3: profile(3, {"z"})}
    assert similar_users(profiles, {"a", "b"}, 99) == [2, 1]


def test_overlap_metric_flag():
    profiles = {
        1: profile(1, {"a", "b", "c", "d"}),   # overlap 2, jaccard 2/5
        2: profile(2, {"a", "b"}),             # overlap 2, jaccard 2/3
    }
    assert similar_users(profiles, {"a", "b", "e"}, 2) == [2, 1]
    # raw overlap ties, ascending user id breaks it
    assert similar_users(profiles, {"a", "b", "e"}, 2, metric=OVERLAP) == [1, 2]


def test_config_validation():
    with pytest.raises(ValueError):
        FusionConfig(m=-1)
    with pytest.raises(ValueError):
        FusionConfig(lam=-0.5)
    with pytest.raises(ValueError):
        FusionConfig(metric="cosine")


# -- build_profiles -------------------------------------------------------------


def test_single_dialogue_single_recommendation():
    record = make_record(
        conversation_id="c1",
        seeker=7,
        texts=["hi", "watch @1"],
        mentions={"1": "Alpha (2000)"},
    )
    _, dialogues = parse_stream([record])
    examples = extract_all_examples(dialogues)
    catalog = {"1": Item("1", "Alpha (2000)")}
    profiles = build_profiles(examples, dialogues, catalog)
    assert set(profiles) == {7}
    assert profiles[7].user_index.doc_count == 1
    assert profiles[7].user_index.doc_ids == ["1"]


def parse_stream(records):
    from convrec.corpus import parse_redial

    return parse_redial(records_to_stream(records))


def test_liked_fallback_in_profiles():
    record = make_record(
        conversation_id="c2", seeker=8, texts=["i saw @1", "ok"], mentions={"1": "A"}
    )
    _, dialogues = parse_stream([record])
    profiles = build_profiles([], dialogues, {"1": Item("1", "A")})
    assert profiles[8].liked == {"1"}


def test_profile_context_counts_match_total(synth_corpus):
    catalog, dialogues, _ = synth_corpus
    examples = extract_all_examples(dialogues)
    profiles = build_profiles(examples, dialogues, catalog)
    per_user_contexts = sum(
        len(contexts)
        for p in profiles.values()
        for contexts in _user_contexts(examples, p.user_id).values()
    )
    assert per_user_contexts == len(examples)
    assert set(profiles) == {d.seeker_id for d in dialogues}


def _user_contexts(examples, user_id):
    grouped = {}
    for e in examples:
        if e.user_id == user_id:
            grouped.setdefault(e.gold_item_id, []).append(e.query_text)
    return grouped


def test_profiles_liked_from_own_dialogues_only(synth_corpus):
    catalog, dialogues, _ = synth_corpus
    profiles = build_profiles([], dialogues, catalog)
    for user_id, p in profiles.items():
        expected = set()
        for d in dialogues:
            if d.seeker_id == user_id:
                expected |= liked_items(d)
        assert p.liked == expected


def test_synthetic_examples_excluded_by_default(synth_corpus):
    catalog, dialogues, _ = synth_corpus
    examples = extract_all_examples(dialogues)
    from dataclasses import replace

    synthetic = [replace(e, synthetic=True) for e in examples[:5]]
    base = build_profiles(examples[5:], dialogues, catalog)
    with_synthetic = build_profiles(examples[5:] + synthetic, dialogues, catalog)
    for user_id in base:
        assert base[user_id].user_index.doc_lengths == \
            with_synthetic[user_id].user_index.doc_lengths


# -- fused_search ------------------------------------------------------------------


@pytest.fixture
def small_world():
    """3 users, 4 items; per-user docs and a global index with overlap."""
    catalog = {
        "m1": Item("m1", "Alpha (2000)"),
        "m2": Item("m2", "Beta (2001)"),
        "m3": Item("m3", "Gamma (2002)"),
        "m4": Item("m4", "Delta (2003)"),
    }
    global_index = bm25.build(
        [
            ("m1", tokenize("Alpha (2000) space pirates adventure")),
            ("m2", tokenize("Beta (2001) space station drama")),
            ("m3", tokenize("Gamma (2002) quiet romance")),
            ("m4", tokenize("Delta (2003) loud action")),
        ]
    )
    profiles = {
        1: profile(1, {"m1", "m2"}, [("m1", tokenize("space pirates [REC]"))]),
        2: profile(2, {"m1"}, [("m2", tokenize("space drama [REC]"))]),
        3: profile(3, {"m3"}, [("m3", tokenize("romance [REC]"))]),
    }
    return catalog, global_index, profiles


def test_lambda_zero_identical_to_plain(small_world):
    _, index, profiles = small_world
    query = tokenize("space adventure [REC]")
    plain = index.search(query, 4)
    fused = fused_search(index, profiles, query, {"m1"}, FusionConfig(lam=0.0), 4)
    assert fused == plain


def test_m_zero_identical_to_plain(small_world):
    _, index, profiles = small_world
    query = tokenize("space adventure [REC]")
    assert fused_search(index, profiles, query, {"m1"}, FusionConfig(m=0), 4) == \
        index.search(query, 4)


def test_empty_liked_identical_to_plain(small_world):
    _, index, profiles = small_world
    query = tokenize("space adventure [REC]")
    assert fused_search(index, profiles, query, set(), FusionConfig(), 4) == \
        index.search(query, 4)


def test_fused_scores_hand_computed(small_world):
    """Exhaustive score table: global + 0.05 * (sum of selected users' scores)."""
    _, index, profiles = small_world
    query = tokenize("space drama")
    query_liked = {"m1"}
    config = FusionConfig(m=2, lam=0.05)

    # selection oracle: user 2 (J=1), then user 1 (J=1/2); user 3 excluded
    assert similar_users(profiles, query_liked, 2) == [2, 1]

    global_tokens = {
        "m1": tokenize("Alpha (2000) space pirates adventure"),
        "m2": tokenize("Beta (2001) space station drama"),
        "m3": tokenize("Gamma (2002) quiet romance"),
        "m4": tokenize("Delta (2003) loud action"),
    }
    expected = brute_force_scores(global_tokens, query)
    user_docs = {
        1: {"m1": tokenize("space pirates [REC]")},
        2: {"m2": tokenize("space drama [REC]")},
    }
    for user in (2, 1):
        user_scores = brute_force_scores(user_docs[user], query)
        for ref, score in user_scores.items():
            expected[ref] += config.lam * score

    fused = fused_search(index, profiles, query, query_liked, config, 4)
    expected_ranked = sorted(expected.items(), key=lambda kv: (-kv[1], kv[0]))
    assert [ref for ref, _ in fused] == [ref for ref, _ in expected_ranked]
    for (ref, got), (_, want) in zip(fused, expected_ranked):
        assert math.isclose(got, want, rel_tol=1e-9, abs_tol=1e-12)


def test_fusion_never_decreases_scores(small_world):
    _, index, profiles = small_world
    query = tokenize("space romance drama")
    plain = dict(index.search(query, 4))
    fused = dict(fused_search(index, profiles, query, {"m1", "m3"}, FusionConfig(), 4))
    for ref, score in fused.items():
        assert score >= plain[ref] - 1e-12


def test_end_to_end_profiles_fusion(synth_corpus):
    catalog, dialogues, metadata = synth_corpus
    examples = extract_all_examples(dialogues)
    index = index_documents(build_documents(catalog, metadata, examples, FULL))
    profiles = build_profiles(examples, dialogues, catalog)
    some_liked = next(iter(profiles.values())).liked
    query = tokenize(examples[0].query_text)
    fused = fused_search(index, profiles, query, some_liked, FusionConfig(), 10)
    assert len(fused) == 10
    scores = [s for _, s in fused]
    assert scores == sorted(scores, reverse=True)
