import json
import random

import pytest

from convrec import synthdata
from convrec.corpus import parse_metadata, parse_redial


def make_record(
    conversation_id="1",
    seeker=10,
    agent=20,
    texts=None,
    mentions=None,
    questions=None,
    **extra,
):
    """A ReDial-format record. ``texts`` alternate seeker/agent starting
    with the seeker; ``mentions`` maps item id -> title."""
    texts = texts if texts is not None else ["hello", "hi there"]
    mentions = mentions or {}
    messages = [
        {
            "messageId": i,
            "timeOffset": i,
            "senderWorkerId": seeker if i % 2 == 0 else agent,
            "text": text,
        }
        for i, text in enumerate(texts)
    ]
    record = {
        "conversationId": conversation_id,
        "initiatorWorkerId": seeker,
        "respondentWorkerId": agent,
        "messages": messages,
        "movieMentions": mentions,
        "initiatorQuestions": questions or {},
        "respondentQuestions": {},
    }
    record.update(extra)
    return record


def records_to_stream(records):
    return "\n".join(json.dumps(r) for r in records).encode("utf-8")


def random_token_docs(rng, n_docs, vocab_size, max_len=30):
    vocab = [f"w{i}" for i in range(vocab_size)]
    return {
        f"doc{j:03d}": [rng.choice(vocab) for _ in range(rng.randint(0, max_len))]
        for j in range(n_docs)
    }


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture(scope="session")
def synth_corpus():
    """A mid-sized synthetic corpus parsed into dialogues + metadata."""
    dialogue_records, metadata_records = synthdata.make_corpus(
        n_dialogues=60, n_items=30, n_users=15, seed=11
    )
    catalog, dialogues = parse_redial(records_to_stream(dialogue_records))
    metadata, metadata_items = parse_metadata(records_to_stream(metadata_records))
    for item_id, item in metadata_items.items():
        catalog.setdefault(item_id, item)
    return catalog, dialogues, metadata
