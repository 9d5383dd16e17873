"""Seeded synthetic corpora in the ReDial wire format.

There is no bundled conversation dataset; fixtures, demos and the
dataset-free acceptance checks run on corpora generated here. The records
exercise the full schema: inline ``@id`` markers, mention tables,
questionnaires, multi-mention agent turns and metadata rows.
"""

import json
import random
from pathlib import Path

_ADJECTIVES = [
    "silent", "crimson", "lucky", "broken", "electric", "golden", "midnight",
    "paper", "savage", "gentle", "hollow", "neon", "rusty", "velvet",
]
_NOUNS = [
    "harbor", "garden", "engine", "mirror", "canyon", "lantern", "orchard",
    "station", "compass", "thunder", "meadow", "circus", "anchor", "ember",
]
_CHATTER = [
    "hello there", "i want something fun tonight", "what do you suggest",
    "that sounds interesting", "i am not sure about that one",
    "maybe something older", "my friends keep talking about it",
    "thanks for the help", "anything with a good story works",
    "i watched too many comedies lately",
]
_ACTORS = [
    "Mara Quill", "Devon Ash", "Lena Frost", "Omar Reyes", "Tessa Moon",
    "Felix Grant", "Ida Blom", "Ravi Chand", "Nora Vale", "Theo Marsh",
]


def make_catalog_records(n_items: int, rng: random.Random) -> list[dict]:
    """Metadata rows {item_id, title, plot, director, actors}."""
    records = []
    for i in range(n_items):
        adjective = rng.choice(_ADJECTIVES)
        noun = rng.choice(_NOUNS)
        year = rng.randint(1960, 2023)
        title = f"{adjective.title()} {noun.title()} ({year})"
        actors = rng.sample(_ACTORS, rng.randint(1, 3))
        records.append(
            {
                "item_id": str(100000 + i),
                "title": title,
                "plot": f"a {adjective} tale about a {noun} and what it hides",
                "director": rng.choice(_ACTORS),
                "actors": actors,
            }
        )
    return records


def _utterance(rng: random.Random, mention_ids: list[str]) -> str:
    parts = [rng.choice(_CHATTER)]
    for item_id in mention_ids:
        parts.append(f"have you seen @{item_id}")
    rng.shuffle(parts)
    return " . ".join(parts)


def make_dialogue_record(
    dialogue_id: int,
    seeker_id: int,
    agent_id: int,
    catalog: list[dict],
    rng: random.Random,
) -> dict:
    """One conversation with 4-10 alternating messages and 1-4 mentions."""
    n_messages = rng.randint(4, 10)
    picks = rng.sample(catalog, rng.randint(1, min(4, len(catalog))))
    titles = {row["item_id"]: row["title"] for row in picks}
    pool = list(titles)
    messages = []
    mentioned: list[str] = []
    for message_id in range(n_messages):
        sender = seeker_id if message_id % 2 == 0 else agent_id
        mention_ids = []
        # agents mention more often; occasionally twice in one message
        chance = 0.75 if sender == agent_id else 0.3
        while pool and rng.random() < chance and len(mention_ids) < 2:
            mention_ids.append(pool.pop(0))
            chance /= 2
        mentioned.extend(mention_ids)
        messages.append(
            {
                "messageId": dialogue_id * 100 + message_id,
                "timeOffset": message_id * 7,
                "senderWorkerId": sender,
                "text": _utterance(rng, mention_ids),
            }
        )
    questions = {
        item_id: {
            "suggested": rng.randint(0, 1),
            "seen": rng.randint(0, 2),
            "liked": rng.randint(0, 2),
        }
        for item_id in mentioned
    }
    return {
        "conversationId": str(dialogue_id),
        "initiatorWorkerId": seeker_id,
        "respondentWorkerId": agent_id,
        "messages": messages,
        "movieMentions": {item_id: titles[item_id] for item_id in mentioned},
        "initiatorQuestions": questions,
        "respondentQuestions": {},
    }


def make_corpus(
    n_dialogues: int = 200,
    n_items: int = 60,
    n_users: int = 40,
    seed: int = 7,
) -> tuple[list[dict], list[dict]]:
    """(dialogue records, metadata records) for a reproducible corpus."""
    rng = random.Random(seed)
    catalog = make_catalog_records(n_items, rng)
    dialogues = []
    for dialogue_id in range(n_dialogues):
        seeker = rng.randrange(n_users)
        agent = 1000 + rng.randrange(n_users)
        dialogues.append(
            make_dialogue_record(20000 + dialogue_id, seeker, agent, catalog, rng)
        )
    return dialogues, catalog


def write_jsonl(records: list[dict], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
