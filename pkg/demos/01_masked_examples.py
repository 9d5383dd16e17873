#!/usr/bin/env python3
"""Walk through corpus parsing and masked-example extraction.

A conversation becomes one retrieval query per recommended item: the
item's mentions in the agent response are replaced by the [REC] sentinel,
every other mention by its title, and the preceding turns become context.
"""

import json

from convrec.corpus import extract_examples, liked_items, parse_redial

RECORD = {
    "conversationId": "demo-1",
    "initiatorWorkerId": 1,
    "respondentWorkerId": 2,
    "messages": [
        {"messageId": 0, "timeOffset": 0, "senderWorkerId": 1,
         "text": "Hello! I am looking for some movies."},
        {"messageId": 1, "timeOffset": 5, "senderWorkerId": 2,
         "text": "What kinds of movie do you like? I like animated movies such as @301."},
        {"messageId": 2, "timeOffset": 11, "senderWorkerId": 1,
         "text": "I do not like animated films. I would love to see a movie like @302 "
                 "starring Julia Roberts. Know any that are similar?"},
        {"messageId": 3, "timeOffset": 16, "senderWorkerId": 2,
         "text": "@302 was a good one. If you are in it for Julia Roberts you can try @303."},
    ],
    "movieMentions": {
        "301": "Frozen (2013)",
        "302": "Pretty Woman (1990)",
        "303": "Runaway Bride (1999)",
    },
    "initiatorQuestions": {
        "302": {"suggested": 0, "seen": 1, "liked": 1},
        "303": {"suggested": 1, "seen": 0, "liked": 2},
    },
    "respondentQuestions": {},
}


def main():
    catalog, dialogues = parse_redial(json.dumps(RECORD).encode())
    dialogue = dialogues[0]
    print(f"catalog: {sorted(item.title for item in catalog.values())}")
    print(f"turns: {len(dialogue.turns)}, seeker likes {liked_items(dialogue)}\n")

    print("default policy (every agent mention is a target):")
    for example in extract_examples(dialogue):
        print(f"  gold = {catalog[example.gold_item_id].title}")
        print(f"  query = {example.query_text}\n")

    print("first-mention-only policy (items the seeker already named are skipped):")
    for example in extract_examples(dialogue, "first_mention_only"):
        print(f"  gold = {catalog[example.gold_item_id].title}")
        print(f"  masked response = {example.masked_response}")


if __name__ == "__main__":
    main()
