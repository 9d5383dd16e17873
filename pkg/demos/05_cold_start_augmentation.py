#!/usr/bin/env python3
"""The cold-start loop: select rarely-recommended items, build few-shot
prompts, generate synthetic dialogues (a canned offline generator here —
swap in HttpGeneratorClient for a real endpoint), merge them into the
training pool, and measure the recall lift per augmentation count."""

import json

from convrec import synthdata
from convrec.augment import (
    AugmentConfig,
    build_fewshot_prompt,
    generate_synthetic_dialogues,
    item_rng,
    merge,
    select_cold_items,
)
from convrec.corpus import extract_all_examples, parse_metadata, parse_redial
from convrec.docbuilder import FULL, build_documents, index_documents
from convrec.evalharness import (
    augmentation_sweep,
    evaluate,
    make_plain_retriever,
)


class CannedGenerator:
    """Stands in for a remote text model: emits plausible role-tagged
    dialogues naming whatever title the prompt asks for."""

    def generate(self, prompt, count):
        title = prompt.split('"')[1]
        return [
            f"SEEKER: i am in the mood for something like {title.split('(')[0].strip().lower()}\n"
            f"AGENT: in that case {title} is exactly what you want"
            for _ in range(count)
        ]


def stream(records):
    return "\n".join(json.dumps(r) for r in records).encode()


def main():
    records, metadata_records = synthdata.make_corpus(
        n_dialogues=250, n_items=70, n_users=30, seed=23
    )
    catalog, train_dialogues = parse_redial(stream(records[:210]))
    _, test_dialogues = parse_redial(stream(records[210:]))
    metadata, metadata_items = parse_metadata(stream(metadata_records))
    for item_id, item in metadata_items.items():
        catalog.setdefault(item_id, item)

    train = extract_all_examples(train_dialogues)
    test = extract_all_examples(test_dialogues)

    config = AugmentConfig(frequency_threshold=10, max_dialogues_per_item=20,
                           fewshot_count=3, seed=99)
    cold = select_cold_items(train, catalog, config.frequency_threshold)
    print(f"{len(cold)}/{len(catalog)} items seen <= {config.frequency_threshold} times "
          "in training\n")

    one_cold = sorted(cold)[0]
    prompt = build_fewshot_prompt(
        train_dialogues, catalog[one_cold], metadata.get(one_cold), config,
        item_rng(config, one_cold),
    )
    print("--- prompt for", catalog[one_cold].title, "---")
    print(prompt[:600] + ("..." if len(prompt) > 600 else ""))
    print("--- end prompt ---\n")

    pool = generate_synthetic_dialogues(
        train_dialogues, catalog, metadata, cold, CannedGenerator(), config
    )
    print(f"generated {len(pool)} synthetic dialogues for {len(cold)} cold items\n")

    rows = augmentation_sweep(train, pool, [0, 5, 10, 20], test, catalog, metadata, FULL)
    print("count  merged_examples  " + "  ".join(f"r@{k}" for k in (1, 10, 50)))
    for row in rows:
        recalls = "  ".join(f"{row.recall[k]:.3f}" for k in (1, 10, 50))
        print(f"{row.count:>5}  {row.synthetic_examples:>15}  {recalls}")
    print(
        "\nthe corpus-level lift depends entirely on generation quality: canned\n"
        "chatter shares few tokens with real queries, so the sweep stays flat.\n"
    )

    # the mechanism in isolation: synthetic contexts that DO echo what
    # seekers ask for move the cold item up monotonically
    print("isolated cold item whose synthetic contexts echo its test query:")
    target = sorted(cold)[1]
    query_words = "rainy sunday comfort watch"

    class EchoGenerator:
        def generate(self, prompt, count):
            title = prompt.split('"')[1]
            return [
                f"SEEKER: i need a {query_words} movie\nAGENT: {title} is made for that"
                for _ in range(count)
            ]

    test_example = next(iter(extract_all_examples(parse_redial(stream([
        {
            "conversationId": "probe", "initiatorWorkerId": 1, "respondentWorkerId": 2,
            "messages": [
                {"messageId": 0, "timeOffset": 0, "senderWorkerId": 1,
                 "text": f"looking for a {query_words} movie"},
                {"messageId": 1, "timeOffset": 1, "senderWorkerId": 2,
                 "text": f"try @{target}"},
            ],
            "movieMentions": {target: catalog[target].title},
            "initiatorQuestions": {}, "respondentQuestions": {},
        }
    ]))[1])))
    echo_pool = generate_synthetic_dialogues(
        train_dialogues, catalog, metadata, [target], EchoGenerator(), config
    )
    for count in (0, 5, 10, 20):
        merged = merge(train, echo_pool, AugmentConfig(max_dialogues_per_item=count))
        index = index_documents(build_documents(catalog, metadata, merged, FULL))
        report = evaluate(make_plain_retriever(index), [test_example])
        rank = report.results[0].rank
        print(f"  count={count:>2}  gold rank = {rank if rank else '>50'}")


if __name__ == "__main__":
    main()
