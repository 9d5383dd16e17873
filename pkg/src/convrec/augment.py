"""Cold-start data augmentation: pick low-frequency items, build few-shot
prompts from sampled training conversations, hand them to a pluggable text
generator, and merge the parsed synthetic dialogues into the training pool.

The generator is external by design: anything with a
``generate(prompt, count) -> list[str]`` method works. ``HttpGeneratorClient``
posts the prompt as plain text to a configured endpoint;
``ReplayGeneratorClient`` replays canned outputs from a file so the whole
pipeline runs offline and in tests.

Prompt wire format: each exemplar dialogue is serialized as ``SEEKER:`` /
``AGENT:`` prefixed lines, dialogues separated by a blank line, followed by
an instruction naming the target item and its metadata. Generated
candidates are expected back in the same line format.
"""

import json
import logging
import os
import random
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import requests

from .corpus import (
    AGENT,
    SEEKER,
    SYNTHETIC_AGENT_ID,
    SYNTHETIC_SEEKER_ID,
    Dialogue,
    Item,
    ItemMetadata,
    Mention,
    RecExample,
    Turn,
    extract_all_examples,
    render_turn_text,
)

logger = logging.getLogger(__name__)

ROLE_TAGS = {SEEKER: "SEEKER", AGENT: "AGENT"}
_ROLE_LINE_RE = re.compile(r"^\s*(SEEKER|AGENT)\s*:\s*(.*)$", re.IGNORECASE)

# separates candidates in HTTP generator responses
CANDIDATE_DELIMITER = "---"

ENV_ENDPOINT = "CONVREC_GENERATOR_URL"
ENV_TOKEN = "CONVREC_GENERATOR_TOKEN"


@dataclass(frozen=True)
class AugmentConfig:
    frequency_threshold: int = 10
    max_dialogues_per_item: int = 20
    fewshot_count: int = 6
    seed: int = 0
    fixed_exemplars: bool = False  # same exemplars for every item

    def __post_init__(self):
        if self.frequency_threshold < 0 or self.max_dialogues_per_item < 0:
            raise ValueError("counts must be >= 0")
        if self.fewshot_count < 0:
            raise ValueError("fewshot_count must be >= 0")


class GeneratorClient(Protocol):
    def generate(self, prompt: str, count: int) -> list[str]:
        """Return up to ``count`` raw dialogue texts for the prompt."""
        ...


class HttpGeneratorClient:
    """POSTs the prompt as ``text/plain`` and splits the plain-text response
    on lines containing only ``---``. Endpoint and bearer token default to
    the CONVREC_GENERATOR_URL / CONVREC_GENERATOR_TOKEN environment
    variables."""

    def __init__(
        self,
        endpoint: str | None = None,
        token: str | None = None,
        timeout: float = 120.0,
    ):
        self.endpoint = endpoint or os.environ.get(ENV_ENDPOINT)
        self.token = token if token is not None else os.environ.get(ENV_TOKEN)
        self.timeout = timeout
        if not self.endpoint:
            raise ValueError(f"no generator endpoint; set {ENV_ENDPOINT}")

    def generate(self, prompt: str, count: int) -> list[str]:
        headers = {"Content-Type": "text/plain; charset=utf-8",
                   "X-Candidate-Count": str(count)}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        response = requests.post(
            self.endpoint,
            data=prompt.encode("utf-8"),
            headers=headers,
            timeout=self.timeout,
        )
        response.raise_for_status()
        return split_candidates(response.text)[:count]


class ReplayGeneratorClient:
    """Replays canned generator outputs from a JSONL file, one call per
    line: ``{"candidates": ["SEEKER: ...\\nAGENT: ...", ...]}``."""

    def __init__(self, path: str | Path):
        with open(path, "r", encoding="utf-8") as fh:
            self._batches = [json.loads(line)["candidates"] for line in fh if line.strip()]
        self._calls = 0

    def generate(self, prompt: str, count: int) -> list[str]:
        if self._calls >= len(self._batches):
            raise RuntimeError("replay file exhausted")
        batch = self._batches[self._calls]
        self._calls += 1
        return list(batch)[:count]


def split_candidates(text: str) -> list[str]:
    candidates = []
    current: list[str] = []
    for line in text.splitlines():
        if line.strip() == CANDIDATE_DELIMITER:
            if current:
                candidates.append("\n".join(current).strip())
                current = []
        else:
            current.append(line)
    if current and "\n".join(current).strip():
        candidates.append("\n".join(current).strip())
    return candidates


# -- cold item selection ------------------------------------------------------


def select_cold_items(
    train_examples: Iterable[RecExample],
    catalog: dict[str, Item],
    threshold: int = 10,
) -> set[str]:
    """Items recommended at most ``threshold`` times in training, including
    catalog items never recommended at all."""
    if threshold < 0:
        raise ValueError(f"threshold must be >= 0, got {threshold}")
    counts = {item_id: 0 for item_id in catalog}
    for example in train_examples:
        if example.gold_item_id in counts:
            counts[example.gold_item_id] += 1
    return {item_id for item_id, count in counts.items() if count <= threshold}


# -- prompt construction --------------------------------------------------------


def serialize_dialogue(dialogue: Dialogue) -> str:
    """Role-tagged lines with mention markers replaced by titles."""
    lines = []
    for turn in dialogue.turns:
        text = render_turn_text(turn, dialogue.mentioned_items)
        lines.append(f"{ROLE_TAGS[turn.speaker_role]}: {text}")
    return "\n".join(lines)


def build_fewshot_prompt(
    train_dialogues: Sequence[Dialogue],
    target_item: Item,
    metadata: ItemMetadata | None,
    config: AugmentConfig,
    rng: random.Random,
) -> str:
    """Sample exemplar conversations and append the generation instruction.

    Deterministic for a given rng state; when fewer dialogues exist than
    ``fewshot_count`` all of them are used.
    """
    count = config.fewshot_count
    if count > len(train_dialogues):
        logger.warning(
            "only %d dialogues available for %d-shot prompt",
            len(train_dialogues),
            count,
        )
        count = len(train_dialogues)
    exemplars = rng.sample(list(train_dialogues), count) if count else []
    blocks = [serialize_dialogue(d) for d in exemplars]
    about = [f'The movie to recommend is "{target_item.title}".']
    if metadata is not None:
        if metadata.plot:
            about.append(f"Plot: {metadata.plot}")
        if metadata.director:
            about.append(f"Director: {metadata.director}")
        if metadata.actors:
            about.append("Actors: " + ", ".join(metadata.actors))
    instruction = (
        "Write new conversations in the same SEEKER:/AGENT: line format, "
        "one conversation per block separated by a blank line, in which the "
        f'agent recommends "{target_item.title}" by name. ' + " ".join(about)
    )
    return "\n\n".join(blocks + [instruction])


def item_rng(config: AugmentConfig, item_id: str) -> random.Random:
    """Per-item exemplar sampling seed (or a fixed one when configured)."""
    if config.fixed_exemplars:
        return random.Random(config.seed)
    return random.Random(f"{config.seed}:{item_id}")


# -- parsing generator output ----------------------------------------------------


def _parse_turn_lines(raw: str) -> list[tuple[str, str]]:
    turns: list[tuple[str, str]] = []
    for line in raw.splitlines():
        match = _ROLE_LINE_RE.match(line)
        if match:
            role = SEEKER if match.group(1).upper() == "SEEKER" else AGENT
            turns.append((role, match.group(2).strip()))
        elif turns and line.strip():
            role, text = turns[-1]
            turns[-1] = (role, f"{text} {line.strip()}".strip())
    merged: list[tuple[str, str]] = []
    for role, text in turns:
        if merged and merged[-1][0] == role:
            merged[-1] = (role, f"{merged[-1][1]} {text}".strip())
        else:
            merged.append((role, text))
    return merged


def parse_generated(raw_texts: Sequence[str], target_item: Item) -> list[Dialogue]:
    """Parse role-tagged generator outputs into synthetic dialogues.

    Every occurrence of the target title inside an agent turn becomes a
    mention; outputs that never have the agent name the target are dropped
    (counted in the log), as are texts with no parseable turns.
    """
    title_re = re.compile(re.escape(target_item.title), re.IGNORECASE)
    dialogues = []
    unparseable = 0
    no_mention = 0
    for i, raw in enumerate(raw_texts):
        turn_specs = _parse_turn_lines(raw)
        if not turn_specs:
            unparseable += 1
            logger.warning(
                "generated text %d for %s: no role-tagged lines, skipped",
                i,
                target_item.item_id,
            )
            continue
        turns = []
        any_agent_mention = False
        for role, text in turn_specs:
            mentions = ()
            if role == AGENT:
                mentions = tuple(
                    Mention(target_item.item_id, m.start(), m.end())
                    for m in title_re.finditer(text)
                )
                any_agent_mention = any_agent_mention or bool(mentions)
            speaker = SYNTHETIC_SEEKER_ID if role == SEEKER else SYNTHETIC_AGENT_ID
            turns.append(Turn(role, speaker, text, mentions))
        if not any_agent_mention:
            no_mention += 1
            logger.warning(
                "generated text %d for %s: agent never names the target, dropped",
                i,
                target_item.item_id,
            )
            continue
        dialogues.append(
            Dialogue(
                dialogue_id=f"syn-{target_item.item_id}-{i}",
                seeker_id=SYNTHETIC_SEEKER_ID,
                agent_id=SYNTHETIC_AGENT_ID,
                turns=tuple(turns),
                mentioned_items={target_item.item_id: target_item.title},
                synthetic=True,
                target_item_id=target_item.item_id,
            )
        )
    if unparseable or no_mention:
        logger.info(
            "%s: kept %d/%d generated dialogues (%d unparseable, %d without target)",
            target_item.item_id,
            len(dialogues),
            len(raw_texts),
            unparseable,
            no_mention,
        )
    return dialogues


# -- merging ------------------------------------------------------------------


def merge(
    train_examples: Sequence[RecExample],
    synthetic_dialogues: Sequence[Dialogue],
    config: AugmentConfig,
) -> list[RecExample]:
    """Extract examples from synthetic dialogues and append them after the
    genuine pool, at most ``max_dialogues_per_item`` dialogues per item.

    Re-merging the same tagged dialogues is a no-op; with a cap of 0 a
    genuine-only pool passes through unchanged.
    """
    genuine = [e for e in train_examples if not e.synthetic]
    existing = [e for e in train_examples if e.synthetic]
    seen_ids = {e.example_id for e in existing}
    fresh = [
        e
        for e in extract_all_examples(synthetic_dialogues)
        if e.example_id not in seen_ids
    ]
    kept: list[RecExample] = []
    admitted: dict[str, list[str]] = {}  # item -> admitted dialogue ids
    for example in existing + fresh:
        dialogue_ids = admitted.setdefault(example.gold_item_id, [])
        if example.dialogue_id not in dialogue_ids:
            if len(dialogue_ids) >= config.max_dialogues_per_item:
                continue
            dialogue_ids.append(example.dialogue_id)
        kept.append(example)
    return genuine + kept


# -- pipeline -----------------------------------------------------------------


def generate_synthetic_dialogues(
    train_dialogues: Sequence[Dialogue],
    catalog: dict[str, Item],
    metadata: dict[str, ItemMetadata],
    cold_items: Iterable[str],
    client: GeneratorClient,
    config: AugmentConfig,
) -> list[Dialogue]:
    """Prompt the generator once per cold item (sorted order) and parse the
    outputs. One call per item keeps replay files reproducible."""
    out: list[Dialogue] = []
    for item_id in sorted(cold_items):
        item = catalog.get(item_id)
        if item is None:
            logger.warning("cold item %s not in catalog, skipped", item_id)
            continue
        prompt = build_fewshot_prompt(
            train_dialogues, item, metadata.get(item_id), config, item_rng(config, item_id)
        )
        raw = client.generate(prompt, config.max_dialogues_per_item)
        out.extend(parse_generated(raw, item))
    return out
