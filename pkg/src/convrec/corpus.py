"""ReDial-format corpora: parsing, masked-example extraction, liked items.

Input is line-delimited JSON, one conversation per line:

    {"conversationId": "20001",
     "initiatorWorkerId": 0, "respondentWorkerId": 1,
     "messages": [{"messageId": 0, "timeOffset": 0,
                   "senderWorkerId": 0, "text": "..."}, ...],
     "movieMentions": {"111776": "Super Troopers (2001)", ...},
     "initiatorQuestions": {"111776": {"suggested": 1, "seen": 0, "liked": 1}},
     "respondentQuestions": {...}}

Items are referenced inline as ``@<digits>`` and resolved through the
record's ``movieMentions`` table. Opinion codes for ``seen``/``liked`` are
0 / 1 / 2 where 2 means "didn't say"; the initiator (seeker) questionnaire
is kept, the respondent's is ignored.

Synthetic dialogues produced by the augmentation pipeline reuse the same
schema with two extra top-level fields: ``"synthetic": true`` and
``"target_item_id"``.

Item metadata is a second line-delimited file:

    {"item_id": "...", "title": "...", "plot": "...",
     "director": "...", "actors": ["...", ...]}
"""

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator

from .textnorm import REC_TOKEN

logger = logging.getLogger(__name__)

SEEKER = "seeker"
AGENT = "agent"

# liked / seen opinion codes (ReDial questionnaire)
DISAGREE, AGREE, UNSAID = 0, 1, 2

# recommendation policies for extract_examples
ALL_AGENT_MENTIONS = "all_agent_mentions"
FIRST_MENTION_ONLY = "first_mention_only"

# reserved worker ids for generated dialogues; excluded from user profiles
SYNTHETIC_SEEKER_ID = -1
SYNTHETIC_AGENT_ID = -2

_MENTION_RE = re.compile(r"@(\d+)")


class ParseError(ValueError):
    """A malformed record, reported with its line number."""


@dataclass(frozen=True)
class Item:
    item_id: str
    title: str


@dataclass(frozen=True)
class ItemMetadata:
    item_id: str
    plot: str = ""
    director: str = ""
    actors: tuple[str, ...] = ()


@dataclass(frozen=True)
class Mention:
    item_id: str
    start: int
    end: int


@dataclass(frozen=True)
class Opinion:
    suggested: int = UNSAID
    seen: int = UNSAID
    liked: int = UNSAID


@dataclass(frozen=True)
class Turn:
    speaker_role: str  # SEEKER or AGENT
    speaker_id: int
    text: str
    mentions: tuple[Mention, ...] = ()

    def __post_init__(self):
        if self.speaker_role not in (SEEKER, AGENT):
            raise ValueError(f"bad speaker_role: {self.speaker_role!r}")
        last_end = 0
        for m in self.mentions:
            if m.start < last_end or m.end > len(self.text) or m.start >= m.end:
                raise ValueError(f"mention span out of order or bounds: {m}")
            last_end = m.end


@dataclass(frozen=True)
class Dialogue:
    dialogue_id: str
    seeker_id: int
    agent_id: int
    turns: tuple[Turn, ...]
    mentioned_items: dict[str, str] = field(default_factory=dict)  # id -> title
    item_opinions: dict[str, Opinion] = field(default_factory=dict)
    synthetic: bool = False
    target_item_id: str | None = None

    def __post_init__(self):
        if not self.turns:
            raise ValueError(f"dialogue {self.dialogue_id}: no turns")
        for turn in self.turns:
            for m in turn.mentions:
                if m.item_id not in self.mentioned_items:
                    raise ValueError(
                        f"dialogue {self.dialogue_id}: mention of {m.item_id} "
                        "missing from the mention table"
                    )


@dataclass(frozen=True)
class RecExample:
    """One masked-item-prediction instance.

    ``query_text`` is the full preceding conversation followed by the
    agent response with every mention of the gold item replaced by the
    ``[REC]`` sentinel (``masked_response`` holds just that last part).
    """

    example_id: str
    dialogue_id: str
    user_id: int
    query_text: str
    gold_item_id: str
    turn_index: int
    masked_response: str
    synthetic: bool = False


# -- parsing ---------------------------------------------------------------


def _iter_lines(source: str | Path | bytes | IO | Iterable[str]) -> Iterator[str]:
    if isinstance(source, bytes):
        yield from source.decode("utf-8").splitlines()
    elif isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            yield from fh
    else:
        for line in source:
            yield line.decode("utf-8") if isinstance(line, bytes) else line


def _as_mapping(value) -> dict:
    # ReDial serializes empty questionnaires/mention tables as [] sometimes
    if not value:
        return {}
    if isinstance(value, dict):
        return value
    raise ValueError(f"expected a mapping, got {type(value).__name__}")


def _parse_record(record: dict) -> Dialogue:
    dialogue_id = str(record["conversationId"])
    seeker_id = int(record["initiatorWorkerId"])
    agent_id = int(record["respondentWorkerId"])
    mention_table = {
        str(k): str(v) for k, v in _as_mapping(record.get("movieMentions")).items()
    }

    turns = []
    for message in record["messages"]:
        sender = int(message["senderWorkerId"])
        if sender == seeker_id:
            role = SEEKER
        elif sender == agent_id:
            role = AGENT
        else:
            raise ValueError(f"sender {sender} is neither initiator nor respondent")
        text = str(message["text"])
        mentions = []
        for match in _MENTION_RE.finditer(text):
            item_id = match.group(1)
            if item_id in mention_table:
                mentions.append(Mention(item_id, match.start(), match.end()))
            else:
                logger.warning(
                    "dialogue %s: unresolved mention @%s left as literal text",
                    dialogue_id,
                    item_id,
                )
        turns.append(Turn(role, sender, text, tuple(mentions)))

    opinions = {}
    for item_id, answers in _as_mapping(record.get("initiatorQuestions")).items():
        answers = _as_mapping(answers)
        opinions[str(item_id)] = Opinion(
            suggested=int(answers.get("suggested", UNSAID)),
            seen=int(answers.get("seen", UNSAID)),
            liked=int(answers.get("liked", UNSAID)),
        )

    return Dialogue(
        dialogue_id=dialogue_id,
        seeker_id=seeker_id,
        agent_id=agent_id,
        turns=tuple(turns),
        mentioned_items=mention_table,
        item_opinions=opinions,
        synthetic=bool(record.get("synthetic", False)),
        target_item_id=(
            str(record["target_item_id"]) if record.get("target_item_id") else None
        ),
    )


def parse_redial(
    source: str | Path | bytes | IO | Iterable[str], strict: bool = False
) -> tuple[dict[str, Item], list[Dialogue]]:
    """Parse a ReDial-format stream into a catalog and dialogues.

    The catalog is the union of every mentioned item, keyed by item id in
    first-seen order. With ``strict`` a malformed line raises ParseError;
    otherwise it is logged with its line number and skipped.
    """
    catalog: dict[str, Item] = {}
    dialogues: list[Dialogue] = []
    for lineno, line in enumerate(_iter_lines(source), start=1):
        if not line.strip():
            continue
        try:
            dialogue = _parse_record(json.loads(line))
        except (ValueError, KeyError, TypeError) as exc:
            if strict:
                raise ParseError(f"line {lineno}: {exc}") from exc
            logger.warning("line %d: skipping malformed record (%s)", lineno, exc)
            continue
        dialogues.append(dialogue)
        for item_id, title in dialogue.mentioned_items.items():
            catalog.setdefault(item_id, Item(item_id, title))
    return catalog, dialogues


def parse_metadata(
    source: str | Path | bytes | IO | Iterable[str], strict: bool = False
) -> tuple[dict[str, ItemMetadata], dict[str, Item]]:
    """Parse line-delimited metadata records.

    Returns the metadata table and the items it describes (so the catalog
    can include metadata-only items).
    """
    metadata: dict[str, ItemMetadata] = {}
    items: dict[str, Item] = {}
    for lineno, line in enumerate(_iter_lines(source), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            item_id = str(record["item_id"])
            title = str(record.get("title", ""))
            meta = ItemMetadata(
                item_id=item_id,
                plot=str(record.get("plot", "")),
                director=str(record.get("director", "")),
                actors=tuple(str(a) for a in record.get("actors", ())),
            )
        except (ValueError, KeyError, TypeError) as exc:
            if strict:
                raise ParseError(f"line {lineno}: {exc}") from exc
            logger.warning("line %d: skipping malformed metadata row (%s)", lineno, exc)
            continue
        metadata[item_id] = meta
        if title:
            items.setdefault(item_id, Item(item_id, title))
    return metadata, items


def merge_catalogs(*catalogs: dict[str, Item]) -> dict[str, Item]:
    """Union catalogs; the first occurrence of an item id wins."""
    merged: dict[str, Item] = {}
    for catalog in catalogs:
        for item_id, item in catalog.items():
            merged.setdefault(item_id, item)
    return merged


# -- serialization -----------------------------------------------------------


def dialogue_to_record(dialogue: Dialogue) -> dict:
    """Serialize back to the ReDial schema (message ids are regenerated)."""
    record = {
        "conversationId": dialogue.dialogue_id,
        "initiatorWorkerId": dialogue.seeker_id,
        "respondentWorkerId": dialogue.agent_id,
        "messages": [
            {
                "messageId": i,
                "timeOffset": 0,
                "senderWorkerId": turn.speaker_id,
                "text": turn.text,
            }
            for i, turn in enumerate(dialogue.turns)
        ],
        "movieMentions": dict(dialogue.mentioned_items),
        "initiatorQuestions": {
            item_id: {"suggested": op.suggested, "seen": op.seen, "liked": op.liked}
            for item_id, op in dialogue.item_opinions.items()
        },
        "respondentQuestions": {},
    }
    if dialogue.synthetic:
        record["synthetic"] = True
        if dialogue.target_item_id is not None:
            record["target_item_id"] = dialogue.target_item_id
    return record


def write_redial(dialogues: Iterable[Dialogue], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for dialogue in dialogues:
            fh.write(json.dumps(dialogue_to_record(dialogue), sort_keys=True) + "\n")


# -- masked example extraction ----------------------------------------------


def render_turn_text(
    turn: Turn, titles: dict[str, str], target_item_id: str | None = None
) -> str:
    """Substitute mention markers: the target's become ``[REC]``, every
    other mention becomes its title text."""
    parts = []
    cursor = 0
    for m in turn.mentions:
        parts.append(turn.text[cursor : m.start])
        if target_item_id is not None and m.item_id == target_item_id:
            parts.append(REC_TOKEN)
        else:
            parts.append(titles[m.item_id])
        cursor = m.end
    parts.append(turn.text[cursor:])
    return "".join(parts)


def extract_examples(
    dialogue: Dialogue, policy: str = ALL_AGENT_MENTIONS
) -> list[RecExample]:
    """Turn a dialogue into masked-item-prediction examples.

    One example per (agent turn, recommended item) pair: the target's
    mentions in that turn all become ``[REC]``, other mentions become
    titles, and the preceding turns (with titles substituted) form the
    context. Under ``first_mention_only`` items the seeker already
    mentioned earlier are skipped.

    Literal occurrences of the target's title in the masked response
    (an agent typing the name instead of using a marker) are scrubbed to
    ``[REC]`` too, so the gold title never survives in the response.
    """
    if policy not in (ALL_AGENT_MENTIONS, FIRST_MENTION_ONLY):
        raise ValueError(f"unknown policy: {policy!r}")
    titles = dialogue.mentioned_items
    examples = []
    rendered_context: list[str] = []
    seen_by_seeker: set[str] = set()
    for turn_index, turn in enumerate(dialogue.turns):
        if turn.speaker_role == AGENT and turn.mentions:
            targets = []
            for m in turn.mentions:
                if m.item_id in targets:
                    continue
                if policy == FIRST_MENTION_ONLY and m.item_id in seen_by_seeker:
                    continue
                targets.append(m.item_id)
            context = " ".join(part for part in rendered_context if part)
            for item_id in targets:
                masked = render_turn_text(turn, titles, target_item_id=item_id)
                title = titles[item_id]
                if title:
                    masked = masked.replace(title, REC_TOKEN)
                query_text = f"{context} {masked}" if context else masked
                examples.append(
                    RecExample(
                        example_id=f"{dialogue.dialogue_id}:{turn_index}:{item_id}",
                        dialogue_id=dialogue.dialogue_id,
                        user_id=dialogue.seeker_id,
                        query_text=query_text,
                        gold_item_id=item_id,
                        turn_index=turn_index,
                        masked_response=masked,
                        synthetic=dialogue.synthetic,
                    )
                )
        if turn.speaker_role == SEEKER:
            seen_by_seeker.update(m.item_id for m in turn.mentions)
        rendered_context.append(render_turn_text(turn, titles))
    return examples


def extract_all_examples(
    dialogues: Iterable[Dialogue], policy: str = ALL_AGENT_MENTIONS
) -> list[RecExample]:
    examples = []
    for dialogue in dialogues:
        examples.extend(extract_examples(dialogue, policy))
    return examples


# -- liked items --------------------------------------------------------------


def liked_items(dialogue: Dialogue, role: str = SEEKER) -> set[str]:
    """Items the seeker marked liked; without any questionnaire, every
    item the given role mentioned counts as liked (serving-mode fallback)."""
    if dialogue.item_opinions:
        return {
            item_id
            for item_id, op in dialogue.item_opinions.items()
            if op.liked == AGREE
        }
    return {
        m.item_id
        for turn in dialogue.turns
        if turn.speaker_role == role
        for m in turn.mentions
    }
