"""Deterministic text-model mocks: generative synthesis and transcript replay.

Two modes, per the hermeticity contract:

* ``generative`` synthesizes schema-valid documents from the payload via
  cheap deterministic heuristics (sentence segmentation, actor lexicon,
  digest-seeded choices). Works for any story; used for exploratory runs
  and property tests.
* ``strict`` replays a transcript file and raises BackendError on any
  (role, payload-digest) pair it has not seen. Used in CI.

Transcript files store payloads inline; digests are computed at load time
so fixtures stay human-editable.
"""

from __future__ import annotations

import json
import re
import time
from pathlib import Path
from typing import Any

from ..errors import BackendError, SchemaError
from ..hashing import digest_obj, int_from_digest
from .base import BackendDescriptor, Capability, TextModelBackend

TRANSCRIPT_FORMAT = "visagent-transcript/v1"

# Role identifiers shared with the story/image agents.
ROLE_SCENE_EXTRACTION = "scene_extraction"
ROLE_CHARACTER_EXTRACTION = "character_extraction"
ROLE_PROMPT_GENERATION = "prompt_generation"
ROLE_REFLECTION = "reflection"

_SENTENCE_RE = re.compile(r"[^.!?]+[.!?]?")

# Common-noun actors the heuristic extractor recognizes. Names are picked
# up separately via capitalization.
_ACTOR_NOUNS = (
    "boy", "girl", "man", "woman", "merchant", "giant", "king", "queen",
    "prince", "princess", "farmer", "witch", "wolf", "dragon", "knight",
    "sailor", "thief", "wizard",
)

_GENDER_BY_NOUN = {
    "boy": "male", "man": "male", "merchant": "male", "giant": "male",
    "king": "male", "prince": "male", "farmer": "male", "knight": "male",
    "wizard": "male", "girl": "female", "woman": "female", "queen": "female",
    "princess": "female", "witch": "female",
}

_ATTIRE_RE = re.compile(
    r"\b(?:in|wearing|wore|dressed in)\s+"
    r"((?:[a-z][\w-]*\s+){0,5}?"
    r"(?:clothing|clothes|cloak|coat|dress|tunic|rags|garments?|robes?|apron|boots))",
    re.IGNORECASE,
)

_SENTENCE_STARTERS = frozenset(
    "the a an once upon when then but and so after before at in on he she it "
    "they one there his her its now soon later that this".split()
)

_FALLBACK_ATTIRE = (
    "plain homespun clothing",
    "worn travelling clothes",
    "simple village garments",
    "faded work clothes",
)

_ACTION_POOL = (
    "standing", "walking forward", "looking on", "sitting",
    "reaching out", "turning away", "crouching low", "gesturing",
)


def split_sentences(text: str) -> list[tuple[int, int]]:
    """Character-offset spans of sentences, whitespace trimmed."""
    spans = []
    for match in _SENTENCE_RE.finditer(text):
        raw = match.group()
        lead = len(raw) - len(raw.lstrip())
        trail = len(raw) - len(raw.rstrip())
        start, end = match.start() + lead, match.end() - trail
        if start < end:
            spans.append((start, end))
    return spans


def _find_actors(text: str) -> list[str]:
    """Distinct actor mentions in first-appearance order.

    Actors are lexicon nouns plus capitalized words that also occur
    mid-sentence (so sentence-initial 'The' never qualifies).
    """
    actors: list[str] = []
    lowered = text.lower()
    positions: dict[str, int] = {}
    for noun in _ACTOR_NOUNS:
        match = re.search(rf"\b{noun}\b", lowered)
        if match:
            positions[noun] = match.start()
    sentence_starts = {s for s, _ in split_sentences(text)}
    for match in re.finditer(r"\b([A-Z][a-z]{2,})\b", text):
        word = match.group(1)
        if word.lower() in _SENTENCE_STARTERS or word.lower() in positions:
            continue
        if match.start() in sentence_starts:
            continue
        positions.setdefault(word, match.start())
    for name, _ in sorted(positions.items(), key=lambda kv: kv[1]):
        actors.append(name)
    return actors


def _chunk_spans(spans: list[tuple[int, int]], n: int) -> list[list[tuple[int, int]]]:
    """Split sentence spans into n contiguous near-equal groups."""
    if not spans:
        return [[] for _ in range(n)]
    chunks: list[list[tuple[int, int]]] = []
    base, extra = divmod(len(spans), n)
    cursor = 0
    for i in range(n):
        size = base + (1 if i < extra else 0)
        chunks.append(spans[cursor : cursor + size])
        cursor += size
    return chunks


def synthesize_scene_document(story: str, num_scenes: int) -> dict[str, Any]:
    spans = split_sentences(story)
    chunks = _chunk_spans(spans, num_scenes)
    scenes = []
    for chunk in chunks:
        if chunk:
            start, end = chunk[0][0], chunk[-1][1]
            summary = story[chunk[0][0] : chunk[0][1]].strip()
        else:  # more scenes than sentences: reuse the whole text
            start, end = 0, len(story)
            summary = story.strip()[:160]
        scenes.append({"summary": summary, "source_span": [start, end]})
    return {"scenes": scenes}


def _attire_for(story: str, actor: str) -> tuple[str, bool]:
    pattern = re.compile(rf"\b{re.escape(actor)}\b", re.IGNORECASE)
    for start, end in split_sentences(story):
        sentence = story[start:end]
        if pattern.search(sentence):
            found = _ATTIRE_RE.search(sentence)
            if found:
                return found.group(1).strip(), True
    pick = int_from_digest(digest_obj([actor, story[:64]])) % len(_FALLBACK_ATTIRE)
    return _FALLBACK_ATTIRE[pick], False


def synthesize_character_document(story: str, schema_keys: list[str]) -> dict[str, Any]:
    characters = []
    for actor in _find_actors(story):
        attire, stated = _attire_for(story, actor)
        is_noun = actor in _ACTOR_NOUNS
        attributes: dict[str, str] = {}
        for key in schema_keys:
            if key == "attire":
                attributes[key] = attire
            elif key == "gender":
                attributes[key] = _GENDER_BY_NOUN.get(actor, "unspecified")
            elif key == "appearance":
                attributes[key] = f"a {actor}" if is_noun else actor
            else:
                attributes[key] = "unspecified"
        characters.append(
            {
                "name": actor if not is_noun else f"the {actor}",
                "attributes": attributes,
                "attire_stated": stated,
            }
        )
    return {"characters": characters}


def synthesize_prompt_document(payload: dict[str, Any]) -> dict[str, Any]:
    summary = str(payload.get("summary", "")).strip().rstrip(".")
    bg = f"A detailed scene where {summary[0].lower()}{summary[1:]}" if summary else "A quiet scene"
    actions: dict[str, str] = {}
    for character in payload.get("characters", []):
        cid = character["character_id"]
        pick = int_from_digest(digest_obj([cid, summary])) % len(_ACTION_POOL)
        actions[cid] = _ACTION_POOL[pick]
    return {"bg": bg, "actions": actions}


def synthesize_reflection_document(payload: dict[str, Any]) -> dict[str, Any]:
    prompt = str(payload.get("prompt", "")).lower()
    segment = str(payload.get("segment", "")).lower()
    prompt_words = {w for w in re.findall(r"[a-z]{4,}", prompt)}
    segment_words = {w for w in re.findall(r"[a-z]{4,}", segment)}
    notes = []
    if segment_words and not (prompt_words & segment_words):
        notes.append(
            {"note": "prompt shares no content words with the story segment", "blocking": True}
        )
    return {"deviation_notes": notes}


class MockTextBackend(TextModelBackend):
    """Deterministic LLM stand-in with generative and strict modes."""

    def __init__(
        self,
        mode: str = "generative",
        transcript: str | Path | dict[str, Any] | None = None,
        name: str | None = None,
    ) -> None:
        super().__init__()
        if mode not in ("generative", "strict"):
            raise ValueError(f"unknown mock mode {mode!r}")
        self.mode = mode
        self._entries: dict[tuple[str, str], dict[str, Any]] = {}
        if transcript is not None:
            self.load_transcript(transcript)
        elif mode == "strict":
            raise ValueError("strict mode requires a transcript")
        self.descriptor = BackendDescriptor(
            name=name or f"mock-text-{mode}",
            capability=Capability.TEXT,
            deterministic=True,
            concurrency_safe=True,
        )

    def load_transcript(self, transcript: str | Path | dict[str, Any]) -> None:
        if isinstance(transcript, (str, Path)):
            doc = json.loads(Path(transcript).read_text(encoding="utf-8"))
        else:
            doc = transcript
        if doc.get("format") != TRANSCRIPT_FORMAT:
            raise SchemaError(f"transcript format must be {TRANSCRIPT_FORMAT!r}")
        for entry in doc["entries"]:
            key = (entry["role"], digest_obj(entry["payload"]))
            self._entries[key] = entry["reply"]

    def complete(
        self, role: str, instruction: str, payload: dict[str, Any], retry_index: int = 0
    ) -> dict[str, Any]:
        if not instruction:
            raise SchemaError(f"no instruction registered for role {role!r}")
        started = time.monotonic()
        input_digest = digest_obj(payload)
        reply = self._entries.get((role, input_digest))
        if reply is None:
            if self.mode == "strict":
                raise BackendError(
                    f"no transcript entry for role {role!r} with digest {input_digest[:16]}"
                )
            reply = self._synthesize(role, payload)
        self._record(role, input_digest, digest_obj(reply), started, retry_index)
        return reply

    def _synthesize(self, role: str, payload: dict[str, Any]) -> dict[str, Any]:
        if role == ROLE_SCENE_EXTRACTION:
            if "target_scene" in payload:
                doc = synthesize_scene_document(payload["story"], payload["num_scenes"])
                scene = dict(doc["scenes"][payload["target_scene"]])
                scene["summary"] = f"{scene['summary']} (take {payload.get('attempt', 1)})"
                return {"scene": scene}
            return synthesize_scene_document(payload["story"], payload["num_scenes"])
        if role == ROLE_CHARACTER_EXTRACTION:
            doc = synthesize_character_document(payload["story"], payload["schema"])
            if "target" in payload:
                for character in doc["characters"]:
                    if character["name"] == payload["target"]:
                        character = dict(character)
                        attrs = dict(character["attributes"])
                        attire = attrs.get("attire", "")
                        attrs["attire"] = f"{attire}, freshly mended"
                        character["attributes"] = attrs
                        return {"character": character}
                raise BackendError(f"cannot regenerate unknown character {payload['target']!r}")
            return doc
        if role == ROLE_PROMPT_GENERATION:
            return synthesize_prompt_document(payload)
        if role == ROLE_REFLECTION:
            return synthesize_reflection_document(payload)
        raise BackendError(f"generative mock has no synthesizer for role {role!r}")


class ScriptedTextBackend(TextModelBackend):
    """Replies fed from per-role queues; exceptions in the queue are raised.

    Test helper for failure paths and exact-output scenarios.
    """

    def __init__(self, replies: dict[str, list[Any]], name: str = "scripted-text") -> None:
        super().__init__()
        self._queues = {role: list(items) for role, items in replies.items()}
        self.descriptor = BackendDescriptor(
            name=name,
            capability=Capability.TEXT,
            deterministic=True,
            concurrency_safe=False,
        )

    def complete(
        self, role: str, instruction: str, payload: dict[str, Any], retry_index: int = 0
    ) -> dict[str, Any]:
        started = time.monotonic()
        queue = self._queues.get(role)
        if not queue:
            raise BackendError(f"scripted backend has no reply queued for role {role!r}")
        reply = queue.pop(0)
        if isinstance(reply, Exception):
            raise reply
        self._record(role, digest_obj(payload), digest_obj(reply), started, retry_index)
        return reply


class TranscriptRecordingBackend(TextModelBackend):
    """Wraps another text backend and records (role, payload, reply) entries."""

    def __init__(self, inner: TextModelBackend) -> None:
        super().__init__()
        self.inner = inner
        self.entries: list[dict[str, Any]] = []
        self.descriptor = BackendDescriptor(
            name=f"recording({inner.descriptor.name})",
            capability=Capability.TEXT,
            deterministic=inner.descriptor.deterministic,
            concurrency_safe=False,
        )
        self.calls = inner.calls

    def complete(
        self, role: str, instruction: str, payload: dict[str, Any], retry_index: int = 0
    ) -> dict[str, Any]:
        reply = self.inner.complete(role, instruction, payload, retry_index)
        self.entries.append({"role": role, "payload": payload, "reply": reply})
        return reply

    def transcript_document(self) -> dict[str, Any]:
        return {"format": TRANSCRIPT_FORMAT, "entries": self.entries}

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.transcript_document(), indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )


__all__ = [
    "MockTextBackend",
    "ScriptedTextBackend",
    "TranscriptRecordingBackend",
    "ROLE_SCENE_EXTRACTION",
    "ROLE_CHARACTER_EXTRACTION",
    "ROLE_PROMPT_GENERATION",
    "ROLE_REFLECTION",
    "TRANSCRIPT_FORMAT",
    "split_sentences",
    "synthesize_scene_document",
    "synthesize_character_document",
]
