"""CHAT (.cha) transcript parsing and clinician-turn excision.

Parsing is total: any UTF-8 input yields a Transcript plus warnings, never
an exception. Main tiers (``*PAR:``) become turns; ``@`` headers and ``%``
dependent tiers are kept as metadata; the NAK-delimited media bullets
(``\\x15start_end\\x15``) supply millisecond timing.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field

import numpy as np

from .audio import AudioBuffer
from .errors import ClampedIntervalWarning, EmptySelection, UntimedTurnsWarning

BULLET = "\x15"
MERGE_GAP_MS = 50

_BULLET_RE = re.compile("\x15([^\x15]*)\x15")
_SPEAKER_RE = re.compile(r"^\*([A-Z0-9]{3}):")
_DEPENDENT_RE = re.compile(r"^%(\w+):")
_HEADER_RE = re.compile(r"^@([^:]+):?\s*(.*)$")


@dataclass
class Turn:
    """One main-tier utterance by a single speaker."""

    speaker: str
    tokens: list[str]
    interval: tuple[int, int] | None = None


@dataclass
class Transcript:
    turns: list[Turn] = field(default_factory=list)
    participant_id: str = ""
    metadata: dict[str, list[str]] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


def parse_cha(text: str) -> Transcript:
    """Parse CHAT text into speaker turns with timing."""
    t = Transcript()
    current: Turn | None = None
    current_dependent: str | None = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\n\r")
        if not line.strip():
            continue
        if line.startswith(("\t", " ")) and (current or current_dependent):
            # continuation of the most recent tier
            if current_dependent is not None:
                t.metadata[current_dependent][-1] += " " + line.strip()
            elif current is not None:
                _extend_turn(current, line.strip(), t, lineno)
            continue
        current_dependent = None
        if line.startswith("@"):
            current = None
            m = _HEADER_RE.match(line)
            if m:
                t.metadata.setdefault(m.group(1).strip(), []).append(
                    m.group(2).strip()
                )
            continue
        if line.startswith("%"):
            m = _DEPENDENT_RE.match(line)
            if m:
                key = "%" + m.group(1)
                t.metadata.setdefault(key, []).append(
                    line[m.end():].strip()
                )
                current_dependent = key
            else:
                t.warnings.append(f"line {lineno}: malformed dependent tier")
            continue
        if line.startswith("*"):
            m = _SPEAKER_RE.match(line)
            if not m:
                t.warnings.append(
                    f"line {lineno}: main tier without speaker code"
                )
                current = None
                continue
            current = Turn(speaker=m.group(1), tokens=[])
            t.turns.append(current)
            _extend_turn(current, line[m.end():].strip(), t, lineno)
            continue
        # bare text outside any tier: tolerated, appended when mid-turn
        if current is not None:
            _extend_turn(current, line.strip(), t, lineno)
        else:
            t.warnings.append(f"line {lineno}: text outside any tier")

    _fill_participant_id(t)
    return t


def _extend_turn(turn: Turn, text: str, t: Transcript, lineno: int) -> None:
    rest = text
    for m in _BULLET_RE.finditer(text):
        iv = _parse_bullet(m.group(1))
        if iv is None:
            t.warnings.append(f"line {lineno}: bad bullet {m.group(1)!r}")
        else:
            if turn.interval is None:
                turn.interval = iv
            else:
                turn.interval = (
                    min(turn.interval[0], iv[0]),
                    max(turn.interval[1], iv[1]),
                )
    rest = _BULLET_RE.sub(" ", rest)
    turn.tokens.extend(clean_tokens(rest))


def _parse_bullet(body: str) -> tuple[int, int] | None:
    parts = body.split("_")
    if len(parts) != 2 or not all(p.isdigit() for p in parts):
        return None
    start, end = int(parts[0]), int(parts[1])
    if start > end:
        return None
    return start, end


_BRACKETED = re.compile(r"\[[^\]]*\]|<[^>]*>")
_PUNCT = ".,;:!?\"'«»„“”‘’/\\|#*^~@"


def clean_tokens(text: str) -> list[str]:
    """Strip CHAT annotation codes and return plain word tokens.

    Removes bracketed material ``[...]``, retraction marks ``<...>``,
    ``&``-prefixed fillers, ``+`` terminators, and punctuation. Parentheses
    inside words (omitted letters) are deleted but the content is kept.
    """
    text = _BRACKETED.sub(" ", text)
    out: list[str] = []
    for tok in text.split():
        if tok.startswith(("&", "+")):
            continue
        tok = tok.replace("(", "").replace(")", "")
        tok = tok.strip(_PUNCT + "<>[]")
        tok = tok.strip()
        if tok and not all(ch in _PUNCT for ch in tok):
            out.append(tok)
    return out


def _fill_participant_id(t: Transcript) -> None:
    for entry in t.metadata.get("ID", []):
        fields = entry.split("|")
        if len(fields) > 7 and "participant" in fields[7].lower():
            t.participant_id = fields[2]
            return
    for entry in t.metadata.get("ID", []):
        fields = entry.split("|")
        if len(fields) > 2 and fields[2] == "PAR":
            t.participant_id = "PAR"
            return
    if t.turns:
        t.participant_id = t.turns[0].speaker


def participant_intervals(
    t: Transcript, speaker: str, merge_gap_ms: int = MERGE_GAP_MS
) -> list[tuple[int, int]]:
    """Merged, sorted (start_ms, end_ms) spans for one speaker.

    Overlapping or near-adjacent (gap <= merge_gap_ms) spans are merged.
    Turns without timing are skipped and counted in a warning.
    """
    spans = []
    untimed = 0
    for turn in t.turns:
        if turn.speaker != speaker:
            continue
        if turn.interval is None:
            untimed += 1
        else:
            spans.append(turn.interval)
    if untimed:
        warnings.warn(
            f"{untimed} {speaker} turn(s) lack timing and were skipped",
            UntimedTurnsWarning,
        )
    spans.sort()
    merged: list[tuple[int, int]] = []
    for start, end in spans:
        if merged and start <= merged[-1][1] + merge_gap_ms:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return merged


def word_count(t: Transcript, speaker: str) -> int:
    return sum(len(turn.tokens) for turn in t.turns if turn.speaker == speaker)


def excise_segments(
    audio: AudioBuffer, keep: list[tuple[int, int]]
) -> AudioBuffer:
    """Concatenate the audio restricted to the kept millisecond intervals."""
    sr = audio.sample_rate
    n = len(audio)
    pieces = []
    clamped = False
    for start_ms, end_ms in keep:
        a = int(round(start_ms * sr / 1000.0))
        b = int(round(end_ms * sr / 1000.0))
        if a < 0 or b > n:
            clamped = True
        a, b = max(a, 0), min(b, n)
        if b > a:
            pieces.append(audio.samples[a:b])
    if clamped:
        warnings.warn(
            "keep-intervals extended past the audio and were clamped",
            ClampedIntervalWarning,
        )
    if not pieces:
        raise EmptySelection("no keep-interval overlaps the audio")
    return AudioBuffer(np.concatenate(pieces), sr)
