"""
Gold alignment: text triples from training data to rows of label indices.
"""

from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict

from gridie.core.errors import InputValidationError
from gridie.core.lingo import append_special, split_words
from gridie.core.schemas import APPENDED_SURFACES, Alphabet, LabelGrid, OieLabel, Sentence
from gridie.utils.logger import get_logger

logger = get_logger(__name__)

Span = Tuple[int, ...]

# Unbracketed relation words that may stand for an appended token
_IMPLICIT_APPENDED = {surface[1:-1]: surface for surface in APPENDED_SURFACES}


class GoldTriple(BaseModel):
    """Text triple from a training or benchmark file."""
    model_config = ConfigDict(frozen=True)

    subject: str = ""
    relation: str
    obj: str = ""


class SkipMarker(BaseModel):
    """A gold triple that could not be anchored to the sentence."""
    model_config = ConfigDict(frozen=True)

    reason: str


class AlignmentStats(BaseModel):
    """Counts reported after aligning a training corpus."""
    aligned: int = 0
    skipped: Dict[str, int] = {}
    truncated: int = 0

    @property
    def total_skipped(self) -> int:
        return sum(self.skipped.values())

    @property
    def coverage(self) -> float:
        total = self.aligned + self.total_skipped
        return self.aligned / total if total else 0.0

    def skip(self, marker: SkipMarker) -> None:
        self.skipped[marker.reason] = self.skipped.get(marker.reason, 0) + 1


def _find_spans(words: Sequence[str], surfaces: Sequence[str]) -> List[Span]:
    """Every contiguous occurrence of `words` in `surfaces` (case-insensitive)."""
    target = [w.casefold() for w in words]
    folded = [s.casefold() for s in surfaces]
    width = len(target)
    return [
        tuple(range(start, start + width))
        for start in range(len(folded) - width + 1)
        if folded[start:start + width] == target
    ]


def _appended_index(s: Sentence, surface: str) -> int:
    return s.n_real + APPENDED_SURFACES.index(surface)


def _relation_candidates(words: List[str], s: Sentence) -> List[Span]:
    real = s.surfaces[: s.n_real]
    fixed = [_appended_index(s, w) for w in words if w in APPENDED_SURFACES]
    rest = [w for w in words if w not in APPENDED_SURFACES]
    if not rest:
        return [tuple(sorted(fixed))]
    spans = _find_spans(rest, real)
    if not spans:
        # is/of/from absent from the sentence fall back to the appended tokens
        present = {w.casefold() for w in real}
        implicit = [w for w in rest if w.casefold() in _IMPLICIT_APPENDED and w.casefold() not in present]
        if implicit:
            fixed = fixed + [_appended_index(s, _IMPLICIT_APPENDED[w.casefold()]) for w in implicit]
            rest = [w for w in rest if w not in implicit]
            spans = _find_spans(rest, real) if rest else [()]
    return [tuple(sorted(span + tuple(fixed))) for span in spans]


def _distance(span: Span, anchor: Sequence[int]) -> int:
    return min(abs(i - j) for i in span for j in anchor)


def align_gold(s: Sentence, triple: GoldTriple) -> Union[np.ndarray, SkipMarker]:
    """
    Anchor a gold triple to token indices of `s`.

    Each slot matches a contiguous token sequence; bracketed relation words map
    to the appended tokens. When the relation is unique, subjects before it
    and objects after it are preferred. With exactly one ambiguous argument
    the occurrence nearest the anchored slots wins (first on ties); two or
    more ambiguous arguments skip the triple.

    Args:
        s: Sentence; appended tokens are added when missing
        triple: Gold text triple

    Returns:
        Row of OpenIE labels over the appended sentence, or a SkipMarker
    """
    if not s.has_appended:
        s = append_special(s)
    real = s.surfaces[: s.n_real]

    relation_words = split_words(triple.relation)
    if not relation_words:
        return SkipMarker(reason="empty relation")
    candidates: Dict[str, List[Span]] = {"relation": _relation_candidates(relation_words, s)}
    for slot in ("subject", "obj"):
        words = split_words(getattr(triple, slot))
        candidates[slot] = _find_spans(words, real) if words else [()]

    for slot, spans in candidates.items():
        if not spans:
            return SkipMarker(reason=f"no match for {'object' if slot == 'obj' else slot}")

    if len(candidates["relation"]) == 1:
        relation = candidates["relation"][0]
        real_relation = [i for i in relation if i < s.n_real]
        if real_relation:
            before = [c for c in candidates["subject"] if c and c[-1] < real_relation[0]]
            after = [c for c in candidates["obj"] if c and c[0] > real_relation[-1]]
            if before:
                candidates["subject"] = before
            if after:
                candidates["obj"] = after

    anchored = {i for spans in candidates.values() if len(spans) == 1 for i in spans[0]}
    for slot, spans in candidates.items():
        if len(spans) > 1:
            free = [c for c in spans if anchored.isdisjoint(c)]
            candidates[slot] = free or spans

    ambiguous = [slot for slot, spans in candidates.items() if len(spans) > 1]
    if len(ambiguous) > 1:
        return SkipMarker(reason="ambiguous")
    chosen: Dict[str, Span] = {slot: spans[0] for slot, spans in candidates.items()}
    if ambiguous:
        slot = ambiguous[0]
        anchor = [i for other, span in chosen.items() if other != slot for i in span]
        if anchor:
            chosen[slot] = min(candidates[slot], key=lambda c: _distance(c, anchor))

    row = np.full(len(s), OieLabel.N, dtype=np.int64)
    for slot, label in (("subject", OieLabel.S), ("relation", OieLabel.R), ("obj", OieLabel.O)):
        span = list(chosen[slot])
        if np.any(row[span] != OieLabel.N):
            return SkipMarker(reason="overlapping slots")
        row[span] = label
    return row


def gold_grid(
    s: Sentence,
    triples: Sequence[GoldTriple],
    levels: int,
    stats: Optional[AlignmentStats] = None,
) -> LabelGrid:
    """
    Stack the aligned rows of a sentence into an OpenIE training grid.

    Rows are ordered by first relation token, then first subject token; rows
    beyond `levels` are dropped and the rest padded with N.

    Raises:
        InputValidationError: If `levels` is not positive
    """
    if levels < 1:
        raise InputValidationError("levels must be positive")
    if not s.has_appended:
        s = append_special(s)
    stats = stats if stats is not None else AlignmentStats()

    rows: List[np.ndarray] = []
    for triple in triples:
        aligned = align_gold(s, triple)
        if isinstance(aligned, SkipMarker):
            stats.skip(aligned)
            logger.debug("gold_skipped", sentence=s.raw, relation=triple.relation, reason=aligned.reason)
            continue
        stats.aligned += 1
        rows.append(aligned)

    def order(row: np.ndarray) -> Tuple[int, int]:
        subject = np.flatnonzero(row == OieLabel.S)
        return int(np.flatnonzero(row == OieLabel.R)[0]), int(subject[0]) if subject.size else -1

    rows.sort(key=order)
    if len(rows) > levels:
        stats.truncated += len(rows) - levels
        logger.warning("gold_rows_truncated", sentence=s.raw, rows=len(rows), levels=levels)
        rows = rows[:levels]
    labels = np.zeros((levels, len(s)), dtype=np.int64)
    for m, row in enumerate(rows):
        labels[m] = row
    return LabelGrid(alphabet=Alphabet.OIE, labels=labels)
