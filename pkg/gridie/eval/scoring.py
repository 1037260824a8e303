"""
Benchmark scorers: CaRB, CaRB(1-1), OIE16-C and Wire57-C, plus
precision-recall curves and their area.
"""

from collections import Counter
from functools import lru_cache
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from gridie.core.errors import InputValidationError, UnsupportedMetricError
from gridie.core.lingo import split_words
from gridie.core.schemas import APPENDED_SURFACES, Extraction
from gridie.eval.matching import greedy_matching, max_weight_assignment, pair_matrix
from gridie.utils.logger import get_logger

logger = get_logger(__name__)

SLOTS = ("subject", "relation", "obj")


class TupleRecord(BaseModel):
    """Text triple of a system or gold file."""
    model_config = ConfigDict(frozen=True)

    subject: str = ""
    relation: str
    obj: str = ""
    confidence: float = 0.0

    def slot_words(self, slot: str) -> Tuple[str, ...]:
        return _words(getattr(self, slot))

    @property
    def words(self) -> Tuple[str, ...]:
        return tuple(w for slot in SLOTS for w in self.slot_words(slot))

    @classmethod
    def from_extraction(cls, e: Extraction) -> "TupleRecord":
        subject, relation, obj = e.texts(bracketed=False)
        return cls(subject=subject, relation=relation, obj=obj, confidence=e.confidence)


Corpus = Mapping[str, Sequence[TupleRecord]]


class CurvePoint(BaseModel):
    threshold: float
    precision: float
    recall: float


class ScoreReport(BaseModel):
    """Corpus-level scores on the percent scale."""
    scorer: str
    precision: float = Field(..., ge=0.0, le=100.0)
    recall: float = Field(..., ge=0.0, le=100.0)
    f1: float = Field(..., ge=0.0, le=100.0)
    curve: Optional[List[CurvePoint]] = None
    auc: Optional[float] = None

    @classmethod
    def from_fractions(cls, scorer: str, precision: float, recall: float) -> "ScoreReport":
        p, r = 100.0 * min(precision, 1.0), 100.0 * min(recall, 1.0)
        f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
        return cls(scorer=scorer, precision=p, recall=r, f1=f1)

    def tsv(self) -> str:
        auc = f"{self.auc:.2f}" if self.auc is not None else "n/a"
        return f"{self.scorer}\t{self.precision:.2f}\t{self.recall:.2f}\t{self.f1:.2f}\t{auc}"


class MatchTable(BaseModel):
    """Directional pair similarities of one sentence: rows are gold, columns system."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    precision: np.ndarray
    recall: np.ndarray


@lru_cache(maxsize=65536)
def _words(text: str) -> Tuple[str, ...]:
    # "[is]" in a gold file matches "is" in a system file
    return tuple((w[1:-1] if w in APPENDED_SURFACES else w).casefold() for w in split_words(text))


def _shared(a: Sequence[str], b: Sequence[str]) -> int:
    """Multiset intersection size."""
    return sum((Counter(a) & Counter(b)).values())


def carb_similarity(gold: TupleRecord, system: TupleRecord) -> Tuple[float, float]:
    """
    (precision-side, recall-side) similarity of a pair.

    Shared tokens are counted slot by slot; the pair scores zero unless the
    relations share at least one token.
    """
    if _shared(gold.slot_words("relation"), system.slot_words("relation")) == 0:
        return 0.0, 0.0
    matched = sum(_shared(gold.slot_words(s), system.slot_words(s)) for s in SLOTS)
    system_len = len(system.words)
    gold_len = len(gold.words)
    return (
        matched / system_len if system_len else 0.0,
        matched / gold_len if gold_len else 0.0,
    )


def match_table(gold: Sequence[TupleRecord], system: Sequence[TupleRecord]) -> MatchTable:
    precision = pair_matrix(gold, system, lambda g, e: carb_similarity(g, e)[0])
    recall = pair_matrix(gold, system, lambda g, e: carb_similarity(g, e)[1])
    return MatchTable(precision=precision, recall=recall)


def _aligned(system: Corpus, gold: Corpus) -> List[Tuple[Sequence[TupleRecord], Sequence[TupleRecord]]]:
    """(gold, system) lists per sentence; unknown system keys keep an empty gold list."""
    unknown = sorted(set(system) - set(gold))
    if unknown:
        logger.warning("unknown_sentence_keys", count=len(unknown), first=unknown[0])
    keys = sorted(set(gold) | set(system))
    return [(gold.get(k, ()), system.get(k, ())) for k in keys]


def _carb(system: Corpus, gold: Corpus, one_to_one: bool, name: str) -> ScoreReport:
    precision_sum = recall_sum = 0.0
    system_count = gold_count = 0
    for gold_tuples, system_tuples in _aligned(system, gold):
        system_count += len(system_tuples)
        gold_count += len(gold_tuples)
        if not gold_tuples or not system_tuples:
            continue
        table = match_table(gold_tuples, system_tuples)
        pairs = max_weight_assignment(table.precision)
        precision_sum += sum(table.precision[g, e] for g, e in pairs)
        if one_to_one:
            # recall is read off the same pairs that precision was scored on
            recall_sum += sum(table.recall[g, e] for g, e in pairs)
        else:
            recall_sum += float(table.recall.max(axis=1).sum())
    return ScoreReport.from_fractions(
        name,
        precision_sum / system_count if system_count else 0.0,
        recall_sum / gold_count if gold_count else 0.0,
    )


def carb_score(system: Corpus, gold: Corpus) -> ScoreReport:
    """
    CaRB: one-to-one matching for precision, many-to-one for recall.

    Args:
        system: Sentence key -> system tuples
        gold: Sentence key -> gold tuples

    Returns:
        Micro-averaged ScoreReport
    """
    return _carb(system, gold, one_to_one=False, name="carb")


def carb_one_one(system: Corpus, gold: Corpus) -> ScoreReport:
    """CaRB with one-to-one matching for recall as well."""
    return _carb(system, gold, one_to_one=True, name="carb_one_one")


def _text_tie_break(gold: Sequence[TupleRecord], system: Sequence[TupleRecord]) -> Callable[[int, int], Tuple]:
    def slots(record: TupleRecord) -> Tuple[Tuple[str, ...], ...]:
        return tuple(record.slot_words(s) for s in SLOTS)

    return lambda g, e: (slots(gold[g]), slots(system[e]))


def oie16c_score(system: Corpus, gold: Corpus) -> ScoreReport:
    """Greedy one-to-one matching on shared words of the serialized tuples."""
    matched_system = matched_gold = system_count = gold_count = 0
    for gold_tuples, system_tuples in _aligned(system, gold):
        system_count += len(system_tuples)
        gold_count += len(gold_tuples)
        weights = pair_matrix(gold_tuples, system_tuples, lambda g, e: _shared(g.words, e.words))
        pairs = greedy_matching(weights, _text_tie_break(gold_tuples, system_tuples))
        matched_system += len(pairs)
        matched_gold += len(pairs)
    return ScoreReport.from_fractions(
        "oie16c",
        matched_system / system_count if system_count else 0.0,
        matched_gold / gold_count if gold_count else 0.0,
    )


def wire57_candidate(gold: TupleRecord, system: TupleRecord) -> bool:
    """Every non-empty gold slot shares a word with the same system slot."""
    return all(
        _shared(gold.slot_words(s), system.slot_words(s)) > 0
        for s in SLOTS
        if gold.slot_words(s)
    )


def _token_f1(gold: TupleRecord, system: TupleRecord) -> float:
    matched = sum(_shared(gold.slot_words(s), system.slot_words(s)) for s in SLOTS)
    total = len(gold.words) + len(system.words)
    return 2.0 * matched / total if total else 0.0


def wire57c_score(system: Corpus, gold: Corpus) -> ScoreReport:
    """Token-level precision and recall over greedy F1 matches of candidate pairs."""
    matched_tokens = system_tokens = gold_tokens = 0
    for gold_tuples, system_tuples in _aligned(system, gold):
        system_tokens += sum(len(e.words) for e in system_tuples)
        gold_tokens += sum(len(g.words) for g in gold_tuples)
        weights = pair_matrix(
            gold_tuples,
            system_tuples,
            lambda g, e: _token_f1(g, e) if wire57_candidate(g, e) else 0.0,
        )
        for g, e in greedy_matching(weights, _text_tie_break(gold_tuples, system_tuples)):
            matched_tokens += sum(
                _shared(gold_tuples[g].slot_words(s), system_tuples[e].slot_words(s)) for s in SLOTS
            )
    return ScoreReport.from_fractions(
        "wire57c",
        matched_tokens / system_tokens if system_tokens else 0.0,
        matched_tokens / gold_tokens if gold_tokens else 0.0,
    )


SCORERS: Dict[str, Callable[[Corpus, Corpus], ScoreReport]] = {
    "carb": carb_score,
    "carb_one_one": carb_one_one,
    "oie16c": oie16c_score,
    "wire57c": wire57c_score,
}

CURVE_SCORERS = ("carb", "carb_one_one", "oie16c")


def get_scorer(name: str) -> Callable[[Corpus, Corpus], ScoreReport]:
    try:
        return SCORERS[name]
    except KeyError:
        raise InputValidationError(f"Unknown scorer '{name}'; expected one of {sorted(SCORERS)}") from None


def _staircase_auc(points: Sequence[CurvePoint]) -> float:
    ordered = sorted(points, key=lambda p: (p.recall, p.precision))
    recalls = np.array([p.recall for p in ordered]) / 100.0
    precisions = np.array([p.precision for p in ordered]) / 100.0
    # precision at a recall level is the best precision reachable at that recall or higher
    precisions = np.maximum.accumulate(precisions[::-1])[::-1]
    recalls = np.concatenate([[0.0], recalls])
    precisions = np.concatenate([[precisions[0]], precisions])
    return 100.0 * float(np.trapezoid(precisions, recalls))


def pr_curve_auc(system: Corpus, gold: Corpus, scorer: str = "carb") -> ScoreReport:
    """
    Sweep confidence thresholds and integrate the precision-recall curve.

    At every distinct confidence (descending) only extractions at or above it
    are kept and scored. The returned report carries the scores of the full
    system output, the curve and its area.

    Raises:
        UnsupportedMetricError: For Wire57-C, whose recall is not monotone in the threshold
    """
    if scorer == "wire57c":
        raise UnsupportedMetricError("AUC undefined for Wire57-C")
    if scorer not in CURVE_SCORERS:
        raise InputValidationError(f"Unknown scorer '{scorer}'; expected one of {list(CURVE_SCORERS)}")
    score = SCORERS[scorer]

    thresholds = sorted({t.confidence for tuples in system.values() for t in tuples}, reverse=True)
    curve: List[CurvePoint] = []
    for threshold in thresholds:
        kept = {k: [t for t in tuples if t.confidence >= threshold] for k, tuples in system.items()}
        report = score(kept, gold)
        curve.append(CurvePoint(threshold=threshold, precision=report.precision, recall=report.recall))

    full = score(system, gold)
    auc = _staircase_auc(curve) if curve else 0.0
    return full.model_copy(update={"curve": curve, "auc": auc})
