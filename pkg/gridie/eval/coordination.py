"""
Exact-match scoring of predicted coordination structures.
"""

from typing import Mapping, Sequence, Set, Tuple

from gridie.core.schemas import CoordinationStructure
from gridie.eval.scoring import ScoreReport
from gridie.utils.logger import get_logger

logger = get_logger(__name__)

StructureKey = Tuple[int, Tuple[Tuple[int, int], ...]]


def _keys(structures: Sequence[CoordinationStructure]) -> Set[StructureKey]:
    # level is ignored; a structure found at the wrong depth still counts
    return {(s.coordinator, s.conjuncts) for s in structures}


def coord_score(
    predicted: Mapping[str, Sequence[CoordinationStructure]],
    gold: Mapping[str, Sequence[CoordinationStructure]],
) -> ScoreReport:
    """
    Precision and recall of structures whose coordinator and every conjunct
    boundary match a gold structure.

    Args:
        predicted: Sentence key -> decoded structures
        gold: Sentence key -> gold structures

    Returns:
        ScoreReport named "coord"
    """
    matched = predicted_count = gold_count = 0
    for key in set(predicted) | set(gold):
        p = _keys(predicted.get(key, ()))
        g = _keys(gold.get(key, ()))
        matched += len(p & g)
        predicted_count += len(p)
        gold_count += len(g)
    logger.debug("coordination_scored", matched=matched, predicted=predicted_count, gold=gold_count)
    return ScoreReport.from_fractions(
        "coord",
        matched / predicted_count if predicted_count else 0.0,
        matched / gold_count if gold_count else 0.0,
    )
