"""
Grid decoding: hard label grids to extractions or coordination structures.
"""

import math
from typing import Dict, List, Set, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from gridie.core.errors import InputValidationError
from gridie.core.schemas import (
    Alphabet,
    CoordinationStructure,
    CoordLabel,
    Extraction,
    LabelGrid,
    OieLabel,
    Sentence,
)
from gridie.utils.logger import get_logger

logger = get_logger(__name__)

_SEPARATOR_SURFACES = frozenset({","})


class DecodeConfig(BaseModel):
    """Row filters applied while decoding OpenIE grids."""
    model_config = ConfigDict(frozen=True)

    require_relation: bool = True
    require_subject: bool = False
    min_confidence: float = Field(-math.inf, le=0.0)


def grid_to_extractions(grid: LabelGrid, s: Sentence, cfg: DecodeConfig = DecodeConfig()) -> List[Extraction]:
    """
    Decode each row of an OpenIE grid into at most one extraction.

    Confidence is the mean log probability of the row's S/R/O cells; hard
    grids without distributions get confidence 0.

    Args:
        grid: OpenIE grid whose columns align with `s`
        s: Sentence, normally with appended tokens
        cfg: Row filters

    Returns:
        Extractions in row order
    """
    if grid.alphabet is not Alphabet.OIE:
        raise InputValidationError("grid_to_extractions needs an OpenIE grid")
    if grid.cols != len(s):
        raise InputValidationError(f"Grid has {grid.cols} columns for {len(s)} tokens")

    extractions = []
    for m in range(grid.rows):
        row = grid.labels[m]
        slots = {label: tuple(int(i) for i in np.flatnonzero(row == label)) for label in (OieLabel.S, OieLabel.R, OieLabel.O)}
        if not any(slots.values()):
            continue
        if not slots[OieLabel.R]:
            # Extraction cannot hold an empty relation, so require_relation=False
            # still drops these rows
            continue
        if cfg.require_subject and not slots[OieLabel.S]:
            continue

        labeled = np.flatnonzero(row != OieLabel.N)
        if grid.probs is None:
            confidence = 0.0
        else:
            picked = grid.probs[m, labeled, row[labeled]]
            confidence = float(np.mean(np.log(np.clip(picked, 1e-300, 1.0))))
        confidence = min(confidence, 0.0)
        if confidence < cfg.min_confidence:
            continue

        extractions.append(Extraction(
            subject=slots[OieLabel.S],
            relation=slots[OieLabel.R],
            obj=slots[OieLabel.O],
            confidence=confidence,
            source=s,
        ))
    return extractions


def _runs(row: np.ndarray, label: int) -> List[Tuple[int, int]]:
    runs: List[Tuple[int, int]] = []
    start = None
    for i, value in enumerate(row):
        if value == label and start is None:
            start = i
        elif value != label and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, len(row) - 1))
    return runs


def _is_separator(i: int, row: np.ndarray, s: Sentence) -> bool:
    return row[i] == CoordLabel.CC or s.tokens[i].surface in _SEPARATOR_SURFACES


def _gap_ok(lo: int, hi: int, row: np.ndarray, s: Sentence) -> bool:
    """True when every token in [lo, hi] is a separator (empty gap included)."""
    return all(_is_separator(i, row, s) for i in range(lo, hi + 1))


def _decode_row(level: int, row: np.ndarray, s: Sentence) -> List[CoordinationStructure]:
    runs = _runs(row, CoordLabel.CONJ)
    claimed: Set[int] = set()
    absorbed: Set[int] = set()
    structures = []

    for cc in np.flatnonzero(row == CoordLabel.CC):
        cc = int(cc)
        if cc in absorbed:
            continue
        chosen: List[int] = []

        left = [k for k, (_, end) in enumerate(runs) if end < cc]
        boundary = cc
        for k in reversed(left):
            if k in claimed or not _gap_ok(runs[k][1] + 1, boundary - 1, row, s):
                break
            chosen.append(k)
            boundary = runs[k][0]

        right = [k for k, (start, _) in enumerate(runs) if start > cc]
        boundary = cc
        for k in right:
            if k in claimed or not _gap_ok(boundary + 1, runs[k][0] - 1, row, s):
                break
            chosen.append(k)
            boundary = runs[k][1]

        if len(chosen) < 2:
            continue
        conjuncts = tuple(sorted(runs[k] for k in chosen))
        if not conjuncts[0][0] - 1 <= cc <= conjuncts[-1][1] + 1:
            # one-sided coordinator separated from its conjuncts by a comma
            logger.debug("coordination_dropped", level=level, coordinator=cc, reason="detached coordinator")
            continue
        structure = CoordinationStructure(level=level, coordinator=cc, conjuncts=conjuncts)
        claimed.update(chosen)
        lo, hi = structure.span
        absorbed.update(i for i in range(lo, hi + 1) if row[i] == CoordLabel.CC)
        structures.append(structure)
    return structures


def grid_to_coordinations(grid: LabelGrid, s: Sentence) -> List[CoordinationStructure]:
    """
    Decode a coordination grid, one hierarchy level per row.

    A CC token anchors a structure whose conjuncts are the CONJ runs reached
    from it across commas and other CC tokens only. Later CC tokens inside an
    emitted structure are absorbed into it.

    Args:
        grid: Coordination grid; columns may include appended tokens
        s: Sentence the columns refer to

    Returns:
        Structures ordered by level, then position
    """
    if grid.alphabet is not Alphabet.COORD:
        raise InputValidationError("grid_to_coordinations needs a coordination grid")
    if grid.cols != len(s):
        raise InputValidationError(f"Grid has {grid.cols} columns for {len(s)} tokens")

    by_level: Dict[int, List[CoordinationStructure]] = {}
    for m in range(grid.rows):
        by_level[m] = _decode_row(m, grid.labels[m], s)

    for m in range(1, grid.rows):
        outer = by_level[m - 1]
        for inner in by_level[m]:
            if outer and not any(o.contains(inner) for o in outer):
                logger.warning("coordination_not_nested", level=m, coordinator=inner.coordinator)

    return [structure for m in range(grid.rows) for structure in by_level[m]]
