"""
End-to-end OpenIE: coordination-based splitting, extraction over the simple
sentences, then rescoring, de-duplication and merging.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Protocol, Sequence, Tuple

from pydantic import BaseModel, ConfigDict

from gridie.core.decode import DecodeConfig, grid_to_coordinations, grid_to_extractions
from gridie.core.errors import InputValidationError, ModelMismatchError, SentenceTooLongError
from gridie.core.lingo import append_special, tokenize
from gridie.core.schemas import (
    Alphabet,
    CoordinationStructure,
    Extraction,
    Sentence,
    normalize_extraction,
)
from gridie.nnet.predictor import GridLabeler
from gridie.utils.logger import get_logger

logger = get_logger(__name__)

NON_SPLITTING_PREDECESSORS = frozenset({"between"})


# ============================================================================
# Sentence splitting
# ============================================================================

class SplitNode(BaseModel):
    """One sentence in the split tree and the substitution that produced it."""
    model_config = ConfigDict(frozen=True)

    sentence: Sentence
    replaced: Optional[CoordinationStructure] = None
    chosen: Optional[int] = None
    children: Tuple["SplitNode", ...] = ()


class SplitTree(BaseModel):
    """Root sentence, substitution tree and de-duplicated leaves."""
    model_config = ConfigDict(frozen=True)

    root: SplitNode
    leaves: Tuple[Sentence, ...]


def _remap(structure: CoordinationStructure, target: CoordinationStructure, k: int) -> Optional[CoordinationStructure]:
    """Positions of `structure` after replacing `target` by its k-th conjunct, or None if dropped."""
    lo, hi = target.span
    cs, ce = target.conjuncts[k]
    s_lo, s_hi = structure.span

    if s_hi < lo or s_lo > hi:
        shift = 0 if s_hi < lo else (ce - cs + 1) - (hi - lo + 1)
    elif cs <= s_lo and s_hi <= ce:
        shift = lo - cs
    else:
        return None
    return CoordinationStructure(
        level=structure.level,
        coordinator=structure.coordinator + shift,
        conjuncts=tuple((a + shift, b + shift) for a, b in structure.conjuncts),
    )


def _check_overlaps(structures: Sequence[CoordinationStructure]) -> None:
    by_level: Dict[int, List[CoordinationStructure]] = {}
    for structure in structures:
        by_level.setdefault(structure.level, []).append(structure)
    for level, group in by_level.items():
        spans = sorted(s.span for s in group)
        for (_, prev_hi), (lo, _) in zip(spans, spans[1:]):
            if lo <= prev_hi:
                raise InputValidationError(f"Overlapping coordination structures at level {level}")


def _split(sentence: Sentence, structures: List[CoordinationStructure]) -> SplitNode:
    pending = sorted(structures, key=lambda s: (s.level, s.span))
    while pending:
        target = pending[0]
        lo, _ = target.span
        if lo > 0 and sentence.tokens[lo - 1].surface.lower() in NON_SPLITTING_PREDECESSORS:
            logger.debug("coordination_not_split", coordinator=target.coordinator, reason="between")
            pending = pending[1:]
            continue
        break
    if not pending:
        return SplitNode(sentence=sentence)

    target, rest = pending[0], pending[1:]
    surfaces = sentence.surfaces
    lo, hi = target.span
    children = []
    for k, (cs, ce) in enumerate(target.conjuncts):
        leaf = Sentence.from_surfaces(surfaces[:lo] + surfaces[cs:ce + 1] + surfaces[hi + 1:])
        remaining = [r for r in (_remap(s, target, k) for s in rest) if r is not None]
        child = _split(leaf, remaining)
        children.append(child.model_copy(update={"replaced": target, "chosen": k}))
    return SplitNode(sentence=sentence, children=tuple(children))


def _leaves(node: SplitNode) -> List[Sentence]:
    if not node.children:
        return [node.sentence]
    return [leaf for child in node.children for leaf in _leaves(child)]


def split_sentence(s: Sentence, structures: Sequence[CoordinationStructure]) -> SplitTree:
    """
    Replace each coordination structure by each of its conjuncts in turn.

    Outermost levels go first; inner structures are carried into the leaves
    that keep them. A structure directly preceded by "between" is left intact.

    Args:
        s: Sentence without appended tokens
        structures: Structures decoded from `s`

    Returns:
        SplitTree whose leaves are the de-duplicated simple sentences

    Raises:
        InputValidationError: If structures of one level overlap
    """
    if s.has_appended:
        raise InputValidationError("Split the sentence before appending special tokens")
    _check_overlaps(structures)
    root = _split(s, list(structures))
    seen = set()
    leaves = []
    for leaf in _leaves(root):
        key = tuple(leaf.surfaces)
        if key not in seen:
            seen.add(key)
            leaves.append(leaf)
    return SplitTree(root=root, leaves=tuple(leaves))


# ============================================================================
# Rescoring
# ============================================================================

class RescorerPlugin(Protocol):
    """Re-estimates an extraction's confidence against the original sentence."""

    def rescore(self, sentence: Sentence, extraction: Extraction) -> float:
        ...


class IdentityRescorer:
    """Keeps the decoder's confidence."""

    def rescore(self, sentence: Sentence, extraction: Extraction) -> float:
        return extraction.confidence


# ============================================================================
# Extraction
# ============================================================================

class SentenceResult(BaseModel):
    """Pipeline output for one input sentence."""
    model_config = ConfigDict(frozen=True)

    sentence: Sentence
    extractions: Tuple[Extraction, ...]
    leaves: int


def merge_extractions(extractions: Sequence[Extraction]) -> List[Extraction]:
    """De-duplicate by normalized text keeping the most confident copy; sort by confidence."""
    keyed = [(normalize_extraction(e, e.source), e) for e in extractions]
    keyed.sort(key=lambda item: (-item[1].confidence, item[0]))
    seen = set()
    merged = []
    for key, extraction in keyed:
        if key not in seen:
            seen.add(key)
            merged.append(extraction)
    return merged


class ExtractionPipeline:
    """
    Coordination analyzer (optional) followed by the OpenIE extractor.
    """

    def __init__(
        self,
        extractor: GridLabeler,
        coordinator: Optional[GridLabeler] = None,
        rescorer: Optional[RescorerPlugin] = None,
        decode_config: DecodeConfig = DecodeConfig(),
    ):
        if extractor.alphabet is not Alphabet.OIE:
            raise ModelMismatchError("Extractor must label the OpenIE alphabet")
        if coordinator is not None and coordinator.alphabet is not Alphabet.COORD:
            raise ModelMismatchError("Coordination analyzer must label the coordination alphabet")
        self.extractor = extractor
        self.coordinator = coordinator
        self.rescorer = rescorer or IdentityRescorer()
        self.decode_config = decode_config

    def split(self, sentence: Sentence) -> List[Sentence]:
        if self.coordinator is None:
            return [sentence]
        grid = self.coordinator.label([sentence])[0]
        structures = grid_to_coordinations(grid, sentence)
        return list(split_sentence(sentence, structures).leaves)

    def run(self, raw: str, sentence_id: Optional[str] = None) -> SentenceResult:
        """
        Split, extract, rescore and merge one raw sentence.

        A sentence longer than a model accepts yields no extractions.
        """
        sentence = tokenize(raw)
        try:
            leaves = [append_special(leaf) for leaf in self.split(sentence)]
            grids = self.extractor.label(leaves)
        except SentenceTooLongError as e:
            logger.warning("sentence_too_long", sentence_id=sentence_id, tokens=e.tokens, max_len=e.max_len)
            return SentenceResult(sentence=sentence, extractions=(), leaves=0)
        found: List[Extraction] = []
        for leaf, grid in zip(leaves, grids):
            found.extend(grid_to_extractions(grid, leaf, self.decode_config))
        rescored = [
            e.model_copy(update={"confidence": min(0.0, float(self.rescorer.rescore(sentence, e)))})
            for e in merge_extractions(found)
        ]
        ordered = merge_extractions(rescored)
        logger.debug("sentence_extracted", leaves=len(leaves), extractions=len(ordered))
        return SentenceResult(sentence=sentence, extractions=tuple(ordered), leaves=len(leaves))

    def run_many(
        self,
        raws: Sequence[str],
        workers: int = 1,
        ids: Optional[Sequence[str]] = None,
    ) -> List[SentenceResult]:
        """Results in input order regardless of completion order; ids default to 1-based positions."""
        ids = list(ids) if ids is not None else [str(k) for k in range(1, len(raws) + 1)]
        if len(ids) != len(raws):
            raise InputValidationError(f"{len(ids)} ids for {len(raws)} sentences")
        if workers <= 1:
            return [self.run(raw, sentence_id) for raw, sentence_id in zip(raws, ids)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(self.run, raws, ids))


def extract(
    s_raw: str,
    extractor: GridLabeler,
    coordinator: Optional[GridLabeler] = None,
    cfg: DecodeConfig = DecodeConfig(),
    rescorer: Optional[RescorerPlugin] = None,
) -> List[Extraction]:
    """Extractions of one raw sentence, most confident first."""
    return list(ExtractionPipeline(extractor, coordinator, rescorer, cfg).run(s_raw).extractions)
