"""
Coverage constraints over OpenIE grids.

Soft penalties are differentiable functions of the label distributions and
are added to the cross-entropy objective after warmup. Discrete violation
counts over hard grids are reported during training and evaluation.
"""

from typing import Sequence, Tuple

import numpy as np
import torch
from pydantic import BaseModel, ConfigDict, Field

from gridie.core.errors import InputValidationError
from gridie.core.lingo import TokenMasks
from gridie.core.schemas import LabelGrid, OieLabel
from gridie.nnet.model import ForwardTrace, ce_loss

_ARGUMENT_LABELS = [int(OieLabel.S), int(OieLabel.R), int(OieLabel.O)]


class PenaltyWeights(BaseModel):
    """Lambda weights of the four penalties."""
    model_config = ConfigDict(frozen=True)

    posc: float = Field(3.0, ge=0.0, allow_inf_nan=False)
    hvc: float = Field(3.0, ge=0.0, allow_inf_nan=False)
    hve: float = Field(3.0, ge=0.0, allow_inf_nan=False)
    ec: float = Field(3.0, ge=0.0, allow_inf_nan=False)

    @classmethod
    def preset(cls, name: str, value: float = 3.0) -> "PenaltyWeights":
        """
        Weights for a constraint group.

        `posc` trains with POS coverage alone, `headverb` with the head-verb
        group (HVC, HVE, EC), `all` with all four and `none` with none.
        """
        if name == "all":
            return cls(posc=value, hvc=value, hve=value, ec=value)
        if name == "posc":
            return cls(posc=value, hvc=0.0, hve=0.0, ec=0.0)
        if name == "headverb":
            return cls(posc=0.0, hvc=value, hve=value, ec=value)
        if name == "none":
            return cls(posc=0.0, hvc=0.0, hve=0.0, ec=0.0)
        raise InputValidationError(f"Unknown constraint preset '{name}'")

    @property
    def is_zero(self) -> bool:
        return not any((self.posc, self.hvc, self.hve, self.ec))


class ViolationReport(BaseModel):
    """Discrete constraint violation counts over a set of sentences."""
    posc: int = Field(0, ge=0)
    hvc: int = Field(0, ge=0)
    hve: int = Field(0, ge=0)
    ec: int = Field(0, ge=0)
    extraction_count: int = Field(0, ge=0)

    @property
    def total(self) -> int:
        return self.posc + self.hvc + self.hve + self.ec

    def __add__(self, other: "ViolationReport") -> "ViolationReport":
        return ViolationReport(
            posc=self.posc + other.posc,
            hvc=self.hvc + other.hvc,
            hve=self.hve + other.hve,
            ec=self.ec + other.ec,
            extraction_count=self.extraction_count + other.extraction_count,
        )

    def tsv(self) -> str:
        return "\t".join(str(v) for v in (self.posc, self.hvc, self.hve, self.ec, self.extraction_count))


# ============================================================================
# Soft penalties
# ============================================================================

def _prepare(probs: torch.Tensor, important: torch.Tensor, head_verb: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Add a batch axis when missing and check shapes (B x M x N x K, B x N)."""
    if probs.dim() == 3:
        probs = probs.unsqueeze(0)
    if important.dim() == 1:
        important = important.unsqueeze(0)
    if head_verb.dim() == 1:
        head_verb = head_verb.unsqueeze(0)
    if probs.dim() != 4 or probs.shape[-1] != len(OieLabel):
        raise InputValidationError(f"Expected B x M x N x {len(OieLabel)} probabilities, got {tuple(probs.shape)}")
    b, _, n, _ = probs.shape
    for name, mask in (("important", important), ("head_verb", head_verb)):
        if tuple(mask.shape) != (b, n):
            raise InputValidationError(f"{name} mask shape {tuple(mask.shape)} does not match ({b}, {n})")
    return probs, important.to(probs.dtype), head_verb.to(probs.dtype)


def posc_penalty(probs: torch.Tensor, important: torch.Tensor, head_verb: torch.Tensor) -> torch.Tensor:
    """Sum over important tokens of 1 - best S/R/O probability across rows."""
    probs, important, _ = _prepare(probs, important, head_verb)
    coverage = probs[..., _ARGUMENT_LABELS].amax(dim=-1).amax(dim=1)
    return (important * (1.0 - coverage)).sum(dim=-1).mean()


def hvc_penalty(probs: torch.Tensor, important: torch.Tensor, head_verb: torch.Tensor) -> torch.Tensor:
    """Sum over head verbs of |1 - total relation probability across rows|."""
    probs, _, head_verb = _prepare(probs, important, head_verb)
    relation_mass = probs[..., int(OieLabel.R)].sum(dim=1)
    return (head_verb * (1.0 - relation_mass).abs()).sum(dim=-1).mean()


def hve_penalty(probs: torch.Tensor, important: torch.Tensor, head_verb: torch.Tensor) -> torch.Tensor:
    """Sum over rows of the head-verb relation mass in excess of one."""
    probs, _, head_verb = _prepare(probs, important, head_verb)
    per_row = (head_verb[:, None, :] * probs[..., int(OieLabel.R)]).sum(dim=-1)
    return torch.relu(per_row - 1.0).sum(dim=-1).mean()


def ec_penalty(probs: torch.Tensor, important: torch.Tensor, head_verb: torch.Tensor) -> torch.Tensor:
    """Shortfall of head-verb-bearing rows against the number of head verbs."""
    probs, _, head_verb = _prepare(probs, important, head_verb)
    row_scores = (head_verb[:, None, :] * probs[..., int(OieLabel.R)]).amax(dim=-1)
    return torch.relu(head_verb.sum(dim=-1) - row_scores.sum(dim=-1)).mean()


def combined_loss(
    trace: ForwardTrace,
    gold: torch.Tensor,
    important: torch.Tensor,
    head_verb: torch.Tensor,
    weights: PenaltyWeights,
    step: int,
    warmup: float,
) -> torch.Tensor:
    """
    Cross entropy, plus the weighted penalties once `step` reaches `warmup`.

    Raises:
        InputValidationError: On a negative step or weight
    """
    if step < 0:
        raise InputValidationError(f"Negative training step {step}")
    if min(weights.posc, weights.hvc, weights.hve, weights.ec) < 0:
        raise InputValidationError("Penalty weights must be non-negative")
    loss = ce_loss(trace, gold)
    if step < warmup or weights.is_zero:
        return loss
    probs = trace.probs
    for weight, penalty in (
        (weights.posc, posc_penalty),
        (weights.hvc, hvc_penalty),
        (weights.hve, hve_penalty),
        (weights.ec, ec_penalty),
    ):
        if weight:
            loss = loss + weight * penalty(probs, important, head_verb)
    return loss


def mask_tensors(masks: Sequence[TokenMasks], width: int) -> Tuple[torch.Tensor, torch.Tensor]:
    """Stack token masks into B x width float tensors, zero on padding."""
    important = np.zeros((len(masks), width), dtype=np.float32)
    head_verb = np.zeros((len(masks), width), dtype=np.float32)
    for b, mask in enumerate(masks):
        important[b, : len(mask.important)] = mask.important
        head_verb[b, : len(mask.head_verb)] = mask.head_verb
    return torch.from_numpy(important), torch.from_numpy(head_verb)


# ============================================================================
# Discrete violations
# ============================================================================

def _sentence_violations(grid: LabelGrid, masks: TokenMasks) -> ViolationReport:
    if grid.cols != len(masks.important):
        raise InputValidationError(f"Grid has {grid.cols} columns for {len(masks.important)} masked tokens")
    labels = grid.labels
    is_relation = labels == int(OieLabel.R)
    extraction_rows = is_relation.any(axis=1)
    rows = labels[extraction_rows]
    relation_rows = is_relation[extraction_rows]

    important = np.asarray(masks.important, dtype=bool)
    head_verb = np.asarray(masks.head_verb, dtype=bool)

    covered = (rows != int(OieLabel.N)).any(axis=0) if len(rows) else np.zeros(grid.cols, dtype=bool)
    relation_counts = relation_rows.sum(axis=0) if len(rows) else np.zeros(grid.cols, dtype=int)
    head_verbs_per_row = (relation_rows & head_verb[None, :]).sum(axis=1) if len(rows) else np.zeros(0, dtype=int)

    return ViolationReport(
        posc=int((important & ~covered).sum()),
        hvc=int((head_verb & (relation_counts != 1)).sum()),
        hve=int((head_verbs_per_row >= 2).sum()),
        ec=max(0, int(head_verb.sum()) - int((head_verbs_per_row >= 1).sum())),
        extraction_count=int(extraction_rows.sum()),
    )


def count_violations(grids: Sequence[LabelGrid], masks: Sequence[TokenMasks]) -> ViolationReport:
    """
    Discrete analogs of the four penalties over hard grids.

    Only rows holding at least one R label count as extractions.

    Args:
        grids: One hard OpenIE grid per sentence
        masks: Token masks aligned with each grid's columns

    Returns:
        Summed ViolationReport
    """
    if len(grids) != len(masks):
        raise InputValidationError(f"{len(grids)} grids for {len(masks)} mask sets")
    report = ViolationReport()
    for grid, mask in zip(grids, masks):
        report = report + _sentence_violations(grid, mask)
    return report
