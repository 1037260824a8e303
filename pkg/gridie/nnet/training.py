"""
Training loop for grid labelers: batching, AdamW steps, warmup and
per-epoch reporting.
"""

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np
import torch
from pydantic import BaseModel

from gridie.core.constraints import PenaltyWeights, ViolationReport, combined_loss, count_violations, mask_tensors
from gridie.core.errors import InputValidationError, TrainingDivergedError
from gridie.core.lingo import TokenMasks
from gridie.core.schemas import Alphabet, LabelGrid, Sentence
from gridie.nnet.model import ForwardTrace, IGLModel, stack_gold
from gridie.nnet.vocab import Vocabulary
from gridie.utils.logger import get_logger

logger = get_logger(__name__)

LossFn = Callable[[ForwardTrace, "Batch", int], torch.Tensor]


@dataclass(frozen=True)
class Example:
    """One training sentence with its gold grid and token masks."""
    sentence: Sentence
    gold: LabelGrid
    masks: TokenMasks


@dataclass
class Batch:
    """Padded tensors for a list of examples."""
    token_ids: torch.Tensor
    pad_mask: torch.Tensor
    gold: torch.Tensor
    important: torch.Tensor
    head_verb: torch.Tensor
    examples: List[Example]

    @property
    def size(self) -> int:
        return int(self.token_ids.shape[0])


def collate(examples: Sequence[Example], vocab: Vocabulary) -> Batch:
    """Pad examples to the longest sentence of the batch."""
    if not examples:
        raise InputValidationError("Cannot collate an empty batch")
    width = max(len(e.sentence) for e in examples)
    token_ids = torch.zeros((len(examples), width), dtype=torch.long)
    pad_mask = torch.ones((len(examples), width), dtype=torch.bool)
    for b, example in enumerate(examples):
        ids = vocab.encode(example.sentence)
        token_ids[b, : len(ids)] = torch.tensor(ids, dtype=torch.long)
        pad_mask[b, : len(ids)] = False
    important, head_verb = mask_tensors([e.masks for e in examples], width)
    return Batch(
        token_ids=token_ids,
        pad_mask=pad_mask,
        gold=stack_gold([e.gold for e in examples], width),
        important=important,
        head_verb=head_verb,
        examples=list(examples),
    )


def constrained_loss(weights: PenaltyWeights, warmup_steps: float) -> LossFn:
    """Loss function applying the penalties after `warmup_steps`."""

    def loss_fn(trace: ForwardTrace, batch: Batch, step: int) -> torch.Tensor:
        return combined_loss(trace, batch.gold, batch.important, batch.head_verb, weights, step, warmup_steps)

    return loss_fn


def train_step(
    batch: Batch,
    model: IGLModel,
    loss_fn: LossFn,
    optimizer: torch.optim.Optimizer,
    step: int,
) -> float:
    """
    One optimizer step on `batch`.

    Returns:
        Loss value before the update

    Raises:
        TrainingDivergedError: If the loss is NaN or infinite
    """
    model.train()
    optimizer.zero_grad()
    trace = model(batch.token_ids, batch.pad_mask)
    loss = loss_fn(trace, batch, step)
    value = float(loss.detach())
    if not math.isfinite(value):
        raise TrainingDivergedError(f"Loss became {value} at step {step}")
    loss.backward()
    optimizer.step()
    return value


class EpochRecord(BaseModel):
    """Per-epoch training log entry."""
    epoch: int
    step: int
    loss: float
    accuracy: float
    constrained: bool
    violations: Optional[ViolationReport] = None
    dev_f1: Optional[float] = None


def predict_grids(model: IGLModel, examples: Sequence[Example], vocab: Vocabulary, batch_size: int = 64) -> List[LabelGrid]:
    """Hard grids for examples, in order."""
    model.eval()
    grids: List[LabelGrid] = []
    with torch.no_grad():
        for start in range(0, len(examples), batch_size):
            batch = collate(examples[start:start + batch_size], vocab)
            labels = model(batch.token_ids, batch.pad_mask).labels.cpu().numpy()
            for b, example in enumerate(batch.examples):
                grids.append(LabelGrid(alphabet=model.config.alphabet, labels=labels[b, :, : len(example.sentence)]))
    return grids


def label_accuracy(predicted: Sequence[LabelGrid], examples: Sequence[Example]) -> float:
    """Fraction of grid cells (all levels, all tokens) matching gold."""
    correct = 0
    total = 0
    for grid, example in zip(predicted, examples):
        correct += int((grid.labels == example.gold.labels).sum())
        total += example.gold.labels.size
    return correct / total if total else 0.0


class Trainer:
    """
    Mini-batch AdamW training with a warmup before the constraint penalties.
    """

    def __init__(
        self,
        model: IGLModel,
        vocab: Vocabulary,
        weights: PenaltyWeights,
        learning_rate: float = 1e-3,
        weight_decay: float = 0.01,
        batch_size: int = 24,
        warmup_epochs: float = 2.0,
        seed: int = 13,
    ):
        self.model = model
        self.vocab = vocab
        self.weights = weights if model.config.alphabet is Alphabet.OIE else PenaltyWeights.preset("none")
        self.batch_size = batch_size
        self.warmup_epochs = warmup_epochs
        self.seed = seed
        self.optimizer = torch.optim.AdamW(model.parameters(), lr=learning_rate, weight_decay=weight_decay)
        self.step = 0
        self.history: List[EpochRecord] = []

    def _batches(self, examples: Sequence[Example], epoch: int) -> List[Batch]:
        generator = torch.Generator().manual_seed(self.seed + epoch)
        order = torch.randperm(len(examples), generator=generator).tolist()
        return [
            collate([examples[i] for i in order[start:start + self.batch_size]], self.vocab)
            for start in range(0, len(order), self.batch_size)
        ]

    def fit(
        self,
        examples: Sequence[Example],
        epochs: int,
        report_on: Optional[Sequence[Example]] = None,
        on_epoch_end: Optional[Callable[[EpochRecord], None]] = None,
    ) -> List[EpochRecord]:
        """
        Train for `epochs` passes over `examples`.

        Args:
            examples: Training examples
            epochs: Number of passes
            report_on: Examples on which violations are counted (defaults to training set)
            on_epoch_end: Callback receiving each record; it may set `dev_f1`

        Returns:
            Epoch records
        """
        if not examples:
            raise InputValidationError("No training examples")
        batches_per_epoch = math.ceil(len(examples) / self.batch_size)
        warmup_steps = self.warmup_epochs * batches_per_epoch
        loss_fn = constrained_loss(self.weights, warmup_steps)
        report_set = list(report_on) if report_on is not None else list(examples)

        for epoch in range(1, epochs + 1):
            losses = []
            for batch in self._batches(examples, epoch):
                losses.append(train_step(batch, self.model, loss_fn, self.optimizer, self.step) * batch.size)
                self.step += 1

            train_grids = predict_grids(self.model, examples, self.vocab)
            violations: Optional[ViolationReport] = None
            if self.model.config.alphabet is Alphabet.OIE:
                violations = count_violations(predict_grids(self.model, report_set, self.vocab), [e.masks for e in report_set])
            record = EpochRecord(
                epoch=epoch,
                step=self.step,
                loss=float(np.sum(losses) / len(examples)),
                accuracy=label_accuracy(train_grids, examples),
                constrained=self.step > warmup_steps and not self.weights.is_zero,
                violations=violations,
            )
            if on_epoch_end is not None:
                on_epoch_end(record)
            self.history.append(record)
            logger.info(
                "epoch_finished",
                epoch=epoch,
                loss=round(record.loss, 5),
                accuracy=round(record.accuracy, 4),
                constrained=record.constrained,
                violations=violations.total if violations else None,
                dev_f1=record.dev_f1,
            )
        return self.history
