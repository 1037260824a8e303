"""
Iterative Grid Labeling network.

A small transformer encodes the sentence once; a shared stack of iterative
layers is then applied once per grid level, and the embeddings of each
level's predicted labels are added to the representations before the next
level.
"""

import threading
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F
from pydantic import BaseModel, ConfigDict, Field, model_validator

from gridie.core.errors import InputValidationError, SentenceTooLongError
from gridie.core.schemas import Alphabet, LabelGrid

IGNORE_INDEX = -100


class EncoderConfig(BaseModel):
    """Architecture and seeding of one grid labeler."""
    model_config = ConfigDict(frozen=True)

    vocab_size: int = Field(..., gt=0)
    alphabet: Alphabet = Alphabet.OIE
    d_model: int = Field(64, gt=0)
    encoder_layers: int = Field(2, ge=1)
    heads: int = Field(4, ge=1)
    iterative_layers: int = Field(2, ge=1)
    ffn_dim: int = Field(128, gt=0)
    dropout: float = Field(0.0, ge=0.0, lt=1.0)
    max_len: int = Field(128, gt=3)
    levels: int = Field(5, ge=1)
    seed: int = 13

    @model_validator(mode="after")
    def validate_heads(self) -> "EncoderConfig":
        if self.d_model % self.heads:
            raise ValueError(f"d_model={self.d_model} is not divisible by heads={self.heads}")
        return self


class TransformerBlock(nn.Module):
    """Post-norm self-attention block with a GELU feed-forward layer."""

    def __init__(self, d_model: int, heads: int, ffn_dim: int, dropout: float = 0.0):
        super().__init__()
        self.attention = nn.MultiheadAttention(d_model, heads, dropout=dropout, batch_first=True)
        self.norm1 = nn.LayerNorm(d_model)
        self.norm2 = nn.LayerNorm(d_model)
        self.feed_forward = nn.Sequential(
            nn.Linear(d_model, ffn_dim),
            nn.GELU(),
            nn.Dropout(dropout),
            nn.Linear(ffn_dim, d_model),
        )
        self.dropout = nn.Dropout(dropout)

    def forward(self, x: torch.Tensor, pad_mask: torch.Tensor) -> torch.Tensor:
        attn_output, _ = self.attention(x, x, x, key_padding_mask=pad_mask, need_weights=False)
        x = self.norm1(x + self.dropout(attn_output))
        x = self.norm2(x + self.dropout(self.feed_forward(x)))
        return x


@dataclass
class ForwardTrace:
    """Output of one grid forward pass over a batch."""
    logits: torch.Tensor        # B x M x N x K
    labels: torch.Tensor        # B x M x N, argmax per cell
    pad_mask: torch.Tensor      # B x N, True on padding
    lengths: List[int]
    alphabet: Alphabet
    encoder_invocations: int

    @property
    def log_probs(self) -> torch.Tensor:
        return F.log_softmax(self.logits, dim=-1)

    @property
    def probs(self) -> torch.Tensor:
        return F.softmax(self.logits, dim=-1)

    @property
    def levels(self) -> int:
        return int(self.logits.shape[1])

    def grids(self) -> List[LabelGrid]:
        """Per-sentence probability grids trimmed to each sentence length."""
        probs = self.probs.detach().to(torch.float64).cpu().numpy()
        return [LabelGrid.from_probs(self.alphabet, probs[b, :, :n]) for b, n in enumerate(self.lengths)]


class IGLModel(nn.Module):
    """
    Encoder, shared iterative layers, label head and label embeddings.
    """

    def __init__(self, config: EncoderConfig):
        super().__init__()
        self.config = config
        d = config.d_model
        self.token_embedding = nn.Embedding(config.vocab_size, d, padding_idx=0)
        self.position_embedding = nn.Embedding(config.max_len, d)
        self.encoder = nn.ModuleList([
            TransformerBlock(d, config.heads, config.ffn_dim, config.dropout)
            for _ in range(config.encoder_layers)
        ])
        self.iterative = nn.ModuleList([
            TransformerBlock(d, config.heads, config.ffn_dim, config.dropout)
            for _ in range(config.iterative_layers)
        ])
        self.label_head = nn.Linear(d, config.alphabet.size)
        self.label_embedding = nn.Embedding(config.alphabet.size, d)
        self._counter_lock = threading.Lock()
        self._encoder_invocations = 0

    @classmethod
    def from_config(cls, config: EncoderConfig) -> "IGLModel":
        """Build with weights drawn from `config.seed`, leaving the global RNG untouched."""
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(config.seed)
            return cls(config)

    @property
    def encoder_invocations(self) -> int:
        return self._encoder_invocations

    def reset_counter(self) -> None:
        with self._counter_lock:
            self._encoder_invocations = 0

    def encode(self, token_ids: torch.Tensor, pad_mask: torch.Tensor) -> torch.Tensor:
        """
        Contextual embeddings, one d-vector per token (appended tokens included).

        Args:
            token_ids: B x N vocabulary ids
            pad_mask: B x N, True on padding

        Returns:
            B x N x d tensor
        """
        n = token_ids.shape[1]
        if n > self.config.max_len:
            raise SentenceTooLongError(n, self.config.max_len)
        with self._counter_lock:
            self._encoder_invocations += int(token_ids.shape[0])
        positions = torch.arange(n, device=token_ids.device)
        x = self.token_embedding(token_ids) + self.position_embedding(positions)[None, :, :]
        for layer in self.encoder:
            x = layer(x, pad_mask)
        return x

    def iterate(self, embeddings: torch.Tensor, pad_mask: torch.Tensor, levels: Optional[int] = None) -> torch.Tensor:
        """
        Grid logits for M levels without re-encoding.

        Returns:
            B x M x N x K logits
        """
        levels = levels or self.config.levels
        h = embeddings
        outputs = []
        for _ in range(levels):
            for layer in self.iterative:
                h = layer(h, pad_mask)
            logits = self.label_head(h)
            outputs.append(logits)
            h = h + self.label_embedding(logits.argmax(dim=-1))
        return torch.stack(outputs, dim=1)

    def forward(self, token_ids: torch.Tensor, pad_mask: torch.Tensor, levels: Optional[int] = None) -> ForwardTrace:
        logits = self.iterate(self.encode(token_ids, pad_mask), pad_mask, levels)
        return ForwardTrace(
            logits=logits,
            labels=logits.argmax(dim=-1),
            pad_mask=pad_mask,
            lengths=(~pad_mask).sum(dim=1).tolist(),
            alphabet=self.config.alphabet,
            encoder_invocations=self._encoder_invocations,
        )


def igl_forward(embeddings: torch.Tensor, model: IGLModel, levels: int, pad_mask: Optional[torch.Tensor] = None) -> ForwardTrace:
    """Run the iterative levels on precomputed embeddings."""
    if pad_mask is None:
        pad_mask = torch.zeros(embeddings.shape[:2], dtype=torch.bool, device=embeddings.device)
    logits = model.iterate(embeddings, pad_mask, levels)
    return ForwardTrace(
        logits=logits,
        labels=logits.argmax(dim=-1),
        pad_mask=pad_mask,
        lengths=(~pad_mask).sum(dim=1).tolist(),
        alphabet=model.config.alphabet,
        encoder_invocations=model.encoder_invocations,
    )


def ce_loss(trace: ForwardTrace, gold: torch.Tensor) -> torch.Tensor:
    """
    Cross entropy summed over levels and positions, averaged over the batch.

    Args:
        trace: Forward output
        gold: B x M x N label ids, IGNORE_INDEX on padding

    Raises:
        InputValidationError: If gold and trace shapes differ
    """
    if tuple(gold.shape) != tuple(trace.logits.shape[:3]):
        raise InputValidationError(f"Gold grid shape {tuple(gold.shape)} does not match {tuple(trace.logits.shape[:3])}")
    k = trace.logits.shape[-1]
    total = F.nll_loss(trace.log_probs.reshape(-1, k), gold.reshape(-1), ignore_index=IGNORE_INDEX, reduction="sum")
    return total / trace.logits.shape[0]


def stack_gold(grids: Sequence[LabelGrid], width: int) -> torch.Tensor:
    """Pad hard gold grids to `width` columns with IGNORE_INDEX."""
    rows = grids[0].rows
    gold = np.full((len(grids), rows, width), IGNORE_INDEX, dtype=np.int64)
    for b, grid in enumerate(grids):
        if grid.rows != rows:
            raise InputValidationError("Gold grids in one batch must share the level count")
        gold[b, :, : grid.cols] = grid.labels
    return torch.from_numpy(gold)


def parameter_count(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters())
