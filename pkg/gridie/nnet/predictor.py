"""
Inference wrapper turning a trained model into a grid labeler.
"""

from typing import List, Optional, Protocol, Sequence

import torch

from gridie.core.errors import ModelMismatchError
from gridie.core.lingo import append_special
from gridie.core.schemas import Alphabet, LabelGrid, Sentence
from gridie.nnet.model import IGLModel
from gridie.nnet.vocab import Vocabulary


class GridLabeler(Protocol):
    """Produces one label grid per sentence."""

    alphabet: Alphabet

    def label(self, sentences: Sequence[Sentence]) -> List[LabelGrid]:
        ...


class IGLPredictor:
    """
    Frozen-model labeler; safe to call from several threads at once.

    OpenIE sentences gain the appended tokens when they lack them; returned
    grids cover every token of the (possibly extended) sentence.
    """

    def __init__(self, model: IGLModel, vocab: Vocabulary, levels: Optional[int] = None, batch_size: int = 32):
        if len(vocab) != model.config.vocab_size:
            raise ModelMismatchError(f"Vocabulary has {len(vocab)} words, model expects {model.config.vocab_size}")
        self.model = model.eval()
        self.vocab = vocab
        self.alphabet = model.config.alphabet
        self.levels = levels or model.config.levels
        self.batch_size = batch_size

    @property
    def encoder_invocations(self) -> int:
        return self.model.encoder_invocations

    def prepare(self, sentence: Sentence) -> Sentence:
        if self.alphabet is Alphabet.OIE and not sentence.has_appended:
            return append_special(sentence)
        return sentence

    def label(self, sentences: Sequence[Sentence]) -> List[LabelGrid]:
        prepared = [self.prepare(s) for s in sentences]
        grids: List[LabelGrid] = []
        for start in range(0, len(prepared), self.batch_size):
            chunk = prepared[start:start + self.batch_size]
            width = max(len(s) for s in chunk)
            token_ids = torch.zeros((len(chunk), width), dtype=torch.long)
            pad_mask = torch.ones((len(chunk), width), dtype=torch.bool)
            for b, sentence in enumerate(chunk):
                ids = self.vocab.encode(sentence)
                token_ids[b, : len(ids)] = torch.tensor(ids, dtype=torch.long)
                pad_mask[b, : len(ids)] = False
            with torch.no_grad():
                trace = self.model(token_ids, pad_mask, self.levels)
            grids.extend(trace.grids())
        return grids
