"""
Factories shared by the commands: checkpoints, taggers, penalty weights.
"""

from functools import lru_cache
from pathlib import Path
from typing import Optional, Union

from gridie.config import Settings
from gridie.core.constraints import PenaltyWeights
from gridie.core.errors import InputValidationError, ModelMismatchError
from gridie.core.lingo import GoldTagTagger, LexiconTagger, Tagger
from gridie.nnet.checkpoint import load_checkpoint
from gridie.nnet.model import EncoderConfig
from gridie.nnet.predictor import IGLPredictor
from gridie.nnet.vocab import Vocabulary


@lru_cache()
def load_labeler(path: str, task: str) -> IGLPredictor:
    """
    Load a checkpoint as a predictor (cached per path and task).

    Raises:
        ModelMismatchError: If the checkpoint was trained for another task
    """
    model, vocab, header = load_checkpoint(path)
    if header.get("task") != task or model.config.alphabet.value != task:
        raise ModelMismatchError(f"{path} holds a '{header.get('task')}' model, expected '{task}'")
    return IGLPredictor(model, vocab)


def get_tagger(settings: Settings, gold_tags: Optional[Union[str, Path]] = None) -> Tagger:
    if settings.tagger == "gold":
        if gold_tags is None:
            raise InputValidationError("tagger=gold needs a gold tags file")
        return GoldTagTagger.from_file(gold_tags)
    return LexiconTagger()


def penalty_weights(settings: Settings) -> PenaltyWeights:
    """Lambda weights from the preset, taking each enabled weight from settings."""
    preset = PenaltyWeights.preset(settings.constraints)
    return PenaltyWeights(
        posc=settings.lambda_posc if preset.posc else 0.0,
        hvc=settings.lambda_hvc if preset.hvc else 0.0,
        hve=settings.lambda_hve if preset.hve else 0.0,
        ec=settings.lambda_ec if preset.ec else 0.0,
    )


def encoder_config(settings: Settings, vocab: Vocabulary, task: str) -> EncoderConfig:
    return EncoderConfig(
        vocab_size=len(vocab),
        alphabet=task,
        d_model=settings.d_model,
        encoder_layers=settings.encoder_layers,
        heads=settings.heads,
        iterative_layers=settings.iterative_layers,
        ffn_dim=settings.ffn_dim,
        dropout=settings.dropout,
        max_len=settings.max_len,
        levels=settings.levels(task),
        seed=settings.seed,
    )
