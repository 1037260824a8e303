"""
Small models and example sets for the network tests.
"""

from typing import List, Sequence

from gridie.cli.commands import build_oie_examples
from gridie.core.lingo import LexiconTagger
from gridie.core.schemas import Alphabet
from gridie.nnet.model import EncoderConfig, IGLModel
from gridie.nnet.training import Example
from gridie.nnet.vocab import Vocabulary
from gridie.tests.fixtures.synthetic_corpus import generate_corpus


def oie_examples(size: int, seed: int = 0, drop_rate: float = 0.0, levels: int = 3) -> List[Example]:
    return build_oie_examples(generate_corpus(size, seed, drop_rate), LexiconTagger(), levels)


def vocab_for(examples: Sequence[Example]) -> Vocabulary:
    return Vocabulary.build(e.sentence for e in examples)


def tiny_model(
    vocab: Vocabulary,
    d_model: int = 16,
    levels: int = 3,
    seed: int = 0,
    alphabet: Alphabet = Alphabet.OIE,
) -> IGLModel:
    config = EncoderConfig(
        vocab_size=len(vocab),
        alphabet=alphabet,
        d_model=d_model,
        encoder_layers=1,
        heads=2,
        iterative_layers=1,
        ffn_dim=2 * d_model,
        levels=levels,
        seed=seed,
    )
    return IGLModel.from_config(config)
