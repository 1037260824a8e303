"""
Word vocabulary built from a training corpus.
"""

from collections import Counter
from typing import Dict, Iterable, List, Sequence

from gridie.core.schemas import APPENDED_SURFACES, Sentence

PAD = "<pad>"
UNK = "<unk>"
SPECIALS = (PAD, UNK, *APPENDED_SURFACES)


class Vocabulary:
    """
    Lowercased word to id mapping; ids 0 and 1 are padding and unknown.
    """

    def __init__(self, words: Sequence[str]):
        if tuple(words[: len(SPECIALS)]) != SPECIALS:
            raise ValueError("Vocabulary must start with the special tokens")
        self.words: List[str] = list(words)
        self.index: Dict[str, int] = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != len(self.words):
            raise ValueError("Duplicate vocabulary entries")

    @classmethod
    def build(cls, sentences: Iterable[Sentence], min_count: int = 1) -> "Vocabulary":
        counts: Counter = Counter()
        for sentence in sentences:
            counts.update(t.surface.lower() for t in sentence.real_tokens)
        words = sorted(w for w, c in counts.items() if c >= min_count and w not in SPECIALS)
        return cls([*SPECIALS, *words])

    @property
    def pad_id(self) -> int:
        return 0

    @property
    def unk_id(self) -> int:
        return 1

    def __len__(self) -> int:
        return len(self.words)

    def lookup(self, surface: str) -> int:
        if surface in APPENDED_SURFACES:
            return self.index[surface]
        return self.index.get(surface.lower(), self.unk_id)

    def encode(self, sentence: Sentence) -> List[int]:
        return [self.lookup(t.surface) for t in sentence.tokens]
