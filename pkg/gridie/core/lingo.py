"""
Tokenization, coarse part-of-speech tagging, head-verb detection and
appended-token handling.
"""

import re
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Dict, FrozenSet, List, Mapping, Optional, Protocol, Sequence, Tuple, Union

from pydantic import BaseModel, ConfigDict, model_validator

from gridie.core.errors import CorpusFormatError, InputValidationError
from gridie.core.schemas import APPENDED_SURFACES, Sentence, Token
from gridie.utils.logger import get_logger

logger = get_logger(__name__)

_TOKEN_PATTERN = re.compile(
    r"\[(?:is|of|from)\]"          # appended-token surfaces in gold text
    r"|\d+(?:[.,:]\d+)+"           # numbers keep their inner separators
    r"|\w+(?:[-'’]\w+)*"           # words keep inner hyphens and apostrophes
    r"|[^\w\s]"                    # every other mark is its own token
)


class PosTag(str, Enum):
    """Coarse part-of-speech tags."""
    NOUN = "NOUN"
    VERB = "VERB"
    ADJ = "ADJ"
    ADV = "ADV"
    OTHER = "OTHER"


IMPORTANT_TAGS: FrozenSet[PosTag] = frozenset({PosTag.NOUN, PosTag.VERB, PosTag.ADJ, PosTag.ADV})


class TokenMasks(BaseModel):
    """Per-token indicators consulted by the coverage constraints."""
    model_config = ConfigDict(frozen=True)

    important: Tuple[bool, ...]
    head_verb: Tuple[bool, ...]

    @model_validator(mode="after")
    def validate_masks(self) -> "TokenMasks":
        if len(self.important) != len(self.head_verb):
            raise ValueError("Mask lengths differ")
        if any(hv and not imp for hv, imp in zip(self.head_verb, self.important)):
            raise ValueError("Head verbs must be important tokens")
        return self

    @property
    def head_verb_count(self) -> int:
        return sum(self.head_verb)


# ============================================================================
# Tokenization
# ============================================================================

def split_words(text: str) -> List[str]:
    """Token surfaces of `text` without building a Sentence."""
    return _TOKEN_PATTERN.findall(text)


def tokenize(raw: str) -> Sentence:
    """
    Whitespace and punctuation tokenization.

    Args:
        raw: Sentence text

    Returns:
        Sentence of real tokens

    Raises:
        InputValidationError: If the text is blank
    """
    if not raw or not raw.strip():
        raise InputValidationError("Cannot tokenize blank text")
    surfaces = split_words(raw)
    if not surfaces:
        raise InputValidationError(f"No tokens in {raw!r}")
    tokens = tuple(Token(surface=w, index=i) for i, w in enumerate(surfaces))
    return Sentence(tokens=tokens, raw=" ".join(raw.split()))


def detokenize(s: Sentence) -> str:
    return " ".join(t.surface for t in s.real_tokens)


def append_special(s: Sentence) -> Sentence:
    """
    Extend a sentence with the appended tokens [is], [of], [from].

    Raises:
        InputValidationError: If the sentence already carries them
    """
    if s.has_appended:
        raise InputValidationError("Sentence already has appended tokens")
    start = len(s.tokens)
    extra = tuple(
        Token(surface=surface, index=start + offset, is_appended=True)
        for offset, surface in enumerate(APPENDED_SURFACES)
    )
    return Sentence(tokens=s.tokens + extra, raw=s.raw)


def strip_special(s: Sentence) -> Sentence:
    if not s.has_appended:
        return s
    return Sentence(tokens=tuple(s.real_tokens), raw=s.raw)


# ============================================================================
# Data files
# ============================================================================

def _read_data_lines(path: Optional[Union[str, Path]], default_name: str) -> List[Tuple[int, str]]:
    if path is None:
        text = resources.files("gridie.data").joinpath(default_name).read_text(encoding="utf-8")
        source = default_name
    else:
        text = Path(path).read_text(encoding="utf-8")
        source = str(path)
    lines = []
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        # "#" alone or followed by a space opens a comment line; "#\tTAG" is an entry
        if not line or line == "#" or line.startswith("# "):
            continue
        lines.append((number, line))
    logger.debug("data_file_loaded", source=source, entries=len(lines))
    return lines


@lru_cache()
def load_light_verbs(path: Optional[str] = None) -> FrozenSet[str]:
    """Light-verb list: one lowercase verb per line, '# ' comment lines."""
    return frozenset(line.lower() for _, line in _read_data_lines(path, "light_verbs.txt"))


@lru_cache()
def load_lexicon(path: Optional[str] = None) -> Dict[str, PosTag]:
    """Tagger lexicon: token<TAB>tag per line."""
    lexicon: Dict[str, PosTag] = {}
    for number, line in _read_data_lines(path, "lexicon.tsv"):
        fields = line.split("\t")
        if len(fields) != 2:
            raise CorpusFormatError("expected token<TAB>tag", path or "lexicon.tsv", number)
        try:
            lexicon[fields[0].strip().lower()] = PosTag(fields[1].strip())
        except ValueError:
            raise CorpusFormatError(f"unknown tag '{fields[1]}'", path or "lexicon.tsv", number)
    return lexicon


# ============================================================================
# Taggers
# ============================================================================

class Tagger(Protocol):
    """Anything that assigns one coarse tag per token surface."""

    def tag_tokens(self, surfaces: Sequence[str]) -> List[PosTag]:
        ...


class LexiconTagger:
    """
    Deterministic lexicon lookup with suffix fallback rules.
    """

    SUFFIX_RULES: Tuple[Tuple[str, PosTag], ...] = tuple(sorted(
        [
            ("ing", PosTag.VERB), ("ed", PosTag.VERB), ("ize", PosTag.VERB), ("ise", PosTag.VERB),
            ("ly", PosTag.ADV),
            ("ous", PosTag.ADJ), ("ful", PosTag.ADJ), ("ive", PosTag.ADJ), ("able", PosTag.ADJ),
            ("ible", PosTag.ADJ), ("al", PosTag.ADJ), ("ic", PosTag.ADJ), ("less", PosTag.ADJ),
            ("ish", PosTag.ADJ),
            ("tion", PosTag.NOUN), ("sion", PosTag.NOUN), ("ness", PosTag.NOUN), ("ment", PosTag.NOUN),
            ("ity", PosTag.NOUN), ("ism", PosTag.NOUN), ("ist", PosTag.NOUN), ("ance", PosTag.NOUN),
            ("ence", PosTag.NOUN), ("ship", PosTag.NOUN), ("cy", PosTag.NOUN), ("er", PosTag.NOUN),
            ("or", PosTag.NOUN),
        ],
        key=lambda rule: -len(rule[0]),
    ))
    MIN_STEM = 3

    def __init__(self, lexicon: Optional[Mapping[str, PosTag]] = None):
        self.lexicon = dict(lexicon) if lexicon is not None else load_lexicon()

    def tag_word(self, word: str, sentence_initial: bool = False) -> PosTag:
        lower = word.lower()
        if lower in self.lexicon:
            return self.lexicon[lower]
        if not any(ch.isalpha() for ch in word):
            return PosTag.OTHER
        if word[0].isupper() and not sentence_initial:
            return PosTag.NOUN
        for suffix, tag in self.SUFFIX_RULES:
            if lower.endswith(suffix) and len(lower) - len(suffix) >= self.MIN_STEM:
                return tag
        return PosTag.NOUN

    def tag_tokens(self, surfaces: Sequence[str]) -> List[PosTag]:
        return [self.tag_word(w, sentence_initial=(i == 0)) for i, w in enumerate(surfaces)]


class GoldTagTagger:
    """
    Passes through tags read from an input file, keyed by sentence text.
    Sentences without gold tags fall back to another tagger.
    """

    def __init__(self, gold: Mapping[str, Sequence[PosTag]], fallback: Optional[Tagger] = None):
        self.gold = {key: list(tags) for key, tags in gold.items()}
        self.fallback = fallback or LexiconTagger()

    @classmethod
    def from_file(cls, path: Union[str, Path], fallback: Optional[Tagger] = None) -> "GoldTagTagger":
        """Read sentence<TAB>space-separated tags lines."""
        gold: Dict[str, List[PosTag]] = {}
        with open(path, encoding="utf-8") as handle:
            for number, line in enumerate(handle, start=1):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                fields = line.split("\t")
                if len(fields) != 2:
                    raise CorpusFormatError("expected sentence<TAB>tags", path, number)
                words = split_words(fields[0])
                try:
                    tags = [PosTag(t) for t in fields[1].split()]
                except ValueError as e:
                    raise CorpusFormatError(f"unknown tag: {e}", path, number)
                if len(tags) != len(words):
                    raise CorpusFormatError(f"{len(tags)} tags for {len(words)} tokens", path, number)
                gold[" ".join(words)] = tags
        return cls(gold, fallback)

    def tag_tokens(self, surfaces: Sequence[str]) -> List[PosTag]:
        key = " ".join(surfaces)
        if key in self.gold:
            return list(self.gold[key])
        logger.warning("gold_tags_missing", sentence=key[:80])
        return self.fallback.tag_tokens(surfaces)


def tag(s: Sentence, t: Tagger) -> List[PosTag]:
    """One tag per token; appended tokens are tagged OTHER."""
    tags = t.tag_tokens([tok.surface for tok in s.real_tokens])
    if len(tags) != s.n_real:
        raise InputValidationError(f"Tagger returned {len(tags)} tags for {s.n_real} tokens")
    return list(tags) + [PosTag.OTHER] * (len(s) - s.n_real)


def head_verbs(s: Sentence, tags: Sequence[PosTag], light_verbs: Optional[FrozenSet[str]] = None) -> TokenMasks:
    """
    Important-token and head-verb masks.

    Args:
        s: Sentence, with or without appended tokens
        tags: Tags aligned with `s`
        light_verbs: Override of the shipped light-verb list

    Returns:
        TokenMasks over every token of `s`
    """
    if len(tags) != len(s):
        raise InputValidationError(f"{len(tags)} tags for {len(s)} tokens")
    light = light_verbs if light_verbs is not None else load_light_verbs()
    important = []
    head = []
    for token, pos in zip(s.tokens, tags):
        is_important = not token.is_appended and pos in IMPORTANT_TAGS
        important.append(is_important)
        head.append(is_important and pos is PosTag.VERB and token.surface.lower() not in light)
    return TokenMasks(important=tuple(important), head_verb=tuple(head))


def masks_for(s: Sentence, tagger: Tagger) -> TokenMasks:
    return head_verbs(s, tag(s, tagger))
