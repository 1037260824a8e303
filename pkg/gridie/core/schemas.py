"""
Pydantic models for gridie.
Defines the domain types shared by tokenization, the grid network, decoding,
the splitting pipeline and the scorers.
"""

import re
from enum import Enum, IntEnum
from typing import List, NamedTuple, Optional, Tuple, Type

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from gridie.core.errors import InputValidationError

APPENDED_SURFACES: Tuple[str, ...] = ("[is]", "[of]", "[from]")

# Appended tokens rendered before the remaining slot words; the rest go after.
_LEADING_APPENDED = frozenset({"[is]"})

_WHITESPACE = re.compile(r"\s+")


# ============================================================================
# Label alphabets
# ============================================================================

class OieLabel(IntEnum):
    """Labels of an OpenIE grid cell."""
    N = 0
    S = 1
    R = 2
    O = 3  # noqa: E741

    @property
    def symbol(self) -> str:
        return self.name


class CoordLabel(IntEnum):
    """Labels of a coordination grid cell."""
    NONE = 0
    CC = 1
    CONJ = 2

    @property
    def symbol(self) -> str:
        return "N" if self is CoordLabel.NONE else self.name


class Alphabet(str, Enum):
    """The two label alphabets; a grid uses exactly one."""
    OIE = "oie"
    COORD = "coord"

    @property
    def labels(self) -> Type[IntEnum]:
        return OieLabel if self is Alphabet.OIE else CoordLabel

    @property
    def size(self) -> int:
        return len(self.labels)

    def parse(self, symbol: str) -> int:
        """Map a file symbol (S/R/O/N or CC/CONJ/N) to its label index."""
        for label in self.labels:
            if label.symbol == symbol:
                return int(label)
        raise InputValidationError(f"Unknown {self.value} label '{symbol}'")

    def symbol(self, index: int) -> str:
        return self.labels(index).symbol


# ============================================================================
# Tokens and sentences
# ============================================================================

class Token(BaseModel):
    """Single word token of a sentence."""
    model_config = ConfigDict(frozen=True)

    surface: str = Field(..., min_length=1)
    index: int = Field(..., ge=0)
    is_appended: bool = False


class Sentence(BaseModel):
    """Tokenized sentence, optionally extended with the appended tokens."""
    model_config = ConfigDict(frozen=True)

    tokens: Tuple[Token, ...]
    raw: str

    @model_validator(mode="after")
    def validate_tokens(self) -> "Sentence":
        """Indices contiguous from 0; appended tokens form the final block."""
        for position, token in enumerate(self.tokens):
            if token.index != position:
                raise ValueError(f"Token index {token.index} at position {position}")
        flags = [t.is_appended for t in self.tokens]
        appended = sum(flags)
        if appended not in (0, len(APPENDED_SURFACES)):
            raise ValueError(f"Expected 0 or {len(APPENDED_SURFACES)} appended tokens, got {appended}")
        if appended and not all(flags[-appended:]):
            raise ValueError("Appended tokens must occupy the final positions")
        if len(self.tokens) - appended < 1:
            raise ValueError("Sentence needs at least one real token")
        real = "".join(t.surface for t in self.tokens if not t.is_appended)
        if real != _WHITESPACE.sub("", self.raw):
            raise ValueError("Tokens do not reproduce the raw text")
        return self

    @property
    def surfaces(self) -> List[str]:
        return [t.surface for t in self.tokens]

    @property
    def real_tokens(self) -> List[Token]:
        return [t for t in self.tokens if not t.is_appended]

    @property
    def n_real(self) -> int:
        return len(self.real_tokens)

    @property
    def has_appended(self) -> bool:
        return any(t.is_appended for t in self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    @classmethod
    def from_surfaces(cls, surfaces: List[str]) -> "Sentence":
        """Build a sentence of real tokens from already tokenized words."""
        tokens = tuple(Token(surface=w, index=i) for i, w in enumerate(surfaces))
        return cls(tokens=tokens, raw=" ".join(surfaces))


# ============================================================================
# Grids
# ============================================================================

class LabelGrid(BaseModel):
    """M x N grid of hard labels, optionally with per-cell label distributions."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    alphabet: Alphabet
    labels: np.ndarray
    probs: Optional[np.ndarray] = None

    @field_validator("labels")
    @classmethod
    def validate_labels(cls, v: np.ndarray) -> np.ndarray:
        v = np.array(v, dtype=np.int64)
        if v.ndim != 2:
            raise ValueError(f"Label grid must be 2-D, got shape {v.shape}")
        v.flags.writeable = False
        return v

    @field_validator("probs")
    @classmethod
    def validate_probs(cls, v: Optional[np.ndarray]) -> Optional[np.ndarray]:
        if v is None:
            return v
        v = np.array(v, dtype=np.float64)
        if v.ndim != 3:
            raise ValueError(f"Probability grid must be 3-D, got shape {v.shape}")
        if np.any(v < 0) or not np.allclose(v.sum(axis=-1), 1.0, atol=1e-6, rtol=0.0):
            raise ValueError("Every probability cell must be a distribution")
        v.flags.writeable = False
        return v

    @model_validator(mode="after")
    def validate_shapes(self) -> "LabelGrid":
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.alphabet.size):
            raise ValueError(f"Labels outside the {self.alphabet.value} alphabet")
        if self.probs is not None and self.probs.shape != (*self.labels.shape, self.alphabet.size):
            raise ValueError(f"Probability shape {self.probs.shape} does not match labels {self.labels.shape}")
        return self

    @property
    def rows(self) -> int:
        return int(self.labels.shape[0])

    @property
    def cols(self) -> int:
        return int(self.labels.shape[1])

    @classmethod
    def from_probs(cls, alphabet: Alphabet, probs: np.ndarray) -> "LabelGrid":
        """Hard labels are the per-cell argmax of the distributions."""
        probs = np.asarray(probs, dtype=np.float64)
        probs = probs / probs.sum(axis=-1, keepdims=True)
        return cls(alphabet=alphabet, labels=probs.argmax(axis=-1), probs=probs)

    @classmethod
    def from_symbols(cls, alphabet: Alphabet, rows: List[List[str]]) -> "LabelGrid":
        """Build a hard grid from label symbols, one list per row."""
        return cls(alphabet=alphabet, labels=np.array([[alphabet.parse(s) for s in row] for row in rows]))

    @classmethod
    def empty(cls, alphabet: Alphabet, rows: int, cols: int) -> "LabelGrid":
        return cls(alphabet=alphabet, labels=np.zeros((rows, cols), dtype=np.int64))

    def one_hot(self) -> np.ndarray:
        """Distributions of the hard labels (M x N x K)."""
        return np.eye(self.alphabet.size)[self.labels]

    def symbols(self) -> List[List[str]]:
        return [[self.alphabet.symbol(int(k)) for k in row] for row in self.labels]


# ============================================================================
# Extractions and coordination structures
# ============================================================================

class Extraction(BaseModel):
    """(subject; relation; object) over token indices of its source sentence."""
    model_config = ConfigDict(frozen=True)

    subject: Tuple[int, ...] = ()
    relation: Tuple[int, ...]
    obj: Tuple[int, ...] = ()
    confidence: float = Field(0.0, le=0.0, description="Length-normalized log probability")
    source: Sentence

    @model_validator(mode="after")
    def validate_slots(self) -> "Extraction":
        if not self.relation:
            raise ValueError("Relation must be non-empty")
        seen = set()
        for name in ("subject", "relation", "obj"):
            indices = getattr(self, name)
            if list(indices) != sorted(set(indices)):
                raise ValueError(f"{name} indices must be sorted and unique")
            if seen.intersection(indices):
                raise ValueError(f"{name} shares indices with another slot")
            seen.update(indices)
        if seen and max(seen) >= len(self.source):
            raise ValueError("Slot index outside the source sentence")
        return self

    def slot_text(self, slot: str, bracketed: bool = True) -> str:
        return render_slot(getattr(self, slot), self.source, bracketed=bracketed)

    def texts(self, bracketed: bool = True) -> Tuple[str, str, str]:
        return (
            self.slot_text("subject", bracketed),
            self.slot_text("relation", bracketed),
            self.slot_text("obj", bracketed),
        )


class CoordinationStructure(BaseModel):
    """A coordinator and its conjunct spans (inclusive token ranges)."""
    model_config = ConfigDict(frozen=True)

    level: int = Field(..., ge=0)
    coordinator: int = Field(..., ge=0)
    conjuncts: Tuple[Tuple[int, int], ...] = Field(..., min_length=2)

    @field_validator("conjuncts")
    @classmethod
    def validate_conjuncts(cls, v: Tuple[Tuple[int, int], ...]) -> Tuple[Tuple[int, int], ...]:
        previous_end = -1
        for start, end in v:
            if start > end:
                raise ValueError(f"Conjunct span ({start}, {end}) is reversed")
            if start <= previous_end:
                raise ValueError("Conjunct spans must be ordered and disjoint")
            previous_end = end
        return v

    @model_validator(mode="after")
    def validate_coordinator(self) -> "CoordinationStructure":
        for start, end in self.conjuncts:
            if start <= self.coordinator <= end:
                raise ValueError("Coordinator lies inside a conjunct")
        if not self.conjuncts[0][0] - 1 <= self.coordinator <= self.conjuncts[-1][1] + 1:
            raise ValueError("Coordinator lies outside the conjunct spans")
        return self

    @property
    def span(self) -> Tuple[int, int]:
        """Token range covered by conjuncts, separators and coordinator."""
        start = min(self.conjuncts[0][0], self.coordinator)
        end = max(self.conjuncts[-1][1], self.coordinator)
        return start, end

    def contains(self, other: "CoordinationStructure") -> bool:
        """True when `other` lies inside one of this structure's conjuncts."""
        lo, hi = other.span
        return any(start <= lo and hi <= end for start, end in self.conjuncts)


class DedupKey(NamedTuple):
    """Normalized (subject, relation, object) text triple."""
    subject: str
    relation: str
    obj: str


# ============================================================================
# Serialization
# ============================================================================

def render_slot(indices: Tuple[int, ...], sentence: Sentence, bracketed: bool = True) -> str:
    """
    Render a slot's words; `[is]` leads, `[of]`/`[from]` trail.

    Args:
        indices: Sorted token indices of the slot
        sentence: Sentence the indices refer to
        bracketed: Keep the brackets of appended tokens

    Returns:
        Space-joined slot text
    """
    leading: List[str] = []
    body: List[str] = []
    trailing: List[str] = []
    for i in indices:
        token = sentence.tokens[i]
        surface = token.surface if bracketed or not token.is_appended else token.surface[1:-1]
        if not token.is_appended:
            body.append(surface)
        elif token.surface in _LEADING_APPENDED:
            leading.append(surface)
        else:
            trailing.append(surface)
    return " ".join(leading + body + trailing)


def _check_indices(e: Extraction, s: Sentence) -> None:
    for i in (*e.subject, *e.relation, *e.obj):
        if not 0 <= i < len(s):
            raise InputValidationError(f"Token index {i} out of range for sentence of length {len(s)}")


def serialize_extraction(e: Extraction, s: Sentence) -> str:
    """
    Serialize an extraction to plain text, subject then relation then object.

    Args:
        e: Extraction to serialize
        s: Sentence its indices refer to

    Returns:
        Words of the three slots joined by single spaces, brackets dropped

    Raises:
        InputValidationError: If an index falls outside `s`
    """
    _check_indices(e, s)
    parts = (render_slot(idx, s, bracketed=False) for idx in (e.subject, e.relation, e.obj))
    return " ".join(p for p in parts if p)


def normalize_text(text: str) -> str:
    return _WHITESPACE.sub(" ", text).strip().casefold()


def normalize_triple(subject: str, relation: str, obj: str) -> DedupKey:
    """Case-folded, whitespace-collapsed key of a text triple."""
    return DedupKey(normalize_text(subject), normalize_text(relation), normalize_text(obj))


def normalize_extraction(e: Extraction, s: Sentence) -> DedupKey:
    """Dedup key of an extraction; equal keys mean duplicate extractions."""
    _check_indices(e, s)
    return normalize_triple(*(render_slot(idx, s) for idx in (e.subject, e.relation, e.obj)))
