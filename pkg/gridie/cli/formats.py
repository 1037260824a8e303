"""
Readers and writers for the sentence, extraction, gold and training files.

Every parse error names the file and the 1-based line number.
"""

from pathlib import Path
from typing import Dict, Iterable, Iterator, List, NamedTuple, Sequence, TextIO, Tuple, Union

from gridie.core.alignment import GoldTriple
from gridie.core.errors import CorpusFormatError, InputValidationError
from gridie.core.lingo import tokenize
from gridie.core.schemas import Alphabet, Extraction, LabelGrid, Sentence
from gridie.eval.scoring import TupleRecord

PathLike = Union[str, Path]


def _lines(path: PathLike) -> Iterator[Tuple[int, str]]:
    """(line number, text) for each line, newline stripped."""
    path = Path(path)
    if not path.is_file():
        raise CorpusFormatError("file not found", path)
    with open(path, encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            yield number, line.rstrip("\r\n")


def read_sentences(path: PathLike) -> List[Tuple[str, str]]:
    """(sentence_id, text) pairs; the id is the line number, blank lines are skipped."""
    return [(str(number), line) for number, line in _lines(path) if line.strip()]


def read_tuples(path: PathLike) -> Dict[str, List[TupleRecord]]:
    """
    Read an extraction file (5 columns) or a gold file (4 columns).

    Raises:
        CorpusFormatError: On a wrong column count, bad confidence or empty relation
    """
    tuples: Dict[str, List[TupleRecord]] = {}
    for number, line in _lines(path):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) == 5:
            sentence_id, confidence_text, subject, relation, obj = fields
            try:
                confidence = float(confidence_text)
            except ValueError:
                raise CorpusFormatError(f"bad confidence '{confidence_text}'", path, number) from None
        elif len(fields) == 4:
            sentence_id, subject, relation, obj = fields
            confidence = 0.0
        else:
            raise CorpusFormatError(f"expected 4 or 5 tab-separated fields, got {len(fields)}", path, number)
        if not relation.strip():
            raise CorpusFormatError("empty relation", path, number)
        tuples.setdefault(sentence_id.strip(), []).append(
            TupleRecord(subject=subject, relation=relation, obj=obj, confidence=confidence)
        )
    return tuples


def write_extractions(handle: TextIO, rows: Iterable[Tuple[str, Extraction]]) -> int:
    """Write sentence_id, confidence and the three slot texts; returns the row count."""
    count = 0
    for sentence_id, extraction in rows:
        subject, relation, obj = extraction.texts(bracketed=False)
        handle.write(f"{sentence_id}\t{extraction.confidence:.6f}\t{subject}\t{relation}\t{obj}\n")
        count += 1
    return count


def read_oie_training(path: PathLike) -> List[Tuple[str, List[GoldTriple]]]:
    """
    Read sentence, subject, relation, object rows.

    Rows sharing a sentence form one example, kept in first-appearance order.

    Raises:
        CorpusFormatError: On a wrong column count or empty relation
    """
    grouped: Dict[str, List[GoldTriple]] = {}
    for number, line in _lines(path):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise CorpusFormatError(f"expected 4 tab-separated fields, got {len(fields)}", path, number)
        sentence, subject, relation, obj = (f.strip() for f in fields)
        if not sentence or not relation:
            raise CorpusFormatError("sentence and relation must be non-empty", path, number)
        grouped.setdefault(sentence, []).append(GoldTriple(subject=subject, relation=relation, obj=obj))
    if not grouped:
        raise InputValidationError(f"{path}: no training rows")
    return list(grouped.items())


class CoordBlock(NamedTuple):
    """One annotated sentence of a coordination file."""
    sentence: Sentence
    rows: List[List[str]]
    line: int


def read_coord_training(path: PathLike) -> List[CoordBlock]:
    """
    Read blocks of a sentence line followed by label lines.

    Raises:
        CorpusFormatError: On unknown labels or a label count that differs from the token count
    """
    blocks: List[CoordBlock] = []
    current: List[Tuple[int, str]] = []

    def flush() -> None:
        if not current:
            return
        start, text = current[0]
        sentence = tokenize(text)
        rows = []
        for number, labels in current[1:]:
            symbols = labels.split()
            if len(symbols) != len(sentence):
                raise CorpusFormatError(f"{len(symbols)} labels for {len(sentence)} tokens", path, number)
            for symbol in symbols:
                try:
                    Alphabet.COORD.parse(symbol)
                except InputValidationError as e:
                    raise CorpusFormatError(str(e), path, number) from None
            rows.append(symbols)
        blocks.append(CoordBlock(sentence=sentence, rows=rows, line=start))
        current.clear()

    for number, line in _lines(path):
        if line.strip():
            current.append((number, line))
        else:
            flush()
    flush()
    if not blocks:
        raise InputValidationError(f"{path}: no coordination blocks")
    return blocks


def coord_grid(block: CoordBlock, levels: int) -> LabelGrid:
    """Label rows of a block padded or truncated to `levels` rows."""
    width = len(block.sentence)
    rows = block.rows[:levels] + [["N"] * width] * max(0, levels - len(block.rows))
    return LabelGrid.from_symbols(Alphabet.COORD, rows)


def write_rows(handle: TextIO, rows: Sequence[Sequence[object]]) -> None:
    for row in rows:
        handle.write("\t".join(str(value) for value in row) + "\n")
