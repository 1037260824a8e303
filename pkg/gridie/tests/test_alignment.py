"""
Tests for aligning gold text triples to grid rows.
"""

import numpy as np
import pytest

from gridie.core.alignment import AlignmentStats, GoldTriple, SkipMarker, align_gold, gold_grid
from gridie.core.errors import InputValidationError
from gridie.core.lingo import append_special, tokenize
from gridie.core.schemas import Extraction, OieLabel
from gridie.tests.fixtures.alignment_pairs import ALIGNABLE, AMBIGUOUS, UNMATCHED


def _unbracket(text: str) -> str:
    return text.replace("[", "").replace("]", "")


def _row_extraction(s, row) -> Extraction:
    def slot(label):
        return tuple(int(i) for i in np.flatnonzero(row == label))

    return Extraction(subject=slot(OieLabel.S), relation=slot(OieLabel.R), obj=slot(OieLabel.O), source=s)


class TestAlignGold:
    """Test single-triple alignment."""

    @pytest.mark.parametrize("sentence,subject,relation,obj", ALIGNABLE)
    def test_round_trip(self, sentence, subject, relation, obj):
        """Test that aligned rows render back to the gold text verbatim."""
        s = append_special(tokenize(sentence))
        row = align_gold(s, GoldTriple(subject=subject, relation=relation, obj=obj))
        assert not isinstance(row, SkipMarker), row
        rendered = _row_extraction(s, row).texts(bracketed=False)
        assert rendered == (subject, _unbracket(relation), obj)

    @pytest.mark.parametrize("sentence,subject,relation,obj", AMBIGUOUS)
    def test_ambiguous(self, sentence, subject, relation, obj):
        """Test that two ambiguous arguments skip the triple."""
        marker = align_gold(tokenize(sentence), GoldTriple(subject=subject, relation=relation, obj=obj))
        assert marker == SkipMarker(reason="ambiguous")

    @pytest.mark.parametrize("sentence,subject,relation,obj,reason", UNMATCHED)
    def test_unmatched(self, sentence, subject, relation, obj, reason):
        """Test the reason given for slots missing from the sentence."""
        marker = align_gold(tokenize(sentence), GoldTriple(subject=subject, relation=relation, obj=obj))
        assert marker == SkipMarker(reason=reason)

    def test_empty_relation(self):
        """Test that a triple without relation words is skipped."""
        marker = align_gold(tokenize("Cats sleep ."), GoldTriple(subject="Cats", relation="  "))
        assert marker.reason == "empty relation"

    def test_direction_resolves_repeated_noun(self):
        """Test that the subject precedes and the object follows a unique relation."""
        s = append_special(tokenize("The dog chased the dog ."))
        row = align_gold(s, GoldTriple(subject="The dog", relation="chased", obj="the dog"))
        assert row[:6].tolist() == [OieLabel.S, OieLabel.S, OieLabel.R, OieLabel.O, OieLabel.O, OieLabel.N]

    def test_nearest_occurrence_wins(self):
        """Test that a single ambiguous argument takes the occurrence next to the relation."""
        s = append_special(tokenize("The dog chased the cat and the dog barked ."))
        row = align_gold(s, GoldTriple(subject="the dog", relation="barked"))
        assert np.flatnonzero(row == OieLabel.S).tolist() == [6, 7]
        assert np.flatnonzero(row == OieLabel.R).tolist() == [8]

    def test_bracketed_tokens_use_appended_positions(self):
        """Test that [is] and [of] map to the appended tokens."""
        s = append_special(tokenize("Alice , the mayor of Paris , visited the market ."))
        row = align_gold(s, GoldTriple(subject="Alice", relation="[is] the mayor of", obj="Paris"))
        n = s.n_real
        assert np.flatnonzero(row == OieLabel.R).tolist() == [2, 3, 4, n]

    def test_implicit_fallback(self):
        """Test that missing is/of words fall back to appended tokens."""
        s = append_special(tokenize("Jones , Acme president , spoke ."))
        row = align_gold(s, GoldTriple(subject="Jones", relation="is president of", obj="Acme"))
        n = s.n_real
        assert np.flatnonzero(row == OieLabel.R).tolist() == [3, n, n + 1]

    def test_appends_tokens_when_missing(self):
        """Test that rows always span the appended sentence."""
        row = align_gold(tokenize("Cats chase mice ."), GoldTriple(subject="Cats", relation="chase", obj="mice"))
        assert len(row) == 4 + 3


class TestGoldGrid:
    """Test stacking aligned rows into a training grid."""

    def test_rows_ordered_and_padded(self):
        """Test row order by relation position and padding with N rows."""
        s = tokenize("The team won the final and the fans celebrated .")
        triples = [
            GoldTriple(subject="the fans", relation="celebrated"),
            GoldTriple(subject="The team", relation="won", obj="the final"),
        ]
        grid = gold_grid(s, triples, levels=3)
        assert grid.rows == 3
        assert grid.cols == len(s) + 3
        assert np.flatnonzero(grid.labels[0] == OieLabel.R).tolist() == [2]
        assert np.flatnonzero(grid.labels[1] == OieLabel.R).tolist() == [8]
        assert (grid.labels[2] == OieLabel.N).all()

    def test_stats_and_truncation(self):
        """Test skip counts and truncation beyond the level count."""
        s = tokenize("Microsoft acquired GitHub in 2018 .")
        triples = [
            GoldTriple(subject="Microsoft", relation="acquired", obj="GitHub"),
            GoldTriple(subject="Microsoft", relation="acquired GitHub in", obj="2018"),
            GoldTriple(subject="Apple", relation="acquired", obj="GitHub"),
        ]
        stats = AlignmentStats()
        grid = gold_grid(s, triples, levels=1, stats=stats)
        assert grid.rows == 1
        assert stats.aligned == 2
        assert stats.truncated == 1
        assert stats.skipped == {"no match for subject": 1}
        assert stats.coverage == pytest.approx(2 / 3)

    def test_levels_must_be_positive(self):
        """Test that a grid needs at least one level."""
        with pytest.raises(InputValidationError):
            gold_grid(tokenize("Cats sleep ."), [], levels=0)
