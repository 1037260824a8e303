"""
Tests for the benchmark scorers, matching and the precision-recall curve.
"""

import itertools
import random

import numpy as np
import pytest

from gridie.core.errors import InputValidationError, UnsupportedMetricError
from gridie.core.schemas import CoordinationStructure
from gridie.eval.coordination import coord_score
from gridie.eval.matching import assignment_weight, greedy_matching, max_weight_assignment
from gridie.eval.scoring import (
    SCORERS,
    TupleRecord,
    carb_one_one,
    carb_score,
    carb_similarity,
    get_scorer,
    oie16c_score,
    pr_curve_auc,
    wire57_candidate,
    wire57c_score,
)
from gridie.tests.fixtures import splitting_cases

CORPORA = {
    "talks_split": (splitting_cases.TALKS_SPLIT, splitting_cases.TALKS_GOLD),
    "talks_whole": (splitting_cases.TALKS_WHOLE, splitting_cases.TALKS_GOLD),
    "apple_split": (splitting_cases.APPLE_SPLIT, splitting_cases.APPLE_GOLD),
    "apple_whole": (splitting_cases.APPLE_WHOLE, splitting_cases.APPLE_GOLD),
}

WORDS = ["I", "ate", "an", "apple", "orange", "Talks", "resumed", "between", "USA", "China", "and", "the"]


def _random_record(rng: random.Random, confidence: float = 0.0) -> TupleRecord:
    def phrase(low: int) -> str:
        return " ".join(rng.choice(WORDS) for _ in range(rng.randint(low, 3)))

    return TupleRecord(subject=phrase(0), relation=phrase(1), obj=phrase(0), confidence=confidence)


def _random_corpus(seed: int, sentences: int = 4, with_confidence: bool = False):
    rng = random.Random(seed)
    gold = {str(k): [_random_record(rng) for _ in range(rng.randint(1, 4))] for k in range(sentences)}
    system = {
        str(k): [
            _random_record(rng, -round(rng.random(), 2) if with_confidence else 0.0)
            for _ in range(rng.randint(0, 5))
        ]
        for k in range(sentences)
    }
    return system, gold


def _triple(report):
    return report.precision, report.recall, report.f1


class TestCombinatoryAndSegregatoryCoordination:
    """Test the scorers on a coordination that must not be split and one that should be."""

    @pytest.mark.parametrize("case", sorted(CORPORA))
    def test_carb(self, case):
        """Test CaRB precision, recall and F1."""
        system, gold = CORPORA[case]
        assert _triple(carb_score(system, gold)) == pytest.approx(splitting_cases.EXPECTED_CARB[case], abs=0.5)

    @pytest.mark.parametrize("case", sorted(CORPORA))
    def test_carb_one_one(self, case):
        """Test CaRB(1-1) precision, recall and F1."""
        system, gold = CORPORA[case]
        assert _triple(carb_one_one(system, gold)) == pytest.approx(splitting_cases.EXPECTED_CARB_ONE_ONE[case], abs=0.5)

    def test_one_one_penalizes_unsplit_segregatory(self):
        """Test that only CaRB(1-1) punishes merging two facts into one tuple."""
        system, gold = CORPORA["apple_whole"]
        assert carb_score(system, gold).recall == pytest.approx(100.0)
        assert carb_one_one(system, gold).recall == pytest.approx(50.0)

    def test_one_one_recall_uses_precision_pairs(self):
        """Test that CaRB(1-1) recall is read off the pairs chosen for precision."""
        gold = {"1": [
            TupleRecord(subject="Ann", relation="sang", obj="hymns"),
            TupleRecord(subject="Ann", relation="sang", obj="ballads carols dirges elegies fugues glees lieder motets"),
        ]}
        system = {"1": [
            TupleRecord(subject="Ann", relation="sang", obj=""),
            TupleRecord(subject="Ann", relation="sang", obj="hymns ballads carols"),
        ]}
        # precision prefers (gold 1, system 1) + (gold 2, system 2): 1 + 4/5 over 3/5 + 1
        # recall alone would prefer the crossed pairs: 1 + 2/10 over 2/3 + 4/10
        report = carb_one_one(system, gold)
        assert report.precision == pytest.approx(90.0)
        assert report.recall == pytest.approx(100.0 * (2 / 3 + 4 / 10) / 2)
        assert carb_score(system, gold).recall == pytest.approx(100.0 * (1 + 4 / 10) / 2)


class TestScorerProperties:
    """Test properties shared by the scorers."""

    @pytest.mark.parametrize("name", sorted(SCORERS))
    def test_identity_is_perfect(self, name):
        """Test that scoring gold against itself gives 100."""
        _, gold = _random_corpus(3)
        report = get_scorer(name)(gold, gold)
        assert _triple(report) == pytest.approx((100.0, 100.0, 100.0))

    @pytest.mark.parametrize("name", sorted(SCORERS))
    def test_empty_system(self, name):
        """Test that an empty system scores zero."""
        _, gold = _random_corpus(4)
        report = get_scorer(name)({}, gold)
        assert (report.precision, report.recall, report.f1) == (0.0, 0.0, 0.0)

    @pytest.mark.parametrize("seed", range(20))
    def test_carb_recall_bounds_one_one(self, seed):
        """Test that many-to-one recall is never below one-to-one recall."""
        system, gold = _random_corpus(seed)
        assert carb_score(system, gold).recall >= carb_one_one(system, gold).recall - 1e-9
        assert carb_score(system, gold).precision == pytest.approx(carb_one_one(system, gold).precision)

    @pytest.mark.parametrize("seed", range(10))
    @pytest.mark.parametrize("name", sorted(SCORERS))
    def test_permutation_invariant(self, seed, name):
        """Test that the order of system tuples does not change the scores."""
        system, gold = _random_corpus(seed)
        rng = random.Random(seed)
        shuffled = {k: rng.sample(list(v), len(v)) for k, v in system.items()}
        score = get_scorer(name)
        assert _triple(score(shuffled, gold)) == pytest.approx(_triple(score(system, gold)))

    def test_unknown_system_keys_count_against_precision(self):
        """Test that tuples for sentences absent from gold are false positives."""
        system = {"1": splitting_cases.TALKS_WHOLE["1"], "9": splitting_cases.TALKS_WHOLE["1"]}
        report = carb_score(system, splitting_cases.TALKS_GOLD)
        assert report.precision == pytest.approx(50.0)
        assert report.recall == pytest.approx(100.0)

    def test_appended_token_brackets_ignored(self):
        """Test that "[is]" in gold matches "is" in system output."""
        gold = TupleRecord(subject="Rome", relation="[is] capital [of]", obj="Italy")
        system = TupleRecord(subject="Rome", relation="is capital of", obj="Italy")
        assert carb_similarity(gold, system) == (1.0, 1.0)

    def test_relation_must_overlap(self):
        """Test that a pair without shared relation words scores zero."""
        gold = TupleRecord(subject="Rome", relation="is", obj="old")
        system = TupleRecord(subject="Rome", relation="seems", obj="old")
        assert carb_similarity(gold, system) == (0.0, 0.0)

    def test_unknown_scorer(self):
        """Test that unknown scorer names raise."""
        with pytest.raises(InputValidationError):
            get_scorer("bleu")


class TestOtherScorers:
    """Test OIE16-C and Wire57-C specifics."""

    def test_oie16c_counts_matches(self):
        """Test that one match among two system tuples halves precision."""
        system = {"1": [TupleRecord(subject="I", relation="ate", obj="an apple"), TupleRecord(subject="x", relation="y", obj="z")]}
        report = oie16c_score(system, {"1": [TupleRecord(subject="I", relation="ate", obj="an apple")]})
        assert (report.precision, report.recall) == pytest.approx((50.0, 100.0))

    def test_wire57_candidate_requires_every_gold_slot(self):
        """Test the candidate filter."""
        gold = TupleRecord(subject="I", relation="ate", obj="an apple")
        assert wire57_candidate(gold, TupleRecord(subject="I", relation="ate", obj="apple pie"))
        assert not wire57_candidate(gold, TupleRecord(subject="I", relation="ate", obj="pears"))
        assert wire57_candidate(TupleRecord(subject="I", relation="slept"), TupleRecord(subject="I", relation="slept", obj="well"))

    def test_wire57c_token_level(self):
        """Test token-aggregate precision and recall."""
        system = {"2": [TupleRecord(subject="I", relation="ate", obj="an apple and an orange")]}
        report = wire57c_score(system, splitting_cases.APPLE_GOLD)
        # 4 of 7 system tokens and 4 of 8 gold tokens
        assert (report.precision, report.recall) == pytest.approx((400 / 7, 50.0))


class TestMatching:
    """Test the assignment and greedy matchers."""

    @pytest.mark.parametrize("seed", range(25))
    def test_assignment_is_optimal(self, seed):
        """Test the assignment against brute force on small matrices."""
        rng = np.random.default_rng(seed)
        rows, cols = int(rng.integers(1, 6)), int(rng.integers(1, 6))
        weights = rng.random((rows, cols))
        k = min(rows, cols)
        best = max(
            sum(weights[r, c] for r, c in zip(row_pick, col_perm))
            for row_pick in itertools.combinations(range(rows), k)
            for col_perm in itertools.permutations(range(cols), k)
        )
        assert assignment_weight(weights) == pytest.approx(best)
        pairs = max_weight_assignment(weights)
        assert len({r for r, _ in pairs}) == len({c for _, c in pairs}) == k

    def test_empty_matrix(self):
        """Test that empty matrices give no pairs."""
        assert max_weight_assignment(np.zeros((0, 3))) == []
        assert greedy_matching(np.zeros((2, 0))) == []

    def test_greedy_order_and_ties(self):
        """Test descending weights, the threshold and the tie-break."""
        weights = np.array([[0.9, 0.5], [0.9, 0.0]])
        assert greedy_matching(weights) == [(0, 0)]
        assert greedy_matching(weights, tie_break=lambda r, c: (-r,)) == [(1, 0), (0, 1)]
        assert greedy_matching(weights, threshold=0.6) == [(0, 0)]


class TestPrecisionRecallCurve:
    """Test threshold sweeps and the area under the curve."""

    @pytest.mark.parametrize("seed", range(10))
    @pytest.mark.parametrize("name", ["carb", "carb_one_one", "oie16c"])
    def test_recall_monotone_in_threshold(self, seed, name):
        """Test that lowering the threshold never lowers recall."""
        system, gold = _random_corpus(seed, with_confidence=True)
        report = pr_curve_auc(system, gold, name)
        recalls = [point.recall for point in report.curve]
        assert all(b >= a - 1e-9 for a, b in zip(recalls, recalls[1:]))
        assert [p.threshold for p in report.curve] == sorted({p.threshold for p in report.curve}, reverse=True)

    def test_single_threshold_area(self):
        """Test that one operating point gives area precision times recall."""
        system, gold = _random_corpus(5)
        report = pr_curve_auc(system, gold, "carb")
        assert len(report.curve) == 1
        assert report.auc == pytest.approx(report.precision * report.recall / 100.0)

    def test_full_output_scores_reported(self):
        """Test that the report carries the unthresholded scores."""
        system, gold = _random_corpus(6, with_confidence=True)
        assert _triple(pr_curve_auc(system, gold)) == pytest.approx(_triple(carb_score(system, gold)))

    def test_wire57c_has_no_area(self):
        """Test that AUC is refused for Wire57-C."""
        with pytest.raises(UnsupportedMetricError, match="AUC undefined for Wire57-C"):
            pr_curve_auc(splitting_cases.APPLE_SPLIT, splitting_cases.APPLE_GOLD, "wire57c")


class TestCoordScore:
    """Test exact-match coordination scoring."""

    def test_exact_match(self):
        """Test that conjunct boundaries must match exactly and levels are ignored."""
        gold = {
            "1": [
                CoordinationStructure(level=0, coordinator=3, conjuncts=((2, 2), (4, 4))),
                CoordinationStructure(level=1, coordinator=8, conjuncts=((7, 7), (9, 9))),
            ]
        }
        predicted = {
            "1": [
                CoordinationStructure(level=1, coordinator=3, conjuncts=((2, 2), (4, 4))),
                CoordinationStructure(level=0, coordinator=8, conjuncts=((6, 7), (9, 9))),
            ]
        }
        report = coord_score(predicted, gold)
        assert (report.scorer, report.precision, report.recall) == ("coord", 50.0, 50.0)
