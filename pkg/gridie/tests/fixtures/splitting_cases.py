"""
The two scorer-comparison sentences: a combinatory coordination that must
not be split and a segregatory one that should be.
"""

from gridie.eval.scoring import TupleRecord


def _t(subject: str, relation: str, obj: str) -> TupleRecord:
    return TupleRecord(subject=subject, relation=relation, obj=obj)


TALKS_GOLD = {"1": [_t("Talks", "resumed", "between USA and China")]}
TALKS_SPLIT = {"1": [_t("Talks", "resumed", "between USA"), _t("Talks", "resumed", "between China")]}
TALKS_WHOLE = {"1": [_t("Talks", "resumed", "between USA and China")]}

APPLE_GOLD = {"2": [_t("I", "ate", "an apple"), _t("I", "ate", "an orange")]}
APPLE_SPLIT = {"2": [_t("I", "ate", "an apple"), _t("I", "ate", "an orange")]}
APPLE_WHOLE = {"2": [_t("I", "ate", "an apple and an orange")]}

# (precision, recall, f1) on the percent scale
EXPECTED_CARB = {
    "talks_split": (50.0, 66.7, 57.1),
    "talks_whole": (100.0, 100.0, 100.0),
    "apple_split": (100.0, 100.0, 100.0),
    "apple_whole": (57.1, 100.0, 72.7),
}
EXPECTED_CARB_ONE_ONE = {
    "talks_split": (50.0, 66.7, 57.1),
    "talks_whole": (100.0, 100.0, 100.0),
    "apple_split": (100.0, 100.0, 100.0),
    # one gold tuple fully recovered out of two: P 4/7, R 1/2
    "apple_whole": (57.1, 50.0, 53.3),
}

GOLD_TSV = (
    "1\tTalks\tresumed\tbetween USA and China\n"
    "2\tI\tate\tan apple\n"
    "2\tI\tate\tan orange\n"
)

SPLITTING_SYSTEM_TSV = (
    "1\t-0.1\tTalks\tresumed\tbetween USA\n"
    "1\t-0.2\tTalks\tresumed\tbetween China\n"
    "2\t-0.1\tI\tate\tan apple\n"
    "2\t-0.3\tI\tate\tan orange\n"
)

NON_SPLITTING_SYSTEM_TSV = (
    "1\t-0.1\tTalks\tresumed\tbetween USA and China\n"
    "2\t-0.1\tI\tate\tan apple and an orange\n"
)
