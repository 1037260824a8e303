"""
Seeded templated corpora for the training acceptance tests.

Nouns within a sentence are always distinct so every gold slot aligns
unambiguously.
"""

import random
from typing import List, Tuple

from gridie.core.alignment import GoldTriple

NAMES = [
    "Alice", "Bob", "Carol", "Dave", "Erin", "Frank", "Grace", "Heidi",
    "Ivan", "Judy", "Oscar", "Peggy", "Trent", "Victor", "Walter", "Wendy",
]
VERBS = ["visited", "painted", "repaired", "cleaned", "watched", "opened", "guarded", "photographed"]
MOTION_VERBS = ["walked", "sailed", "traveled", "hurried"]
PLACES_THE = [
    "the market", "the bridge", "the library", "the garden",
    "the museum", "the station", "the harbor", "the castle",
]
CITIES = ["Paris", "Rome", "Berlin", "Madrid", "Vienna", "Lisbon", "Prague", "Dublin"]
ROLES = ["mayor", "director", "owner", "captain"]
ADVERBS = ["quickly", "slowly", "carefully", "happily"]

Example = Tuple[str, List[GoldTriple]]


def _svo(rng: random.Random) -> Example:
    subject, verb, obj = rng.choice(NAMES), rng.choice(VERBS), rng.choice(PLACES_THE)
    return f"{subject} {verb} {obj} .", [GoldTriple(subject=subject, relation=verb, obj=obj)]


def _prepositional(rng: random.Random) -> Example:
    subject, verb, city = rng.choice(NAMES), rng.choice(MOTION_VERBS), rng.choice(CITIES)
    return f"{subject} {verb} to {city} .", [GoldTriple(subject=subject, relation=f"{verb} to", obj=city)]


def _two_clauses(rng: random.Random, drop_rate: float) -> Example:
    first, second = rng.sample(NAMES, 2)
    verb_a, verb_b = rng.sample(VERBS, 2)
    place_a, place_b = rng.sample(PLACES_THE, 2)
    text = f"{first} {verb_a} {place_a} and {second} {verb_b} {place_b} ."
    triples = [GoldTriple(subject=first, relation=verb_a, obj=place_a)]
    # dropped second tuples leave head verbs uncovered in the gold data
    if rng.random() >= drop_rate:
        triples.append(GoldTriple(subject=second, relation=verb_b, obj=place_b))
    return text, triples


def _appositive(rng: random.Random) -> Example:
    subject, role, city = rng.choice(NAMES), rng.choice(ROLES), rng.choice(CITIES)
    verb, place = rng.choice(VERBS), rng.choice(PLACES_THE)
    text = f"{subject} , the {role} of {city} , {verb} {place} ."
    return text, [
        GoldTriple(subject=subject, relation=verb, obj=place),
        GoldTriple(subject=subject, relation=f"[is] the {role} of", obj=city),
    ]


def _adverb(rng: random.Random) -> Example:
    subject, adverb, verb, obj = rng.choice(NAMES), rng.choice(ADVERBS), rng.choice(VERBS), rng.choice(PLACES_THE)
    return f"{subject} {adverb} {verb} {obj} .", [GoldTriple(subject=subject, relation=f"{adverb} {verb}", obj=obj)]


def generate_corpus(size: int, seed: int = 0, drop_rate: float = 0.0) -> List[Example]:
    """
    Templated OpenIE training pairs.

    Args:
        size: Number of sentences
        seed: RNG seed
        drop_rate: Probability of omitting the second tuple of a two-clause sentence

    Returns:
        (sentence, gold triples) pairs
    """
    rng = random.Random(seed)
    templates = [
        lambda: _svo(rng),
        lambda: _prepositional(rng),
        lambda: _two_clauses(rng, drop_rate),
        lambda: _appositive(rng),
        lambda: _adverb(rng),
    ]
    return [templates[i % len(templates)]() for i in range(size)]


def to_training_tsv(corpus: List[Example]) -> str:
    return "".join(f"{text}\t{t.subject}\t{t.relation}\t{t.obj}\n" for text, triples in corpus for t in triples)


def generate_coordination_corpus(size: int, seed: int = 0) -> str:
    """Coordination training file: "X verbed A , B and C ." with one structure per sentence."""
    rng = random.Random(seed)
    blocks = []
    for _ in range(size):
        subject, verb = rng.choice(NAMES), rng.choice(VERBS)
        count = rng.choice([2, 3])
        places = rng.sample(CITIES, count)
        tokens = [subject, verb]
        labels = ["N", "N"]
        for k, place in enumerate(places):
            if k == count - 1:
                tokens.append("and")
                labels.append("CC")
            elif k > 0:
                tokens.append(",")
                labels.append("N")
            tokens.append(place)
            labels.append("CONJ")
        tokens.append(".")
        labels.append("N")
        blocks.append(" ".join(tokens) + "\n" + " ".join(labels) + "\n")
    return "\n".join(blocks)
