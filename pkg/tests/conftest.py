"""Pytest configuration and fixtures"""
import json
import os
import random

import pytest

from backend.models import EncodingConfig, GroundedSample
from backend.services.corpus_service import parse_corpus
from tests.synthetic import corpus_entry, random_grounded_sample

# Keep a developer's .env from leaking into configuration tests
for _key in list(os.environ):
    if _key.startswith("SGLAYOUT_"):
        del os.environ[_key]


@pytest.fixture
def rng():
    """Seeded random stream"""
    return random.Random(20240607)


@pytest.fixture
def horse_document():
    """Corpus with one person riding a horse, a hat on the person and a lone tree"""
    return json.dumps(
        {
            "samples": [
                corpus_entry(
                    "img1",
                    objects=[
                        (1, "Person", (100, 200, 400, 160)),
                        (2, "horse", (40, 240, 120, 80)),
                        (3, "hat", (100, 200, 40, 40)),
                        (4, "tree", (600, 0, 100, 300)),
                    ],
                    relationships=[(1, "riding", 2), (3, "on", 1)],
                )
            ]
        }
    )


@pytest.fixture
def horse_sample(horse_document) -> GroundedSample:
    return parse_corpus(horse_document)[0]


@pytest.fixture
def small_corpus(rng):
    """Twelve random grounded samples with 1 to 5 relationships"""
    return [random_grounded_sample(rng, f"s{i:02d}", rng.randint(1, 5)) for i in range(12)]


@pytest.fixture
def encoding():
    return EncodingConfig()


@pytest.fixture
def imgar_encoding():
    return EncodingConfig(include_imgar=True)
