import pytest

from lambdauc.synth import YAHOO_LIKE_SKEW, SynthConfig, generate_fold


@pytest.fixture(scope="session")
def separable_fold():
    """5 queries x 40 documents per split, two grades, no noise."""
    return generate_fold(SynthConfig(queries=5, docs_per_query=40, classes=2, noise=0.0, seed=42))


@pytest.fixture(scope="session")
def skewed_fold():
    return generate_fold(SynthConfig(queries=8, docs_per_query=60, classes=5,
                                     skew=YAHOO_LIKE_SKEW, noise=0.5, seed=7))
