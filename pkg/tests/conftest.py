import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from synthetic import synthetic_flows, synthetic_policy_corpus  # noqa: E402

from privaudit.classifier import train_suite  # noqa: E402
from privaudit.dynamic_analysis import train_leak_classifier  # noqa: E402


@pytest.fixture(scope="session")
def trained_suite():
    """Suite trained on the synthetic policy corpus (shared, expensive)."""
    corpus = synthetic_policy_corpus(1600, seed=7)
    split = (list(range(1200)), list(range(1200, 1600)))
    suite, report = train_suite(corpus, split, seed=7)
    return suite, report, corpus, split


@pytest.fixture(scope="session")
def trained_tree():
    """Flow tree trained on 1,400 synthetic flows; 600 held out."""
    flows = synthetic_flows(2000, seed=11)
    train = [(f, bool(f.leak)) for f in flows[:1400]]
    test = [(f, bool(f.leak)) for f in flows[1400:]]
    tree = train_leak_classifier(train)
    return tree, train, test


@pytest.fixture(scope="session")
def e2e_dataset(tmp_path_factory, trained_suite, trained_tree):
    """Full on-disk dataset: models, policies, decompiled tree, flows."""
    from e2e_fixture import build_dataset

    root = tmp_path_factory.mktemp("dataset")
    return build_dataset(root, trained_suite[0], trained_tree[0])
