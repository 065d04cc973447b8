"""Session fixtures shared across the suite.

Training is the expensive part, so converged runs and the labeled corpus
are built once per session; every consumer treats them as read-only.
"""

import pytest
from hypothesis import HealthCheck, settings

from qperiod import classifier, training

settings.register_profile(
    "suite", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("suite")

# 0-4 form the convergence pool; 8 pairs with 3 for the non-uniqueness
# comparison (both land well inside the echo gates)
N3_SEEDS = (0, 1, 2, 3, 4, 8)
N3_EPOCHS = 5000


@pytest.fixture(scope="session")
def n3_dataset():
    return training.build_training_dataset(3, 3, 6, 0, training.LossConfig())


@pytest.fixture(scope="session")
def n3_runs(n3_dataset):
    """seed -> (m3, history) for the shared n=3 training configuration."""
    loss_cfg = training.LossConfig()
    adam_cfg = training.AdamConfig()
    return {
        seed: training.train(n3_dataset, loss_cfg, adam_cfg, N3_EPOCHS, seed=seed)
        for seed in N3_SEEDS
    }


@pytest.fixture(scope="session")
def corpus_n4():
    """Full-protocol labeled corpus at n=4; the slow fixture (minutes)."""
    return classifier.build_corpus(4, 200, classifier.CorpusConfig(), seed=0)


@pytest.fixture(scope="session")
def classifier_run(corpus_n4):
    """Classifier trained on the canonical n=4 split: (net, history, splits)."""
    splits = classifier.split_corpus(corpus_n4, 7)
    config = classifier.MLPConfig(input_dim=2 ** 9, seed=0)
    net = classifier.initialize_mlp(config)
    net, history = classifier.train_classifier(
        net, splits, max_epochs=600, shuffle_seed=10_000
    )
    return net, history, splits
