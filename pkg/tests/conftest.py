import csv

import numpy as np
import pytest

from dirseg.model import HyperParams, ModelSpec


def read_csv_rows(path):
    """DictReader rows of a report CSV, skipping '#' comment lines."""
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(line for line in fh if not line.startswith("#")))


@pytest.fixture
def full22():
    """K=2, L=2 model with full masks and uniform start."""
    return ModelSpec(K=2, alphabet=("a", "b"), p0=[0.5, 0.5],
                     trans_mask=np.ones((2, 2), bool),
                     emit_mask=np.ones((2, 2), bool))


@pytest.fixture
def hp_uniform22(full22):
    return HyperParams(alpha=np.ones((2, 2)), beta=np.ones((2, 2))).validate(full22)


def random_masked_instance(rng, K=None, L=None, n=None, alpha_low=0.3, alpha_high=3.0):
    """A random sparse model with positive hyperparameters and a random
    observation sequence that is possible under the masks."""
    from dirseg.synthetic import random_model

    K = K if K is not None else int(rng.integers(2, 4))
    L = L if L is not None else int(rng.integers(2, 4))
    n = n if n is not None else int(rng.integers(3, 8))
    spec, theta = random_model(K, L, seed=rng, trans_density=0.8, emit_density=0.9)
    alpha = np.where(spec.trans_mask, rng.uniform(alpha_low, alpha_high, (K, K)), 0.0)
    beta = np.where(spec.emit_mask, rng.uniform(alpha_low, alpha_high, (K, L)), 0.0)
    hp = HyperParams(alpha=alpha, beta=beta).validate(spec)
    from dirseg.likelihood import sample_hmm_pair
    x, _ = sample_hmm_pair(theta, spec, n, rng)
    return spec, theta, hp, x
