"""Random sparse models and synthetic corpus generation.

Used by the ``sample`` CLI command, the benchmark and the test suite; the
reference dataset this kind of model is usually fit to is proprietary, so
synthetic corpora stand in everywhere.
"""

from __future__ import annotations

import numpy as np

from .likelihood import sample_hmm_pair, sample_polya_pair
from .model import DataError, HyperParams, ModelSpec, ParamMatrices


def random_model(K: int, L: int, seed, trans_density: float = 1.0,
                 emit_density: float = 1.0, concentration: float = 2.0,
                 self_weight: float = 0.0, p0=None) -> tuple[ModelSpec, ParamMatrices]:
    """Draw a random masked model with Dirichlet-distributed rows.

    Densities give the probability that an off-diagonal transition cell or an
    emission cell is possible; one cell per row is always kept so no row dies.
    ``self_weight`` mixes that share of extra mass onto self-transitions,
    which produces the block-structured paths typical of labeling corpora.
    """
    rng = np.random.default_rng(seed)
    trans_mask = rng.random((K, K)) < trans_density
    np.fill_diagonal(trans_mask, True)
    emit_mask = rng.random((K, L)) < emit_density
    for i in range(K):
        if not emit_mask[i].any():
            emit_mask[i, rng.integers(L)] = True
    trans = np.zeros((K, K))
    emit = np.zeros((K, L))
    for i in range(K):
        trans[i, trans_mask[i]] = rng.dirichlet(
            np.full(int(trans_mask[i].sum()), concentration))
        emit[i, emit_mask[i]] = rng.dirichlet(
            np.full(int(emit_mask[i].sum()), concentration))
    if self_weight:
        trans = (1.0 - self_weight) * trans + self_weight * np.eye(K)
    if p0 is None:
        p0 = rng.dirichlet(np.full(K, 5.0))
    spec = ModelSpec(K=K, alphabet=tuple(_default_alphabet(L)), p0=p0,
                     trans_mask=trans_mask, emit_mask=emit_mask)
    return spec, ParamMatrices.checked(trans, emit, spec)


def _default_alphabet(L: int) -> list[str]:
    letters = "abcdefghijklmnopqrstuvwxyz"
    if L <= len(letters):
        return list(letters[:L])
    return [f"s{i}" for i in range(L)]


def draw_matrices_from_prior(hp: HyperParams, spec: ModelSpec, rng) -> ParamMatrices:
    """One parameter matrix pair drawn from the Dirichlet prior rows."""
    trans = np.zeros((spec.K, spec.K))
    emit = np.zeros((spec.K, spec.L))
    for i in range(spec.K):
        trans[i, spec.trans_mask[i]] = rng.dirichlet(hp.alpha[i][spec.trans_mask[i]])
        emit[i, spec.emit_mask[i]] = rng.dirichlet(hp.beta[i][spec.emit_mask[i]])
    return ParamMatrices.checked(trans, emit, spec)


def sample_corpus(spec: ModelSpec, lengths, seed, mode: str = "hmm",
                  theta: ParamMatrices | None = None,
                  hp: HyperParams | None = None):
    """Generate [(obs, path)] pairs with the given lengths.

    Modes: ``hmm`` (fixed theta for every pair), ``hierarchical`` (a fresh
    theta drawn from the prior per pair), ``polya`` (direct urn sampling from
    the prior, no explicit theta).
    """
    lengths = [int(n) for n in lengths]
    if any(n < 1 for n in lengths):
        raise DataError("requested sequence length must be at least 1")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    seeds = ss.spawn(len(lengths))
    out = []
    if mode == "hmm":
        if theta is None:
            raise DataError("hmm mode needs parameter matrices")
        for n, sd in zip(lengths, seeds):
            out.append(sample_hmm_pair(theta, spec, n, sd))
    elif mode == "hierarchical":
        if hp is None:
            raise DataError("hierarchical mode needs hyperparameters")
        hp.validate(spec)
        for n, sd in zip(lengths, seeds):
            rng = np.random.default_rng(sd)
            theta_k = draw_matrices_from_prior(hp, spec, rng)
            out.append(sample_hmm_pair(theta_k, spec, n, rng))
    elif mode == "polya":
        if hp is None:
            raise DataError("polya mode needs hyperparameters")
        hp.validate(spec)
        for n, sd in zip(lengths, seeds):
            out.append(sample_polya_pair(hp, spec, n, sd))
    else:
        raise DataError(f"unknown sampling mode {mode!r}")
    return out
