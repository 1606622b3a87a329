"""Goodness measures and path-structure statistics.

The goodness of an estimated path is the geometric-mean conditional
probability p(path | obs, theta)^(1/n) under per-pair reference parameters;
aggregate tables report the percentage of the per-pair maximum attained.
Pointwise (Hamming) differences are diagnostics only, never a score.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import forward_backward
from .likelihood import NEG_INF, log_joint_hmm
from .model import DataError, ModelSpec, ParamMatrices, as_obs_array, as_state_array


@dataclass(frozen=True)
class PathStats:
    state_freq: np.ndarray       # occurrences of each state
    block_count: int             # maximal constant runs
    hamming_to_ref: int | None   # pointwise differences to a reference path
    entropy: float               # of the path's emission-count distribution


@dataclass(frozen=True)
class ComparisonTable:
    """Per-method, per-c relative sums (percent) and mean relative scores."""

    methods: tuple[str, ...]
    c_values: tuple[float, ...]
    rel_sum: np.ndarray          # len(methods) x len(c_values)
    mean_rel: np.ndarray         # len(methods) x len(c_values)


def conditional_geo_score(path, obs, theta: ParamMatrices, loglik_obs: float,
                          spec: ModelSpec) -> float:
    """p(path | obs, theta)^(1/n) given a precomputed ln p(obs | theta)."""
    x = as_obs_array(obs, spec.L)
    lj = log_joint_hmm(path, x, theta, spec)
    if lj == NEG_INF:
        return 0.0
    return float(np.exp((lj - loglik_obs) / x.size))


def geo_score(path, obs, theta: ParamMatrices, spec: ModelSpec) -> float:
    """Geometric-mean conditional path probability; 0 when the path uses a
    zero parameter entry.  Raises DataError when p(obs | theta) = 0."""
    post = forward_backward(obs, theta, None, spec)
    return conditional_geo_score(path, obs, theta, post.loglik, spec)


def path_stats(path, obs, spec: ModelSpec, ref=None) -> PathStats:
    """State frequencies, block count, optional Hamming distance, and the
    entropy of the pair's emission-count matrix."""
    s = as_state_array(path, spec.K)
    x = as_obs_array(obs, spec.L)
    if s.shape != x.shape:
        raise DataError("path and observations must have equal length")
    hamming = None
    if ref is not None:
        r = as_state_array(ref, spec.K)
        if r.shape != s.shape:
            raise DataError("reference path length mismatch")
        hamming = int((s != r).sum())
    freqs = np.bincount(s, minlength=spec.K)
    blocks = int(1 + np.count_nonzero(np.diff(s)))
    cells = np.bincount(s * spec.L + x, minlength=spec.K * spec.L)
    probs = cells[cells > 0] / s.size
    entropy = float(-(probs * np.log(probs)).sum())
    return PathStats(state_freq=freqs, block_count=blocks,
                     hamming_to_ref=hamming, entropy=entropy)


def relative_sums(method_paths: dict[str, list], targets_by_c: dict[float, list],
                  thetas_by_c: dict[float, list], observations: list,
                  spec: ModelSpec) -> ComparisonTable:
    """Aggregate the per-pair geometric-mean scores into the comparison table.

    ``method_paths[m][k]`` is method m's estimate for pair k,
    ``targets_by_c[c][k]`` the reference Viterbi path under ``thetas_by_c[c][k]``.
    Reported per method and c: 100 * sum of scores / sum of target scores, and
    the mean per-pair score ratio.
    """
    methods = tuple(method_paths)
    c_values = tuple(targets_by_c)
    m_count = len(observations)
    rel = np.empty((len(methods), len(c_values)))
    mean_rel = np.empty_like(rel)
    for jc, c in enumerate(c_values):
        thetas = thetas_by_c[c]
        targets = targets_by_c[c]
        logliks = [forward_backward(x, th, None, spec).loglik
                   for x, th in zip(observations, thetas)]
        target_scores = np.array([
            conditional_geo_score(targets[k], observations[k], thetas[k], logliks[k], spec)
            for k in range(m_count)])
        for jm, m in enumerate(methods):
            scores = np.array([
                conditional_geo_score(method_paths[m][k], observations[k], thetas[k],
                                      logliks[k], spec)
                for k in range(m_count)])
            rel[jm, jc] = 100.0 * (scores.sum() / target_scores.sum())
            mean_rel[jm, jc] = float(np.mean(scores / target_scores))
    return ComparisonTable(methods=methods, c_values=c_values,
                           rel_sum=rel, mean_rel=mean_rel)
