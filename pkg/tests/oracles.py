"""Independent oracles: exhaustive path enumeration and Monte Carlo
integration over the Dirichlet priors.

These never call the dynamic-programming code paths they are used to check.
"""

from itertools import product

import numpy as np

from dirseg.model import is_admissible


def all_paths(K, n):
    for tup in product(range(K), repeat=n):
        yield np.array(tup, dtype=np.int64)


def dp_order_score(path, log_trans, log_emit_seq, log_p0):
    """Path score accumulated in the same order as the Viterbi recursion,
    so that scores of identical paths are bit-identical to the kernel's."""
    total = log_p0[path[0]] + log_emit_seq[0, path[0]]
    for t in range(1, len(path)):
        total = total + log_trans[path[t - 1], path[t]]
        total = total + log_emit_seq[t, path[t]]
    return total


def brute_viterbi(log_trans, log_emit_seq, log_p0):
    """argmax over all paths; among ties prefers the path whose reversed
    tuple is smallest, matching the kernel's backtrack tie-breaking."""
    n, K = log_emit_seq.shape
    best, best_score = None, -np.inf
    for path in all_paths(K, n):
        score = dp_order_score(path, log_trans, log_emit_seq, log_p0)
        if score > best_score or (
                score == best_score and tuple(path[::-1]) < tuple(best[::-1])):
            best, best_score = path, score
    return best, best_score


def enumerate_joint(x, theta, spec, p0=None):
    """{path tuple: p(path, x | theta)} over all paths (linear domain)."""
    p0 = spec.p0 if p0 is None else p0
    out = {}
    for path in all_paths(spec.K, len(x)):
        p = p0[path[0]] * theta.emit[path[0], x[0]]
        for t in range(1, len(x)):
            p *= theta.trans[path[t - 1], path[t]] * theta.emit[path[t], x[t]]
        out[tuple(path)] = p
    return out


def brute_gamma(x, theta, spec):
    """Smoothing probabilities by enumeration: P(state at t | x, theta)."""
    joint = enumerate_joint(x, theta, spec)
    total = sum(joint.values())
    n = len(x)
    gamma = np.zeros((n, spec.K))
    for path, p in joint.items():
        for t, state in enumerate(path):
            gamma[t, state] += p
    return gamma / total, np.log(total)


def sample_dirichlet_rows(conc, mask, rng, size):
    """size x K x C tensor of rows drawn from per-row Dirichlets on the mask."""
    K, C = conc.shape
    out = np.zeros((size, K, C))
    for i in range(K):
        cells = np.flatnonzero(mask[i])
        draws = rng.gamma(conc[i, cells], size=(size, cells.size))
        out[:, i, cells] = draws / draws.sum(axis=1, keepdims=True)
    return out


def mc_joint_prob(path, x, hp, spec, n_samples=1_000_000, seed=0):
    """Monte Carlo estimate of p(path, x) = E_prior[p(path, x | theta)].

    Returns (mean, standard error) in the linear domain.
    """
    if not is_admissible(path, x, spec):
        return 0.0, 0.0
    rng = np.random.default_rng(seed)
    K, L = spec.K, spec.L
    trans_counts = np.zeros((K, K))
    emit_counts = np.zeros((K, L))
    for t in range(1, len(path)):
        trans_counts[path[t - 1], path[t]] += 1
    for t in range(len(path)):
        emit_counts[path[t], x[t]] += 1
    trans_draws = sample_dirichlet_rows(hp.alpha, spec.trans_mask, rng, n_samples)
    emit_draws = sample_dirichlet_rows(hp.beta, spec.emit_mask, rng, n_samples)
    log_p = np.zeros(n_samples)
    for i in range(K):
        for j in range(K):
            if trans_counts[i, j]:
                log_p += trans_counts[i, j] * np.log(trans_draws[:, i, j])
        for l in range(L):
            if emit_counts[i, l]:
                log_p += emit_counts[i, l] * np.log(emit_draws[:, i, l])
    vals = spec.p0[path[0]] * np.exp(log_p)
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(n_samples))
