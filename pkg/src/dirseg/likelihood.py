"""Closed-form log marginal probabilities, digamma, and generative samplers.

All probability arithmetic is done in the natural-log domain; impossible
events are the explicit sentinel ``-inf``, never a floating underflow.
"""

from __future__ import annotations

import math

import numpy as np

from .model import (
    DataError,
    HyperParams,
    ModelSpec,
    ParamMatrices,
    as_obs_array,
    as_state_array,
    path_admissible,
)

NEG_INF = float("-inf")


def _log_dirichlet_marginal(values: np.ndarray, counts: np.ndarray, total: float) -> float:
    """ln [ Gamma(total)/Gamma(total+m) * prod_j Gamma(v_j+c_j)/Gamma(v_j) ].

    Counts are integers, so each Gamma ratio is a rising factorial.  The
    numerator factors are paired with consecutive denominator factors and
    summed as log-ratios, which keeps the result accurate to a few ulp even
    for counts of order 1e4 (a plain lgamma difference loses ~1e-11 there).
    """
    m = int(counts.sum())
    if m == 0:
        return 0.0
    num = np.empty(m, dtype=np.float64)
    off = 0
    for v, c in zip(values, counts):
        c = int(c)
        if c:
            num[off:off + c] = v + np.arange(c)
            off += c
    den = total + np.arange(m)
    return float(np.sum(np.log(num / den)))


def log_path_prior(path, hp: HyperParams, spec: ModelSpec) -> float:
    """ln p(s): the path probability with transition rows integrated out.

    Returns -inf for inadmissible paths (a forbidden transition or a start
    state with zero initial probability).
    """
    s = as_state_array(path, spec.K)
    if not path_admissible(s, spec):
        return NEG_INF
    K = spec.K
    trans = np.bincount(s[:-1] * K + s[1:], minlength=K * K).reshape(K, K)
    out = math.log(spec.p0[s[0]])
    for i in range(K):
        row_n = trans[i]
        if row_n.sum() == 0:
            continue
        mask = spec.trans_mask[i]
        out += _log_dirichlet_marginal(hp.alpha[i][mask], row_n[mask], hp.alpha_row_sums[i])
    return out


def log_emission_given_path(obs, path, hp: HyperParams, spec: ModelSpec) -> float:
    """ln p(x|s): emission probability of ``obs`` given the path, emission rows
    integrated out.  Returns -inf when the pair uses an impossible emission."""
    s = as_state_array(path, spec.K)
    x = as_obs_array(obs, spec.L)
    if s.shape != x.shape:
        raise DataError(f"length mismatch: path has {s.size}, observations {x.size}")
    if not spec.emit_mask[s, x].all():
        return NEG_INF
    K, L = spec.K, spec.L
    emit = np.bincount(s * L + x, minlength=K * L).reshape(K, L)
    out = 0.0
    for i in range(K):
        row_m = emit[i]
        if row_m.sum() == 0:
            continue
        mask = spec.emit_mask[i]
        out += _log_dirichlet_marginal(hp.beta[i][mask], row_m[mask], hp.beta_row_sums[i])
    return out


def log_joint(path, obs, hp: HyperParams, spec: ModelSpec) -> float:
    """ln p(s, x) = ln p(s) + ln p(x|s); -inf exactly when the pair is inadmissible."""
    s = as_state_array(path, spec.K)
    x = as_obs_array(obs, spec.L)
    if s.shape != x.shape:
        raise DataError(f"length mismatch: path has {s.size}, observations {x.size}")
    lp = log_path_prior(s, hp, spec)
    if lp == NEG_INF:
        return NEG_INF
    le = log_emission_given_path(x, s, hp, spec)
    return lp + le if le != NEG_INF else NEG_INF


def log_joint_hmm(path, obs, theta: ParamMatrices, spec: ModelSpec) -> float:
    """ln p(s, x | trans, emit) for fixed parameter matrices, 0*ln 0 skipped."""
    s = as_state_array(path, spec.K)
    x = as_obs_array(obs, spec.L)
    if s.shape != x.shape:
        raise DataError(f"length mismatch: path has {s.size}, observations {x.size}")
    if spec.p0[s[0]] <= 0.0:
        return NEG_INF
    K, L = spec.K, spec.L
    trans = np.bincount(s[:-1] * K + s[1:], minlength=K * K).reshape(K, K)
    emit = np.bincount(s * L + x, minlength=K * L).reshape(K, L)
    tu = trans > 0
    eu = emit > 0
    if (theta.trans[tu] <= 0.0).any() or (theta.emit[eu] <= 0.0).any():
        return NEG_INF
    out = math.log(spec.p0[s[0]])
    out += float(np.sum(trans[tu] * np.log(theta.trans[tu])))
    out += float(np.sum(emit[eu] * np.log(theta.emit[eu])))
    return out


def log_param_prior_density(theta: ParamMatrices, hp: HyperParams, spec: ModelSpec) -> float:
    """Log density of (trans, emit) under the Dirichlet prior, rows independent.

    Boundary convention: a zero matrix entry with hyperparameter exactly 1
    contributes 0; with hyperparameter > 1 the density is 0 (returns -inf).
    """
    out = 0.0
    for mat, conc, totals, mask in (
        (theta.trans, hp.alpha, hp.alpha_row_sums, spec.trans_mask),
        (theta.emit, hp.beta, hp.beta_row_sums, spec.emit_mask),
    ):
        for i in range(spec.K):
            m = mask[i]
            a = conc[i][m]
            p = mat[i][m]
            out += math.lgamma(totals[i]) - math.fsum(math.lgamma(v) for v in a)
            expo = a - 1.0
            live = expo != 0.0
            if (p[live] <= 0.0).any():
                return NEG_INF
            out += float(np.sum(expo[live] * np.log(p[live])))
    return out


def digamma(z):
    """Digamma function for positive arguments (scalar or array).

    Shifts the argument above 8 with the recurrence psi(z+1) = psi(z) + 1/z,
    then applies the asymptotic series; accurate to ~1e-13 relative.
    """
    arr = np.asarray(z, dtype=np.float64)
    if arr.size and arr.min() <= 0.0:
        raise DataError("digamma requires strictly positive arguments")
    x = arr.copy()
    acc = np.zeros_like(x)
    for _ in range(8):
        small = x < 8.0
        if not small.any():
            break
        acc[small] -= 1.0 / x[small]
        x[small] += 1.0
    r = 1.0 / (x * x)
    # asymptotic tail through the z^-14 term; error < 2e-15 for x >= 8
    tail = r * (1.0 / 12.0
                - r * (1.0 / 120.0
                       - r * (1.0 / 252.0
                              - r * (1.0 / 240.0
                                     - r * (1.0 / 132.0
                                            - r * (691.0 / 32760.0
                                                   - r / 12.0))))))
    val = acc + np.log(x) - 0.5 / x - tail
    if np.isscalar(z) or np.ndim(z) == 0:
        return float(val)
    return val


def sample_hmm_pair(theta: ParamMatrices, spec: ModelSpec, n: int, seed) -> tuple[np.ndarray, np.ndarray]:
    """Draw an (obs, path) pair of length n from a fixed-parameter HMM."""
    if n < 1:
        raise DataError("sequence length must be at least 1")
    rng = np.random.default_rng(seed)
    K, L = spec.K, spec.L
    path = np.empty(n, dtype=np.int64)
    obs = np.empty(n, dtype=np.int64)
    path[0] = rng.choice(K, p=spec.p0)
    for t in range(1, n):
        path[t] = rng.choice(K, p=theta.trans[path[t - 1]])
    for t in range(n):
        obs[t] = rng.choice(L, p=theta.emit[path[t]])
    return obs, path


def sample_polya_pair(hp: HyperParams, spec: ModelSpec, n: int, seed) -> tuple[np.ndarray, np.ndarray]:
    """Draw an (obs, path) pair of length n from the marginal p(s) p(x|s).

    Sampling is sequential in urn fashion: the probability of the next
    transition i -> j is (alpha_ij + used_ij) / (|alpha_i| + used_i), and
    emissions reinforce analogously with beta.
    """
    if n < 1:
        raise DataError("sequence length must be at least 1")
    rng = np.random.default_rng(seed)
    K, L = spec.K, spec.L
    t_used = np.zeros((K, K))
    e_used = np.zeros((K, L))
    path = np.empty(n, dtype=np.int64)
    obs = np.empty(n, dtype=np.int64)
    path[0] = rng.choice(K, p=spec.p0)
    for t in range(n):
        i = path[t]
        w = hp.beta[i] + e_used[i]
        obs[t] = rng.choice(L, p=w / w.sum())
        e_used[i, obs[t]] += 1.0
        if t + 1 < n:
            w = hp.alpha[i] + t_used[i]
            path[t + 1] = rng.choice(K, p=w / w.sum())
            t_used[i, path[t + 1]] += 1.0
    return obs, path
