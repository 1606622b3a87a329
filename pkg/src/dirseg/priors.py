"""Empirical-prior construction from a labeled corpus and posterior-derived
parameter estimates.

The prior for each transition row i is Dirichlet with mean equal to the
add-one point estimates and total concentration N_i solved so that the sum of
prior variances matches the sum of weighted empirical variances across the
corpus (emission rows analogously with M_i).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .model import (
    CountTables,
    DataError,
    HyperParams,
    ModelSpec,
    ParamMatrices,
    as_obs_array,
    as_state_array,
    count_path,
    _frozen,
)

DEFAULT_CONCENTRATION_FLOOR = 1e-6
DEFAULT_CONCENTRATION_CAP = 1e8


@dataclass(frozen=True)
class EmpiricalSummary:
    """Pooled corpus counts with every derived prior quantity."""

    trans_counts: np.ndarray     # K x K pooled
    emit_counts: np.ndarray      # K x L pooled
    p_star: np.ndarray           # add-one transition estimates
    q_star: np.ndarray           # add-one emission estimates
    p_hat: np.ndarray            # transition count ratios
    q_hat: np.ndarray            # emission count ratios
    var_trans: np.ndarray        # weighted empirical variances, K x K
    var_emit: np.ndarray         # weighted empirical variances, K x L
    N: np.ndarray                # transition concentrations, length K
    M: np.ndarray                # emission concentrations, length K

    def __post_init__(self):
        for name in ("trans_counts", "emit_counts", "p_star", "q_star", "p_hat",
                     "q_hat", "var_trans", "var_emit", "N", "M"):
            object.__setattr__(self, name, _frozen(np.asarray(getattr(self, name))))


def pooled_counts(corpus, spec: ModelSpec) -> CountTables:
    """Sum the per-pair count tables over the corpus."""
    if not corpus:
        raise DataError("corpus is empty")
    K, L = spec.K, spec.L
    trans = np.zeros((K, K), dtype=np.int64)
    emit = np.zeros((K, L), dtype=np.int64)
    for x, s in corpus:
        c = count_path(s, x, spec)
        trans += c.trans
        emit += c.emit
    return CountTables(trans=trans, emit=emit)


def point_estimates(corpus, spec: ModelSpec):
    """Add-one estimates (p*, q*) and plain count ratios (p_hat, q_hat).

    Both live on the masked-in cells and are zero elsewhere.  Raises DataError
    when a state has no pooled transition or emission count.
    """
    pooled = pooled_counts(corpus, spec)
    n_rows = pooled.trans_row_sums
    m_rows = pooled.emit_row_sums
    for i in range(spec.K):
        if n_rows[i] == 0:
            raise DataError(f"state {i} has no transitions in the corpus")
        if m_rows[i] == 0:
            raise DataError(f"state {i} has no emissions in the corpus")
    Ki = spec.trans_row_sizes
    Li = spec.emit_row_sizes
    p_star = np.where(spec.trans_mask, (pooled.trans + 1) / (n_rows + Ki)[:, None], 0.0)
    q_star = np.where(spec.emit_mask, (pooled.emit + 1) / (m_rows + Li)[:, None], 0.0)
    p_hat = pooled.trans / n_rows[:, None]
    q_hat = pooled.emit / m_rows[:, None]
    return p_star, q_star, p_hat, q_hat


def weighted_variances(corpus, p_hat, q_hat, spec: ModelSpec):
    """Weighted empirical variances of the per-pair count ratios around the
    pooled ratios.  A pair contributes to row i only when it visits state i;
    its weight is the share of the pooled row count it carries."""
    K, L = spec.K, spec.L
    per_pair = [count_path(s, x, spec) for x, s in corpus]
    n_rows = sum(c.trans_row_sums for c in per_pair)
    m_rows = sum(c.emit_row_sums for c in per_pair)
    var_t = np.zeros((K, K))
    var_e = np.zeros((K, L))
    for c in per_pair:
        nk = c.trans_row_sums
        live = nk > 0
        ratios = np.zeros((K, K))
        ratios[live] = c.trans[live] / nk[live, None]
        w = np.zeros(K)
        w[live] = nk[live] / n_rows[live]
        var_t += w[:, None] * (ratios - p_hat) ** 2 * live[:, None]
        mk = c.emit_row_sums
        live = mk > 0
        ratios = np.zeros((K, L))
        ratios[live] = c.emit[live] / mk[live, None]
        w = np.zeros(K)
        w[live] = mk[live] / m_rows[live]
        var_e += w[:, None] * (ratios - q_hat) ** 2 * live[:, None]
    var_t[~spec.trans_mask] = 0.0
    var_e[~spec.emit_mask] = 0.0
    return var_t, var_e


def solve_concentrations(p_star, q_star, var_trans, var_emit, spec: ModelSpec,
                         floor: float = DEFAULT_CONCENTRATION_FLOOR,
                         cap: float = DEFAULT_CONCENTRATION_CAP):
    """Concentrations matching the summed prior variances to the summed
    empirical variances per row.

    Zero empirical variance makes the row effectively fixed: the concentration
    is set to ``cap`` with a warning.  Non-positive solutions are clamped to
    ``floor``.
    """
    N = np.empty(spec.K)
    M = np.empty(spec.K)
    capped = []
    for out, est, var, mask in ((N, p_star, var_trans, spec.trans_mask),
                                (M, q_star, var_emit, spec.emit_mask)):
        for i in range(spec.K):
            spread = 1.0 - float(np.sum(est[i][mask[i]] ** 2))
            total_var = float(np.sum(var[i][mask[i]]))
            if total_var <= 0.0:
                out[i] = cap
                capped.append(i)
            else:
                out[i] = max(spread / total_var - 1.0, floor)
    if capped:
        warnings.warn(
            f"zero empirical variance for rows {sorted(set(capped))}: "
            f"concentration capped at {cap:g} (effectively fixed parameters)")
    return N, M


def assemble_hyperparams(p_star, q_star, N, M, spec: ModelSpec) -> HyperParams:
    """Dirichlet parameters alpha = N_i p*_ij, beta = M_i q*_il on the masks.

    N and M may be scalars or per-row arrays, which is how the concentration
    grid overrides are applied.
    """
    N = np.broadcast_to(np.asarray(N, dtype=np.float64), (spec.K,))
    M = np.broadcast_to(np.asarray(M, dtype=np.float64), (spec.K,))
    alpha = np.where(spec.trans_mask, N[:, None] * p_star, 0.0)
    beta = np.where(spec.emit_mask, M[:, None] * q_star, 0.0)
    return HyperParams(alpha=alpha, beta=beta)


def summarize_corpus(corpus, spec: ModelSpec,
                     floor: float = DEFAULT_CONCENTRATION_FLOOR,
                     cap: float = DEFAULT_CONCENTRATION_CAP) -> EmpiricalSummary:
    """Full empirical-prior pipeline: point estimates, weighted variances and
    solved concentrations."""
    pooled = pooled_counts(corpus, spec)
    p_star, q_star, p_hat, q_hat = point_estimates(corpus, spec)
    var_t, var_e = weighted_variances(corpus, p_hat, q_hat, spec)
    N, M = solve_concentrations(p_star, q_star, var_t, var_e, spec, floor=floor, cap=cap)
    return EmpiricalSummary(
        trans_counts=pooled.trans, emit_counts=pooled.emit,
        p_star=p_star, q_star=q_star, p_hat=p_hat, q_hat=q_hat,
        var_trans=var_t, var_emit=var_e, N=N, M=M)


def empirical_hyperparams(summary: EmpiricalSummary, spec: ModelSpec) -> HyperParams:
    return assemble_hyperparams(summary.p_star, summary.q_star, summary.N, summary.M, spec)


def posterior_update(hp: HyperParams, counts: CountTables, spec: ModelSpec) -> HyperParams:
    """Add observed counts to the Dirichlet parameters."""
    if counts.trans[~spec.trans_mask].any() or counts.emit[~spec.emit_mask].any():
        raise DataError("counts on impossible cells cannot update the prior")
    return HyperParams(alpha=hp.alpha + counts.trans, beta=hp.beta + counts.emit)


def posterior_mean_c(summary: EmpiricalSummary, pair, c: float, spec: ModelSpec) -> ParamMatrices:
    """Posterior-mean style blend of the prior point estimates with the counts
    of one pair, the prior weight scaled by c.

    c -> 0 approaches the pair's own count ratios, c -> infinity approaches
    the corpus point estimates; c = 1 is the exact posterior mean.
    """
    if c <= 0.0:
        raise DataError("c must be positive")
    x, y = pair
    counts = count_path(as_state_array(y, spec.K), as_obs_array(x, spec.L), spec)
    if counts.trans[~spec.trans_mask].any() or counts.emit[~spec.emit_mask].any():
        raise DataError("pair is not admissible under the model masks")
    cn = c * summary.N[:, None]
    cm = c * summary.M[:, None]
    trans = np.where(spec.trans_mask,
                     (cn * summary.p_star + counts.trans) /
                     (cn + counts.trans_row_sums[:, None]), 0.0)
    emit = np.where(spec.emit_mask,
                    (cm * summary.q_star + counts.emit) /
                    (cm + counts.emit_row_sums[:, None]), 0.0)
    return ParamMatrices.checked(trans, emit, spec)


def mle_matrices(summary: EmpiricalSummary, spec: ModelSpec) -> ParamMatrices:
    """Plain count-ratio matrices pooled over the training corpus."""
    return ParamMatrices.checked(summary.p_hat, summary.q_hat, spec)


def uniform_matrices(spec: ModelSpec) -> ParamMatrices:
    """Row mass spread evenly over the masked-in cells."""
    trans = spec.trans_mask / spec.trans_row_sizes[:, None]
    emit = spec.emit_mask / spec.emit_row_sizes[:, None]
    return ParamMatrices.checked(trans, emit, spec)


def min_positive_ratio_inverse(mat: np.ndarray) -> float:
    """1 / (smallest positive entry); the applicability threshold for the
    concentration grid (overrides must exceed it for mode-based methods)."""
    pos = mat[mat > 0]
    if pos.size == 0:
        raise DataError("matrix has no positive entries")
    return float(1.0 / pos.min())
