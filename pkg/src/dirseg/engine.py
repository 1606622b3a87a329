"""Classical HMM dynamic programming on top of the kernel backend.

Viterbi accepts improper score matrices (rows need not sum to one), which is
what the digamma-transformed matrices of the iterative segmenters require.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .kernels import ffbs_kernel, forward_backward_kernel, viterbi_kernel
from .model import DataError, ModelSpec, ParamMatrices, as_obs_array, _frozen


@dataclass(frozen=True)
class ScoreMatrices:
    """Non-negative transition/emission scores, zero exactly off-mask.

    Unlike ParamMatrices, rows are not required to sum to 1.
    """

    trans: np.ndarray
    emit: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "trans", _frozen(np.asarray(self.trans, dtype=np.float64)))
        object.__setattr__(self, "emit", _frozen(np.asarray(self.emit, dtype=np.float64)))

    @classmethod
    def checked(cls, trans, emit, spec: ModelSpec) -> "ScoreMatrices":
        m = cls(trans=trans, emit=emit)
        if m.trans.shape != (spec.K, spec.K) or m.emit.shape != (spec.K, spec.L):
            raise DataError("score matrix shapes do not match the model")
        if not (np.isfinite(m.trans).all() and np.isfinite(m.emit).all()):
            raise DataError("score matrices must be finite")
        if m.trans.min() < 0.0 or m.emit.min() < 0.0:
            raise DataError("score matrices must be non-negative")
        if m.trans[~spec.trans_mask].any() or m.emit[~spec.emit_mask].any():
            raise DataError("score matrices must be zero on impossible cells")
        return m


@dataclass(frozen=True)
class Posteriors:
    """Smoothing probabilities, expected transition counts and the sequence
    log-likelihood from one forward-backward sweep."""

    gamma: np.ndarray        # n x K, rows sum to 1
    xi: np.ndarray           # K x K, sums to n - 1 for proper parameters
    loglik: float


def _log_dense(a: np.ndarray) -> np.ndarray:
    out = np.full(a.shape, -np.inf)
    pos = a > 0
    out[pos] = np.log(a[pos])
    return out


def _emit_seq(emit: np.ndarray, obs: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(emit[:, obs].T)


def _resolve_p0(p0, spec: ModelSpec) -> np.ndarray:
    if p0 is None:
        return spec.p0
    p0 = np.asarray(p0, dtype=np.float64)
    if p0.shape != (spec.K,) or p0.min() < 0 or abs(p0.sum() - 1.0) > 1e-12:
        raise DataError("p0 must be a probability vector of length K")
    return p0


def viterbi_log(log_trans, log_emit_seq, log_p0) -> tuple[np.ndarray, float]:
    """Decode from precomputed log scores; raises DataError when no state
    survives at some position."""
    path, score, dead = viterbi_kernel(
        np.ascontiguousarray(log_trans, dtype=np.float64),
        np.ascontiguousarray(log_emit_seq, dtype=np.float64),
        np.ascontiguousarray(log_p0, dtype=np.float64),
    )
    if dead >= 0:
        raise DataError(f"no admissible path: every state is impossible at position {dead}")
    return path, score


def viterbi(obs, scores, p0, spec: ModelSpec) -> np.ndarray:
    """Most probable path under (possibly improper) score matrices.

    Maximizes ln p0(s_1) + sum n_ij ln trans_score + sum m_il ln emit_score;
    ties are broken toward the smallest state index at each backtrack step.
    """
    x = as_obs_array(obs, spec.L)
    p0 = _resolve_p0(p0, spec)
    log_trans = _log_dense(scores.trans)
    log_emit = _log_dense(scores.emit)
    path, _ = viterbi_log(log_trans, _emit_seq(log_emit, x), _log_dense(p0))
    return path


def forward_backward_scores(obs, scores, p0, spec: ModelSpec) -> Posteriors:
    """Forward-backward with per-step normalization; valid for improper score
    matrices (gamma rows still sum to 1)."""
    x = as_obs_array(obs, spec.L)
    p0 = _resolve_p0(p0, spec)
    gamma, xi, loglik, dead = forward_backward_kernel(
        np.ascontiguousarray(scores.trans, dtype=np.float64),
        _emit_seq(np.asarray(scores.emit, dtype=np.float64), x),
        np.ascontiguousarray(p0, dtype=np.float64),
    )
    if dead >= 0:
        raise DataError(f"sequence impossible under the parameters at position {dead}")
    return Posteriors(gamma=gamma, xi=xi, loglik=float(loglik))


def forward_backward(obs, theta: ParamMatrices, p0, spec: ModelSpec) -> Posteriors:
    """Smoothing probabilities, expected transition counts and ln p(x|theta)
    for proper parameter matrices."""
    return forward_backward_scores(obs, theta, p0, spec)


def baum_welch(obs, theta0: ParamMatrices, spec: ModelSpec,
               max_iter: int = 500, tol: float = 1e-6) -> tuple[ParamMatrices, float]:
    """EM re-estimation of (trans, emit) from a single sequence, p0 held fixed.

    Stops when the log-likelihood gain drops below ``tol`` or after
    ``max_iter`` iterations.  A state whose posterior mass vanishes keeps its
    previous row and a warning is emitted.
    """
    x = as_obs_array(obs, spec.L)
    K, L = spec.K, spec.L
    trans, emit = theta0.trans.copy(), theta0.emit.copy()
    post = forward_backward_scores(x, theta0, None, spec)
    prev_ll = post.loglik
    for _ in range(max_iter):
        trans_new = trans.copy()
        xi_rows = post.xi.sum(axis=1)
        ok = xi_rows > 0
        trans_new[ok] = post.xi[ok] / xi_rows[ok, None]
        emit_new = emit.copy()
        counts = np.zeros((L, K))
        np.add.at(counts, x, post.gamma)
        counts = counts.T
        g_rows = post.gamma.sum(axis=0)
        ok_e = g_rows > 0
        emit_new[ok_e] = counts[ok_e] / g_rows[ok_e, None]
        if not ok.all() or not ok_e.all():
            warnings.warn("states with vanishing posterior mass keep their previous rows")
        trans, emit = trans_new, emit_new
        post = forward_backward_scores(x, ScoreMatrices(trans, emit), None, spec)
        if post.loglik - prev_ll < tol:
            prev_ll = post.loglik
            break
        prev_ll = post.loglik
    return ParamMatrices(trans=trans, emit=emit), prev_ll


def sample_posterior_path(obs, theta: ParamMatrices, p0, spec: ModelSpec, seed) -> np.ndarray:
    """Exact draw from p(path | obs, theta) by forward filtering and backward
    sampling; deterministic under the seed."""
    x = as_obs_array(obs, spec.L)
    p0 = _resolve_p0(p0, spec)
    rng = np.random.default_rng(seed)
    path, dead = ffbs_kernel(
        np.ascontiguousarray(theta.trans, dtype=np.float64),
        _emit_seq(theta.emit, x),
        np.ascontiguousarray(p0, dtype=np.float64),
        rng.random(x.size),
    )
    if dead >= 0:
        raise DataError(f"sequence impossible under the parameters at position {dead}")
    return path
