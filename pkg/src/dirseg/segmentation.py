"""Iterative MAP path search under Dirichlet priors and the multi-start driver.

Four methods are provided:

* ``sem``: maximizes the marginal path posterior; the Viterbi surrogate uses
  digamma-transformed posterior expectations and is guaranteed monotone in
  ln p(path, obs).
* ``smm``: alternates posterior-mode parameter estimates with Viterbi
  decoding; monotone in the joint parameter/path posterior.  Requires all
  masked-in hyperparameters >= 1.
* ``bem``: parametric EM in the Bayesian setup (posterior-mode M-steps from
  expected counts), Viterbi at every step for the stopping rule.  Same
  applicability requirement as ``smm``.
* ``vb``: like ``bem`` but with digamma-transformed expected-count matrices,
  applicable for any positive hyperparameters; the score matrices are not
  stochastic, so forward-backward runs with per-step normalization.
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass

import numpy as np

from .engine import (
    ScoreMatrices,
    _log_dense,
    forward_backward_scores,
    sample_posterior_path,
    viterbi_log,
)
from .likelihood import NEG_INF, digamma, log_joint
from .model import (
    DataError,
    HyperParams,
    ModelSpec,
    as_obs_array,
    as_state_array,
    count_path,
    is_admissible,
    path_admissible,
)

METHODS = ("sem", "smm", "bem", "vb")


class NotApplicableError(ValueError):
    """The method's hyperparameter requirements are violated (the 'na' case)."""


@dataclass(frozen=True)
class SegConfig:
    method: str
    max_iter: int = 100
    n_initial: int = 1000
    rng_seed: int = 0
    applicability_mode: str = "strict"

    def __post_init__(self):
        if self.method not in METHODS:
            raise DataError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.max_iter < 1 or self.n_initial < 1:
            raise DataError("max_iter and n_initial must be at least 1")
        if self.applicability_mode not in ("strict", "warn"):
            raise DataError("applicability_mode must be 'strict' or 'warn'")


@dataclass(frozen=True)
class StartRecord:
    index: int
    path_hash: str | None
    value: float
    iterations: int
    converged: bool
    error: str | None = None


@dataclass(frozen=True)
class RunResult:
    best_path: np.ndarray
    best_logjoint: float
    distinct_outputs: int
    iterations_of_best: int
    records: tuple[StartRecord, ...]


def _path_hash(path: np.ndarray) -> str:
    return hashlib.sha1(path.tobytes()).hexdigest()[:10]


def check_applicability(hp: HyperParams, spec: ModelSpec, mode: str = "strict") -> bool:
    """Mode-based methods need every masked-in hyperparameter to be >= 1."""
    ok = (hp.alpha[spec.trans_mask] >= 1.0).all() and (hp.beta[spec.emit_mask] >= 1.0).all()
    if ok:
        return True
    if mode == "strict":
        raise NotApplicableError(
            "posterior-mode updates need all masked-in hyperparameters >= 1")
    warnings.warn("hyperparameters below 1 on masked-in cells: "
                  "mode-based updates are clamped and may misbehave")
    return False


def _masked_digamma_scores(values, row_totals, mask):
    safe = np.where(mask, values, 1.0)
    return np.where(mask, digamma(safe) - digamma(row_totals)[:, None], NEG_INF)


def _sem_log_scores(counts, hp: HyperParams, spec: ModelSpec):
    lt = _masked_digamma_scores(hp.alpha + counts.trans,
                                hp.alpha_row_sums + counts.trans_row_sums,
                                spec.trans_mask)
    le = _masked_digamma_scores(hp.beta + counts.emit,
                                hp.beta_row_sums + counts.emit_row_sums,
                                spec.emit_mask)
    return lt, le


def _log_p0(spec: ModelSpec) -> np.ndarray:
    out = np.full(spec.K, NEG_INF)
    pos = spec.p0 > 0
    out[pos] = np.log(spec.p0[pos])
    return out


def _viterbi_logscores(obs, lt, le, spec) -> np.ndarray:
    emit_seq = np.ascontiguousarray(le[:, obs].T)
    path, _ = viterbi_log(lt, emit_seq, _log_p0(spec))
    return path


def sem_step(path, obs, hp: HyperParams, spec: ModelSpec) -> np.ndarray:
    """One marginal-posterior EM step: digamma score matrices from the current
    path's counts, then Viterbi."""
    s = as_state_array(path, spec.K)
    x = as_obs_array(obs, spec.L)
    counts = count_path(s, x, spec)
    lt, le = _sem_log_scores(counts, hp, spec)
    return _viterbi_logscores(x, lt, le, spec)


def _mode_rows(values, row_totals, sizes, mask, clamp: bool, what: str):
    """Posterior-mode rows (v - 1) / (total - size); degenerate rows fall back
    to uniform over the masked-in cells with a warning."""
    K = mask.shape[0]
    out = np.zeros(mask.shape)
    fell_back = []
    for i in range(K):
        m = mask[i]
        num = values[i][m] - 1.0
        if clamp:
            num = np.maximum(num, 0.0)
        den = row_totals[i] - sizes[i]
        if den <= 0.0 or num.sum() <= 0.0:
            out[i][m] = 1.0 / m.sum()
            fell_back.append(i)
        else:
            out[i][m] = num / den
    if fell_back:
        warnings.warn(f"degenerate posterior-mode {what} rows {fell_back}: "
                      "using uniform over possible cells")
    return out


def _mode_matrices(trans_vals, trans_totals, emit_vals, emit_totals,
                   hp: HyperParams, spec: ModelSpec, clamp: bool):
    trans = _mode_rows(hp.alpha + trans_vals, hp.alpha_row_sums + trans_totals,
                       spec.trans_row_sizes, spec.trans_mask, clamp, "transition")
    emit = _mode_rows(hp.beta + emit_vals, hp.beta_row_sums + emit_totals,
                      spec.emit_row_sizes, spec.emit_mask, clamp, "emission")
    return trans, emit


def smm_step(path, obs, hp: HyperParams, spec: ModelSpec,
             applicability_mode: str = "strict") -> np.ndarray:
    """One Viterbi-training step: posterior-mode matrices from the current
    path's counts, then Viterbi."""
    ok = check_applicability(hp, spec, applicability_mode)
    s = as_state_array(path, spec.K)
    x = as_obs_array(obs, spec.L)
    counts = count_path(s, x, spec)
    trans, emit = _mode_matrices(counts.trans, counts.trans_row_sums,
                                 counts.emit, counts.emit_row_sums,
                                 hp, spec, clamp=not ok)
    return _viterbi_logscores(x, _log_dense(trans), _log_dense(emit), spec)


def _fixed_point_run(step, path0, max_iter: int, cache: dict | None):
    """Iterate ``step`` until two consecutive paths coincide or max_iter."""
    current = path0
    iters = 0
    while iters < max_iter:
        key = current.tobytes() if cache is not None else None
        if key is not None and key in cache:
            nxt = cache[key]
        else:
            nxt = step(current)
            if key is not None:
                cache[key] = nxt
        iters += 1
        if np.array_equal(nxt, current):
            return nxt, iters, True
        current = nxt
    return current, iters, False


def sem_run(obs, path0, hp, spec, max_iter: int = 100, _cache=None):
    return _fixed_point_run(lambda s: sem_step(s, obs, hp, spec), path0, max_iter, _cache)


def smm_run(obs, path0, hp, spec, max_iter: int = 100,
            applicability_mode: str = "strict", _cache=None):
    return _fixed_point_run(
        lambda s: smm_step(s, obs, hp, spec, applicability_mode), path0, max_iter, _cache)


def _scatter_emission_counts(gamma: np.ndarray, obs: np.ndarray, L: int) -> np.ndarray:
    out = np.zeros((L, gamma.shape[1]))
    np.add.at(out, obs, gamma)
    return out.T


def _expectation_loop(obs, path0, hp, spec, max_iter, build_matrices):
    """Common loop of bem/vb: matrices from expected counts, Viterbi for the
    stopping rule, forward-backward for the next expectations."""
    x = as_obs_array(obs, spec.L)
    s0 = as_state_array(path0, spec.K)
    if not path_admissible(s0, spec):
        raise DataError("initial path is not admissible")
    counts = count_path(s0, x, spec)
    xi = counts.trans.astype(np.float64)
    emit_counts = counts.emit.astype(np.float64)
    state_totals = counts.emit_row_sums.astype(np.float64)
    prev = s0
    iters = 0
    while iters < max_iter:
        lt, le, trans, emit = build_matrices(xi, emit_counts, state_totals)
        path = _viterbi_logscores(x, lt, le, spec)
        iters += 1
        if np.array_equal(path, prev):
            return path, iters, True
        prev = path
        post = forward_backward_scores(x, ScoreMatrices(trans, emit), None, spec)
        xi = post.xi
        emit_counts = _scatter_emission_counts(post.gamma, x, spec.L)
        state_totals = post.gamma.sum(axis=0)
    return prev, iters, False


def bem_run(obs, path0, hp: HyperParams, spec: ModelSpec, max_iter: int = 100,
            applicability_mode: str = "strict"):
    """Bayesian EM: posterior-mode parameter updates from expected counts."""
    ok = check_applicability(hp, spec, applicability_mode)

    def build(xi, emit_counts, state_totals):
        trans, emit = _mode_matrices(xi, xi.sum(axis=1), emit_counts, state_totals,
                                     hp, spec, clamp=not ok)
        return _log_dense(trans), _log_dense(emit), trans, emit

    return _expectation_loop(obs, path0, hp, spec, max_iter, build)


def vb_run(obs, path0, hp: HyperParams, spec: ModelSpec, max_iter: int = 100):
    """Variational Bayes: digamma-transformed expected-count matrices."""
    hp.validate(spec)

    def build(xi, emit_counts, state_totals):
        lt = _masked_digamma_scores(hp.alpha + xi,
                                    hp.alpha_row_sums + xi.sum(axis=1),
                                    spec.trans_mask)
        le = _masked_digamma_scores(hp.beta + emit_counts,
                                    hp.beta_row_sums + state_totals,
                                    spec.emit_mask)
        return lt, le, np.exp(lt), np.exp(le)

    return _expectation_loop(obs, path0, hp, spec, max_iter, build)


def run_method(method: str, obs, path0, hp, spec, max_iter: int,
               applicability_mode: str = "strict", _cache=None):
    if method == "sem":
        return sem_run(obs, path0, hp, spec, max_iter, _cache=_cache)
    if method == "smm":
        return smm_run(obs, path0, hp, spec, max_iter, applicability_mode, _cache=_cache)
    if method == "bem":
        return bem_run(obs, path0, hp, spec, max_iter, applicability_mode)
    if method == "vb":
        return vb_run(obs, path0, hp, spec, max_iter)
    raise DataError(f"unknown method {method!r}")


def multistart(obs, hp: HyperParams, spec: ModelSpec, cfg: SegConfig,
               init_models=None, init_paths=None) -> RunResult:
    """Run the configured method from many initial paths and keep the best
    output by ln p(path, obs), ties broken toward the lexicographically
    smallest path.

    Initial paths are either given explicitly or sampled from the path
    posterior of each model in ``init_models`` in round-robin order.  Starts
    that fail (inadmissible initial path, or a dead Viterbi/forward-backward
    instance) are recorded and skipped; if every start fails, DataError.
    """
    x = as_obs_array(obs, spec.L)
    hp.validate(spec)
    if cfg.method in ("smm", "bem"):
        check_applicability(hp, spec, cfg.applicability_mode)

    if init_paths is None:
        if not init_models:
            raise DataError("multistart needs init_models or explicit init_paths")
        seeds = np.random.SeedSequence(cfg.rng_seed).spawn(cfg.n_initial)
        init_paths = [
            sample_posterior_path(x, init_models[k % len(init_models)], None, spec, seeds[k])
            for k in range(cfg.n_initial)
        ]

    step_cache: dict = {}
    run_cache: dict = {}
    value_cache: dict = {}
    records = []
    best_path = None
    best_value = -np.inf
    best_key = None

    for idx, path0 in enumerate(init_paths):
        try:
            s0 = as_state_array(path0, spec.K)
            if s0.size != x.size:
                raise DataError("initial path length does not match the sequence")
            if not is_admissible(s0, x, spec):
                raise DataError("initial path is not admissible")
            key0 = (cfg.method, s0.tobytes())
            if key0 in run_cache:
                out, iters, converged = run_cache[key0]
            else:
                out, iters, converged = run_method(
                    cfg.method, x, s0, hp, spec, cfg.max_iter,
                    cfg.applicability_mode, _cache=step_cache)
                run_cache[key0] = (out, iters, converged)
        except DataError as exc:
            records.append(StartRecord(index=idx, path_hash=None, value=float("nan"),
                                       iterations=0, converged=False, error=str(exc)))
            continue
        out_key = out.tobytes()
        if out_key not in value_cache:
            value_cache[out_key] = log_joint(out, x, hp, spec)
        value = value_cache[out_key]
        records.append(StartRecord(index=idx, path_hash=_path_hash(out), value=value,
                                   iterations=iters, converged=converged))
        if best_path is None or value > best_value or (
                value == best_value and out_key != best_key
                and tuple(out) < tuple(best_path)):
            best_path, best_value, best_key = out, value, out_key

    if best_path is None:
        raise DataError("all starts failed; no admissible output produced")

    best_hash = _path_hash(best_path)
    iters_best = min(r.iterations for r in records
                     if r.error is None and r.value == best_value
                     and r.path_hash == best_hash)
    distinct = len({r.path_hash for r in records if r.error is None})
    return RunResult(best_path=best_path, best_logjoint=best_value,
                     distinct_outputs=distinct, iterations_of_best=iters_best,
                     records=tuple(records))
