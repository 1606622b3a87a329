"""Pure numpy implementations of the dynamic-programming kernels.

Mirror of the compiled extension ``dirseg._kernels``; used as a fallback when
the extension is not built.  All kernels operate on dense float64 arrays with
no model knowledge: sparsity arrives as zeros (or -inf log scores).
"""

import numpy as np

BACKEND_NAME = "python"


def viterbi_kernel(log_trans, log_emit_seq, log_p0):
    """Max-sum decoding over log scores.

    Returns (path, score, dead_t): dead_t is -1 on success, else the first
    time index where every state score is -inf (path content is undefined
    then).  Ties pick the smallest state index at each backtrack step.
    """
    n, K = log_emit_seq.shape
    path = np.zeros(n, dtype=np.int64)
    delta = log_p0 + log_emit_seq[0]
    if not np.isfinite(delta).any():
        return path, float("-inf"), 0
    back = np.zeros((n, K), dtype=np.int64)
    for t in range(1, n):
        cand = delta[:, None] + log_trans
        best_prev = np.argmax(cand, axis=0)
        delta = cand[best_prev, np.arange(K)] + log_emit_seq[t]
        back[t] = best_prev
        if not np.isfinite(delta).any():
            return path, float("-inf"), t
    last = int(np.argmax(delta))
    score = float(delta[last])
    path[n - 1] = last
    for t in range(n - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path, score, -1


def forward_backward_kernel(trans, emit_seq, p0):
    """Scaled forward-backward over non-negative scores (rows need not sum to 1).

    Returns (gamma, xi, loglik, dead_t); loglik is the sum of log scaling
    factors, which equals ln p(x | params) for proper matrices.  dead_t is -1
    on success, else the first time index with zero total mass.
    """
    n, K = emit_seq.shape
    gamma = np.zeros((n, K))
    xi = np.zeros((K, K))
    fwd = np.empty((n, K))
    scale = np.empty(n)
    a = p0 * emit_seq[0]
    tot = a.sum()
    if tot <= 0.0:
        return gamma, xi, float("-inf"), 0
    fwd[0] = a / tot
    scale[0] = tot
    for t in range(1, n):
        a = (fwd[t - 1] @ trans) * emit_seq[t]
        tot = a.sum()
        if tot <= 0.0:
            return gamma, xi, float("-inf"), t
        fwd[t] = a / tot
        scale[t] = tot
    bwd = np.empty((n, K))
    bwd[n - 1] = 1.0
    for t in range(n - 2, -1, -1):
        bwd[t] = (trans @ (emit_seq[t + 1] * bwd[t + 1])) / scale[t + 1]
    gamma = fwd * bwd
    if n > 1:
        weighted = (emit_seq[1:] * bwd[1:]) / scale[1:, None]
        xi = np.einsum("ti,tj->ij", fwd[:-1], weighted) * trans
    return gamma, xi, float(np.log(scale).sum()), -1


def ffbs_kernel(trans, emit_seq, p0, unif):
    """Forward filtering, backward sampling.

    ``unif`` holds one uniform(0,1) draw per position, consumed from the last
    position backwards.  Returns (path, dead_t) with dead_t as above.
    """
    n, K = emit_seq.shape
    path = np.zeros(n, dtype=np.int64)
    fwd = np.empty((n, K))
    a = p0 * emit_seq[0]
    tot = a.sum()
    if tot <= 0.0:
        return path, 0
    fwd[0] = a / tot
    for t in range(1, n):
        a = (fwd[t - 1] @ trans) * emit_seq[t]
        tot = a.sum()
        if tot <= 0.0:
            return path, t
        fwd[t] = a / tot
    w = fwd[n - 1]
    path[n - 1] = _draw(w, unif[n - 1])
    for t in range(n - 2, -1, -1):
        w = fwd[t] * trans[:, path[t + 1]]
        path[t] = _draw(w, unif[t])
    return path, -1


def _draw(weights, u):
    cum = np.cumsum(weights)
    return int(np.searchsorted(cum, u * cum[-1], side="right").clip(0, weights.size - 1))
