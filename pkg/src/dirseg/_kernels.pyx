# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled dynamic-programming kernels (Viterbi, forward-backward, FFBS).

Semantics match dirseg._kernels_py exactly; see that module for contracts.
"""

import numpy as np

cimport cython
from libc.math cimport INFINITY, log

BACKEND_NAME = "cython"


def viterbi_kernel(const double[:, ::1] log_trans, const double[:, ::1] log_emit_seq,
                   const double[::1] log_p0):
    cdef Py_ssize_t n = log_emit_seq.shape[0]
    cdef Py_ssize_t K = log_emit_seq.shape[1]
    path_arr = np.zeros(n, dtype=np.int64)
    back_arr = np.zeros((n, K), dtype=np.int64)
    prev_arr = np.empty(K, dtype=np.float64)
    cur_arr = np.empty(K, dtype=np.float64)
    cdef long long[::1] path = path_arr
    cdef long long[:, ::1] back = back_arr
    cdef double[::1] prev = prev_arr
    cdef double[::1] cur = cur_arr
    cdef Py_ssize_t t, i, j, best_i, last
    cdef double best, cand, score
    cdef bint alive = False

    for j in range(K):
        prev[j] = log_p0[j] + log_emit_seq[0, j]
        if prev[j] > -INFINITY:
            alive = True
    if not alive:
        return path_arr, -INFINITY, 0

    for t in range(1, n):
        alive = False
        for j in range(K):
            best = -INFINITY
            best_i = 0
            for i in range(K):
                cand = prev[i] + log_trans[i, j]
                if cand > best:
                    best = cand
                    best_i = i
            cur[j] = best + log_emit_seq[t, j]
            back[t, j] = best_i
            if cur[j] > -INFINITY:
                alive = True
        if not alive:
            return path_arr, -INFINITY, t
        for j in range(K):
            prev[j] = cur[j]

    last = 0
    score = prev[0]
    for j in range(1, K):
        if prev[j] > score:
            score = prev[j]
            last = j
    path[n - 1] = last
    for t in range(n - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path_arr, score, -1


def forward_backward_kernel(const double[:, ::1] trans, const double[:, ::1] emit_seq,
                            const double[::1] p0):
    cdef Py_ssize_t n = emit_seq.shape[0]
    cdef Py_ssize_t K = emit_seq.shape[1]
    gamma_arr = np.zeros((n, K), dtype=np.float64)
    xi_arr = np.zeros((K, K), dtype=np.float64)
    fwd_arr = np.empty((n, K), dtype=np.float64)
    bwd_arr = np.empty((n, K), dtype=np.float64)
    scale_arr = np.empty(n, dtype=np.float64)
    cdef double[:, ::1] gamma = gamma_arr
    cdef double[:, ::1] xi = xi_arr
    cdef double[:, ::1] fwd = fwd_arr
    cdef double[:, ::1] bwd = bwd_arr
    cdef double[::1] scale = scale_arr
    cdef Py_ssize_t t, i, j
    cdef double tot, acc, loglik, w

    tot = 0.0
    for j in range(K):
        fwd[0, j] = p0[j] * emit_seq[0, j]
        tot += fwd[0, j]
    if tot <= 0.0:
        return gamma_arr, xi_arr, -INFINITY, 0
    scale[0] = tot
    for j in range(K):
        fwd[0, j] /= tot

    for t in range(1, n):
        tot = 0.0
        for j in range(K):
            acc = 0.0
            for i in range(K):
                acc += fwd[t - 1, i] * trans[i, j]
            fwd[t, j] = acc * emit_seq[t, j]
            tot += fwd[t, j]
        if tot <= 0.0:
            return gamma_arr, xi_arr, -INFINITY, t
        scale[t] = tot
        for j in range(K):
            fwd[t, j] /= tot

    for j in range(K):
        bwd[n - 1, j] = 1.0
    for t in range(n - 2, -1, -1):
        for i in range(K):
            acc = 0.0
            for j in range(K):
                acc += trans[i, j] * emit_seq[t + 1, j] * bwd[t + 1, j]
            bwd[t, i] = acc / scale[t + 1]

    for t in range(n):
        for j in range(K):
            gamma[t, j] = fwd[t, j] * bwd[t, j]

    for t in range(n - 1):
        for i in range(K):
            for j in range(K):
                w = fwd[t, i] * trans[i, j] * emit_seq[t + 1, j] * bwd[t + 1, j] / scale[t + 1]
                xi[i, j] += w

    loglik = 0.0
    for t in range(n):
        loglik += log(scale[t])
    return gamma_arr, xi_arr, loglik, -1


def ffbs_kernel(const double[:, ::1] trans, const double[:, ::1] emit_seq,
                const double[::1] p0, const double[::1] unif):
    cdef Py_ssize_t n = emit_seq.shape[0]
    cdef Py_ssize_t K = emit_seq.shape[1]
    path_arr = np.zeros(n, dtype=np.int64)
    fwd_arr = np.empty((n, K), dtype=np.float64)
    cdef long long[::1] path = path_arr
    cdef double[:, ::1] fwd = fwd_arr
    cdef Py_ssize_t t, i, j, pick
    cdef double tot, acc, thr

    tot = 0.0
    for j in range(K):
        fwd[0, j] = p0[j] * emit_seq[0, j]
        tot += fwd[0, j]
    if tot <= 0.0:
        return path_arr, 0
    for j in range(K):
        fwd[0, j] /= tot
    for t in range(1, n):
        tot = 0.0
        for j in range(K):
            acc = 0.0
            for i in range(K):
                acc += fwd[t - 1, i] * trans[i, j]
            fwd[t, j] = acc * emit_seq[t, j]
            tot += fwd[t, j]
        if tot <= 0.0:
            return path_arr, t
        for j in range(K):
            fwd[t, j] /= tot

    tot = 0.0
    for j in range(K):
        tot += fwd[n - 1, j]
    thr = unif[n - 1] * tot
    acc = 0.0
    pick = K - 1
    for j in range(K):
        acc += fwd[n - 1, j]
        if thr < acc:
            pick = j
            break
    path[n - 1] = pick

    for t in range(n - 2, -1, -1):
        tot = 0.0
        for i in range(K):
            tot += fwd[t, i] * trans[i, path[t + 1]]
        thr = unif[t] * tot
        acc = 0.0
        pick = K - 1
        for i in range(K):
            acc += fwd[t, i] * trans[i, path[t + 1]]
            if thr < acc:
                pick = i
                break
        path[t] = pick
    return path_arr, -1
