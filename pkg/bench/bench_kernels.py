#!/usr/bin/env python3
"""Benchmark: compiled kernels against the numpy fallback.

Times the three dynamic-programming kernels on a segmentation-sized instance
and a full multi-start sEM run (which exercises the whole hot path).

    python bench/bench_kernels.py [--K 6] [--L 20] [--n 400] [--repeat 50]
"""

import argparse
import time

import numpy as np

from dirseg.kernels import available_backends
from dirseg.likelihood import sample_hmm_pair
from dirseg.model import HyperParams
from dirseg.segmentation import SegConfig, multistart
from dirseg.synthetic import random_model


def log_dense(a):
    out = np.full(a.shape, -np.inf)
    out[a > 0] = np.log(a[a > 0])
    return out


def best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--K", type=int, default=6)
    ap.add_argument("--L", type=int, default=20)
    ap.add_argument("--n", type=int, default=400)
    ap.add_argument("--repeat", type=int, default=50)
    ap.add_argument("--starts", type=int, default=200)
    args = ap.parse_args()

    spec, theta = random_model(args.K, args.L, seed=1, trans_density=0.8,
                               emit_density=0.9, self_weight=0.5)
    x, _ = sample_hmm_pair(theta, spec, args.n, seed=2)
    emit_seq = np.ascontiguousarray(theta.emit[:, x].T)
    log_args = (log_dense(theta.trans), log_dense(emit_seq), log_dense(spec.p0))
    lin_args = (theta.trans, emit_seq, spec.p0)
    unif = np.random.default_rng(3).random(args.n)

    backends = available_backends()
    print(f"instance: K={args.K} L={args.L} n={args.n}; best of {args.repeat}\n")
    header = f"{'kernel':<22}" + "".join(f"{name:>14}" for name in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)

    rows = [
        ("viterbi", lambda mod: mod.viterbi_kernel(*log_args)),
        ("forward_backward", lambda mod: mod.forward_backward_kernel(*lin_args)),
        ("ffbs", lambda mod: mod.ffbs_kernel(*lin_args, unif)),
    ]
    for name, call in rows:
        times = {b: best_of(lambda m=mod: call(m), args.repeat)
                 for b, mod in backends.items()}
        line = f"{name:<22}" + "".join(f"{t * 1e6:>12.1f}us" for t in times.values())
        if len(times) == 2:
            vals = list(times.values())
            line += f"{vals[0] / vals[1]:>9.1f}x"
        print(line)

    # full multi-start sEM through whichever backend is active
    alpha = np.where(spec.trans_mask, 50.0 * theta.trans + 1.0, 0.0)
    beta = np.where(spec.emit_mask, 50.0 * theta.emit + 1.0, 0.0)
    hp = HyperParams(alpha=alpha, beta=beta).validate(spec)
    cfg = SegConfig(method="sem", n_initial=args.starts, rng_seed=0)
    t0 = time.perf_counter()
    res = multistart(x, hp, spec, cfg, init_models=[theta])
    elapsed = time.perf_counter() - t0
    from dirseg.kernels import BACKEND
    print(f"\nmultistart sem, {args.starts} starts ({BACKEND} backend): "
          f"{elapsed:.2f}s, best ln p = {res.best_logjoint:.2f}, "
          f"{res.distinct_outputs} distinct outputs")
    print("rerun with DIRSEG_PURE_PYTHON=1 to time the fallback end to end")


if __name__ == "__main__":
    main()
