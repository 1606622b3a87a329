"""Cross-checks between the compiled kernels and the numpy fallback."""

import numpy as np
import pytest

from dirseg.kernels import available_backends
from dirseg.likelihood import sample_hmm_pair
from dirseg.synthetic import random_model

BACKENDS = available_backends()

needs_both = pytest.mark.skipif(len(BACKENDS) < 2,
                                reason="compiled kernels not built")


def _log(a):
    out = np.full(a.shape, -np.inf)
    out[a > 0] = np.log(a[a > 0])
    return out


def _instance(seed, n):
    spec, theta = random_model(4, 5, seed=seed, trans_density=0.7)
    x, _ = sample_hmm_pair(theta, spec, n, seed=seed + 1)
    emit_seq = np.ascontiguousarray(theta.emit[:, x].T)
    return spec, theta, x, emit_seq


@needs_both
def test_viterbi_parity():
    for seed in range(20):
        spec, theta, x, emit_seq = _instance(seed, 60)
        args = (_log(theta.trans), _log(emit_seq), _log(spec.p0))
        results = {name: mod.viterbi_kernel(*args) for name, mod in BACKENDS.items()}
        paths = [r[0] for r in results.values()]
        scores = [r[1] for r in results.values()]
        deads = [r[2] for r in results.values()]
        assert all(np.array_equal(paths[0], p) for p in paths[1:])
        np.testing.assert_allclose(scores, scores[0], rtol=1e-12)
        assert len(set(deads)) == 1


@needs_both
def test_forward_backward_parity():
    for seed in range(20):
        spec, theta, x, emit_seq = _instance(seed, 60)
        args = (theta.trans, emit_seq, spec.p0)
        results = {name: mod.forward_backward_kernel(*args)
                   for name, mod in BACKENDS.items()}
        vals = list(results.values())
        for other in vals[1:]:
            np.testing.assert_allclose(vals[0][0], other[0], atol=1e-12)
            np.testing.assert_allclose(vals[0][1], other[1], atol=1e-10)
            assert vals[0][2] == pytest.approx(other[2], abs=1e-10)
            assert vals[0][3] == other[3]


@needs_both
def test_ffbs_parity():
    rng = np.random.default_rng(0)
    agree = 0
    total = 0
    for seed in range(20):
        spec, theta, x, emit_seq = _instance(seed, 40)
        unif = rng.random(len(x))
        args = (theta.trans, emit_seq, spec.p0, unif)
        paths = [mod.ffbs_kernel(*args)[0] for mod in BACKENDS.values()]
        total += 1
        agree += all(np.array_equal(paths[0], p) for p in paths[1:])
    # identical uniforms and near-identical filters: disagreement would need a
    # draw landing within float noise of a category boundary
    assert agree == total


@needs_both
def test_dead_position_parity():
    spec, theta, x, emit_seq = _instance(3, 20)
    emit_seq = emit_seq.copy()
    emit_seq[7] = 0.0
    args = (theta.trans, emit_seq, spec.p0)
    deads = [mod.forward_backward_kernel(*args)[3] for mod in BACKENDS.values()]
    assert set(deads) == {7}
