import numpy as np
import pytest
import scipy.special
import scipy.stats

from dirseg.engine import (
    ScoreMatrices,
    baum_welch,
    forward_backward,
    sample_posterior_path,
    viterbi,
)
from dirseg.likelihood import log_joint_hmm, sample_hmm_pair
from dirseg.model import DataError, ModelSpec, ParamMatrices, is_admissible
from dirseg.synthetic import random_model

from oracles import all_paths, brute_gamma, brute_viterbi, enumerate_joint


def _log(a):
    out = np.full(a.shape, -np.inf)
    out[a > 0] = np.log(a[a > 0])
    return out


def _emit_seq(emit, x):
    return np.ascontiguousarray(emit[:, x].T)


class TestViterbi:
    def test_one_hot_forced_path(self):
        spec = ModelSpec(K=2, alphabet=("a", "b"), p0=[1.0, 0.0],
                         trans_mask=np.ones((2, 2), bool),
                         emit_mask=np.ones((2, 2), bool))
        theta = ParamMatrices(trans=np.array([[0.0, 1.0], [1.0, 0.0]]),
                              emit=np.array([[1.0, 0.0], [0.0, 1.0]]))
        path = viterbi([0, 1, 0, 1], theta, None, spec)
        assert path.tolist() == [0, 1, 0, 1]

    def test_matches_enumeration_proper(self):
        rng = np.random.default_rng(31)
        for _ in range(25):
            spec, theta = random_model(2, 2, seed=rng)
            n = int(rng.integers(2, 9))
            x, _ = sample_hmm_pair(theta, spec, n, rng)
            got = viterbi(x, theta, None, spec)
            want, _ = brute_viterbi(_log(theta.trans), _emit_seq(_log(theta.emit), x),
                                    _log(spec.p0))
            assert np.array_equal(got, want)

    def test_matches_enumeration_improper(self):
        # rows scaled to sum to 0.7: the same linear objective, same argmax
        rng = np.random.default_rng(32)
        for _ in range(25):
            spec, theta = random_model(2, 2, seed=rng)
            scores = ScoreMatrices(trans=0.7 * theta.trans, emit=0.7 * theta.emit)
            n = int(rng.integers(2, 9))
            x, _ = sample_hmm_pair(theta, spec, n, rng)
            got = viterbi(x, scores, None, spec)
            want, _ = brute_viterbi(_log(scores.trans), _emit_seq(_log(scores.emit), x),
                                    _log(spec.p0))
            assert np.array_equal(got, want)

    def test_no_admissible_path_errors(self):
        spec = ModelSpec(K=2, alphabet=("a", "b"), p0=[1.0, 0.0],
                         trans_mask=np.ones((2, 2), bool),
                         emit_mask=np.ones((2, 2), bool))
        # state 0 cannot emit symbol b and state 1 is unreachable at t=0
        theta = ScoreMatrices(trans=np.eye(2), emit=np.array([[1.0, 0.0], [0.0, 1.0]]))
        with pytest.raises(DataError, match="position 1"):
            viterbi([0, 1], theta, None, spec)

    def test_smallest_index_tie_break(self):
        # both states are exactly equivalent; the all-zeros path must win
        spec = ModelSpec(K=2, alphabet=("a",), p0=[0.5, 0.5],
                         trans_mask=np.ones((2, 2), bool),
                         emit_mask=np.ones((2, 1), bool))
        theta = ParamMatrices(trans=np.full((2, 2), 0.5), emit=np.ones((2, 1)))
        path = viterbi([0, 0, 0], theta, None, spec)
        assert path.tolist() == [0, 0, 0]


class TestForwardBackward:
    def test_single_state(self):
        spec = ModelSpec(K=1, alphabet=("a", "b"), p0=[1.0],
                         trans_mask=np.ones((1, 1), bool),
                         emit_mask=np.ones((1, 2), bool))
        theta = ParamMatrices(trans=np.ones((1, 1)), emit=np.array([[0.25, 0.75]]))
        x = np.array([0, 1, 1, 0])
        post = forward_backward(x, theta, None, spec)
        assert np.allclose(post.gamma, 1.0)
        assert post.xi[0, 0] == pytest.approx(3.0, abs=1e-10)
        assert post.loglik == pytest.approx(np.log(theta.emit[0, x]).sum(), abs=1e-12)

    def test_gamma_matches_enumeration(self):
        rng = np.random.default_rng(41)
        for _ in range(10):
            spec, theta = random_model(2, 3, seed=rng)
            n = int(rng.integers(2, 9))
            x, _ = sample_hmm_pair(theta, spec, n, rng)
            post = forward_backward(x, theta, None, spec)
            want_gamma, want_ll = brute_gamma(x, theta, spec)
            np.testing.assert_allclose(post.gamma, want_gamma, atol=1e-10)
            assert post.loglik == pytest.approx(want_ll, abs=1e-9)

    def test_invariants(self):
        rng = np.random.default_rng(42)
        for _ in range(10):
            spec, theta = random_model(3, 3, seed=rng)
            n = int(rng.integers(2, 40))
            x, _ = sample_hmm_pair(theta, spec, n, rng)
            post = forward_backward(x, theta, None, spec)
            np.testing.assert_allclose(post.gamma.sum(axis=1), 1.0, atol=1e-10)
            assert post.xi.sum() == pytest.approx(n - 1, abs=1e-8)
            assert not post.xi[~spec.trans_mask].any()

    def test_impossible_sequence_reports_position(self):
        spec = ModelSpec(K=1, alphabet=("a", "b"), p0=[1.0],
                         trans_mask=np.ones((1, 1), bool),
                         emit_mask=np.ones((1, 2), bool))
        theta = ParamMatrices(trans=np.ones((1, 1)), emit=np.array([[1.0, 0.0]]))
        with pytest.raises(DataError, match="position 2"):
            forward_backward(np.array([0, 0, 1, 0]), theta, None, spec)


class TestBaumWelch:
    def test_single_state_fixed_point(self):
        spec = ModelSpec(K=1, alphabet=("a", "b"), p0=[1.0],
                         trans_mask=np.ones((1, 1), bool),
                         emit_mask=np.ones((1, 2), bool))
        x = np.array([0, 1, 0, 0])
        theta0 = ParamMatrices(trans=np.ones((1, 1)), emit=np.array([[0.75, 0.25]]))
        theta, ll = baum_welch(x, theta0, spec, max_iter=1)
        np.testing.assert_allclose(theta.emit, [[0.75, 0.25]], atol=1e-12)
        assert ll == pytest.approx(np.log(theta0.emit[0, x]).sum(), abs=1e-10)

    def test_loglik_nondecreasing(self):
        rng = np.random.default_rng(55)
        for _ in range(100):
            spec, theta_true = random_model(2, 3, seed=rng)
            x, _ = sample_hmm_pair(theta_true, spec, int(rng.integers(10, 60)), rng)
            _, theta0 = random_model(2, 3, seed=rng)
            theta0 = ParamMatrices(trans=theta0.trans, emit=theta0.emit)
            lls = []
            theta = theta0
            for _ in range(6):
                post = forward_backward(x, theta, None, spec)
                lls.append(post.loglik)
                theta, _ = baum_welch(x, theta, spec, max_iter=1, tol=-1.0)
            assert all(b >= a - 1e-9 for a, b in zip(lls, lls[1:]))

    def test_beats_true_parameters(self):
        spec, theta_true = random_model(2, 3, seed=77, trans_density=1.0,
                                        emit_density=1.0)
        x, _ = sample_hmm_pair(theta_true, spec, 200, seed=7)
        theta, ll = baum_welch(x, theta_true, spec, max_iter=200)
        true_ll = forward_backward(x, theta_true, None, spec).loglik
        assert ll >= true_ll - 1e-9


class TestSamplePosteriorPath:
    def test_one_hot_model(self):
        spec = ModelSpec(K=2, alphabet=("a", "b"), p0=[1.0, 0.0],
                         trans_mask=np.ones((2, 2), bool),
                         emit_mask=np.ones((2, 2), bool))
        theta = ParamMatrices(trans=np.array([[0.0, 1.0], [1.0, 0.0]]),
                              emit=np.array([[1.0, 0.0], [0.0, 1.0]]))
        path = sample_posterior_path([0, 1, 0], theta, None, spec, seed=0)
        assert path.tolist() == [0, 1, 0]

    def test_distribution_matches_enumeration(self):
        spec, theta = random_model(2, 2, seed=91)
        x = np.array([0, 1, 1, 0])
        joint = enumerate_joint(x, theta, spec)
        total = sum(joint.values())
        posterior = {s: p / total for s, p in joint.items() if p > 0}
        draws = 100_000
        seeds = np.random.SeedSequence(5).spawn(draws)
        counts = {}
        for sd in seeds:
            s = tuple(sample_posterior_path(x, theta, None, spec, sd))
            counts[s] = counts.get(s, 0) + 1
        keys = sorted(posterior)
        expected = np.array([posterior[k] * draws for k in keys])
        observed = np.array([counts.get(k, 0) for k in keys])
        keep = expected > 5
        stat = scipy.stats.chisquare(observed[keep],
                                     expected[keep] * observed[keep].sum()
                                     / expected[keep].sum())
        assert stat.pvalue > 0.001

    def test_every_draw_admissible(self):
        rng = np.random.default_rng(17)
        for _ in range(20):
            spec, theta = random_model(3, 3, seed=rng, trans_density=0.7)
            x, _ = sample_hmm_pair(theta, spec, 30, rng)
            path = sample_posterior_path(x, theta, None, spec, rng)
            assert is_admissible(path, x, spec)

    def test_deterministic_under_seed(self):
        spec, theta = random_model(3, 3, seed=2)
        x, _ = sample_hmm_pair(theta, spec, 40, seed=3)
        a = sample_posterior_path(x, theta, None, spec, seed=11)
        b = sample_posterior_path(x, theta, None, spec, seed=11)
        assert np.array_equal(a, b)


class TestLoglikAgainstEnumeration:
    def test_logsumexp_over_paths(self):
        rng = np.random.default_rng(61)
        for _ in range(10):
            spec, theta = random_model(2, 2, seed=rng)
            n = int(rng.integers(2, 8))
            x, _ = sample_hmm_pair(theta, spec, n, rng)
            lls = [log_joint_hmm(s, x, theta, spec) for s in all_paths(2, n)]
            want = scipy.special.logsumexp([v for v in lls if v > -np.inf])
            got = forward_backward(x, theta, None, spec).loglik
            assert got == pytest.approx(want, abs=1e-9)
