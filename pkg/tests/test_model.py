import numpy as np
import pytest

from dirseg.model import (
    DataError,
    HyperParams,
    ModelSpec,
    ParamMatrices,
    count_path,
    derive_masks,
    is_admissible,
)
from dirseg.synthetic import random_model
from dirseg.likelihood import sample_hmm_pair

from oracles import all_paths


def spec_with_masks(K, L, trans_mask, emit_mask, p0=None):
    return ModelSpec(K=K, alphabet=tuple("abcdef"[:L]),
                     p0=np.full(K, 1.0 / K) if p0 is None else p0,
                     trans_mask=trans_mask, emit_mask=emit_mask)


class TestModelSpec:
    def test_rejects_bad_p0(self):
        with pytest.raises(DataError):
            spec_with_masks(2, 2, np.ones((2, 2), bool), np.ones((2, 2), bool),
                            p0=[0.6, 0.6])

    def test_rejects_empty_mask_row(self):
        tm = np.ones((2, 2), bool)
        tm[1] = False
        with pytest.raises(DataError, match="row 1"):
            spec_with_masks(2, 2, tm, np.ones((2, 2), bool))

    def test_row_sizes(self):
        tm = np.array([[True, True], [True, False]])
        em = np.array([[True, False], [True, True]])
        spec = spec_with_masks(2, 2, tm, em)
        assert spec.trans_row_sizes.tolist() == [2, 1]
        assert spec.emit_row_sizes.tolist() == [1, 2]

    def test_immutable(self, ):
        spec = spec_with_masks(2, 2, np.ones((2, 2), bool), np.ones((2, 2), bool))
        with pytest.raises(ValueError):
            spec.p0[0] = 0.3


class TestCountPath:
    def test_simple_pair(self, full22):
        c = count_path([0, 0, 1], [0, 1, 0], full22)
        assert c.trans.tolist() == [[1, 1], [0, 0]]
        assert c.emit.tolist() == [[1, 1], [1, 0]]
        assert c.trans_row_sums.tolist() == [2, 0]
        assert c.emit_row_sums.tolist() == [2, 1]

    def test_single_position(self, full22):
        c = count_path([0], [1], full22)
        assert c.trans.sum() == 0
        assert c.emit.sum() == 1 and c.emit[0, 1] == 1

    def test_alternating(self, full22):
        c = count_path([0, 1, 0, 1], [0, 0, 0, 0], full22)
        assert c.trans[0, 1] == 2 and c.trans[1, 0] == 1
        assert c.trans[0, 0] == 0 and c.trans[1, 1] == 0

    def test_length_mismatch(self, full22):
        with pytest.raises(DataError):
            count_path([0, 1], [0], full22)

    def test_totals_on_random_pairs(self):
        # total transitions n-1 and emissions n for random pairs
        rng = np.random.default_rng(7)
        spec, theta = random_model(3, 4, seed=1)
        for _ in range(100):
            n = int(rng.integers(1, 1001))
            x, s = sample_hmm_pair(theta, spec, n, rng)
            c = count_path(s, x, spec)
            assert c.trans.sum() == n - 1
            assert c.emit.sum() == n


class TestAdmissibility:
    def test_full_masks_always_admissible(self, full22):
        assert is_admissible([0, 1, 0], [1, 0, 1], full22)

    def test_forbidden_transition(self):
        tm = np.array([[True, False], [True, True]])
        spec = spec_with_masks(2, 2, tm, np.ones((2, 2), bool))
        assert not is_admissible([0, 1], [0, 0], spec)

    def test_forbidden_emission(self):
        em = np.array([[True, False], [True, True]])
        spec = spec_with_masks(2, 2, np.ones((2, 2), bool), em)
        assert not is_admissible([0, 0], [0, 1], spec)

    def test_zero_start_probability(self):
        spec = spec_with_masks(2, 2, np.ones((2, 2), bool), np.ones((2, 2), bool),
                               p0=[1.0, 0.0])
        assert is_admissible([0, 0], [0, 0], spec)
        assert not is_admissible([1, 0], [0, 0], spec)

    def test_matches_count_based_definition(self):
        # brute force over every path of every length up to 6
        rng = np.random.default_rng(3)
        for K, L, n in [(2, 2, 4), (3, 2, 5), (3, 3, 6)]:
            tm = rng.random((K, K)) < 0.7
            np.fill_diagonal(tm, True)
            em = rng.random((K, L)) < 0.7
            em[:, 0] = True
            p0 = rng.dirichlet(np.ones(K))
            p0[rng.integers(K)] = 0.0
            p0 = p0 / p0.sum()
            spec = spec_with_masks(K, L, tm, em, p0=p0)
            x = rng.integers(0, L, size=n)
            for s in all_paths(K, n):
                c = count_path(s, x, spec)
                expected = (not c.trans[~spec.trans_mask].any()
                            and not c.emit[~spec.emit_mask].any()
                            and spec.p0[s[0]] > 0)
                assert is_admissible(s, x, spec) == expected


class TestDeriveMasks:
    def test_single_pair(self):
        # the closing state keeps an empty transition row
        x = np.array([0, 1])
        s = np.array([0, 1])
        tm, em = derive_masks([(x, s)], 2, ("a", "b"))
        assert tm.tolist() == [[False, True], [False, False]]
        assert em.tolist() == [[True, False], [False, True]]

    def test_full_coverage(self):
        corpus = []
        for i in range(2):
            for j in range(2):
                # transition i -> j and emissions (i, j) and (j, i)
                corpus.append((np.array([j, i]), np.array([i, j])))
        tm, em = derive_masks(corpus, 2, ("a", "b"))
        assert tm.all() and em.all()

    def test_absent_state_errors(self):
        x = np.array([0, 1])
        s = np.array([0, 1])
        with pytest.raises(DataError, match="state 2"):
            derive_masks([(x, s)], 3, ("a", "b"))

    def test_converges_to_full_masks(self):
        # a full-support model eventually shows every transition and emission
        spec, theta = random_model(3, 3, seed=5, trans_density=1.0, emit_density=1.0)
        x, s = sample_hmm_pair(theta, spec, 10_000, seed=9)
        tm, em = derive_masks([(x, s)], 3, spec.alphabet)
        assert tm.all() and em.all()


class TestHyperParams:
    def test_row_sums(self):
        hp = HyperParams(alpha=np.array([[1.0, 2.0], [0.5, 0.5]]),
                         beta=np.array([[3.0, 0.0], [1.0, 1.0]]))
        np.testing.assert_allclose(hp.alpha_row_sums, [3.0, 1.0])
        np.testing.assert_allclose(hp.beta_row_sums, [3.0, 2.0])

    def test_validate_positivity_pattern(self, full22):
        hp = HyperParams(alpha=np.array([[1.0, 0.0], [1.0, 1.0]]),
                         beta=np.ones((2, 2)))
        with pytest.raises(DataError):
            hp.validate(full22)


class TestParamMatrices:
    def test_checked_rejects_bad_rows(self, full22):
        with pytest.raises(DataError):
            ParamMatrices.checked(np.array([[0.5, 0.4], [0.5, 0.5]]),
                                  np.ones((2, 2)) / 2, full22)

    def test_checked_rejects_off_mask_mass(self):
        tm = np.array([[True, False], [True, True]])
        spec = spec_with_masks(2, 2, tm, np.ones((2, 2), bool))
        with pytest.raises(DataError):
            ParamMatrices.checked(np.full((2, 2), 0.5), np.full((2, 2), 0.5), spec)
