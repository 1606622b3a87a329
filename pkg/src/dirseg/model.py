"""Core domain types: sparse model specification, count tables, hyperparameters.

States and alphabet symbols are 0-based everywhere inside the library; the
corpus file format and CLI reports use 1-based states (see README).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DataError(ValueError):
    """Sequences, corpora or parameter matrices violate the model contract."""


def as_state_array(path, K: int) -> np.ndarray:
    """Coerce to an int64 state array and check every entry is in [0, K)."""
    s = np.asarray(path, dtype=np.int64)
    if s.ndim != 1 or s.size == 0:
        raise DataError("state path must be a non-empty 1-d sequence")
    if s.min() < 0 or s.max() >= K:
        raise DataError(f"state path has entries outside [0, {K})")
    return s


def as_obs_array(obs, L: int) -> np.ndarray:
    """Coerce to an int64 symbol-index array and check every entry is in [0, L)."""
    x = np.asarray(obs, dtype=np.int64)
    if x.ndim != 1 or x.size == 0:
        raise DataError("observation sequence must be a non-empty 1-d sequence")
    if x.min() < 0 or x.max() >= L:
        raise DataError(f"observation sequence has entries outside [0, {L})")
    return x


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ModelSpec:
    """Number of states, alphabet, fixed initial distribution and sparsity masks.

    ``trans_mask[i, j]`` is True when the transition i -> j is possible,
    ``emit_mask[i, l]`` is True when state i can emit symbol l.  Every mask row
    must have at least one True entry.
    """

    K: int
    alphabet: tuple[str, ...]
    p0: np.ndarray
    trans_mask: np.ndarray
    emit_mask: np.ndarray

    def __post_init__(self):
        if self.K < 1:
            raise DataError("K must be a positive integer")
        if len(set(self.alphabet)) != len(self.alphabet) or not self.alphabet:
            raise DataError("alphabet symbols must be distinct and non-empty")
        object.__setattr__(self, "alphabet", tuple(str(a) for a in self.alphabet))
        p0 = np.asarray(self.p0, dtype=np.float64)
        if p0.shape != (self.K,):
            raise DataError(f"p0 must have shape ({self.K},)")
        if p0.min() < 0.0:
            raise DataError("p0 entries must be non-negative")
        if abs(p0.sum() - 1.0) > 1e-12:
            raise DataError("p0 must sum to 1 within 1e-12")
        tm = np.asarray(self.trans_mask, dtype=bool)
        em = np.asarray(self.emit_mask, dtype=bool)
        if tm.shape != (self.K, self.K):
            raise DataError(f"trans_mask must have shape ({self.K}, {self.K})")
        if em.shape != (self.K, self.L):
            raise DataError(f"emit_mask must have shape ({self.K}, {self.L})")
        if not tm.any(axis=1).all():
            bad = int(np.flatnonzero(~tm.any(axis=1))[0])
            raise DataError(f"trans_mask row {bad} has no possible transition")
        if not em.any(axis=1).all():
            bad = int(np.flatnonzero(~em.any(axis=1))[0])
            raise DataError(f"emit_mask row {bad} has no possible emission")
        object.__setattr__(self, "p0", _frozen(p0))
        object.__setattr__(self, "trans_mask", _frozen(tm))
        object.__setattr__(self, "emit_mask", _frozen(em))

    @property
    def L(self) -> int:
        return len(self.alphabet)

    @property
    def trans_row_sizes(self) -> np.ndarray:
        """Number of possible transitions out of each state."""
        return self.trans_mask.sum(axis=1)

    @property
    def emit_row_sizes(self) -> np.ndarray:
        """Number of possible emissions from each state."""
        return self.emit_mask.sum(axis=1)


@dataclass(frozen=True)
class CountTables:
    """Transition and emission counts of a (path, observation) pair."""

    trans: np.ndarray        # K x K, counts of adjacent state pairs
    emit: np.ndarray         # K x L, counts of (state, symbol) positions
    trans_row_sums: np.ndarray = field(default=None)
    emit_row_sums: np.ndarray = field(default=None)

    def __post_init__(self):
        trans = _frozen(np.asarray(self.trans, dtype=np.int64))
        emit = _frozen(np.asarray(self.emit, dtype=np.int64))
        object.__setattr__(self, "trans", trans)
        object.__setattr__(self, "emit", emit)
        object.__setattr__(self, "trans_row_sums", _frozen(trans.sum(axis=1)))
        object.__setattr__(self, "emit_row_sums", _frozen(emit.sum(axis=1)))


def count_path(path, obs, spec: ModelSpec) -> CountTables:
    """Count transitions of ``path`` and emissions of the pair.

    Raises DataError when the two sequences differ in length.
    """
    s = as_state_array(path, spec.K)
    x = as_obs_array(obs, spec.L)
    if s.shape != x.shape:
        raise DataError(f"length mismatch: path has {s.size}, observations {x.size}")
    K, L = spec.K, spec.L
    trans = np.bincount(s[:-1] * K + s[1:], minlength=K * K).reshape(K, K)
    emit = np.bincount(s * L + x, minlength=K * L).reshape(K, L)
    return CountTables(trans=trans, emit=emit)


def path_admissible(path, spec: ModelSpec) -> bool:
    """True when the path uses only possible transitions and starts in a state
    with positive initial probability."""
    s = as_state_array(path, spec.K)
    if spec.p0[s[0]] <= 0.0:
        return False
    return bool(spec.trans_mask[s[:-1], s[1:]].all())


def is_admissible(path, obs, spec: ModelSpec) -> bool:
    """True when the pair uses only possible transitions and emissions and the
    first state has positive initial probability."""
    s = as_state_array(path, spec.K)
    x = as_obs_array(obs, spec.L)
    if s.shape != x.shape:
        raise DataError(f"length mismatch: path has {s.size}, observations {x.size}")
    if not path_admissible(s, spec):
        return False
    return bool(spec.emit_mask[s, x].all())


def derive_masks(corpus, K: int, alphabet) -> tuple[np.ndarray, np.ndarray]:
    """Derive sparsity masks from a labeled corpus of (obs, path) pairs.

    A transition or emission is possible exactly when it occurs at least once
    in the pooled corpus counts.  A state that never appears in the corpus has
    empty mask rows and raises DataError naming it.  (A state that only ever
    closes sequences keeps an empty transition row here; constructing a
    ModelSpec from such masks fails its row invariant.)
    """
    if not corpus:
        raise DataError("corpus is empty")
    L = len(alphabet)
    trans = np.zeros((K, K), dtype=np.int64)
    emit = np.zeros((K, L), dtype=np.int64)
    for x, s in corpus:
        s = as_state_array(s, K)
        x = as_obs_array(x, L)
        if s.shape != x.shape:
            raise DataError("corpus pair with unequal lengths")
        trans += np.bincount(s[:-1] * K + s[1:], minlength=K * K).reshape(K, K)
        emit += np.bincount(s * L + x, minlength=K * L).reshape(K, L)
    emit_mask = emit > 0
    for i in range(K):
        if not emit_mask[i].any():
            raise DataError(f"state {i} is never observed in the corpus")
    return trans > 0, emit_mask


@dataclass(frozen=True)
class HyperParams:
    """Dirichlet parameters for transition and emission rows.

    Entries are strictly positive exactly on the masked-in cells of the model
    they belong to and zero elsewhere; row sums are precomputed.
    """

    alpha: np.ndarray        # K x K
    beta: np.ndarray         # K x L
    alpha_row_sums: np.ndarray = field(default=None)
    beta_row_sums: np.ndarray = field(default=None)

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=np.float64)
        beta = np.asarray(self.beta, dtype=np.float64)
        if alpha.min() < 0.0 or beta.min() < 0.0:
            raise DataError("hyperparameters must be non-negative")
        object.__setattr__(self, "alpha", _frozen(alpha))
        object.__setattr__(self, "beta", _frozen(beta))
        object.__setattr__(self, "alpha_row_sums", _frozen(alpha.sum(axis=1)))
        object.__setattr__(self, "beta_row_sums", _frozen(beta.sum(axis=1)))

    def validate(self, spec: ModelSpec) -> "HyperParams":
        """Check the positivity pattern matches the model masks exactly."""
        if self.alpha.shape != (spec.K, spec.K) or self.beta.shape != (spec.K, spec.L):
            raise DataError("hyperparameter shapes do not match the model")
        if not ((self.alpha > 0) == spec.trans_mask).all():
            raise DataError("alpha must be positive exactly on possible transitions")
        if not ((self.beta > 0) == spec.emit_mask).all():
            raise DataError("beta must be positive exactly on possible emissions")
        return self


@dataclass(frozen=True)
class ParamMatrices:
    """A strictly stochastic transition/emission matrix pair."""

    trans: np.ndarray        # K x K
    emit: np.ndarray         # K x L

    def __post_init__(self):
        object.__setattr__(self, "trans", _frozen(np.asarray(self.trans, dtype=np.float64)))
        object.__setattr__(self, "emit", _frozen(np.asarray(self.emit, dtype=np.float64)))

    @classmethod
    def checked(cls, trans, emit, spec: ModelSpec) -> "ParamMatrices":
        """Validate non-negativity, mask support and row sums (1 within 1e-10)."""
        m = cls(trans=trans, emit=emit)
        if m.trans.shape != (spec.K, spec.K) or m.emit.shape != (spec.K, spec.L):
            raise DataError("parameter matrix shapes do not match the model")
        if m.trans.min() < 0.0 or m.emit.min() < 0.0:
            raise DataError("parameter matrices must be non-negative")
        if m.trans[~spec.trans_mask].any() or m.emit[~spec.emit_mask].any():
            raise DataError("parameter matrices must be zero on impossible cells")
        if (np.abs(m.trans.sum(axis=1) - 1.0) > 1e-10).any():
            raise DataError("transition rows must sum to 1 within 1e-10")
        if (np.abs(m.emit.sum(axis=1) - 1.0) > 1e-10).any():
            raise DataError("emission rows must sum to 1 within 1e-10")
        return m
