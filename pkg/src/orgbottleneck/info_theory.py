"""Exact information-theoretic primitives over finite alphabets.

All quantities are reported in bits (log base 2) and computed from exact
probability tables, never from samples. The ``0 * log 0 = 0`` convention
is applied throughout, so distributions with structural zeros never
produce NaNs.

Alphabets are kept dense; the intended scale is desk-sized (at most a
few hundred symbols per variable).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import rel_entr, xlogy

from .exceptions import DimensionError, ValidationError
from .validation import (
    check_joint_matrix,
    check_probability_vector,
    check_transition_matrix,
)

_LN2 = np.log(2.0)


@dataclass(frozen=True, eq=False)
class Distribution:
    """Probability mass function over a finite alphabet."""

    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", check_probability_vector(self.probs))

    @property
    def alphabet_size(self) -> int:
        return int(self.probs.shape[0])

    def __eq__(self, other) -> bool:
        return isinstance(other, Distribution) and np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash((Distribution, self.probs.tobytes()))


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Exact joint pmf p(x, y), rows indexed by x and columns by y."""

    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", check_joint_matrix(self.probs))

    @property
    def x_size(self) -> int:
        return int(self.probs.shape[0])

    @property
    def y_size(self) -> int:
        return int(self.probs.shape[1])

    def marginal_x(self) -> Distribution:
        return Distribution(self.probs.sum(axis=1))

    def marginal_y(self) -> Distribution:
        return Distribution(self.probs.sum(axis=0))

    def transpose(self) -> "JointDistribution":
        return JointDistribution(self.probs.T)

    def __eq__(self, other) -> bool:
        return isinstance(other, JointDistribution) and np.array_equal(
            self.probs, other.probs
        )

    def __hash__(self):
        return hash((JointDistribution, self.probs.shape, self.probs.tobytes()))


@dataclass(frozen=True, eq=False)
class Channel:
    """Stochastic map p(out | in): a row-stochastic matrix."""

    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", check_transition_matrix(self.probs))

    @property
    def in_size(self) -> int:
        return int(self.probs.shape[0])

    @property
    def out_size(self) -> int:
        return int(self.probs.shape[1])

    @classmethod
    def identity(cls, n: int) -> "Channel":
        return cls(np.eye(n))

    @classmethod
    def constant(cls, in_size: int, out_size: int, symbol: int = 0) -> "Channel":
        """Channel sending every input to one output symbol with certainty."""
        if not 0 <= symbol < out_size:
            raise ValidationError(
                f"constant channel symbol {symbol} outside alphabet of size {out_size}"
            )
        probs = np.zeros((in_size, out_size))
        probs[:, symbol] = 1.0
        return cls(probs)

    def __eq__(self, other) -> bool:
        return isinstance(other, Channel) and np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash((Channel, self.probs.shape, self.probs.tobytes()))


@dataclass(frozen=True)
class MarkovChainSpec:
    """A source joint over (X, Y) followed by an ordered cascade of channels on X."""

    source: JointDistribution
    stages: tuple[Channel, ...]

    def __post_init__(self):
        object.__setattr__(self, "source", as_joint(self.source))
        object.__setattr__(self, "stages", tuple(as_channel(c) for c in self.stages))
        prev = self.source.x_size
        for i, stage in enumerate(self.stages):
            if stage.in_size != prev:
                raise DimensionError(
                    f"stage {i} expects input alphabet of size {stage.in_size}, "
                    f"but the preceding alphabet has size {prev}"
                )
            prev = stage.out_size


@dataclass(frozen=True)
class DPIReport:
    """Per-stage I(X; T_i) trace and whether it is non-increasing within slack."""

    mutual_informations: tuple[float, ...]
    passed: bool
    slack: float = 1e-9


def as_distribution(d) -> Distribution:
    return d if isinstance(d, Distribution) else Distribution(d)


def as_joint(j) -> JointDistribution:
    return j if isinstance(j, JointDistribution) else JointDistribution(j)


def as_channel(c) -> Channel:
    return c if isinstance(c, Channel) else Channel(c)


def entropy(d) -> float:
    """Shannon entropy -sum(p * log2 p) in bits, with 0*log 0 = 0."""
    d = as_distribution(d)
    return float(-xlogy(d.probs, d.probs).sum() / _LN2)


def mutual_information(j) -> float:
    """I(X;Y) in bits, computed from the plug-in formula on the joint table.

    Symmetric in its arguments and non-negative; equals H(X) - H(X|Y).
    """
    j = as_joint(j)
    px = j.probs.sum(axis=1, keepdims=True)
    py = j.probs.sum(axis=0, keepdims=True)
    mi = float(rel_entr(j.probs, px * py).sum() / _LN2)
    # The plug-in value is non-negative in exact arithmetic; rounding can
    # leave a residue of order 1e-16 on independent tables.
    return mi if mi > 0.0 else 0.0


def conditional_entropy(j) -> float:
    """H(X|Y) in bits: joint entropy minus the entropy of the column marginal."""
    j = as_joint(j)
    h_joint = -xlogy(j.probs, j.probs).sum() / _LN2
    py = j.probs.sum(axis=0)
    h_y = -xlogy(py, py).sum() / _LN2
    value = float(h_joint - h_y)
    return value if value > 0.0 else 0.0


def kl_divergence(p, q) -> float:
    """KL(p || q) in bits; +inf when q lacks mass somewhere p has it."""
    p = as_distribution(p)
    q = as_distribution(q)
    if p.alphabet_size != q.alphabet_size:
        raise DimensionError(
            f"alphabet sizes differ: {p.alphabet_size} vs {q.alphabet_size}"
        )
    return float(rel_entr(p.probs, q.probs).sum() / _LN2)


def push_through(j, c) -> JointDistribution:
    """Apply a channel to the first coordinate of a joint, carrying the second.

    Returns the joint over (out, Y): p(l, y) = sum_x p(x, y) * c(l | x).
    """
    j = as_joint(j)
    c = as_channel(c)
    if c.in_size != j.x_size:
        raise DimensionError(
            f"channel expects input alphabet of size {c.in_size}, "
            f"joint has x alphabet of size {j.x_size}"
        )
    return JointDistribution(c.probs.T @ j.probs)


def verify_dpi(m: MarkovChainSpec, slack: float = 1e-9) -> DPIReport:
    """Trace I(X; T_i) through a channel cascade and check it never increases.

    The trace is computed exactly by chained push_through, starting from the
    joint of X with an identical copy of itself, so each stage's value is the
    mutual information between the original input and that stage's output.
    A failure indicates an implementation bug, not a property of the chain.
    """
    px = m.source.marginal_x().probs
    carried = JointDistribution(np.diag(px))
    values = []
    for stage in m.stages:
        carried = push_through(carried, stage)
        values.append(mutual_information(carried))
    passed = all(b <= a + slack for a, b in zip(values, values[1:]))
    return DPIReport(tuple(values), passed, slack)


def permute_distribution(d: Distribution, perm: Sequence[int]) -> Distribution:
    """Relabel a distribution's alphabet by a permutation."""
    d = as_distribution(d)
    return Distribution(d.probs[np.asarray(perm)])


def permute_joint(j: JointDistribution, x_perm=None, y_perm=None) -> JointDistribution:
    """Relabel either or both alphabets of a joint by permutations."""
    j = as_joint(j)
    probs = j.probs
    if x_perm is not None:
        probs = probs[np.asarray(x_perm), :]
    if y_perm is not None:
        probs = probs[:, np.asarray(y_perm)]
    return JointDistribution(probs)
