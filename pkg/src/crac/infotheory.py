"""Entropies, mutual information and the bounds checked against protocol runs.

All information is in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .qcore import ContractError

JOINT_TOL = 1e-9
BOUND_TOL = 1e-9


def _xlog2x(p: float) -> float:
    return p * math.log2(p) if p > 0.0 else 0.0


def binary_entropy(p: float) -> float:
    if p < -1e-12 or p > 1 + 1e-12:
        raise ContractError(f"probability {p!r} outside [0, 1]")
    p = min(1.0, max(0.0, p))
    return -_xlog2x(p) - _xlog2x(1.0 - p)


def entropy(probs) -> float:
    return -sum(_xlog2x(float(p)) for p in np.ravel(probs))


@dataclass(frozen=True)
class JointDistribution:
    """2x2 table over (x, g); x indexes rows."""

    table: np.ndarray

    def __post_init__(self):
        t = np.array(self.table, dtype=float)
        if t.shape != (2, 2):
            raise ContractError(f"joint table shape {t.shape}, expected (2, 2)")
        if np.any(t < -JOINT_TOL):
            raise ContractError("joint table has negative cells")
        if abs(t.sum() - 1.0) > JOINT_TOL:
            raise ContractError(f"joint table sums to {t.sum()!r}")
        t = np.clip(t, 0.0, None)
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    @classmethod
    def symmetric(cls, success: float) -> "JointDistribution":
        """Uniform input through a binary symmetric channel."""
        return cls(np.array([[success, 1 - success], [1 - success, success]]) / 2)


def mutual_information(j) -> float:
    t = j.table if isinstance(j, JointDistribution) else JointDistribution(j).table
    i = entropy(t.sum(axis=1)) + entropy(t.sum(axis=0)) - entropy(t)
    if i < -1e-12:
        raise ContractError(f"negative mutual information {i!r}")
    return max(i, 0.0)


def bsc_information(xi: float) -> float:
    """I(X;Z) for uniform X through a symmetric channel of bias ``xi``."""
    return 1.0 - binary_entropy((1.0 + xi) / 2.0)


def evans_schulman_bound(xi: float) -> float:
    """Upper bound xi^2 on information surviving a symmetric channel of bias xi,
    relative to one bit carried upstream."""
    if xi < 0.0 or xi > 1.0:
        raise ContractError(f"bias {xi!r} outside [0, 1]")
    return xi * xi


class BiasParameters(NamedTuple):
    xi_a: float
    xi_b: float

    @property
    def sq_sum(self) -> float:
        return self.xi_a ** 2 + self.xi_b ** 2


class InformationGain(NamedTuple):
    i_a: float
    i_b: float
    total: float
    exceeds_bias_bound: bool
    exceeds_one_bit: bool
    guess_outcome_mismatch: bool


def information_gain(stats) -> InformationGain:
    """Per-channel and total information of a ``ChannelStats``.

    Flags are raised when the totals break the bias bound or the one-bit
    bound, or when the guess-based and outcome-based tables disagree.
    """
    i_a = mutual_information(stats.joint_a)
    i_b = mutual_information(stats.joint_b)
    total = i_a + i_b
    over_bias = False
    if stats.bias is not None:
        xa, xb = stats.bias
        over_bias = (
            i_a > evans_schulman_bound(xa) + BOUND_TOL
            or i_b > evans_schulman_bound(xb) + BOUND_TOL
            or total > xa ** 2 + xb ** 2 + BOUND_TOL
        )
    mismatch = False
    # empirical tables only agree in distribution, so compare exact runs only
    if stats.exact and stats.outcome_a is not None and stats.outcome_b is not None:
        mismatch = (
            abs(mutual_information(stats.outcome_a) - i_a) > BOUND_TOL
            or abs(mutual_information(stats.outcome_b) - i_b) > BOUND_TOL
        )
    return InformationGain(i_a, i_b, total, over_bias, total > 1.0 + BOUND_TOL, mismatch)


def es_margins(step: float = 1e-3) -> tuple[np.ndarray, np.ndarray]:
    """(xi grid, xi^2 - I_bsc(xi)) over [0, 1]."""
    n = int(round(1.0 / step))
    xi = np.linspace(0.0, 1.0, n + 1)
    margin = np.array([evans_schulman_bound(x) - bsc_information(x) for x in xi])
    return xi, margin
