"""Entropy of the symbol process.

Two estimators of the same quantity:

* :func:`entropy_formula` integrates ``-sum_e p_e log p_e`` against a
  particle estimate of the invariant measure (with the 0 log 0 = 0
  convention), which equals the Kolmogorov-Sinai entropy of the stationary
  symbol shift.
* :func:`entropy_rate_empirical` never looks at the state space: it estimates
  the entropy rate of the raw symbol stream from block-entropy differences.

Agreement of the two within Monte Carlo error is the headline consistency
check; they share no code path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .chain import EmpiricalMeasure
from .errors import InputError
from .systems import MarkovSystem

__all__ = [
    "EntropyEstimate",
    "BlockEntropyCurve",
    "entropy_formula",
    "block_entropy",
    "entropy_rate_empirical",
]

MAX_BLOCK_LENGTH = 8
MIN_BLOCKS_PER_CELL = 10


@dataclass(frozen=True)
class EntropyEstimate:
    value: float
    std_error: float
    n_samples: int
    method: str  # "formula" | "block_rate"
    units: str = "nats"

    def in_units(self, units: str) -> "EntropyEstimate":
        if units == self.units:
            return self
        if units == "bits" and self.units == "nats":
            f = 1.0 / math.log(2.0)
        elif units == "nats" and self.units == "bits":
            f = math.log(2.0)
        else:
            raise InputError(f"unknown units {units!r}")
        return replace(self, value=self.value * f, std_error=self.std_error * f,
                       units=units)


@dataclass(frozen=True)
class BlockEntropyCurve:
    """Plug-in and Miller-Madow block entropies H_1..H_n (nats).

    All orders are marginals of one n-block count table (drop trailing
    symbols), so H_k >= H_{k-1} and H_k <= H_{k-1} + log(alphabet) hold
    exactly, not just in expectation.
    """

    H: list[float]
    H_corrected: list[float]
    n_blocks: int
    alphabet_size: int


def entropy_formula(system: MarkovSystem, mu: EmpiricalMeasure) -> EntropyEstimate:
    """Particle average of the local entropy ``-sum_e p_e log p_e``.

    The standard error is the weighted sample error of the integrand,
    ESS-corrected when the particles are a thinned chain, so a constant
    integrand reports exactly zero error.
    """
    g = system.entropy_integrand(mu.vertices - 1, mu.coords)
    value, se, _ = mu.mean_with_se(g)
    return EntropyEstimate(value=value, std_error=se,
                           n_samples=mu.n_particles, method="formula")


def _encode_blocks(symbols: np.ndarray, n: int, alphabet: np.ndarray) -> tuple[np.ndarray, int]:
    idx = np.searchsorted(alphabet, symbols)
    idx = np.clip(idx, 0, alphabet.shape[0] - 1)
    if not np.all(alphabet[idx] == symbols):
        raise InputError("symbols outside the declared alphabet")
    a = alphabet.shape[0]
    t = symbols.shape[0]
    n_blocks = t - n + 1
    codes = idx[:n_blocks].astype(np.int64).copy()
    for j in range(1, n):
        codes *= a
        codes += idx[j:j + n_blocks]
    return codes, a


def _entropy_of_counts(counts: np.ndarray, total: int) -> tuple[float, float]:
    h = math.log(total) - float(np.dot(counts, np.log(counts))) / total
    h = max(h, 0.0)
    mm = h + (counts.shape[0] - 1) / (2.0 * total)
    return h, mm


def block_entropy(symbols: Sequence[int], n: int,
                  alphabet: Optional[Sequence[int]] = None) -> BlockEntropyCurve:
    """Shannon entropies of overlapping k-block distributions, k = 1..n.

    Requires ``n <= 8`` and at least ``10 * A**n`` blocks for alphabet size A
    (the count table must be well populated); the error message states the
    required length.
    """
    symbols = np.asarray(symbols, dtype=np.int64)
    if n < 1:
        raise InputError("n must be >= 1")
    if n > MAX_BLOCK_LENGTH:
        raise InputError(f"n={n} exceeds the hard cap {MAX_BLOCK_LENGTH}")
    if alphabet is None:
        alphabet = np.unique(symbols)
    else:
        alphabet = np.unique(np.asarray(alphabet, dtype=np.int64))
    a = int(alphabet.shape[0])
    n_blocks = symbols.shape[0] - n + 1
    need = MIN_BLOCKS_PER_CELL * a ** n
    if n_blocks < need:
        raise InputError(
            f"stream of {symbols.shape[0]} symbols is too short for {n}-blocks "
            f"over a {a}-symbol alphabet: need at least {need + n - 1} symbols"
        )
    codes, a = _encode_blocks(symbols, n, alphabet)
    H: list[float] = []
    Hc: list[float] = []
    for k in range(n, 0, -1):
        if k < n:
            codes //= a  # drop the trailing symbol: marginal over one step
        _, counts = np.unique(codes, return_counts=True)
        h, mm = _entropy_of_counts(counts, n_blocks)
        H.append(h)
        Hc.append(mm)
    H.reverse()
    Hc.reverse()
    return BlockEntropyCurve(H=H, H_corrected=Hc, n_blocks=n_blocks, alphabet_size=a)


def entropy_rate_empirical(symbols: Sequence[int], n_max: int,
                           alphabet: Optional[Sequence[int]] = None) -> EntropyEstimate:
    """Block-difference entropy rate H_{n_max} - H_{n_max-1}.

    The value uses Miller-Madow-corrected block entropies (the plug-in
    difference is biased low by about half the table occupancy over the
    sample count, which would dominate the tiny standard error on
    constant-probability streams); the raw difference is recoverable from
    :func:`block_entropy`.  The standard error treats the n_max-block counts
    as a multinomial and applies the delta method to the conditional
    log-probabilities.
    """
    symbols = np.asarray(symbols, dtype=np.int64)
    if n_max < 1:
        raise InputError("n_max must be >= 1")
    curve = block_entropy(symbols, n_max, alphabet)
    if n_max == 1:
        value = curve.H_corrected[0]
    else:
        value = curve.H_corrected[-1] - curve.H_corrected[-2]

    if alphabet is None:
        alphabet = np.unique(symbols)
    codes, a = _encode_blocks(symbols, n_max, np.unique(np.asarray(alphabet, np.int64)))
    n_blocks = codes.shape[0]
    uniq, counts = np.unique(codes, return_counts=True)
    if n_max == 1:
        g = -np.log(counts / n_blocks)
    else:
        prefix = uniq // a
        p_uniq = np.unique(prefix)
        pos = np.searchsorted(p_uniq, prefix)
        parent = np.zeros(p_uniq.shape[0], dtype=np.int64)
        np.add.at(parent, pos, counts)
        g = -np.log(counts / parent[pos])
    p = counts / n_blocks
    mean_g = float(np.dot(p, g))
    var_g = float(np.dot(p, (g - mean_g) ** 2))
    se = math.sqrt(var_g / n_blocks)
    return EntropyEstimate(value=float(value), std_error=se,
                           n_samples=n_blocks, method="block_rate")
