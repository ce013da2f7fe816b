"""Monte Carlo error estimation: autocorrelation-aware standard errors.

Particles produced by a single thinned chain (or by overlapping coding
windows) are serially correlated, so naive sd/sqrt(n) understates the error.
:func:`effective_sample_size` implements Geyer's initial positive sequence
estimator on the value series; standard errors divide by sqrt(ESS) instead
of sqrt(n).
"""

from __future__ import annotations

import os

import numpy as np

from .errors import InputError

__all__ = [
    "effective_sample_size",
    "mean_with_se",
    "combined_se",
    "spawn_seeds",
    "resolve_workers",
]

WORKERS_ENV = "CMS_WORKERS"


def _autocorrelation(x: np.ndarray) -> np.ndarray:
    n = x.shape[0]
    xc = x - x.mean()
    var = float(np.dot(xc, xc))
    if var <= 0.0:
        return np.zeros(n)
    m = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(xc, m)
    acov = np.fft.irfft(f * np.conj(f), m)[:n].real
    return acov / var


def effective_sample_size(x: np.ndarray) -> float:
    """ESS of a scalar series via the initial positive sequence.

    Sums adjacent autocorrelation pairs until the first non-positive pair;
    tau = 2 * sum(pairs) - 1.  Constant or very short series get ESS = n.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if n < 4 or np.ptp(x) == 0.0:
        return float(max(n, 1))
    rho = _autocorrelation(x)
    pair_sum = 0.0
    for m in range(0, n // 2):
        g = rho[2 * m] + rho[2 * m + 1]
        if g <= 0.0:
            break
        pair_sum += g
    tau = max(2.0 * pair_sum - 1.0, 1.0)
    return float(min(max(n / tau, 1.0), n))


def mean_with_se(values: np.ndarray, weights: np.ndarray | None = None,
                 serial: bool = True) -> tuple[float, float, float]:
    """Weighted mean, standard error, and the effective sample size used.

    With ``serial=True`` (chain-ordered, equal-weight particles) the variance
    is divided by the Geyer ESS; otherwise by the usual weighted sample size
    ``(sum w)^2 / sum w^2``.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    if n == 0:
        raise InputError("cannot average an empty sample")
    if np.ptp(values) == 0.0:
        # constant integrand: the mean is exact and carries no Monte Carlo error
        return float(values[0]), 0.0, float(n)
    if weights is None:
        weights = np.full(n, 1.0 / n)
    else:
        weights = np.asarray(weights, dtype=float)
        weights = weights / weights.sum()
    mean = float(np.dot(weights, values))
    var = float(np.dot(weights, (values - mean) ** 2))
    equal = bool(np.allclose(weights, 1.0 / n))
    if serial and equal:
        n_eff = effective_sample_size(values)
    else:
        n_eff = 1.0 / float(np.dot(weights, weights))
    se = float(np.sqrt(var / n_eff)) if n_eff > 0 else float("inf")
    return mean, se, n_eff


def combined_se(*ses: float) -> float:
    return float(np.sqrt(sum(s * s for s in ses)))


def spawn_seeds(master_seed: int, n: int) -> list[int]:
    """Independent child seeds derived from a master seed."""
    ss = np.random.SeedSequence(master_seed)
    return [int(child.generate_state(1)[0]) for child in ss.spawn(n)]


def resolve_workers(requested: int | None = None) -> int:
    """Worker count: CMS_WORKERS env overrides, 0/None means all cores.

    All estimators merge order-insensitively (sums, maxima, per-chunk seeded
    streams), so results do not depend on this value.
    """
    env = os.environ.get(WORKERS_ENV)
    if env is not None:
        try:
            requested = int(env)
        except ValueError:
            raise InputError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    if requested is None or requested == 0:
        return os.cpu_count() or 1
    if requested < 0:
        raise InputError(f"worker count must be >= 0, got {requested}")
    return requested
