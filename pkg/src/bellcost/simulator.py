"""Monte Carlo run of the frugal protocol.

Each trial flips a coin with bias ``q``.  Heads: the trial is produced by the
model with the extra arrow; tails: by the baseline model.  The collected
outcomes are compared with the target statistics.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from .fraction import frugal_decomposition
from .models import sample_trials
from .quantum import chsh_value
from .statistics import (
    EPS_FILE,
    Behaviour,
    Cardinalities,
    SettingsDistribution,
    Statistics,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EmpiricalStatistics:
    """Relative frequencies with the setting pairs that were never observed.

    Behaviour rows of unobserved setting pairs are uniform and flagged in
    ``unreliable`` (indexed ``[x, y]``).
    """

    statistics: Statistics
    counts: np.ndarray
    unreliable: np.ndarray

    @property
    def n(self):
        return int(self.counts.sum())


def _counts(trials, dims):
    a, b, x, y = (trials[:, i] for i in range(4))
    flat = ((a * dims.nB + b) * dims.nX + x) * dims.nY + y
    return np.bincount(flat, minlength=int(np.prod(dims.shape))).reshape(dims.shape)


def estimate_statistics(trials, dims=None):
    """Empirical ``P(x, y)`` and ``P(a, b | x, y)`` from ``(a, b, x, y)`` records.

    Extra columns (such as the hidden variable) are ignored.  ``dims``
    defaults to the smallest cardinalities covering the data.
    """
    trials = np.asarray(trials, dtype=np.intp)
    if trials.size == 0:
        raise ValueError("cannot estimate statistics from an empty trial list")
    trials = np.atleast_2d(trials)[:, :4]
    if trials.min() < 0:
        raise ValueError("trial indices must be non-negative")
    if dims is None:
        dims = Cardinalities(*(int(v) + 1 for v in trials.max(axis=0)))
    elif np.any(trials.max(axis=0) >= np.array(dims.shape)):
        raise ValueError(f"trial indices exceed the cardinalities {dims.shape}")
    counts = _counts(trials, dims)
    per_setting = counts.sum(axis=(0, 1))
    unreliable = per_setting == 0
    uniform = 1.0 / (dims.nA * dims.nB)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(unreliable, uniform, counts / np.where(unreliable, 1, per_setting))
    settings = SettingsDistribution(per_setting / per_setting.sum())
    return EmpiricalStatistics(Statistics(Behaviour(p), settings), counts, unreliable)


def chi_square(counts, expected_joint):
    """Pearson statistic and p-value of ``counts`` against joint probabilities.

    Cells with zero expected probability are excluded; any count landing in
    one gives a p-value of zero.
    """
    n = counts.sum()
    expected = n * expected_joint
    mask = expected_joint > 0
    if np.any(counts[~mask] > 0):
        return float("inf"), 0.0
    f_obs = counts[mask].astype(float)
    f_exp = expected[mask]
    f_exp = f_exp * (f_obs.sum() / f_exp.sum())
    if f_obs.size < 2:
        return 0.0, 1.0
    result = sps.chisquare(f_obs, f_exp)
    return float(result.statistic), float(result.pvalue)


@dataclass(frozen=True, eq=False)
class SimulationReport:
    target: str
    seed: int
    n: int
    q: float
    arrow_uses: int
    counts: np.ndarray
    empirical: EmpiricalStatistics
    max_residual: float
    chi2: float
    p_value: float
    chsh: float | None = None

    @property
    def arrow_usage(self):
        return self.arrow_uses / self.n

    def to_dict(self):
        doc = {
            "target": self.target,
            "seed": self.seed,
            "n": self.n,
            "q": self.q,
            "empirical_q": self.arrow_usage,
            "arrow_uses": self.arrow_uses,
            "counts": self.counts.transpose(2, 3, 0, 1).tolist(),
            "max_residual": self.max_residual,
            "chi2": self.chi2,
            "p_value": self.p_value,
            "unreliable_settings": self.empirical.unreliable.tolist(),
        }
        if self.chsh is not None:
            doc["empirical_chsh"] = self.chsh
        return doc


def run_frugal(stats, target, n, seed, tol=EPS_FILE, decomposition=None):
    """Simulate ``n`` trials of the frugal protocol for ``stats``.

    The seed feeds one :class:`numpy.random.SeedSequence` whose three spawned
    children drive the coin, the baseline model and the arrow model, so the
    report depends only on ``(stats, target, n, seed)``.
    """
    if n < 1:
        raise ValueError("need at least one trial")
    if decomposition is None:
        decomposition = frugal_decomposition(stats, target, tol)
    q = decomposition.q
    coin_ss, local_ss, arrow_ss = np.random.SeedSequence(seed).spawn(3)

    heads = np.random.default_rng(coin_ss).random(n) < q
    if decomposition.residual_model is None:
        heads[:] = False
    if decomposition.local_model is None:
        heads[:] = True
    k = int(heads.sum())

    trials = np.empty((n, 4), dtype=np.intp)
    if k:
        trials[heads] = sample_trials(
            decomposition.residual_model, k, np.random.default_rng(arrow_ss)
        )[:, :4]
    if n - k:
        trials[~heads] = sample_trials(
            decomposition.local_model, n - k, np.random.default_rng(local_ss)
        )[:, :4]

    dims = stats.dims
    empirical = estimate_statistics(trials, dims)
    observed = empirical.statistics.behaviour.p
    seen = ~empirical.unreliable
    max_residual = float(np.abs(observed - stats.behaviour.p)[:, :, seen].max(initial=0.0))
    chi2, p_value = chi_square(empirical.counts, stats.joint())
    chsh = chsh_value(empirical.statistics.behaviour) if dims.shape == (2, 2, 2, 2) else None
    log.info("frugal run: n=%d q=%.6f arrow usage=%.6f p=%.3g", n, q, k / n, p_value)
    return SimulationReport(
        target=decomposition.target.value,
        seed=int(seed),
        n=int(n),
        q=q,
        arrow_uses=k,
        counts=empirical.counts,
        empirical=empirical,
        max_residual=max_residual,
        chi2=chi2,
        p_value=p_value,
        chsh=chsh,
    )
