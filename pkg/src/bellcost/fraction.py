"""Causal fraction: the least share of trials that needs the extra arrow.

A behaviour is split as ``(1 - q) * local + q * residual`` where the local
part is a mixture of deterministic strategy pairs ``(f, g)`` and the residual
only has to satisfy ``a _|_ y | x``.  Minimising ``q`` is a linear program.
The settings distribution never enters the constraints, so a single LP gives
the fraction for every full-support settings distribution and, since any
residual obeying ``a _|_ y | x`` is explainable by each single-arrow structure,
for all three structures at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .exceptions import CapacityError, IndependenceViolation, SolverError
from .models import (
    Structure,
    construct,
    construct_baseline,
    eval_statistics,
    function_label,
    function_table,
)
from .quantum import chsh_max
from .simplex import lp_solve
from .statistics import (
    EPS_FILE,
    Behaviour,
    SettingsDistribution,
    Statistics,
    check_assumption1,
    require_valid,
)

MAX_STRATEGY_PAIRS = 2**20
# Below this the residual component is treated as absent.
ZERO_FRACTION = 1e-12


@dataclass(frozen=True)
class StrategySpace:
    """All deterministic strategy pairs ``(f: X -> A, g: Y -> B)``.

    Pair ``k`` is ``(alice[k // len(bob)], bob[k % len(bob)])``.
    """

    alice: np.ndarray
    bob: np.ndarray

    @classmethod
    def for_dims(cls, dims):
        n_pairs = dims.nA**dims.nX * dims.nB**dims.nY
        if n_pairs > MAX_STRATEGY_PAIRS:
            raise CapacityError(
                f"{n_pairs} deterministic strategy pairs exceed the cap of {MAX_STRATEGY_PAIRS}"
            )
        return cls(function_table(dims.nA, dims.nX), function_table(dims.nB, dims.nY))

    def __len__(self):
        return len(self.alice) * len(self.bob)

    def pair(self, k):
        i, j = divmod(int(k), len(self.bob))
        return self.alice[i], self.bob[j]

    def label(self, k):
        f, g = self.pair(k)
        return f"{function_label(f)}|{function_label(g)}"

    def incidence(self, shape):
        """Sparse 0/1 matrix mapping strategy weights to behaviour entries ``[a, b, x, y]``."""
        nA, nB, nX, nY = shape
        n_f, n_g = len(self.alice), len(self.bob)
        k = np.arange(n_f * n_g)
        fi, gi = np.divmod(k, n_g)
        rows, cols = [], []
        for x in range(nX):
            a = self.alice[fi, x]
            for y in range(nY):
                b = self.bob[gi, y]
                rows.append(((a * nB + b) * nX + x) * nY + y)
                cols.append(k)
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        return sp.csc_matrix(
            (np.ones(rows.size), (rows, cols)), shape=(nA * nB * nX * nY, n_f * n_g)
        )


@dataclass(frozen=True, eq=False)
class FractionResult:
    """Optimal split of a behaviour into local and residual parts.

    ``local_weights`` has one entry per strategy pair and sums to ``1 - q``;
    ``residual`` is the sub-normalised tensor ``[a, b, x, y]`` whose entries
    sum to ``q`` for every setting pair.  ``dual`` holds the optimal LP
    multipliers of the reproduction constraints, so that
    ``1 - q = -(dual * P).sum()`` while ``-dual`` is non-negative and at least
    one on every deterministic pair.  ``chsh_bound`` is the lower bound
    ``max(0, (S - 2) / 2)`` from the best CHSH variant and is only set for
    two-setting, two-outcome behaviours.
    """

    q: float
    local_weights: np.ndarray
    residual: np.ndarray
    strategies: StrategySpace
    dual: np.ndarray
    chsh_bound: float | None = None
    status: str = "solved"
    iterations: int = 0
    lp_optimum: float = field(default=float("nan"), repr=False)

    def local_part(self):
        """Unnormalised local component ``sum_k w_k delta_{a=f_k(x)} delta_{b=g_k(y)}``."""
        shape = self.residual.shape
        return (self.strategies.incidence(shape) @ self.local_weights).reshape(shape)

    def support(self, threshold=0.0):
        return np.nonzero(self.local_weights > threshold)[0]

    def to_dict(self):
        weights = {
            self.strategies.label(k): float(self.local_weights[k]) for k in self.support()
        }
        doc = {
            "q": self.q,
            "status": self.status,
            "local_weights": weights,
            "residual": self.residual.transpose(2, 3, 0, 1).tolist(),
        }
        if self.chsh_bound is not None:
            doc["dual_certificate"] = self.chsh_bound
        return doc


def chsh_certificate(behaviour):
    """Lower bound on the causal fraction from the eight CHSH inequalities."""
    return max(0.0, (chsh_max(behaviour) - 2.0) / 2.0)


def fraction_lp(behaviour, strategies=None, marginal_rows=False):
    """Equality-form LP ``(c, A_eq, b_eq)`` whose optimum plus one is the fraction.

    Variables are the strategy weights ``w`` and the residual
    ``n[a, b, x, y]``; rows enforce ``M w + n = P``.  The residual condition
    ``sum_b n[a, b, x, y] = m[a, x]`` is implied by these rows whenever ``P``
    itself satisfies ``a _|_ y | x``, because every deterministic pair does.
    With ``marginal_rows=True`` it is added explicitly together with the
    variables ``m[a, x]``; the optimum is the same but the LP is larger and
    rank deficient.
    """
    shape = behaviour.p.shape
    nA, nB, nX, nY = shape
    if strategies is None:
        strategies = StrategySpace.for_dims(behaviour.dims)
    M = strategies.incidence(shape)
    n_w, n_cells = M.shape[1], M.shape[0]
    c = np.r_[-np.ones(n_w), np.zeros(n_cells)]
    if not marginal_rows:
        A_eq = sp.hstack([M, sp.identity(n_cells, format="csc")], format="csc")
        return c, A_eq, behaviour.p.ravel().copy()

    n_m = nA * nX
    # sum_b n[a, b, x, y]: row (a, x, y), column of n[a, b, x, y]
    a, b, x, y = np.unravel_index(np.arange(n_cells), shape)
    marg_rows = (a * nX + x) * nY + y
    n_marg = nA * nX * nY
    S = sp.csc_matrix((np.ones(n_cells), (marg_rows, np.arange(n_cells))), shape=(n_marg, n_cells))
    # -m[a, x] in rows (a, x, y) for every y
    ra, rx, _ = np.unravel_index(np.arange(n_marg), (nA, nX, nY))
    Mm = sp.csc_matrix((-np.ones(n_marg), (np.arange(n_marg), ra * nX + rx)), shape=(n_marg, n_m))
    A_eq = sp.vstack(
        [
            sp.hstack([M, sp.identity(n_cells, format="csc"), sp.csc_matrix((n_cells, n_m))]),
            sp.hstack([sp.csc_matrix((n_marg, n_w)), S, Mm]),
        ],
        format="csc",
    )
    b_eq = np.r_[behaviour.p.ravel(), np.zeros(n_marg)]
    return np.r_[c, np.zeros(n_m)], A_eq, b_eq


def causal_fraction(behaviour, tol=EPS_FILE, **solver_options):
    """Minimal weight ``q`` of the non-local part of ``behaviour``.

    ``behaviour`` may be a :class:`Behaviour` or :class:`Statistics`; its
    rows must be normalised and ``P(a | x, y)`` must not depend on ``y``
    (both within ``tol``).
    """
    if isinstance(behaviour, Statistics):
        behaviour = behaviour.behaviour
    require_valid(behaviour, tol)
    report = check_assumption1(behaviour, tol)
    if not report.alice_ok:
        a, x, y1, y2 = report.alice_witness
        raise IndependenceViolation(
            f"P(a={a}|x={x},y) depends on y (y={y1} vs y={y2}, deviation "
            f"{report.alice_signalling:.3g}); the causal fraction is undefined"
        )
    strategies = StrategySpace.for_dims(behaviour.dims)
    c, A_eq, b_eq = fraction_lp(behaviour, strategies)
    try:
        sol = lp_solve(c, A_eq, b_eq, **solver_options)
    except SolverError as exc:
        if exc.code == "infeasible":
            raise SolverError(f"fraction LP reported infeasible on a valid input: {exc}") from exc
        raise

    n_w = len(strategies)
    weights = np.clip(sol.x[:n_w], 0.0, None)
    shape = behaviour.p.shape
    local = (strategies.incidence(shape) @ weights).reshape(shape)
    residual = np.clip(behaviour.p - local, 0.0, None)
    q = float(min(max(1.0 - weights.sum(), 0.0), 1.0))
    dual = sol.dual[: behaviour.p.size].reshape(shape)
    bound = chsh_certificate(behaviour) if behaviour.dims.shape == (2, 2, 2, 2) else None
    return FractionResult(
        q=q,
        local_weights=weights,
        residual=residual,
        strategies=strategies,
        dual=dual,
        chsh_bound=bound,
        iterations=sol.iterations,
        lp_optimum=sol.optimum,
    )


@dataclass(frozen=True, eq=False)
class FrugalDecomposition:
    """Statistics split into a baseline part and a part needing the extra arrow.

    ``residual`` and ``residual_model`` are ``None`` when ``q`` vanishes;
    ``local`` and ``local_model`` are ``None`` when ``q`` is one.
    """

    q: float
    target: Structure
    local: Statistics | None
    residual: Statistics | None
    local_model: object | None
    residual_model: object | None
    fraction: FractionResult
    settings: SettingsDistribution

    def mixture(self):
        """Statistics of the per-trial mixture of the two models."""
        p = np.zeros(self.fraction.residual.shape)
        if self.local_model is not None:
            p += (1 - self.q) * eval_statistics(self.local_model).behaviour.p
        if self.residual_model is not None:
            p += self.q * eval_statistics(self.residual_model).behaviour.p
        return Statistics(Behaviour(p), self.settings)


def frugal_decomposition(stats, target, tol=EPS_FILE, fraction=None):
    """Split ``stats`` into a baseline model and a ``target``-structure model.

    ``fraction`` may carry a precomputed :class:`FractionResult` for the same
    behaviour.  Both components inherit ``stats.settings``.
    """
    target = Structure.parse(target)
    if target is Structure.BASELINE:
        raise ValueError("target must be one of nl, r, nf")
    if isinstance(stats, Behaviour):
        stats = Statistics.with_uniform_settings(stats)
    report = check_assumption1(stats, tol)
    if not report.passed:
        raise IndependenceViolation(
            f"statistics violate a _|_ y | x or x _|_ y (deviations "
            f"{report.alice_signalling:.3g}, {report.settings_dependence:.3g})"
        )
    if fraction is None:
        fraction = causal_fraction(stats.behaviour, tol)
    q = fraction.q
    dims = stats.dims

    local_stats = local_model = None
    if q < 1.0 - ZERO_FRACTION:
        support = fraction.support()
        w = fraction.local_weights[support]
        i, j = np.divmod(support, len(fraction.strategies.bob))
        local_model = construct_baseline(
            dims, fraction.strategies.alice[i], fraction.strategies.bob[j], w, stats.settings
        )
        local_stats = Statistics(
            Behaviour(fraction.local_part() / fraction.local_weights.sum()), stats.settings
        )

    residual_stats = residual_model = None
    if q > ZERO_FRACTION:
        n = fraction.residual
        norm = n.sum(axis=(0, 1), keepdims=True)
        residual_stats = Statistics(Behaviour(n / norm), stats.settings)
        # Normalising by q magnifies the absolute errors by 1/q.
        residual_model = construct(target, residual_stats, tol=max(tol, tol / q))
    return FrugalDecomposition(
        q=q,
        target=target,
        local=local_stats,
        residual=residual_stats,
        local_model=local_model,
        residual_model=residual_model,
        fraction=fraction,
        settings=stats.settings,
    )
