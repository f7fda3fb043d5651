"""Dense revised primal simplex for small equality-form linear programs.

Solves ``min c @ x  s.t.  A @ x = b,  x >= 0``.  ``A`` may be a dense array
or any :mod:`scipy.sparse` matrix; the basis inverse is always dense, so
the number of rows should stay in the hundreds.

Phase I starts from unit columns already present in ``A`` and adds
artificial variables for the remaining rows.  Rows whose artificial cannot be
pivoted out after Phase I are linearly redundant and are dropped (their dual
value is reported as zero).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .exceptions import Infeasible, NonConvergence, Unbounded

log = logging.getLogger(__name__)

PIVOT_RULES = ("devex", "dantzig", "bland")


@dataclass(frozen=True)
class LPResult:
    optimum: float
    x: np.ndarray
    dual: np.ndarray
    iterations: int
    basis: tuple
    residual: float
    gap: float
    redundant_rows: tuple = ()


class _Tableau:
    """Revised simplex state over the column set ``[A | artificials]``."""

    def __init__(self, A, b, basis, n_struct, pivot_rule, tol, refactor_every, max_degenerate=50):
        self.A = A  # csc, m x (n_struct + n_art)
        self.b = b
        self.basis = list(basis)
        self.n_struct = n_struct
        self.rule = pivot_rule
        self.tol = tol
        self.refactor_every = refactor_every
        self.max_degenerate = max_degenerate
        self.iterations = 0
        self.refactor()

    def column(self, j):
        return self.A[:, [j]].toarray().ravel()

    def refactor(self):
        B = self.A[:, self.basis].toarray()
        self.Binv = np.linalg.inv(B)
        self.xB = self.Binv @ self.b
        self.since_refactor = 0

    def run(self, cost, allowed, max_iter):
        """Pivot until optimal for ``cost`` over the columns flagged in ``allowed``."""
        n = self.A.shape[1]
        AT = self.A.T.tocsr()
        in_basis = np.zeros(n, dtype=bool)
        in_basis[self.basis] = True
        weights = np.ones(n)
        degenerate_run = 0
        reduced = None
        while True:
            if reduced is None or self.since_refactor == 0:
                y = cost[self.basis] @ self.Binv
                reduced = cost - AT @ y
            candidates = allowed & ~in_basis & (reduced < -self.tol)
            if not candidates.any():
                # Confirm optimality on freshly computed reduced costs.
                y = cost[self.basis] @ self.Binv
                reduced = cost - AT @ y
                candidates = allowed & ~in_basis & (reduced < -self.tol)
                if not candidates.any():
                    return y
            if self.iterations >= max_iter:
                raise NonConvergence(f"simplex did not converge within {max_iter} iterations")
            # Long runs of degenerate pivots switch to Bland's rule, which
            # cannot cycle; any strictly improving step switches back.
            if self.rule == "bland" or degenerate_run > self.max_degenerate:
                enter = int(np.argmax(candidates))
            elif self.rule == "dantzig":
                enter = int(np.argmin(np.where(candidates, reduced, 0.0)))
            else:
                score = np.where(candidates, reduced * reduced / weights, 0.0)
                enter = int(np.argmax(score))
            d = self.Binv @ self.column(enter)
            rows = np.nonzero(d > self.tol)[0]
            if rows.size == 0:
                raise Unbounded("objective is unbounded below")
            ratios = self.xB[rows] / d[rows]
            best = ratios.min()
            ties = rows[ratios <= best + self.tol * max(1.0, abs(best))]
            # Bland: among tied rows the basic variable with the smallest index leaves.
            leave = int(ties[np.argmin([self.basis[r] for r in ties])])
            step = max(self.xB[leave] / d[leave], 0.0)
            degenerate_run = degenerate_run + 1 if step <= self.tol else 0

            piv = d[leave]
            alpha = AT @ self.Binv[leave]  # pivot row of B^-1 A
            r_enter = reduced[enter]
            reduced = reduced - (r_enter / piv) * alpha
            old = self.basis[leave]
            reduced[old] = -r_enter / piv
            reduced[enter] = 0.0
            if self.rule == "devex":
                ratio2 = (alpha / piv) ** 2
                w_enter = weights[enter]
                np.maximum(weights, ratio2 * w_enter, out=weights)
                weights[old] = max(w_enter / piv**2, 1.0)
                if weights.max() > 1e8:
                    weights[:] = 1.0

            in_basis[old] = False
            self.pivot(leave, enter, d)
            in_basis[enter] = True
            self.iterations += 1

    def pivot(self, leave, enter, d):
        self.basis[leave] = enter
        self.since_refactor += 1
        if self.since_refactor >= self.refactor_every:
            self.refactor()
        else:
            piv = d[leave]
            row = self.Binv[leave] / piv
            self.Binv -= np.outer(d, row)
            self.Binv[leave] = row
            theta = self.xB[leave] / piv
            self.xB -= theta * d
            self.xB[leave] = theta

    def drop_row(self, row, position):
        keep = np.ones(self.A.shape[0], dtype=bool)
        keep[row] = False
        self.A = self.A[keep]
        self.b = self.b[keep]
        del self.basis[position]
        self.refactor()
        return keep


def _unit_columns(A, m):
    """Map row -> a column of ``A`` equal to a positive multiple of that unit vector."""
    csc = A.tocsc()
    nnz = np.diff(csc.indptr)
    found = {}
    for j in np.nonzero(nnz == 1)[0]:
        k = csc.indptr[j]
        r = int(csc.indices[k])
        if csc.data[k] > 0 and r not in found:
            found[r] = (int(j), float(csc.data[k]))
    return found


def lp_solve(c, A_eq, b_eq, *, max_iter=10**6, tol=1e-9, pivot_rule="devex", refactor_every=64, max_degenerate=50):
    """Solve ``min c @ x`` subject to ``A_eq @ x = b_eq`` and ``x >= 0``.

    Returns an :class:`LPResult` whose ``dual`` satisfies
    ``c - A_eq.T @ dual >= -tol`` and ``b_eq @ dual == optimum`` up to
    ``tol``.  Raises :class:`Infeasible`, :class:`Unbounded` or
    :class:`NonConvergence`.  Output is a deterministic function of the
    input.
    """
    if pivot_rule not in PIVOT_RULES:
        raise ValueError(f"pivot_rule must be one of {PIVOT_RULES}")
    c = np.asarray(c, dtype=float).ravel()
    b = np.asarray(b_eq, dtype=float).ravel()
    A = sp.csc_matrix(A_eq, dtype=float)
    m, n = A.shape
    if c.shape != (n,) or b.shape != (m,):
        raise ValueError(f"shape mismatch: c {c.shape}, A {A.shape}, b {b.shape}")
    if not (np.all(np.isfinite(c)) and np.all(np.isfinite(b)) and np.all(np.isfinite(A.data))):
        raise ValueError("LP data must be finite")

    flip = np.where(b < 0, -1.0, 1.0)
    A = sp.csc_matrix(sp.diags(flip) @ A)
    b = b * flip

    units = _unit_columns(A, m)
    basis = []
    art_rows = []
    for r in range(m):
        if r in units and units[r][1] == 1.0:
            basis.append(units[r][0])
        else:
            art_rows.append(r)
            basis.append(n + len(art_rows) - 1)
    n_art = len(art_rows)
    art = sp.csc_matrix(
        (np.ones(n_art), (art_rows, np.arange(n_art))), shape=(m, n_art)
    )
    T = _Tableau(
        sp.hstack([A, art], format="csc"), b, basis, n, pivot_rule, tol, refactor_every, max_degenerate
    )

    allowed = np.ones(n + n_art, dtype=bool)
    rows_alive = np.arange(m)
    if n_art:
        phase1 = np.r_[np.zeros(n), np.ones(n_art)]
        T.run(phase1, allowed, max_iter)
        infeas = float(phase1[T.basis] @ T.xB)
        if infeas > tol * max(1.0, np.abs(b).max(initial=0.0)):
            raise Infeasible(f"no feasible point (phase I residual {infeas:.3g})")
        allowed[n:] = False
        # Drive remaining artificials out of the basis or drop their rows.
        r = 0
        while r < len(T.basis):
            if T.basis[r] >= n:
                row = np.asarray(T.A[:, :n].T @ T.Binv[r]).ravel()
                row[[j for j in T.basis if j < n]] = 0.0
                cand = np.nonzero(np.abs(row) > 1e-7)[0]
                if cand.size:
                    enter = int(cand[0])
                    T.pivot(r, enter, T.Binv @ T.column(enter))
                    T.refactor()
                else:
                    # The artificial's own row is a combination of the others.
                    own = int(T.A[:, [T.basis[r]]].indices[0])
                    keep = T.drop_row(own, r)
                    rows_alive = rows_alive[keep]
                    continue
            r += 1

    cost = np.r_[c, np.zeros(n_art)]
    y_alive = T.run(cost, allowed, max_iter)
    T.refactor()

    x = np.zeros(n)
    xB = np.linalg.solve(T.A[:, T.basis].toarray(), T.b)
    for j, v in zip(T.basis, xB):
        if j < n:
            x[j] = max(v, 0.0)
        elif abs(v) > tol:
            raise NonConvergence("artificial variable left in the final basis")
    y = np.zeros(m)
    y[rows_alive] = y_alive
    y *= flip

    A0 = sp.csc_matrix(A_eq, dtype=float)
    b0 = np.asarray(b_eq, dtype=float).ravel()
    residual = float(np.abs(A0 @ x - b0).max(initial=0.0))
    optimum = float(c @ x)
    gap = abs(optimum - float(b0 @ y))
    if residual > tol or gap > tol:
        raise NonConvergence(
            f"inaccurate solution: constraint residual {residual:.3g}, duality gap {gap:.3g}"
        )
    redundant = tuple(int(r) for r in np.setdiff1d(np.arange(m), rows_alive))
    log.debug("simplex: %d iterations, %d redundant rows", T.iterations, len(redundant))
    return LPResult(
        optimum=optimum,
        x=x,
        dual=y,
        iterations=T.iterations,
        basis=tuple(int(j) for j in T.basis),
        residual=residual,
        gap=gap,
        redundant_rows=redundant,
    )
