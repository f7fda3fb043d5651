"""Random generators and independent oracles shared by the test modules."""

import itertools

import numpy as np
from scipy.optimize import linprog

from bellcost.statistics import Behaviour, SettingsDistribution, Statistics


def random_one_way_behaviour(rng, shape, concentration=1.0):
    """``P(a|x) P(b|a,x,y)``: no signalling from Bob to Alice, arbitrary the other way."""
    nA, nB, nX, nY = shape
    pax = rng.dirichlet(np.full(nA, concentration), size=nX).T
    pb = rng.dirichlet(np.full(nB, concentration), size=(nA, nX, nY)).transpose(0, 3, 1, 2)
    return Behaviour(pax[:, None, :, None] * pb)


def random_product_settings(rng, nX, nY):
    return SettingsDistribution.product(rng.dirichlet(np.ones(nX)), rng.dirichlet(np.ones(nY)))


def random_statistics(rng, shape):
    return Statistics(random_one_way_behaviour(rng, shape), random_product_settings(rng, *shape[2:]))


def random_corpus(seed, size, axis_choices=(2, 3, 4)):
    rng = np.random.default_rng(seed)
    return [random_statistics(rng, tuple(rng.choice(axis_choices, size=4))) for _ in range(size)]


def brute_force_behaviour(model):
    """Statistics of a causal model by explicit loops over every index.

    Written independently of ``eval_statistics``: the NF case builds the full
    joint ``P(a, b, x, y, lam)`` and conditions on ``(x, y)`` numerically.
    """
    d = model.dims
    n = model.hidden.size
    tag = model.structure.value
    joint = np.zeros((d.nA, d.nB, d.nX, d.nY))
    for a, b, x, y, lam in itertools.product(
        range(d.nA), range(d.nB), range(d.nX), range(d.nY), range(n)
    ):
        pa = model.p_a[a, x, lam]
        pb = model.p_b[b, x, y, lam] if tag == "nl" else model.p_b[b, y, lam]
        if tag == "r":
            pl_px = model.p_lambda[lam, x] * model.p_x[x]
        elif tag == "nf":
            pl_px = model.p_lambda[lam] * model.p_x[x, lam]
        else:
            pl_px = model.p_lambda[lam] * model.p_x[x]
        joint[a, b, x, y] += pa * pb * pl_px * model.p_y[y]
    settings = joint.sum(axis=(0, 1))
    return joint / settings, settings


def deterministic_pairs(nA, nB, nX, nY):
    """All local deterministic behaviours, each as a 0/1 tensor, built with itertools."""
    out = []
    for f in itertools.product(range(nA), repeat=nX):
        for g in itertools.product(range(nB), repeat=nY):
            t = np.zeros((nA, nB, nX, nY))
            for x, y in itertools.product(range(nX), range(nY)):
                t[f[x], g[y], x, y] = 1.0
            out.append(t)
    return out


def mixture_feasible(p, q):
    """Is ``p = (1 - q) L + q N`` with ``L`` local and ``N`` one-way non-signalling?

    Independent membership LP solved with HiGHS: variables are convex weights
    over the deterministic vertices and the normalised residual ``N``.
    """
    nA, nB, nX, nY = p.shape
    verts = np.array([v.ravel() for v in deterministic_pairs(nA, nB, nX, nY)]).T
    n_v, n_c = verts.shape[1], p.size
    rows, rhs = [], []
    # (1 - q) L + q N = P
    rows.append(np.hstack([(1 - q) * verts, q * np.eye(n_c)]))
    rhs.append(p.ravel())
    # sum of vertex weights is one
    rows.append(np.r_[np.ones(n_v), np.zeros(n_c)][None, :])
    rhs.append([1.0])
    # N normalised per (x, y)
    idx = np.arange(n_c).reshape(p.shape)
    for x, y in itertools.product(range(nX), range(nY)):
        r = np.zeros(n_v + n_c)
        r[n_v + idx[:, :, x, y].ravel()] = 1.0
        rows.append(r[None, :])
        rhs.append([1.0])
    # sum_b N[a, b, x, y] equal across y
    for a, x, y in itertools.product(range(nA), range(nX), range(1, nY)):
        r = np.zeros(n_v + n_c)
        r[n_v + idx[a, :, x, y]] = 1.0
        r[n_v + idx[a, :, x, 0]] -= 1.0
        rows.append(r[None, :])
        rhs.append([0.0])
    res = linprog(
        np.zeros(n_v + n_c),
        A_eq=np.vstack(rows),
        b_eq=np.concatenate(rhs),
        bounds=(0, None),
        method="highs",
        # HiGHS presolve wrongly reports some of these systems infeasible.
        options={"presolve": False},
    )
    return res.status == 0


def grid_fraction(p, step=1e-4):
    """Smallest grid value of ``q`` for which the membership LP is feasible.

    Feasibility is monotone in ``q`` (shrink the local part, grow the
    residual), so the grid is searched by bisection over its indices.
    """
    n = int(round(1 / step))
    lo, hi = 0, n
    if mixture_feasible(p, 0.0):
        return 0.0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if mixture_feasible(p, mid * step):
            hi = mid
        else:
            lo = mid
    return hi * step
