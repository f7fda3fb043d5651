"""Causal Bayesian models of a Bell experiment.

Four structures are supported:

``BASELINE``  local, free and time-ordered hidden-variable model
``NL``        adds the arrow ``x -> b`` (parameter dependence)
``R``         adds the arrow ``x -> lambda`` (retrocausality)
``NF``        adds the arrow ``lambda -> x`` (measurement dependence)

Parameter tables are dense arrays with the conditioned-on variable last:

========  =======================  ==========================
table     shape                    structures
========  =======================  ==========================
p_a       ``[a, x, lam]``          all
p_b       ``[b, y, lam]``          BASELINE, R, NF
p_b       ``[b, x, y, lam]``       NL
p_lambda  ``[lam]``                BASELINE, NL, NF
p_lambda  ``[lam, x]``             R
p_x       ``[x]``                  BASELINE, NL, R
p_x       ``[x, lam]``             NF
p_y       ``[y]``                  all
========  =======================  ==========================

Hidden values are enumerated canonically.  A deterministic response function
``f: X -> A`` is the digit string ``f(0) f(1) ... f(nX-1)`` read as a base-nA
number with ``f(0)`` most significant; pairs ``(u, v)`` are ordered
lexicographically, i.e. index ``u * |V| + v``.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

import numpy as np

from .exceptions import CapacityError, DegenerateSetting, ParseError, StructureError
from .statistics import (
    EPS_EXACT,
    Behaviour,
    Cardinalities,
    SettingsDistribution,
    Statistics,
    alice_marginal,
    require_assumption1,
    require_valid,
)

MAX_HIDDEN = 2**20
_SAMPLE_CHUNK = 1 << 16


class Structure(str, enum.Enum):
    BASELINE = "baseline"
    NL = "nl"
    R = "r"
    NF = "nf"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(
                f"unknown structure {value!r}; choose from {[s.value for s in cls]}"
            ) from None


class HiddenKind(str, enum.Enum):
    FUNCTION = "function"  # f in A^X
    FUNCTION_SETTING = "function-setting"  # (f, x~)
    OUTCOME_SETTING = "outcome-setting"  # (a~, x~)
    OPAQUE = "opaque"


@dataclass(frozen=True)
class HiddenSpace:
    kind: HiddenKind
    size: int

    def __post_init__(self):
        object.__setattr__(self, "kind", HiddenKind(self.kind))
        if self.size < 1:
            raise StructureError(f"hidden space must be non-empty, got size {self.size}")

    @classmethod
    def for_dims(cls, kind, dims):
        kind = HiddenKind(kind)
        n_func = dims.nA**dims.nX
        size = {
            HiddenKind.FUNCTION: n_func,
            HiddenKind.FUNCTION_SETTING: n_func * dims.nX,
            HiddenKind.OUTCOME_SETTING: dims.nA * dims.nX,
        }.get(kind)
        if size is None:
            raise StructureError("opaque hidden spaces need an explicit size")
        return cls(kind, size)


def function_table(n_out, n_in):
    """All functions ``range(n_in) -> range(n_out)`` as rows, in canonical order.

    Raises :class:`CapacityError` above ``MAX_HIDDEN`` functions.
    """
    count = n_out**n_in
    if count > MAX_HIDDEN:
        raise CapacityError(f"{n_out}^{n_in} = {count} response functions exceed {MAX_HIDDEN}")
    idx = np.arange(count)
    table = np.empty((count, n_in), dtype=np.intp)
    for pos in range(n_in - 1, -1, -1):
        table[:, pos] = idx % n_out
        idx //= n_out
    return table


def function_label(row):
    return "".join(str(int(v)) if v < 10 else f"({int(v)})" for v in row)


@dataclass(frozen=True, eq=False)
class CausalModel:
    """A causal structure together with its full set of parameters."""

    structure: Structure
    dims: Cardinalities
    hidden: HiddenSpace
    p_a: np.ndarray
    p_b: np.ndarray
    p_lambda: np.ndarray
    p_x: np.ndarray
    p_y: np.ndarray
    tol: float = EPS_EXACT

    def __post_init__(self):
        object.__setattr__(self, "structure", Structure.parse(self.structure))
        for name in ("p_a", "p_b", "p_lambda", "p_x", "p_y"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        self._check()

    def _expected_shapes(self):
        d, n = self.dims, self.hidden.size
        tag = self.structure
        return {
            "p_a": (d.nA, d.nX, n),
            "p_b": (d.nB, d.nX, d.nY, n) if tag is Structure.NL else (d.nB, d.nY, n),
            "p_lambda": (n, d.nX) if tag is Structure.R else (n,),
            "p_x": (d.nX, n) if tag is Structure.NF else (d.nX,),
            "p_y": (d.nY,),
        }

    def _check(self):
        for name, shape in self._expected_shapes().items():
            arr = getattr(self, name)
            if arr.shape != shape:
                raise StructureError(
                    f"{self.structure.value} model: {name} has shape {arr.shape}, expected {shape}"
                )
            if not np.all(np.isfinite(arr)) or arr.min(initial=0.0) < -self.tol:
                raise StructureError(f"{name} has negative or non-finite entries")
            dev = np.abs(arr.sum(axis=0) - 1).max(initial=0.0)
            if dev > self.tol:
                raise StructureError(f"{name} is not normalised (max deviation {dev:.3g})")

    def setting_marginal(self):
        """Distribution of Alice's setting produced by the model."""
        if self.structure is Structure.NF:
            return self.p_x @ self.p_lambda
        return self.p_x


def eval_statistics(model):
    """Statistics generated by the model's product formula."""
    tag = model.structure
    if tag is Structure.BASELINE:
        p = np.einsum("axl,byl,l->abxy", model.p_a, model.p_b, model.p_lambda)
        settings = np.outer(model.p_x, model.p_y)
    elif tag is Structure.NL:
        p = np.einsum("axl,bxyl,l->abxy", model.p_a, model.p_b, model.p_lambda)
        settings = np.outer(model.p_x, model.p_y)
    elif tag is Structure.R:
        p = np.einsum("axl,byl,lx->abxy", model.p_a, model.p_b, model.p_lambda)
        settings = np.outer(model.p_x, model.p_y)
    else:
        px = model.p_x @ model.p_lambda
        zero = np.nonzero(px <= 0)[0]
        if zero.size:
            x = int(zero[0])
            raise DegenerateSetting(f"the model never selects setting x={x}", setting=x)
        # Bayes: P(lam | x) = P(x | lam) P(lam) / P(x)
        posterior = model.p_x * model.p_lambda[None, :] / px[:, None]
        p = np.einsum("axl,byl,xl->abxy", model.p_a, model.p_b, posterior)
        settings = np.outer(px, model.p_y)
    return Statistics(Behaviour(p), SettingsDistribution(settings))


def decompose_deterministic(pax):
    """Weights ``P_f`` over response functions reproducing ``P(a|x)``.

    ``pax`` is indexed ``[a, x]``.  The product form
    ``P_f = prod_x P(f(x) | x)`` is returned in canonical function order.
    """
    pax = np.asarray(pax, dtype=float)
    if pax.ndim != 2:
        raise StructureError(f"P(a|x) must be a 2-d table, got shape {pax.shape}")
    pax = pax / pax.sum(axis=0, keepdims=True)
    funcs = function_table(*pax.shape)
    return np.prod(pax[funcs, np.arange(pax.shape[1])], axis=1)


def _bob_conditional(p):
    """``P(b | a, x, y)`` indexed ``[a, b, x, y]``; uniform where ``P(a|x,y) = 0``."""
    denom = p.sum(axis=1, keepdims=True)
    n_b = p.shape[1]
    with np.errstate(invalid="ignore", divide="ignore"):
        cond = np.where(denom > 0, p / np.where(denom > 0, denom, 1.0), 1.0 / n_b)
    return cond


def _prepare(stats, tol):
    if isinstance(stats, Behaviour):
        stats = Statistics.with_uniform_settings(stats)
    require_valid(stats, tol)
    require_assumption1(stats, tol)
    pax = alice_marginal(stats.behaviour, tol)
    return stats, pax


def construct_nl(stats, tol=EPS_EXACT):
    """Parameter-dependence model (arrow ``x -> b``) reproducing ``stats``.

    The hidden variable is Alice's response function ``f``; Bob answers with
    ``P(b | a = f(x), x, y)``.
    """
    stats, pax = _prepare(stats, tol)
    d = stats.dims
    funcs = function_table(d.nA, d.nX)
    cond = _bob_conditional(stats.behaviour.p)
    xs = np.arange(d.nX)

    p_a = np.zeros((d.nA, d.nX, len(funcs)))
    p_a[funcs.T, xs[:, None], np.arange(len(funcs))[None, :]] = 1.0
    # cond[f(x), :, x, :] for every (x, f) -> [b, x, y, f]
    p_b = cond[funcs.T, :, xs[:, None], :].transpose(2, 0, 3, 1)
    return CausalModel(
        Structure.NL,
        d,
        HiddenSpace(HiddenKind.FUNCTION, len(funcs)),
        p_a,
        p_b,
        decompose_deterministic(pax),
        stats.settings.px,
        stats.settings.py,
    )


def construct_r(stats, tol=EPS_EXACT):
    """Retrocausal model (arrow ``x -> lambda``) reproducing ``stats``.

    The hidden variable ``(f, x~)`` carries a copy of Alice's future setting;
    it is drawn as ``P_f`` times a point mass on ``x~ = x``.
    """
    stats, pax = _prepare(stats, tol)
    d = stats.dims
    funcs = function_table(d.nA, d.nX)
    n_f = len(funcs)
    cond = _bob_conditional(stats.behaviour.p)
    f_idx = np.repeat(np.arange(n_f), d.nX)
    x_tilde = np.tile(np.arange(d.nX), n_f)
    n = n_f * d.nX

    p_a = np.zeros((d.nA, d.nX, n))
    for x in range(d.nX):
        p_a[funcs[f_idx, x], x, np.arange(n)] = 1.0
    p_b = cond[funcs[f_idx, x_tilde], :, x_tilde, :].transpose(1, 2, 0)
    p_lambda = np.zeros((n, d.nX))
    p_lambda[np.arange(n), x_tilde] = decompose_deterministic(pax)[f_idx]
    return CausalModel(
        Structure.R,
        d,
        HiddenSpace(HiddenKind.FUNCTION_SETTING, n),
        p_a,
        p_b,
        p_lambda,
        stats.settings.px,
        stats.settings.py,
    )


def construct_nf(stats, tol=EPS_EXACT):
    """Measurement-dependence model (arrow ``lambda -> x``) reproducing ``stats``.

    The hidden variable ``(a~, x~)`` dictates Alice's setting and outcome and
    is drawn with probability ``P(a~ | x~) P(x~)``.  Every setting of Alice
    must have positive probability.
    """
    stats, pax = _prepare(stats, tol)
    d = stats.dims
    px = stats.settings.px
    zero = np.nonzero(px <= 0)[0]
    if zero.size:
        x = int(zero[0])
        raise DegenerateSetting(
            f"setting x={x} has zero probability; a measurement-dependent model cannot produce it",
            setting=x,
        )
    cond = _bob_conditional(stats.behaviour.p)
    n = d.nA * d.nX
    a_tilde = np.repeat(np.arange(d.nA), d.nX)
    x_tilde = np.tile(np.arange(d.nX), d.nA)
    lam = np.arange(n)

    p_a = np.zeros((d.nA, d.nX, n))
    p_a[a_tilde, :, lam] = 1.0
    p_b = cond[a_tilde, :, x_tilde, :].transpose(1, 2, 0)
    p_lambda = pax[a_tilde, x_tilde] * px[x_tilde]
    p_lambda = p_lambda / p_lambda.sum()
    p_x = np.zeros((d.nX, n))
    p_x[x_tilde, lam] = 1.0
    return CausalModel(
        Structure.NF,
        d,
        HiddenSpace(HiddenKind.OUTCOME_SETTING, n),
        p_a,
        p_b,
        p_lambda,
        p_x,
        stats.settings.py,
    )


CONSTRUCTORS = {
    Structure.NL: construct_nl,
    Structure.R: construct_r,
    Structure.NF: construct_nf,
}


def construct(structure, stats, tol=EPS_EXACT):
    structure = Structure.parse(structure)
    if structure is Structure.BASELINE:
        raise ValueError("baseline models are built from strategy weights, see construct_baseline")
    return CONSTRUCTORS[structure](stats, tol)


def construct_baseline(dims, alice_funcs, bob_funcs, weights, settings):
    """Local model mixing deterministic strategy pairs.

    ``alice_funcs[k]`` and ``bob_funcs[k]`` are the response-function rows of
    the ``k``-th pair, which is used with probability ``weights[k]``.
    """
    alice_funcs = np.atleast_2d(np.asarray(alice_funcs, dtype=np.intp))
    bob_funcs = np.atleast_2d(np.asarray(bob_funcs, dtype=np.intp))
    weights = np.asarray(weights, dtype=float)
    n = len(weights)
    lam = np.arange(n)
    p_a = np.zeros((dims.nA, dims.nX, n))
    for x in range(dims.nX):
        p_a[alice_funcs[:, x], x, lam] = 1.0
    p_b = np.zeros((dims.nB, dims.nY, n))
    for y in range(dims.nY):
        p_b[bob_funcs[:, y], y, lam] = 1.0
    return CausalModel(
        Structure.BASELINE,
        dims,
        HiddenSpace(HiddenKind.OPAQUE, n),
        p_a,
        p_b,
        weights / weights.sum(),
        settings.px,
        settings.py,
    )


# --- sampling ---------------------------------------------------------------


def _categorical(cdf, u):
    """Index of the first cdf entry exceeding ``u``; ``cdf`` is ``[k, n]`` per draw."""
    return np.minimum((u[None, :] >= cdf).sum(axis=0), cdf.shape[0] - 1)


def _sample_chunk(model, n, rng):
    tag = model.structure
    u = rng.random((5, n))
    n_lambda = model.hidden.size

    def draw_fixed(dist, uu):
        cdf = np.cumsum(dist)
        return np.minimum(np.searchsorted(cdf, uu, side="right"), len(dist) - 1)

    if tag is Structure.R:
        x = draw_fixed(model.p_x, u[0])
        y = draw_fixed(model.p_y, u[1])
        lam = np.empty(n, dtype=np.intp)
        for xv in range(model.dims.nX):
            sel = x == xv
            lam[sel] = draw_fixed(model.p_lambda[:, xv], u[2, sel])
    elif tag is Structure.NF:
        lam = draw_fixed(model.p_lambda, u[2])
        x = _categorical(np.cumsum(model.p_x, axis=0)[:, lam], u[0])
        y = draw_fixed(model.p_y, u[1])
    else:
        x = draw_fixed(model.p_x, u[0])
        y = draw_fixed(model.p_y, u[1])
        lam = draw_fixed(model.p_lambda, u[2])

    a = _categorical(np.cumsum(model.p_a, axis=0)[:, x, lam], u[3])
    if tag is Structure.NL:
        b = _categorical(np.cumsum(model.p_b, axis=0)[:, x, y, lam], u[4])
    else:
        b = _categorical(np.cumsum(model.p_b, axis=0)[:, y, lam], u[4])
    assert lam.max(initial=0) < n_lambda
    return np.stack([a, b, x, y, lam], axis=1)


def sample_trials(model, n, rng):
    """Draw ``n`` independent trials ancestrally.

    Returns an ``(n, 5)`` integer array with columns ``a, b, x, y, lambda``.
    ``rng`` is a :class:`numpy.random.Generator` owned by the caller.
    """
    if n < 0:
        raise ValueError("number of trials must be non-negative")
    chunks = []
    done = 0
    while done < n:
        k = min(_SAMPLE_CHUNK, n - done)
        chunks.append(_sample_chunk(model, k, rng))
        done += k
    if not chunks:
        return np.empty((0, 5), dtype=np.intp)
    return np.concatenate(chunks)


def sample_trial(model, rng):
    """One trial ``(a, b, x, y, lambda)``."""
    return tuple(int(v) for v in _sample_chunk(model, 1, rng)[0])


# --- JSON -------------------------------------------------------------------


def model_to_dict(model):
    d = model.dims
    return {
        "structure": model.structure.value,
        "dims": {"nA": d.nA, "nB": d.nB, "nX": d.nX, "nY": d.nY},
        "hidden": {"kind": model.hidden.kind.value, "size": model.hidden.size},
        "p_a": model.p_a.tolist(),
        "p_b": model.p_b.tolist(),
        "p_lambda": model.p_lambda.tolist(),
        "p_x": model.p_x.tolist(),
        "p_y": model.p_y.tolist(),
    }


def model_from_dict(doc, tol=EPS_EXACT):
    try:
        dims = Cardinalities(**{k: doc["dims"][k] for k in ("nA", "nB", "nX", "nY")})
        hidden = HiddenSpace(HiddenKind(doc["hidden"]["kind"]), int(doc["hidden"]["size"]))
        tables = {k: np.asarray(doc[k], dtype=float) for k in ("p_a", "p_b", "p_lambda", "p_x", "p_y")}
        structure = Structure.parse(doc["structure"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed model document: {exc}") from None
    return CausalModel(structure, dims, hidden, tol=tol, **tables)


def hidden_labels(model):
    """Human-readable label of every hidden value in canonical order."""
    d, kind = model.dims, model.hidden.kind
    if kind is HiddenKind.FUNCTION:
        return [function_label(r) for r in function_table(d.nA, d.nX)]
    if kind is HiddenKind.FUNCTION_SETTING:
        return [
            f"{function_label(r)}/{x}"
            for r, x in itertools.product(function_table(d.nA, d.nX), range(d.nX))
        ]
    if kind is HiddenKind.OUTCOME_SETTING:
        return [f"{a}/{x}" for a, x in itertools.product(range(d.nA), range(d.nX))]
    return [str(i) for i in range(model.hidden.size)]
