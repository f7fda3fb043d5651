"""Experimental statistics of a bipartite Bell experiment.

A behaviour is stored as a dense tensor ``p[a, b, x, y]`` holding the
conditional probability of outcomes ``(a, b)`` given settings ``(x, y)``.
The settings distribution is a matrix ``p[x, y]``.  Both are immutable once
constructed: the arrays are copied and flagged read-only.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    IndependenceViolation,
    NormalizationError,
    ParseError,
    StructureError,
)

EPS_EXACT = 1e-12
EPS_FILE = 1e-9
MAX_CARDINALITY = 64


def _frozen(array, ndim, name):
    arr = np.array(array, dtype=float)
    if arr.ndim != ndim:
        raise StructureError(f"{name} must be a {ndim}-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise StructureError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Cardinalities:
    nA: int
    nB: int
    nX: int
    nY: int
    cap: int = field(default=MAX_CARDINALITY, compare=False, repr=False)

    def __post_init__(self):
        for name in ("nA", "nB", "nX", "nY"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise StructureError(f"{name} must be a positive integer, got {value!r}")
            if value > self.cap:
                raise StructureError(f"{name}={value} exceeds the per-axis cap {self.cap}")
            object.__setattr__(self, name, int(value))

    @property
    def shape(self):
        return (self.nA, self.nB, self.nX, self.nY)

    def swapped(self):
        """Cardinalities with Alice and Bob exchanged."""
        return Cardinalities(self.nB, self.nA, self.nY, self.nX, cap=self.cap)


@dataclass(frozen=True, eq=False)
class Behaviour:
    """Conditional outcome distribution ``P(a, b | x, y)``.

    Construction checks structure only.  Use :func:`validate` to check
    normalisation.
    """

    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", _frozen(self.p, 4, "behaviour"))
        Cardinalities(*self.p.shape)

    @property
    def dims(self):
        return Cardinalities(*self.p.shape)

    @classmethod
    def from_settings_major(cls, table):
        """Build from a nested array indexed ``[x][y][a][b]`` (the file layout)."""
        arr = np.asarray(table, dtype=float)
        if arr.ndim != 4:
            raise StructureError(f"behaviour must be 4-d, got shape {arr.shape}")
        return cls(arr.transpose(2, 3, 0, 1))

    def settings_major(self):
        return self.p.transpose(2, 3, 0, 1)

    def correlator(self, x, y):
        """``E(x, y) = sum_ab (-1)^(a+b) p[a, b, x, y]``, binary outcomes only."""
        signs = np.array([1.0, -1.0])
        return float(signs @ self.p[:2, :2, x, y] @ signs)

    def swapped(self):
        """The same behaviour with Alice and Bob exchanged."""
        return Behaviour(self.p.transpose(1, 0, 3, 2))

    def __eq__(self, other):
        if not isinstance(other, Behaviour):
            return NotImplemented
        return self.p.shape == other.p.shape and bool(np.array_equal(self.p, other.p))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class SettingsDistribution:
    """Joint distribution ``P(x, y)`` over setting pairs."""

    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", _frozen(self.p, 2, "settings"))

    @property
    def dims(self):
        return self.p.shape

    @property
    def px(self):
        return self.p.sum(axis=1)

    @property
    def py(self):
        return self.p.sum(axis=0)

    @classmethod
    def uniform(cls, nX, nY):
        return cls(np.full((nX, nY), 1.0 / (nX * nY)))

    @classmethod
    def product(cls, px, py):
        return cls(np.outer(np.asarray(px, dtype=float), np.asarray(py, dtype=float)))

    def __eq__(self, other):
        if not isinstance(other, SettingsDistribution):
            return NotImplemented
        return self.p.shape == other.p.shape and bool(np.array_equal(self.p, other.p))

    __hash__ = None


@dataclass(frozen=True)
class Statistics:
    """The pair of a behaviour and the settings distribution it was observed under."""

    behaviour: Behaviour
    settings: SettingsDistribution

    def __post_init__(self):
        dims = self.behaviour.dims
        if self.settings.dims != (dims.nX, dims.nY):
            raise StructureError(
                f"settings shape {self.settings.dims} does not match behaviour "
                f"settings axes {(dims.nX, dims.nY)}"
            )

    @property
    def dims(self):
        return self.behaviour.dims

    @classmethod
    def with_uniform_settings(cls, behaviour):
        if not isinstance(behaviour, Behaviour):
            behaviour = Behaviour(behaviour)
        dims = behaviour.dims
        return cls(behaviour, SettingsDistribution.uniform(dims.nX, dims.nY))

    def joint(self):
        """``P(a, b, x, y) = P(a, b | x, y) P(x, y)``."""
        return self.behaviour.p * self.settings.p[None, None, :, :]


# --- validation -------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    """One failed normalisation constraint.

    ``table`` is ``"behaviour"`` or ``"settings"``; ``index`` is the setting
    pair ``(x, y)`` of the offending row (empty for the settings table) or the
    full index of a negative entry; ``residual`` is the absolute deviation.
    """

    table: str
    kind: str
    index: tuple
    residual: float


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()
    tol: float = EPS_EXACT

    @property
    def valid(self):
        return not self.violations

    def __bool__(self):
        return self.valid

    def to_dict(self):
        return {
            "valid": self.valid,
            "tol": self.tol,
            "violations": [
                {"table": v.table, "kind": v.kind, "index": list(v.index), "residual": v.residual}
                for v in self.violations
            ],
        }


def _as_statistics(stats):
    if isinstance(stats, Statistics):
        return stats
    if isinstance(stats, Behaviour):
        return Statistics.with_uniform_settings(stats)
    raise StructureError(f"expected Statistics or Behaviour, got {type(stats).__name__}")


def validate(stats, tol=EPS_EXACT):
    """List every violated normalisation constraint of ``stats``.

    An empty report means each conditional row ``P(., . | x, y)`` and the
    settings table sum to one within ``tol`` and no entry lies outside [0, 1].
    """
    stats = _as_statistics(stats)
    violations = []
    p = stats.behaviour.p
    for idx in zip(*np.nonzero((p < -tol) | (p > 1 + tol))):
        value = float(p[idx])
        violations.append(
            Violation("behaviour", "range", tuple(int(i) for i in idx), max(-value, value - 1))
        )
    sums = p.sum(axis=(0, 1))
    for x, y in itertools.product(*map(range, sums.shape)):
        residual = abs(float(sums[x, y]) - 1.0)
        if residual > tol:
            violations.append(Violation("behaviour", "normalization", (x, y), residual))

    s = stats.settings.p
    for idx in zip(*np.nonzero((s < -tol) | (s > 1 + tol))):
        value = float(s[idx])
        violations.append(
            Violation("settings", "range", tuple(int(i) for i in idx), max(-value, value - 1))
        )
    residual = abs(float(s.sum()) - 1.0)
    if residual > tol:
        violations.append(Violation("settings", "normalization", (), residual))
    return ValidationReport(tuple(violations), tol)


def require_valid(stats, tol=EPS_EXACT):
    report = validate(stats, tol)
    if not report.valid:
        v = report.violations[0]
        raise NormalizationError(
            f"{v.table} {v.kind} violated at {v.index} (residual {v.residual:.3g}); "
            f"{len(report.violations)} violation(s) in total"
        )
    return report


# --- independence conditions ------------------------------------------------


@dataclass(frozen=True)
class IndependenceReport:
    """Outcome of testing ``a _|_ y | x`` and ``x _|_ y``.

    ``alice_witness`` is ``(a, x, y, y')`` attaining ``alice_signalling``;
    ``settings_witness`` is ``(x, y)`` attaining ``settings_dependence``.
    The reverse condition ``b _|_ x | y`` is reported for information only and
    does not affect :attr:`passed`.
    """

    alice_signalling: float
    alice_witness: tuple
    settings_dependence: float
    settings_witness: tuple
    bob_signalling: float
    bob_witness: tuple
    tol: float

    @property
    def alice_ok(self):
        return self.alice_signalling <= self.tol

    @property
    def settings_ok(self):
        return self.settings_dependence <= self.tol

    @property
    def bob_ok(self):
        return self.bob_signalling <= self.tol

    @property
    def passed(self):
        return self.alice_ok and self.settings_ok

    def __bool__(self):
        return self.passed

    def to_dict(self):
        return {
            "passed": self.passed,
            "tol": self.tol,
            "a_indep_y_given_x": {
                "max_deviation": self.alice_signalling,
                "witness": list(self.alice_witness),
                "ok": self.alice_ok,
            },
            "x_indep_y": {
                "max_deviation": self.settings_dependence,
                "witness": list(self.settings_witness),
                "ok": self.settings_ok,
            },
            "b_indep_x_given_y": {
                "max_deviation": self.bob_signalling,
                "witness": list(self.bob_witness),
                "ok": self.bob_ok,
            },
        }


def _signalling(marginal):
    """Max of ``|m[o, s, t] - m[o, s, t']|`` over all indices, with its witness.

    ``m`` is indexed ``[outcome, own setting, other setting]``.
    """
    spread = marginal.max(axis=2) - marginal.min(axis=2)
    o, s = np.unravel_index(int(np.argmax(spread)), spread.shape)
    t_hi = int(np.argmax(marginal[o, s]))
    t_lo = int(np.argmin(marginal[o, s]))
    return float(spread[o, s]), (int(o), int(s), t_hi, t_lo)


def check_assumption1(stats, tol=EPS_EXACT):
    """Test the independences every single-arrow model imposes on ``stats``.

    Condition (i), ``a _|_ y | x``, is evaluated on the whole behaviour tensor,
    including setting pairs of zero probability.  Condition (ii) compares
    ``P(x, y)`` with the product of its marginals.
    """
    stats = _as_statistics(stats)
    p = stats.behaviour.p
    alice, alice_w = _signalling(p.sum(axis=1))
    # Bob's marginal indexed [b, y, x] to reuse the same reduction.
    bob, bob_w = _signalling(p.sum(axis=0).transpose(0, 2, 1))

    s = stats.settings.p
    dev = np.abs(s - np.outer(s.sum(axis=1), s.sum(axis=0)))
    x, y = np.unravel_index(int(np.argmax(dev)), dev.shape)
    return IndependenceReport(
        alice_signalling=alice,
        alice_witness=alice_w,
        settings_dependence=float(dev[x, y]),
        settings_witness=(int(x), int(y)),
        bob_signalling=bob,
        bob_witness=bob_w,
        tol=tol,
    )


def require_assumption1(stats, tol=EPS_EXACT):
    report = check_assumption1(stats, tol)
    if not report.alice_ok:
        a, x, y1, y2 = report.alice_witness
        raise IndependenceViolation(
            f"P(a={a}|x={x},y) depends on y: settings y={y1} and y={y2} differ by "
            f"{report.alice_signalling:.3g} > {tol:g}"
        )
    if not report.settings_ok:
        x, y = report.settings_witness
        raise IndependenceViolation(
            f"settings distribution does not factorise at (x={x}, y={y}): deviation "
            f"{report.settings_dependence:.3g} > {tol:g}"
        )
    return report


def alice_marginal(behaviour, tol=EPS_EXACT):
    """Return ``P(a | x)`` as an ``(nA, nX)`` array.

    Raises :class:`IndependenceViolation` when Alice's marginal depends on
    Bob's setting by more than ``tol``.
    """
    if isinstance(behaviour, Statistics):
        behaviour = behaviour.behaviour
    marg = behaviour.p.sum(axis=1)
    dev, (a, x, y1, y2) = _signalling(marg)
    if dev > tol:
        raise IndependenceViolation(
            f"P(a={a}|x={x},y) depends on y: y={y1} and y={y2} differ by {dev:.3g} > {tol:g}"
        )
    return marg[:, :, 0].copy()


# --- JSON -------------------------------------------------------------------


def statistics_to_dict(stats):
    dims = stats.dims
    return {
        "nA": dims.nA,
        "nB": dims.nB,
        "nX": dims.nX,
        "nY": dims.nY,
        "behaviour": stats.behaviour.settings_major().tolist(),
        "settings": stats.settings.p.tolist(),
    }


def statistics_from_dict(doc):
    """Parse the file schema; missing ``settings`` defaults to uniform."""
    if not isinstance(doc, dict):
        raise ParseError("statistics document must be a JSON object")
    try:
        dims = Cardinalities(*(doc[k] for k in ("nA", "nB", "nX", "nY")))
    except KeyError as exc:
        raise ParseError(f"missing field {exc.args[0]!r}") from None
    except TypeError as exc:
        raise ParseError(str(exc)) from None
    if "behaviour" not in doc:
        raise ParseError("missing field 'behaviour'")
    try:
        table = np.asarray(doc["behaviour"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"behaviour is not a rectangular numeric array: {exc}") from None
    expected = (dims.nX, dims.nY, dims.nA, dims.nB)
    if table.shape != expected:
        raise StructureError(f"behaviour has shape {table.shape}, expected [x][y][a][b] = {expected}")
    behaviour = Behaviour.from_settings_major(table)
    if doc.get("settings") is None:
        settings = SettingsDistribution.uniform(dims.nX, dims.nY)
    else:
        try:
            settings = SettingsDistribution(np.asarray(doc["settings"], dtype=float))
        except (TypeError, ValueError) as exc:
            raise ParseError(f"settings is not a numeric matrix: {exc}") from None
    return Statistics(behaviour, settings)


def dumps(doc):
    """Canonical JSON text used for every file this package writes."""
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def loads(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
