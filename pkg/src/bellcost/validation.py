"""Input coercion helpers used by the estimator classes."""

import numbers

import numpy as np

from .exceptions import StructureError
from .statistics import Behaviour, SettingsDistribution, Statistics


def check_behaviour(X):
    """Return a :class:`Behaviour` from a behaviour, statistics or ``[a, b, x, y]`` array."""
    if isinstance(X, Behaviour):
        return X
    if isinstance(X, Statistics):
        return X.behaviour
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 4:
        raise StructureError(f"expected a behaviour tensor [a, b, x, y], got shape {arr.shape}")
    return Behaviour(arr)


def check_behaviours(X):
    """A list of behaviours from one behaviour, a sequence, or a stacked 5-d array."""
    if isinstance(X, (Behaviour, Statistics)):
        return [check_behaviour(X)]
    if isinstance(X, np.ndarray):
        if X.ndim == 4:
            return [Behaviour(X)]
        if X.ndim == 5:
            return [Behaviour(x) for x in X]
        raise StructureError(f"expected a 4-d or 5-d array, got shape {X.shape}")
    return [check_behaviour(x) for x in X]


def check_statistics(X, settings=None):
    """Return :class:`Statistics`; bare behaviours get ``settings`` or uniform settings."""
    if isinstance(X, Statistics):
        if settings is not None:
            raise ValueError("settings given twice")
        return X
    behaviour = check_behaviour(X)
    if settings is None:
        return Statistics.with_uniform_settings(behaviour)
    if not isinstance(settings, SettingsDistribution):
        settings = SettingsDistribution(settings)
    return Statistics(behaviour, settings)


def check_generator(random_state):
    """A :class:`numpy.random.Generator` from ``None``, an int, a SeedSequence or a Generator."""
    if random_state is None or isinstance(random_state, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(random_state)
    if isinstance(random_state, np.random.Generator):
        return random_state
    raise ValueError(f"{random_state!r} cannot seed a numpy Generator")
