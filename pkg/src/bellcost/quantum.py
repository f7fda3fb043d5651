"""Two-qubit Born-rule behaviours and the CHSH expression."""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .exceptions import StructureError
from .statistics import Behaviour, SettingsDistribution, Statistics

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
IDENTITY = np.eye(2, dtype=complex)

STATE_TOL = 1e-10
POVM_TOL = 1e-12


def bloch_projectors(theta, phi=0.0):
    """Projectors onto ``+n`` and ``-n`` for the Bloch direction ``(theta, phi)``.

    Outcome 0 is the ``+n`` eigenvector.
    """
    n = (np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta))
    n_sigma = sum(c * s for c, s in zip(n, PAULI))
    return [(IDENTITY + n_sigma) / 2, (IDENTITY - n_sigma) / 2]


def ket(*amplitudes):
    v = np.asarray(amplitudes, dtype=complex)
    return v / np.linalg.norm(v)


def pure_state(vector):
    v = np.asarray(vector, dtype=complex).reshape(-1, 1)
    return v @ v.conj().T


SINGLET = pure_state(ket(0, 1, -1, 0))


@dataclass(frozen=True, eq=False)
class QuantumScenario:
    """A two-qubit state with projective measurements for each party.

    ``alice_meas[x]`` is the list of 2x2 measurement operators for setting
    ``x`` (one per outcome); ``bob_meas`` likewise per ``y``.
    """

    rho: np.ndarray
    alice_meas: tuple
    bob_meas: tuple

    def __post_init__(self):
        rho = np.array(self.rho, dtype=complex)
        if rho.shape != (4, 4):
            raise StructureError(f"rho must be 4x4, got {rho.shape}")
        if not np.allclose(rho, rho.conj().T, atol=STATE_TOL, rtol=0):
            raise StructureError("rho is not Hermitian")
        if abs(np.trace(rho) - 1) > STATE_TOL:
            raise StructureError(f"rho has trace {np.trace(rho).real:.6g}, expected 1")
        if np.linalg.eigvalsh(rho).min() < -STATE_TOL:
            raise StructureError("rho is not positive semidefinite")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "alice_meas", _check_measurements(self.alice_meas, "Alice"))
        object.__setattr__(self, "bob_meas", _check_measurements(self.bob_meas, "Bob"))
        n_out = {len(m) for m in self.alice_meas}
        if len(n_out) != 1:
            raise StructureError("Alice's settings have differing numbers of outcomes")
        n_out = {len(m) for m in self.bob_meas}
        if len(n_out) != 1:
            raise StructureError("Bob's settings have differing numbers of outcomes")

    @classmethod
    def from_angles(cls, rho, alice_angles, bob_angles):
        """Scenario with projective qubit measurements given by Bloch angles.

        Each angle is either ``theta`` (the Z-X plane, ``phi = 0``) or a
        ``(theta, phi)`` pair.
        """

        def meas(angles):
            return tuple(
                bloch_projectors(*(a if isinstance(a, (tuple, list)) else (a,))) for a in angles
            )

        return cls(rho, meas(alice_angles), meas(bob_angles))


def _check_measurements(settings, who):
    checked = []
    for s, ops in enumerate(settings):
        ops = [np.array(op, dtype=complex) for op in ops]
        for op in ops:
            if op.shape != (2, 2):
                raise StructureError(f"{who} setting {s}: operator shape {op.shape} is not 2x2")
            if not np.allclose(op, op.conj().T, atol=POVM_TOL, rtol=0):
                raise StructureError(f"{who} setting {s}: operator not Hermitian")
            if np.linalg.eigvalsh(op).min() < -POVM_TOL:
                raise StructureError(f"{who} setting {s}: operator not positive semidefinite")
            op.setflags(write=False)
        if np.abs(sum(ops) - IDENTITY).max() > POVM_TOL:
            raise StructureError(f"{who} setting {s}: operators do not sum to the identity")
        checked.append(tuple(ops))
    if not checked:
        raise StructureError(f"{who} needs at least one setting")
    return tuple(checked)


def born_behaviour(scenario):
    """``p[a, b, x, y] = Tr[rho (A_a|x (x) B_b|y)]``."""
    A, B = scenario.alice_meas, scenario.bob_meas
    nA, nB = len(A[0]), len(B[0])
    p = np.empty((nA, nB, len(A), len(B)))
    for x, ops_a in enumerate(A):
        for y, ops_b in enumerate(B):
            for a, Ea in enumerate(ops_a):
                for b, Eb in enumerate(ops_b):
                    p[a, b, x, y] = np.trace(scenario.rho @ np.kron(Ea, Eb)).real
    return Behaviour(p)


# Every CHSH variant is a +-1 sign pattern on the four correlators with an odd
# number of minus signs, times an overall sign.
CHSH_SIGNS = tuple(
    s * np.array(pattern, dtype=float).reshape(2, 2)
    for pattern in [(1, 1, 1, -1), (1, 1, -1, 1), (1, -1, 1, 1), (-1, 1, 1, 1)]
    for s in (1, -1)
)


def _correlators(behaviour):
    dims = behaviour.dims
    if dims.shape != (2, 2, 2, 2):
        raise StructureError(f"CHSH needs a 2x2x2x2 behaviour, got {dims.shape}")
    signs = np.array([1.0, -1.0])
    return np.einsum("a,b,abxy->xy", signs, signs, behaviour.p)


def chsh_value(behaviour):
    """``S = E(0,0) + E(0,1) + E(1,0) - E(1,1)`` with outcomes mapped to ``(-1)^a``."""
    E = _correlators(behaviour)
    return float(E[0, 0] + E[0, 1] + E[1, 0] - E[1, 1])


def chsh_max(behaviour):
    """Largest value of the eight CHSH variants obtained by relabelling."""
    E = _correlators(behaviour)
    return float(max((s * E).sum() for s in CHSH_SIGNS))


# --- named scenarios ---------------------------------------------------------

ALICE_OPTIMAL = (0.0, np.pi / 2)
BOB_OPTIMAL = (-3 * np.pi / 4, 3 * np.pi / 4)


def singlet_scenario(alice_angles=ALICE_OPTIMAL, bob_angles=BOB_OPTIMAL, visibility=1.0):
    """Werner state ``v |psi-><psi-| + (1 - v) I/4`` measured in the Z-X plane.

    The default angles reach ``S = 2 sqrt(2)``.
    """
    rho = visibility * SINGLET + (1 - visibility) * np.eye(4) / 4
    return QuantumScenario.from_angles(rho, alice_angles, bob_angles)


def pr_box():
    """``p = 1/2`` when ``a xor b = x y``, else 0."""
    p = np.zeros((2, 2, 2, 2))
    for a, b, x, y in np.ndindex(p.shape):
        if a ^ b == x * y:
            p[a, b, x, y] = 0.5
    return Behaviour(p)


SCENARIOS = ("singlet-chsh-optimal", "prbox", "werner:v")


def named_behaviour(name):
    """Behaviour for a built-in scenario name (``werner:0.7`` style for Werner)."""
    if name == "singlet-chsh-optimal":
        return born_behaviour(singlet_scenario())
    if name == "prbox":
        return pr_box()
    m = re.fullmatch(r"werner:([0-9]*\.?[0-9]+(?:[eE][-+]?\d+)?)", name)
    if m:
        v = float(m.group(1))
        if not 0 <= v <= 1:
            raise ValueError(f"Werner visibility must lie in [0, 1], got {v}")
        return born_behaviour(singlet_scenario(visibility=v))
    raise ValueError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")


def named_statistics(name, settings=None):
    behaviour = named_behaviour(name)
    if settings is None:
        return Statistics.with_uniform_settings(behaviour)
    if not isinstance(settings, SettingsDistribution):
        settings = SettingsDistribution(settings)
    return Statistics(behaviour, settings)
