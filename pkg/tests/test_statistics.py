import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bellcost.exceptions import IndependenceViolation, ParseError, StructureError
from bellcost.quantum import pr_box
from bellcost.statistics import (
    Behaviour,
    Cardinalities,
    SettingsDistribution,
    Statistics,
    alice_marginal,
    check_assumption1,
    statistics_from_dict,
    statistics_to_dict,
    validate,
)
from tests.helpers import random_one_way_behaviour, random_statistics


def uniform_stats(shape):
    nA, nB, nX, nY = shape
    return Statistics.with_uniform_settings(Behaviour(np.full(shape, 1 / (nA * nB))))


class TestTypes:
    def test_cardinalities_reject_zero(self):
        with pytest.raises(StructureError):
            Cardinalities(0, 2, 2, 2)

    def test_cardinalities_cap(self):
        with pytest.raises(StructureError):
            Cardinalities(65, 2, 2, 2)
        Cardinalities(65, 2, 2, 2, cap=128)

    def test_arrays_are_read_only(self):
        b = pr_box()
        with pytest.raises(ValueError):
            b.p[0, 0, 0, 0] = 1.0

    def test_settings_shape_must_match(self):
        with pytest.raises(StructureError):
            Statistics(pr_box(), SettingsDistribution.uniform(3, 2))

    def test_settings_major_roundtrip(self, rng):
        b = random_one_way_behaviour(rng, (2, 3, 4, 2))
        assert Behaviour.from_settings_major(b.settings_major()) == b


class TestValidate:
    @pytest.mark.parametrize("shape", [(2, 2, 2, 2), (3, 2, 4, 1), (1, 1, 1, 1)])
    def test_uniform_is_valid(self, shape):
        assert validate(uniform_stats(shape)).valid

    def test_short_row_is_named(self):
        p = np.full((2, 2, 2, 2), 0.25)
        p[0, 0, 1, 0] -= 0.1
        report = validate(Behaviour(p))
        assert not report.valid
        (v,) = report.violations
        assert (v.table, v.kind, v.index) == ("behaviour", "normalization", (1, 0))
        assert v.residual == pytest.approx(0.1, abs=1e-15)

    def test_pr_box_is_valid(self):
        # direct summation: each (x, y) has exactly two entries equal to 1/2
        assert validate(pr_box()).valid

    def test_negative_entry_reported(self):
        p = np.full((2, 2, 1, 1), 0.25)
        p[0, 0, 0, 0] = -0.25
        p[1, 1, 0, 0] = 0.75
        kinds = {v.kind for v in validate(Behaviour(p)).violations}
        assert kinds == {"range"}

    def test_settings_normalisation(self):
        s = Statistics(pr_box(), SettingsDistribution(np.full((2, 2), 0.3)))
        (v,) = validate(s).violations
        assert v.table == "settings" and v.residual == pytest.approx(0.2)


class TestAssumption1:
    def test_quantum_like_passes_both(self):
        from bellcost.quantum import named_behaviour

        report = check_assumption1(named_behaviour("singlet-chsh-optimal"))
        assert report.passed and report.bob_ok

    def test_signalling_to_alice_fails_with_witness(self):
        # a = y: Alice's outcome copies Bob's setting
        p = np.zeros((2, 2, 2, 2))
        for x, y in itertools.product(range(2), range(2)):
            p[y, 0, x, y] = 1.0
        report = check_assumption1(Behaviour(p))
        assert not report.alice_ok
        assert report.alice_signalling == pytest.approx(1.0)
        a, x, y1, y2 = report.alice_witness
        assert y1 != y2

    def test_product_passes(self, rng):
        pa = rng.dirichlet(np.ones(3), size=2).T  # [a, x]
        pb = rng.dirichlet(np.ones(2), size=4).T  # [b, y]
        report = check_assumption1(Behaviour(np.einsum("ax,by->abxy", pa, pb)))
        assert report.passed and report.bob_ok

    def test_one_way_signalling_is_informational(self, rng):
        b = random_one_way_behaviour(rng, (2, 2, 3, 3))
        report = check_assumption1(b)
        assert report.passed
        assert not report.bob_ok

    def test_correlated_settings_fail(self):
        s = Statistics(pr_box(), SettingsDistribution(np.array([[0.5, 0.0], [0.0, 0.5]])))
        report = check_assumption1(s)
        assert not report.settings_ok
        assert report.settings_dependence == pytest.approx(0.25)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), data=st.data())
    def test_relabelling_preserves_verdict(self, seed, data):
        rng = np.random.default_rng(seed)
        shape = tuple(data.draw(st.integers(1, 3)) for _ in range(4))
        stats = random_statistics(rng, shape)
        if data.draw(st.booleans()):
            # make Alice's marginal depend on y
            p = stats.behaviour.p.copy()
            p = p[:, :, :, ::-1] if shape[3] > 1 else p
            mix = np.concatenate([stats.behaviour.p[..., :1], p[..., 1:]], axis=3)
            stats = Statistics(Behaviour(mix), stats.settings)
        perms = [rng.permutation(n) for n in shape]
        p = stats.behaviour.p[np.ix_(*perms)]
        s = stats.settings.p[np.ix_(perms[2], perms[3])]
        permuted = Statistics(Behaviour(p), SettingsDistribution(s))
        r1, r2 = check_assumption1(stats), check_assumption1(permuted)
        assert r1.passed == r2.passed
        assert r1.alice_signalling == pytest.approx(r2.alice_signalling, abs=1e-15)


class TestAliceMarginal:
    def test_pr_box(self):
        np.testing.assert_array_equal(alice_marginal(pr_box()), np.full((2, 2), 0.5))

    def test_deterministic(self):
        p = np.zeros((2, 2, 2, 2))
        for x, y in itertools.product(range(2), range(2)):
            p[x, 0, x, y] = 1.0
        np.testing.assert_array_equal(alice_marginal(Behaviour(p)), np.eye(2))

    def test_singlet(self):
        from bellcost.quantum import named_behaviour

        np.testing.assert_allclose(
            alice_marginal(named_behaviour("singlet-chsh-optimal")), 0.5, atol=1e-15
        )

    def test_y_dependence_raises(self):
        p = np.zeros((2, 1, 1, 2))
        p[0, 0, 0, 0] = 1.0
        p[1, 0, 0, 1] = 1.0
        with pytest.raises(IndependenceViolation):
            alice_marginal(Behaviour(p))

    def test_rows_sum_to_one(self, rng):
        for _ in range(20):
            b = random_one_way_behaviour(rng, tuple(rng.integers(1, 5, size=4)))
            np.testing.assert_allclose(alice_marginal(b).sum(axis=0), 1.0, atol=1e-12)

    def test_settings_factorise_when_assumption_holds(self, rng):
        stats = random_statistics(rng, (2, 3, 3, 4))
        assert check_assumption1(stats).passed
        s = stats.settings
        np.testing.assert_allclose(np.outer(s.px, s.py), s.p, atol=1e-15)


class TestJson:
    def test_roundtrip(self, rng):
        stats = random_statistics(rng, (2, 3, 2, 4))
        again = statistics_from_dict(statistics_to_dict(stats))
        assert again.behaviour == stats.behaviour
        assert again.settings == stats.settings

    def test_file_layout_is_settings_major(self):
        doc = statistics_to_dict(Statistics.with_uniform_settings(pr_box()))
        # x = 1, y = 1: anti-correlated outcomes
        assert doc["behaviour"][1][1] == [[0.0, 0.5], [0.5, 0.0]]

    def test_missing_settings_default_uniform(self):
        doc = statistics_to_dict(Statistics.with_uniform_settings(pr_box()))
        del doc["settings"]
        np.testing.assert_array_equal(statistics_from_dict(doc).settings.p, 0.25)

    def test_missing_field(self):
        with pytest.raises(ParseError):
            statistics_from_dict({"nA": 2, "nB": 2, "nX": 2})

    def test_wrong_shape(self):
        doc = statistics_to_dict(Statistics.with_uniform_settings(pr_box()))
        doc["nX"] = 3
        with pytest.raises(StructureError):
            statistics_from_dict(doc)
