"""Polyhomogeneous expansion engine: seeds, recursion, logs, residuals, JSON."""

from fractions import Fraction

import pytest

from nahmpole.algebra import EigenPart, GForm, cal_L, project, vierbein
from nahmpole.geometry import builtin, load_background
from nahmpole.scalars import FloatField
from nahmpole.series import (
    FreeData,
    PhgSeries,
    assert_parity,
    check_residuals,
    evaluate,
    expand,
    from_json,
    is_log_free,
    quadratic_source,
    residual_at,
    seed_leading,
    to_json,
)

from conftest import CATALOG, rand_fraction, rand_one_form

MINUS, ZERO, PLUS = EigenPart.Minus, EigenPart.Zero, EigenPart.Plus


def _e(field, q):
    return vierbein(field).scale(Fraction(q))


def rand_free_data(rng, field):
    x = rand_one_form(rng, field)
    y = rand_one_form(rng, field)
    return FreeData(
        field=field,
        c_plus=project(x, PLUS),
        c_zero=project(y, ZERO),
        c_minus=project(y, MINUS),
    )


def matched_s3_free(field):
    return FreeData(field=field, c_minus=_e(field, Fraction(-2, 3)))


class TestSeeds:
    def test_round_sphere_zero_free_data(self, field):
        bg = load_background("builtin:round-s3", field)
        s = seed_leading(bg)
        assert s.get_b(1, 0) == _e(field, Fraction(-1, 3))
        assert s.get_a(2, 0).is_zero()
        assert s.get_phi(2, 0).is_zero()
        assert s.get_b(1, 1).is_zero()

    def test_berger_log_seed_is_curvature_obstruction(self, field):
        bg = load_background("builtin:berger-s3?squash=2", field)
        s = seed_leading(bg)
        want = project(bg.starF, PLUS)
        assert s.get_b(1, 1) == want
        for a in range(3):
            for i in range(3):
                assert want.coeffs[a][i] == ({(0, 0): 8, (1, 1): -4,
                                              (2, 2): -4}.get((a, i), 0))

    @pytest.mark.parametrize("uri", ["builtin:berger-s3?squash=2", "builtin:h2xr"])
    def test_leading_b_solves_its_equation(self, field, uri):
        # (1 + L) b_1 + b_{1,1} must equal *F exactly
        bg = load_background(uri, field)
        s = seed_leading(bg)
        assert cal_L(1, s.get_b(1, 0)) + s.get_b(1, 1) == bg.starF

    def test_free_data_lands_in_seed(self, field, rng):
        bg = load_background("builtin:round-s3", field)
        free = rand_free_data(rng, field)
        s = seed_leading(bg, free)
        assert project(s.get_b(1, 0), PLUS) == free.c_plus
        assert project(s.get_a(2, 0), ZERO) == free.c_zero
        assert project(s.get_a(2, 0), MINUS) == free.c_minus


class TestFreeData:
    def test_eigenspace_validation(self, field, rng):
        x = rand_one_form(rng, field)
        bad = x - project(x, PLUS) + vierbein(field)
        with pytest.raises(ValueError):
            FreeData(field=field, c_plus=vierbein(field))
        with pytest.raises(ValueError):
            FreeData(field=field, c_zero=bad)

    def test_defaults_are_zero(self, field):
        free = FreeData.zero(field)
        assert free.c_plus.is_zero()
        assert free.c_zero.is_zero()
        assert free.c_minus.is_zero()

    def test_addition(self, field, rng):
        f1 = rand_free_data(rng, field)
        f2 = rand_free_data(rng, field)
        s = f1 + f2
        assert s.c_plus == f1.c_plus + f2.c_plus
        assert s.c_minus == f1.c_minus + f2.c_minus

    def test_addition_rejects_kernel_injections(self, field):
        f = FreeData(field=field,
                     higher_kernel={(3, 0, PLUS): GForm.zero(field, 1)})
        with pytest.raises(ValueError):
            f + FreeData.zero(field)

    def test_needs_field_or_form(self):
        with pytest.raises(ValueError):
            FreeData()


class TestClosedFormCoefficients:
    """The engine must land exactly on the Taylor data of the closed-form
    profiles when fed their matched free data."""

    def test_round_sphere_matched(self, field):
        bg = load_background("builtin:round-s3", field)
        s = expand(bg, matched_s3_free(field), N=6)
        expect_a = {2: Fraction(-2, 3), 4: Fraction(2, 9), 6: Fraction(-4, 135)}
        expect_b = {1: Fraction(-1, 3), 3: Fraction(-1, 45), 5: Fraction(58, 945)}
        for k, q in expect_a.items():
            assert s.get_a(k, 0) == _e(field, q)
        for k, q in expect_b.items():
            assert s.get_b(k, 0) == _e(field, q)
        # nothing else is stored and no phi_y appears
        for (k, p) in s.addresses():
            assert p == 0
            assert s.get_phi(k, p).is_zero()

    def test_round_sphere_quadratic_sources(self, field):
        # the two hand-derived convolution values behind b_3 and a_4
        bg = load_background("builtin:round-s3", field)
        s = expand(bg, matched_s3_free(field), N=4)
        q = quadratic_source(s, 3, 0)
        assert q.Qb == _e(field, Fraction(-1, 9))
        assert q.Qa == _e(field, Fraction(4, 9))
        assert q.Qphi.is_zero()

    def test_hyperbolic_zero_free_data(self, field):
        bg = load_background("builtin:hyperbolic-h3", field)
        s = expand(bg, N=6)
        expect_b = {1: Fraction(1, 3), 3: Fraction(-1, 45), 5: Fraction(2, 945)}
        for k, q in expect_b.items():
            assert s.get_b(k, 0) == _e(field, q)
        # the connection never moves off the background
        for (k, p) in s.addresses():
            assert s.get_a(k, p).is_zero()

    def test_flat_is_exactly_trivial(self, field):
        bg = load_background("builtin:flat", field)
        s = expand(bg, N=10)
        assert list(s.addresses()) == []
        assert is_log_free(s)
        assert check_residuals(s) == []


class TestStructuralTheorems:
    def test_log_free_iff_einstein(self, catalog_case, field, rng):
        bg, einstein = catalog_case
        for _ in range(3):
            s = expand(bg, rand_free_data(rng, field), N=6)
            assert is_log_free(s) is einstein

    @pytest.mark.parametrize("uri", [
        "builtin:berger-s3?squash=1/2",
        "builtin:berger-s3?squash=2",
        "builtin:berger-s3?squash=3",
        "builtin:h2xr",
    ])
    def test_first_log_is_curvature_obstruction(self, field, uri):
        bg = load_background(uri, field)
        s = expand(bg, N=4)
        assert not is_log_free(s)
        assert s.get_b(1, 1) == project(bg.starF, PLUS)
        assert s.get_a(1, 1).is_zero()
        assert s.get_phi(1, 1).is_zero()
        # (1, 1) is the lowest-order log anywhere in the table
        logs = sorted((k, p) for (k, p) in s.addresses() if p >= 1)
        assert logs[0] == (1, 1)

    def test_log_depth_bounded_by_order(self, catalog_case, field, rng):
        bg, _ = catalog_case
        s = expand(bg, rand_free_data(rng, field), N=6)
        for (k, p) in s.addresses():
            assert p <= k

    def test_parity(self, catalog_case, field, rng):
        bg, _ = catalog_case
        s = expand(bg, rand_free_data(rng, field), N=8)
        assert assert_parity(s) == []

    def test_free_data_enters_affinely_at_low_order(self, field, rng):
        bg = load_background("builtin:round-s3", field)
        f1 = rand_free_data(rng, field)
        f2 = rand_free_data(rng, field)
        s0 = expand(bg, FreeData.zero(field), N=2)
        s1 = expand(bg, f1, N=2)
        s2 = expand(bg, f2, N=2)
        s12 = expand(bg, f1 + f2, N=2)
        for (k, p) in {(1, 0), (1, 1), (2, 0), (2, 1)}:
            for get in ("get_a", "get_b", "get_phi"):
                v0 = getattr(s0, get)(k, p)
                lhs = getattr(s12, get)(k, p) - v0
                rhs = (getattr(s1, get)(k, p) - v0) + (getattr(s2, get)(k, p) - v0)
                assert lhs == rhs


class TestResiduals:
    def test_zero_through_order_eight(self, catalog_case, field, rng):
        bg, _ = catalog_case
        s = expand(bg, rand_free_data(rng, field), N=8)
        assert check_residuals(s) == []

    def test_corrupted_coefficient_is_detected(self, field):
        bg = load_background("builtin:round-s3", field)
        s = expand(bg, matched_s3_free(field), N=4)
        Ra, Rb, Rphi = residual_at(s, 3, 0)
        assert Ra.is_zero() and Rb.is_zero() and Rphi.is_zero()
        s._b[(3, 0)] = s.get_b(3, 0) + _e(field, Fraction(1, 7))
        Ra, Rb, Rphi = residual_at(s, 3, 0)
        assert not Rb.is_zero()
        assert check_residuals(s) != []

    def test_requires_background(self, field):
        s = PhgSeries(field=field, order=2, background_name="detached")
        with pytest.raises(ValueError):
            residual_at(s, 1, 0)


class TestExpandApi:
    def test_rejects_low_order(self, field):
        bg = load_background("builtin:flat", field)
        with pytest.raises(ValueError):
            expand(bg, N=1)

    def test_determinism(self, field, rng):
        bg = load_background("builtin:berger-s3?squash=2", field)
        free = rand_free_data(rng, field)
        t1 = to_json(expand(bg, free, N=5))
        t2 = to_json(expand(bg, free, N=5))
        assert t1 == t2

    def test_float_mode_tracks_rational(self, rng):
        rat = expand(load_background("builtin:berger-s3?squash=2"), N=5)
        ff = FloatField(128)
        flo = expand(load_background("builtin:berger-s3?squash=2", ff), N=5)
        for (k, p) in rat.addresses():
            for get in ("get_a", "get_b", "get_phi"):
                exact = getattr(rat, get)(k, p)
                approx = getattr(flo, get)(k, p)
                ev = exact.to_floats()
                av = approx.to_floats()
                if exact.degree == 0:
                    pairs = zip(ev, av)
                else:
                    pairs = ((x, y) for re_, ra_ in zip(ev, av)
                             for x, y in zip(re_, ra_))
                for x, y in pairs:
                    assert abs(x - y) <= 1e-10


class TestEvaluate:
    def test_domain(self, field):
        s = expand(load_background("builtin:round-s3", field), N=4)
        for bad in (0.0, 1.0, -0.5, 2.0):
            with pytest.raises(ValueError):
                evaluate(s, bad)

    def test_truncation_cannot_exceed_order(self, field):
        s = expand(load_background("builtin:round-s3", field), N=4)
        with pytest.raises(ValueError):
            evaluate(s, 0.3, N=6)

    def test_background_terms_present(self, field):
        bg = load_background("builtin:round-s3", field)
        s = expand(bg, N=2)
        A, Phi, Phi_y = evaluate(s, 0.5)
        # A = W + O(y^2), Phi = e/y + O(y)
        assert abs(A[0][0] - 1.0) < 0.2
        assert abs(Phi[0][0] - 2.0) < 0.2
        assert abs(Phi_y[0]) < 1e-14


class TestSerialization:
    def test_round_trip_bytes(self, field, rng):
        bg = load_background("builtin:h2xr", field)
        s = expand(bg, rand_free_data(rng, field), N=5)
        text = to_json(s)
        again = from_json(text, background=bg)
        assert to_json(again) == text

    def test_round_trip_preserves_table(self, field):
        bg = load_background("builtin:berger-s3?squash=2", field)
        s = expand(bg, N=4)
        again = from_json(to_json(s), background=bg)
        assert sorted(again.addresses()) == sorted(s.addresses())
        for (k, p) in s.addresses():
            assert again.get_a(k, p) == s.get_a(k, p)
            assert again.get_b(k, p) == s.get_b(k, p)
            assert again.get_phi(k, p) == s.get_phi(k, p)
        assert check_residuals(again) == []

    def test_background_name_mismatch(self, field):
        s = expand(load_background("builtin:round-s3", field), N=2)
        other = load_background("builtin:flat", field)
        with pytest.raises(ValueError):
            from_json(to_json(s), background=other)

    def test_float_series_round_trip(self):
        ff = FloatField(128)
        bg = load_background("builtin:round-s3", ff)
        s = expand(bg, N=4)
        text = to_json(s)
        again = from_json(text, background=bg)
        assert to_json(again) == text
