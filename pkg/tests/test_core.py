import math
import sys
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from asyncheat.core import (ContractError, Dirichlet, DomainError, PartitionSpec,
                            Periodic, SolverParams, TemperatureField, check_ends,
                            constant_init, cosine_init, derive_r, impose, l2_norm,
                            linear_steady_state, total_heat)
from asyncheat.sync import sync_step

ULP_HALF = math.ulp(0.5)


def ulps_apart(a: float, b: float) -> float:
    return abs(a - b) / math.ulp(b)


class TestDeriveR:
    def test_default_parameters(self):
        # 0.01 and 0.1 are not binary-exact, so 0.5 is reached to within 2 ulps
        assert abs(derive_r(0.5, 0.01, 0.1) - 0.5) <= 2 * ULP_HALF

    def test_identity(self):
        assert derive_r(1.0, 1.0, 1.0) == 1.0

    def test_direct_arithmetic(self):
        assert abs(derive_r(0.25, 0.02, 0.1) - 0.5) <= 2 * ULP_HALF

    def test_binary_exact_inputs(self):
        assert derive_r(0.5, 0.25, 0.5) == 0.5
        assert derive_r(2.0, 0.125, 1.0) == 0.25

    @pytest.mark.parametrize("args", [(0, 1, 1), (1, -1, 1), (1, 1, 0), (-0.5, 0.01, 0.1)])
    def test_rejects_non_positive(self, args):
        with pytest.raises(DomainError):
            derive_r(*args)

    @given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
    def test_inverts_within_two_ulps(self, a, t, x):
        r = derive_r(a, t, x)
        back = Fraction(r) * Fraction(x) ** 2 / Fraction(t)
        assert abs(back - Fraction(a)) <= 2 * Fraction(math.ulp(a))


class TestSolverParams:
    def test_window(self):
        assert SolverParams(0.5, 0.01, 0.1).stable
        assert SolverParams.from_r(0.5).r == 0.5
        with pytest.raises(DomainError):
            SolverParams.from_r(0.6)
        with pytest.raises(DomainError):
            SolverParams(0.5, 0.012, 0.1)

    def test_unchecked(self):
        p = SolverParams.unchecked(0.6, 1.0, 1.0)
        assert p.r == 0.6 and not p.stable
        with pytest.raises(DomainError):
            SolverParams.unchecked(0.0, 1.0, 1.0)

    def test_r_follows_inputs(self):
        p = SolverParams(0.25, 0.02, 0.1)
        assert p.r == derive_r(0.25, 0.02, 0.1)


class TestField:
    def test_rejects_short_and_nonfinite(self):
        with pytest.raises(DomainError):
            TemperatureField([1.0, 2.0])
        with pytest.raises(DomainError):
            TemperatureField([1.0, np.nan, 0.0])
        with pytest.raises(DomainError):
            TemperatureField([1.0, np.inf, 0.0])

    def test_immutable(self):
        u = TemperatureField([1.0, 2.0, 3.0])
        with pytest.raises(ValueError):
            u.values[0] = 5.0

    def test_copy_on_construction(self):
        a = np.array([1.0, 2.0, 3.0])
        u = TemperatureField(a)
        a[0] = 9.0
        assert u[0] == 1.0


class TestCosineInit:
    def test_ends(self):
        u = cosine_init(100)
        assert u[0] == 1.0
        assert abs(u[99]) <= 1e-15

    def test_quarter_turn(self):
        # 3*pi*33 / 198 == pi/2
        assert abs(cosine_init(100)[33]) <= 1e-15

    def test_rejects_small_n(self):
        with pytest.raises(DomainError):
            cosine_init(2)

    @given(st.integers(3, 2000))
    def test_end_values_any_n(self, N):
        u = cosine_init(N)
        assert u[0] == 1.0
        assert abs(u[N - 1]) <= 1e-15


class TestLinearSteadyState:
    @pytest.mark.parametrize("args,expected", [
        ((5, 1, 0), [1, 0.75, 0.5, 0.25, 0]),
        ((3, 2, 2), [2, 2, 2]),
        ((4, 0, 3), [0, 1, 2, 3]),
    ])
    def test_examples(self, args, expected):
        assert linear_steady_state(*args).values.tolist() == expected

    @given(st.integers(3, 200), st.floats(-10, 10), st.floats(-10, 10),
           st.floats(1e-3, 0.5))
    def test_fixed_point_of_sync_step(self, N, c1, c2, r):
        u = linear_steady_state(N, c1, c2)
        v = sync_step(u, SolverParams.from_r(r), Dirichlet(c1, c2))
        assert np.max(np.abs(v.values - u.values)) <= 1e-14 * max(1.0, abs(c1), abs(c2))


class TestNorms:
    def test_three_four_five(self):
        assert l2_norm(TemperatureField([3.0, 4.0, 0.0])) == 5.0

    def test_zero(self):
        assert l2_norm(constant_init(10, 0.0)) == 0.0

    def test_cosine_against_sums(self):
        N = 100
        vals = [math.cos(3 * math.pi * i / (2 * (N - 1))) ** 2 for i in range(N)]
        brute = math.sqrt(math.fsum(v * v for v in vals))
        # closed form: sum of cos^4(i pi / 66) over i = 0..99 is 37.625
        assert brute == pytest.approx(math.sqrt(37.625), abs=1e-13)
        assert l2_norm(cosine_init(N)) == pytest.approx(brute, abs=4e-15)

    def test_total_heat_examples(self):
        assert total_heat(TemperatureField([2.0, 0.0, 1.0])) == 3.0
        assert total_heat(constant_init(4, 1.0)) == 4.0

    def test_total_heat_cosine(self):
        N = 100
        brute = math.fsum(math.cos(3 * math.pi * i / (2 * (N - 1))) ** 2 for i in range(N))
        # closed form: 50 exactly
        assert brute == pytest.approx(50.0, abs=1e-13)
        assert total_heat(cosine_init(N)) == pytest.approx(brute, abs=1e-13)

    @given(st.lists(st.floats(-1e100, 1e100), min_size=3, max_size=50))
    def test_nonnegative_and_zero_iff_zero(self, xs):
        n = l2_norm(TemperatureField(xs))
        assert n >= 0
        assert (n == 0) == all(x == 0 for x in xs)

    @given(st.lists(st.floats(-1e6, 1e6), min_size=3, max_size=50),
           st.floats(-1e6, 1e6))
    def test_homogeneous(self, xs, s):
        u = TemperatureField(xs)
        lhs = l2_norm(u.scaled(s))
        rhs = abs(s) * l2_norm(u)
        assert abs(lhs - rhs) <= 4 * math.ulp(rhs) + sys.float_info.min


class TestBoundary:
    def test_impose_and_check(self):
        u = cosine_init(100)
        with pytest.raises(ContractError):
            check_ends(u, Dirichlet(1.0, 0.0))
        v = impose(u, Dirichlet(1.0, 0.0))
        check_ends(v, Dirichlet(1.0, 0.0))
        assert v[99] == 0.0 and np.array_equal(v.values[:99], u.values[:99])
        assert impose(u, Periodic()) is u


class TestPartition:
    def test_owner(self):
        part = PartitionSpec(12, 4)
        assert part.P == 3
        assert [part.owner(i) for i in range(12)] == [0] * 4 + [1] * 4 + [2] * 4

    def test_divisibility(self):
        with pytest.raises(DomainError):
            PartitionSpec(100, 7)

    def test_single(self):
        assert PartitionSpec.single(10).P == 1
