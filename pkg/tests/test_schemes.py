import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stabcorr.core import AffineOperator, SplitSystem, StageSolveError, diagonal_system
from stabcorr.harness import integrate
from stabcorr.schemes import (PRESETS, THETA_L, SchemeConfig, SchemeId, douglas_step, get_scheme, hv_step,
                              hw_step, sc1a_step, sc1b_step, step)
from stabcorr.stability import stability_r, stability_r_star

ALL = ["DOUGLAS", "SC1A", "SC1B", "HV", "HW", "CS"]


def scalar(lam0, *lams):
    return diagonal_system(lam0, list(lams))


# scalar oracles, written from the stage formulas with plain floats

def douglas_oracle(z0, zs, theta, u=1.0):
    v = u + (z0 + sum(zs)) * u
    for z in zs:
        v = (v - theta * z * u) / (1 - theta * z)
    return v


def hv_oracle(z0, zs, theta, u=1.0):
    vs = douglas_oracle(z0, zs, theta, u)
    v = u + 0.5 * ((z0 + sum(zs)) * u + (z0 + sum(zs)) * vs)
    for z in zs:
        v = (v - theta * z * vs) / (1 - theta * z)
    return v


def hw_oracle(z0, zs, theta, u=1.0):
    v0s = u + (z0 + sum(zs)) * u
    vs = douglas_oracle(z0, zs, theta, u)
    v = v0s + 0.5 * z0 * (vs - u) + (0.5 - theta) * sum(z * (vs - u) for z in zs)
    for z in zs:
        v = (v - theta * z * u) / (1 - theta * z)
    return v


def test_config_validation():
    with pytest.raises(ValueError):
        SchemeConfig(SchemeId.DOUGLAS, 0.4)
    with pytest.raises(ValueError):
        SchemeConfig(SchemeId.HV, 0.0)
    assert PRESETS["CS"].label == "CS"
    assert PRESETS["HW"].theta == pytest.approx(1 - math.sqrt(2) / 2)
    assert get_scheme("sc1a") is PRESETS["SC1A"]
    with pytest.raises(ValueError, match="unknown scheme"):
        get_scheme("RK4")


def test_douglas_examples():
    assert douglas_step(scalar(0.0, -2.0), np.ones(1), 0.0, 1.0, 0.5)[0] == pytest.approx(0.0, abs=1e-15)
    assert douglas_step(scalar(-0.5, 0.0), np.ones(1), 0.0, 1.0, 0.5)[0] == pytest.approx(0.5)


@pytest.mark.parametrize("fn", [sc1a_step, sc1b_step])
def test_sc1_examples(fn):
    zero_implicit = scalar(1.0, 0.0)
    assert fn(zero_implicit, np.ones(1), 0.0, 0.1)[0] == pytest.approx(1.105, rel=1e-14)
    assert fn(scalar(-0.5, -1.0), np.ones(1), 0.0, 1.0)[0] == pytest.approx(0.25, rel=1e-14)


def test_hv_stage_oracle():
    out = hv_step(scalar(0.0, -2.0), np.ones(1), 0.0, 1.0, THETA_L)[0]
    assert out == pytest.approx(hv_oracle(0.0, [-2.0], THETA_L), abs=1e-14)


@pytest.mark.parametrize("theta", [0.5, THETA_L, 0.8])
def test_hw_stage_oracle(theta):
    out = hw_step(scalar(0.0, -2.0), np.ones(1), 0.0, 1.0, theta)[0]
    assert out == pytest.approx(hw_oracle(0.0, [-2.0], theta), abs=1e-14)


@settings(max_examples=100)
@given(st.lists(st.floats(-20, 0), min_size=3, max_size=4), st.floats(-2, 0.5), st.floats(0.2, 1.0))
def test_two_pass_schemes_match_oracles(zs, z0, theta):
    sys = scalar(z0, *zs)
    u = np.ones(1)
    assert hv_step(sys, u, 0.0, 1.0, theta)[0] == pytest.approx(hv_oracle(z0, zs, theta), rel=1e-12, abs=1e-13)
    assert hw_step(sys, u, 0.0, 1.0, theta)[0] == pytest.approx(hw_oracle(z0, zs, theta), rel=1e-12, abs=1e-13)
    assert douglas_step(sys, u, 0.0, 1.0, max(theta, 0.5))[0] == pytest.approx(
        douglas_oracle(z0, zs, max(theta, 0.5)), rel=1e-12, abs=1e-13)


@pytest.mark.parametrize("name", ALL)
def test_zero_field_is_identity(name):
    sys = scalar(0.0, 0.0, 0.0)
    u = np.array([0.3])
    assert np.array_equal(step(sys, name, u, 0.0, 0.7), u)


@settings(max_examples=200)
@given(st.data())
def test_sc1_matches_stability_function(data):
    s = data.draw(st.integers(1, 4))
    re = st.floats(-50, 0)
    im = st.floats(-50, 50)
    z = [complex(data.draw(re), data.draw(im)) for _ in range(s + 1)]
    r = complex(stability_r(np.array(z)))
    for fn in (sc1a_step, sc1b_step):
        re_part = fn(_complex_scalar(z), np.array([1.0, 0.0]), 0.0, 1.0)
        got = complex(re_part[0], re_part[1])
        assert abs(got - r) <= 1e-13 * max(1.0, abs(r))


def _complex_scalar(z):
    """u' = (sum z_j) u with complex rates, written as a real 2-vector (Re u, Im u)."""
    def block(c):
        return np.array([[c.real, -c.imag], [c.imag, c.real]])

    def part(c):
        B = block(c)
        return AffineOperator(lambda v, B=B: B @ v, lambda t: np.zeros(2),
                              lambda rhs, g, B=B: np.linalg.solve(np.eye(2) - g * B, rhs))

    B0 = block(z[0])
    return SplitSystem(lambda t, v: B0 @ v, [part(c) for c in z[1:]], 2)


@settings(max_examples=50)
@given(st.lists(st.floats(-100, 0), min_size=1, max_size=3))
def test_zero_explicit_part_makes_sc1_douglas(zs):
    sys = scalar(0.0, *zs)
    u = np.array([1.7])
    d = douglas_step(sys, u, 0.0, 0.3, 0.5)
    assert sc1a_step(sys, u, 0.0, 0.3)[0] == pytest.approx(d[0], rel=1e-15, abs=1e-300)
    assert sc1b_step(sys, u, 0.0, 0.3)[0] == pytest.approx(d[0], rel=1e-15, abs=1e-300)


def _steady_system():
    # u' = -u + 1 + A1 u + A2 u + g, with u* = 1 and each implicit part vanishing there
    rng = np.random.default_rng(3)
    m = 6
    A1 = -np.diag(rng.uniform(1, 5, m))
    A2 = rng.normal(size=(m, m))
    A2 = -(A2 @ A2.T) - np.eye(m)
    ustar = np.ones(m)
    parts = []
    for A in (A1, A2):
        g = -A @ ustar
        parts.append(AffineOperator(lambda v, A=A: A @ v, lambda t, g=g: g.copy(),
                                    lambda rhs, gam, A=A: np.linalg.solve(np.eye(m) - gam * A, rhs)))
    sys = SplitSystem(lambda t, v: np.sin(v - 1.0) - (v - 1.0) ** 3, parts, m)
    return sys, ustar


@pytest.mark.parametrize("name", ALL)
def test_stationarity(name):
    sys, ustar = _steady_system()
    u = ustar
    for _ in range(5):
        u = step(sys, name, u, 0.0, 0.37)
    assert np.max(np.abs(u - ustar)) <= 1e-13


@pytest.mark.parametrize("name, order", [("DOUGLAS", 1.0), ("SC1A", 2.0), ("SC1B", 2.0), ("HV", 2.0),
                                         ("HW", 2.0), ("CS", 2.0)])
def test_classical_order_on_growth_equation(name, order):
    sys = scalar(0.3, 0.3, 0.4)
    errs = []
    for n in (200, 400):
        u = integrate(sys, name, np.ones(1), 0.0, 1.0, 1.0 / n)
        errs.append(abs(u[0] - math.e))
    assert math.log2(errs[0] / errs[1]) == pytest.approx(order, abs=0.05)


def test_douglas_half_single_part_is_minus_r_star():
    rng = np.random.default_rng(7)
    z0s = list(rng.uniform(-2, 0, 20))
    z1s = list(rng.uniform(-50, 0, 20)) + [-1e8]
    for z0 in z0s:
        for z1 in z1s:
            got = douglas_step(scalar(z0, z1), np.ones(1), 0.0, 1.0, 0.5)[0]
            want = -stability_r_star(z0, [z1]).real
            assert got == pytest.approx(want, rel=1e-12, abs=1e-14)


def test_stage_errors_carry_index():
    def bad(rhs, gamma):
        raise np.linalg.LinAlgError("singular")

    ok = AffineOperator(lambda v: 0 * v, lambda t: np.zeros(1), lambda r, g: r)
    sys = SplitSystem(lambda t, v: 0 * v, [ok, AffineOperator(lambda v: 0 * v, lambda t: np.zeros(1), bad)], 1)
    with pytest.raises(StageSolveError) as info:
        douglas_step(sys, np.ones(1), 0.0, 0.1)
    assert info.value.stage == 2
    with pytest.raises(StageSolveError) as info:
        hv_step(sys, np.ones(1), 0.0, 0.1, THETA_L)
    assert info.value.pass_index == 1


@pytest.mark.parametrize("name", ALL)
def test_rejects_nonpositive_dt(name):
    with pytest.raises(ValueError):
        step(scalar(0.0, -1.0), name, np.ones(1), 0.0, 0.0)
