import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from stabcorr.core import (AffineOperator, Layout, SplitSystem, diagonal_system, norm_l2_discrete,
                           norm_max)

# keep squares out of the subnormal range
finite = st.floats(-1e6, 1e6, allow_nan=False).filter(lambda x: x == 0 or abs(x) > 1e-100)
vectors = arrays(np.float64, st.integers(1, 40), elements=finite)


@pytest.mark.parametrize("v, expected", [
    ((1, 1, 1, 1), 1.0),
    ((3, 4), math.sqrt(12.5)),
    ((0, 0, 0), 0.0),
])
def test_l2_examples(v, expected):
    assert norm_l2_discrete(np.array(v, float)) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("v, expected", [((1, -7, 3), 7.0), ((0, 0), 0.0), ((-2.5,), 2.5)])
def test_max_examples(v, expected):
    assert norm_max(np.array(v, float)) == expected


@pytest.mark.parametrize("norm", [norm_l2_discrete, norm_max])
def test_empty_state_rejected(norm):
    with pytest.raises(ValueError, match="empty state"):
        norm(np.array([]))


@given(vectors)
def test_l2_bounded_by_max(v):
    assert norm_l2_discrete(v) <= norm_max(v) * (1 + 1e-15)


@given(vectors, st.floats(-1e3, 1e3).filter(lambda a: a == 0 or abs(a) > 1e-100))
def test_norms_are_homogeneous(v, alpha):
    for norm in (norm_l2_discrete, norm_max):
        assert norm(alpha * v) == pytest.approx(abs(alpha) * norm(v), rel=1e-12, abs=1e-300)


def test_parts_summed_in_index_order():
    # values chosen so that float addition order matters
    big, small = 1e16, 1.0
    ops = [AffineOperator(lambda v: 0 * v, lambda t, c=c: np.array([c]), lambda r, g: r)
           for c in (small, -big)]
    sys = SplitSystem(lambda t, v: np.array([big]), ops, 1, Layout("scalar", (1,)))
    assert sys(0.0, np.zeros(1))[0] == (big + small) - big


def test_split_system_rejects_empty_parts():
    with pytest.raises(ValueError):
        SplitSystem(lambda t, v: v, [], 3)


@settings(max_examples=50)
@given(arrays(np.float64, 5, elements=st.floats(-10, 10)), arrays(np.float64, 5, elements=st.floats(-10, 10)),
       st.floats(-3, 3), st.floats(-3, 3))
def test_apply_is_linear(u, v, a, b):
    sys = diagonal_system(0.0, [np.linspace(-2, 0, 5)])
    op = sys.implicit_parts[0]
    assert np.allclose(op.apply(a * u + b * v), a * op.apply(u) + b * op.apply(v), atol=1e-12)


def test_stage_solve_identity_at_zero_gamma_and_round_trip():
    rate = np.array([-1.0, -4.0, -0.5])
    op = diagonal_system(0.0, [rate]).implicit_parts[0]
    rhs = np.array([1.0, -2.0, 3.0])
    assert np.array_equal(op.stage_solve(rhs, 0.0), rhs)
    w = op.stage_solve(rhs, 0.3)
    assert np.allclose(w - 0.3 * op.apply(w), rhs, rtol=0, atol=1e-14)
