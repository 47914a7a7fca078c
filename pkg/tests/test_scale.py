import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scalemaxent.errors import DomainError, SpecParseError
from scalemaxent.scale import (
    IDENTITY,
    LinearLog,
    LinearLogLinear,
    LogLinear,
    LogLinearLog,
    ObservableReduction,
    PureLog,
    ScaleParams,
    ScaleSpec,
    T_of_w,
    check_affine_invariance,
    dT_dw,
    eval_T,
    eval_T_prime,
    eval_w,
    finite_transform,
    generator_flow,
)


def spec(*levels):
    return ScaleSpec(tuple(levels))


# --- eval_w ----------------------------------------------------------------


def test_pure_log_at_e():
    assert eval_w(spec(PureLog()), math.e) == pytest.approx(1.0, abs=1e-15)


def test_linear_log_zero_reduces_to_log():
    assert eval_w(spec(LinearLog(0.0)), 10.0) == pytest.approx(math.log(10.0), rel=1e-15)


def test_log_linear_at_one():
    assert eval_w(spec(LogLinear(1.0)), 1.0) == 1.0


def test_identity_spec_is_identity():
    assert eval_w(spec(), 3.25) == 3.25


@pytest.mark.parametrize(
    "s, bad",
    [
        (spec(PureLog()), 0.0),
        (spec(PureLog()), -1.0),
        (spec(PureLog(), PureLog()), 0.5),
        (spec(LinearLog(2.0)), -2.0),
        (spec(LogLinearLog(0.0, 1.0, 1.0)), 1.5),
    ],
)
def test_domain_errors(s, bad):
    with pytest.raises(DomainError):
        eval_w(s, bad)


@pytest.mark.parametrize(
    "s, expected",
    [
        (spec(), (-math.inf, math.inf)),
        (spec(PureLog()), (0.0, math.inf)),
        (spec(PureLog(), PureLog()), (1.0, math.inf)),
        (spec(LinearLog(2.0)), (-2.0, math.inf)),
        (spec(LogLinearLog(1.0, 3.0, 0.5)), (1.0, 3.0)),
    ],
)
def test_domain_inference(s, expected):
    lo, hi = s.domain()
    assert lo == pytest.approx(expected[0], abs=1e-12)
    assert hi == expected[1]


def test_log_linear_log_requires_order():
    with pytest.raises(ValueError):
        LogLinearLog(2.0, 1.0, 0.0)


def test_linear_log_requires_nonnegative_c():
    with pytest.raises(ValueError):
        LinearLog(-1.0)


# --- eval_T ----------------------------------------------------------------


def test_eval_T_pure_log_beta_one():
    assert eval_T(spec(PureLog()), ScaleParams(0.0, 1.0, 1.0), 2.0) == pytest.approx(1.0, rel=1e-15)


def test_eval_T_linear_limit():
    assert eval_T(spec(), ScaleParams(0.0, 1.0, 0.0), 3.0) == 3.0


def test_eval_T_beta_to_zero_continuity():
    assert eval_T(spec(), ScaleParams(5.0, 2.0, 0.0), 3.0) == 11.0
    assert abs(eval_T(spec(), ScaleParams(5.0, 2.0, 1e-8), 3.0) - 11.0) < 1e-6


def test_eval_T_overflow():
    with pytest.raises(OverflowError):
        eval_T(spec(), ScaleParams(0.0, 1.0, 1.0), 1000.0)


def test_eval_T_propagates_domain_error():
    with pytest.raises(DomainError):
        eval_T(spec(PureLog()), ScaleParams(), -1.0)


# --- eval_T_prime ------------------------------------------------------------


def test_T_prime_pure_log():
    assert eval_T_prime(spec(PureLog()), ScaleParams(0.0, 1.0, 1.0), 2.0) == pytest.approx(1.0, rel=1e-15)


@pytest.mark.parametrize("y", [-3.0, 0.0, 2.5, 40.0])
def test_T_prime_linear_is_constant(y):
    assert eval_T_prime(spec(), ScaleParams(0.0, 0.7, 0.0), y) == pytest.approx(0.7, rel=1e-15)


FD_CASES = [
    (spec(PureLog()), ScaleParams(0.3, 1.2, 0.7), 2.0),
    (spec(PureLog(), PureLog()), ScaleParams(0.0, 1.0, 1.5), 5.0),
    (spec(LinearLog(1.0)), ScaleParams(1.0, -0.5, 0.9), 0.4),
    (spec(LogLinear(0.5)), ScaleParams(0.0, 1.0, -0.8), 3.0),
    (spec(LogLinearLog(0.0, 2.0, 1.0)), ScaleParams(0.0, 1.0, 0.4), 0.7),
    (spec(LinearLogLinear(1.0, 2.0, 1.0)), ScaleParams(2.0, 1.0, 0.3), 1.5),
    (spec(PureLog(), LinearLog(0.5)), ScaleParams(0.0, 2.0, 0.0), 3.0),
]


@pytest.mark.parametrize("s, p, y", FD_CASES)
def test_T_prime_matches_finite_difference(s, p, y):
    h = 1e-6
    fd = (eval_T(s, p, y + h) - eval_T(s, p, y - h)) / (2 * h)
    d = eval_T_prime(s, p, y)
    assert abs(d - fd) < 1e-5 * (1 + abs(d))


def test_T_prime_closed_form():
    s, p, y = spec(PureLog(), LinearLog(0.5)), ScaleParams(0.5, 1.2, 0.6), 2.0
    w = eval_w(s, y)
    w_prime = 1.0 / (y * (0.5 + math.log(y)))
    assert eval_T_prime(s, p, y) == pytest.approx((1.2 + 0.6 * 0.5) * w_prime * math.exp(0.6 * w), rel=1e-14)


def test_T_prime_with_reduction_chain_rule():
    red = ObservableReduction.centered_square(1.0)
    p = ScaleParams(0.0, 1.0, 0.0)
    assert eval_T_prime(spec(), p, 3.0, red) == pytest.approx(4.0)


# --- finite_transform --------------------------------------------------------


def test_finite_transform_identity():
    assert finite_transform(1.3, 0.4, 0.0, 2.5) == 2.5


def test_finite_transform_value():
    assert finite_transform(1.0, 1.0, math.log(2.0), 0.0) == pytest.approx(1.0, rel=1e-15)


def test_finite_transform_linear_branch():
    assert finite_transform(2.0, 0.0, 0.5, 1.0) == 2.0


reals = st.floats(-1.0, 1.0, allow_nan=False)


@settings(max_examples=300, deadline=None)
@given(alpha=st.floats(-2, 2), beta=st.floats(-1, 1), e1=reals, e2=reals, T=st.floats(-5, 5))
def test_finite_transform_composes(alpha, beta, e1, e2, T):
    lhs = finite_transform(alpha, beta, e1, finite_transform(alpha, beta, e2, T))
    rhs = finite_transform(alpha, beta, e1 + e2, T)
    assert abs(lhs - rhs) < 1e-12


@settings(max_examples=200, deadline=None)
@given(alpha=st.floats(-2, 2), beta=st.floats(-1.5, 1.5), eps=reals, T=st.floats(-3, 3))
def test_finite_transform_is_flow_of_ode(alpha, beta, eps, T):
    # d/d eps of the flow equals alpha + beta * T along the orbit
    h = 1e-6
    d = (finite_transform(alpha, beta, eps + h, T) - finite_transform(alpha, beta, eps - h, T)) / (2 * h)
    cur = finite_transform(alpha, beta, eps, T)
    assert abs(d - (alpha + beta * cur)) < 1e-6 * (1 + abs(d))


# --- T(w) ODE and branch continuity -----------------------------------------


@settings(max_examples=300, deadline=None)
@given(
    T0=st.floats(-2, 2), alpha=st.floats(-2, 2), beta=st.floats(-2, 2), w=st.floats(-3, 3)
)
def test_ode_residual(T0, alpha, beta, w):
    p = ScaleParams(T0, alpha, beta)
    h = 1e-5
    d = (T_of_w(w + h, p) - T_of_w(w - h, p)) / (2 * h)
    assert abs(d - beta * T_of_w(w, p) - alpha) < 1e-6


@settings(max_examples=200, deadline=None)
@given(T0=st.floats(-2, 2), alpha=st.floats(-2, 2), beta=st.floats(-2, 2), w=st.floats(-3, 3))
def test_analytic_dT_dw_satisfies_ode(T0, alpha, beta, w):
    p = ScaleParams(T0, alpha, beta)
    # the linear branch below |beta| = 1e-9 is off by O(beta)
    assert dT_dw(w, p) == pytest.approx(alpha + beta * T_of_w(w, p), abs=1e-8, rel=1e-12)


def test_beta_limit_continuity_on_grid():
    w = np.linspace(-5, 5, 101)
    for T0, alpha in [(0.0, 1.0), (5.0, 2.0), (-1.0, 0.3)]:
        lin = T0 + alpha * w
        near = T_of_w(w, ScaleParams(T0, alpha, 1e-8))
        assert np.max(np.abs(near - lin) / (1 + np.abs(lin))) < 1e-5


def test_small_beta_uses_stable_form():
    # (e^{bw} - 1)/b with b = 1e-7 keeps ~9 digits without cancellation
    w = 2.0
    v = T_of_w(w, ScaleParams(0.0, 1.0, 1e-7))
    assert v == pytest.approx(math.expm1(2e-7) / 1e-7, rel=1e-15)


# --- affine invariance -------------------------------------------------------


def test_log_square_is_affine():
    fit = check_affine_invariance(spec(PureLog()), ScaleParams(0.0, 1.0, 0.0), lambda f: f * f, [1.5, 2.0, 4.0, 9.0])
    assert fit.a == pytest.approx(0.0, abs=1e-12)
    assert fit.b == pytest.approx(2.0, rel=1e-12)
    assert fit.max_residual < 1e-12


def test_identity_shift_is_affine():
    fit = check_affine_invariance(spec(), ScaleParams(0.0, 1.3, 0.0), lambda f: f + 5.0, [0.0, 1.0, 2.0, 7.0])
    assert fit.a == pytest.approx(5 * 1.3, rel=1e-12)
    assert fit.b == pytest.approx(1.0, rel=1e-12)
    assert fit.max_residual < 1e-12


def test_log_shift_is_not_affine():
    fit = check_affine_invariance(spec(PureLog()), ScaleParams(0.0, 1.0, 0.0), lambda f: f + 1.0, [1.0, 2.0, 4.0, 8.0])
    assert fit.max_residual > 1e-3


def test_affine_check_rejects_out_of_domain_image():
    with pytest.raises(DomainError):
        check_affine_invariance(spec(PureLog()), ScaleParams(), lambda f: f - 10.0, [1.0, 2.0, 3.0])


def test_affine_check_needs_three_points():
    with pytest.raises(ValueError):
        check_affine_invariance(spec(), ScaleParams(), lambda f: f, [1.0, 2.0])


@pytest.mark.parametrize(
    "s",
    [spec(), spec(PureLog()), spec(LinearLog(1.0)), spec(PureLog(), PureLog()), spec(LogLinear(0.3))],
)
@pytest.mark.parametrize("p", [ScaleParams(0.0, 1.0, 0.0), ScaleParams(0.5, 1.0, 0.8), ScaleParams(0.0, 2.0, -0.4)])
def test_generator_flow_closure(s, p):
    # the flow w -> w + eps acts on T as the finite transform, an affine map
    lo, _ = s.domain()
    base = (lo if math.isfinite(lo) else 0.0) + np.array([0.5, 1.0, 2.0, 3.5, 6.0])
    G = generator_flow(s, 0.3)
    fit = check_affine_invariance(s, p, G, base)
    assert fit.max_residual < 1e-10
    T = eval_T(s, p, base)
    assert np.allclose(eval_T(s, p, G(base)), finite_transform(p.alpha, p.beta, 0.3, T), rtol=1e-12, atol=1e-12)


# --- reductions --------------------------------------------------------------


@pytest.mark.parametrize(
    "red, y, f",
    [
        (ObservableReduction.identity(), 2.0, 2.0),
        (ObservableReduction.centered_square(1.0), 3.0, 4.0),
        (ObservableReduction.absolute_value(), -2.5, 2.5),
        (ObservableReduction.power(3.0), 2.0, 8.0),
        (ObservableReduction.log(), math.e, 1.0),
        (ObservableReduction.ratio(), 1.0, 0.5),
        (ObservableReduction.centered_square(0.0, ObservableReduction.log()), math.e**2, 4.0),
    ],
)
def test_reduction_values(red, y, f):
    assert red(y) == pytest.approx(f, rel=1e-15)


@pytest.mark.parametrize(
    "red",
    [
        ObservableReduction.centered_square(0.5),
        ObservableReduction.power(2.5),
        ObservableReduction.log(),
        ObservableReduction.ratio(),
    ],
)
def test_reduction_derivative_matches_fd(red):
    y, h = 1.7, 1e-6
    _, d = red.value_and_derivative(np.array([y]))
    fd = (red(y + h) - red(y - h)) / (2 * h)
    assert d[0] == pytest.approx(fd, rel=1e-7)


def test_reduction_image():
    assert ObservableReduction.centered_square(0.0).image((-1.0, 2.0)) == (0.0, 4.0)
    assert ObservableReduction.ratio().image((0.0, math.inf)) == (0.0, 1.0)


# --- serialization -----------------------------------------------------------


def test_json_round_trip():
    s = spec(PureLog(), LinearLog(1.0), LogLinear(0.5), LogLinearLog(0.0, 2.0, 1.0), LinearLogLinear(1.0, 2.0, -1.0))
    again = ScaleSpec.from_json(s.dumps())
    assert again == s
    assert json.loads(s.dumps())["levels"][1] == {"kind": "linear_log", "c": 1.0}


@pytest.mark.parametrize(
    "doc",
    [
        '{"levels": [{"kind": "hyper_log"}]}',
        '{"levels": [{"kind": "linear_log"}]}',
        '{"levels": [{"kind": "pure_log", "c": 1}]}',
        '{"levels": {}}',
        '{"nope": []}',
        "{not json",
    ],
)
def test_json_parse_errors(doc):
    with pytest.raises(SpecParseError):
        ScaleSpec.from_json(doc)


def test_identity_reduction_constant():
    assert IDENTITY.is_identity
    assert ObservableReduction.from_json(IDENTITY.to_json()) == IDENTITY
