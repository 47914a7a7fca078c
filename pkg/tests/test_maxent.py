import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from scalemaxent.errors import DomainError, NotNormalizableError
from scalemaxent.maxent import (
    CumulativeDerivative,
    JACOBIAN_LOG,
    Uniform,
    change_of_variable,
    density_from_kernel,
    grid_csv,
    measure_from_name,
    normalize,
    quantile_grid,
    relative_entropy,
    report,
    report_json,
    solution_invariance,
    solve_multiplier,
    synth_density,
)
from scalemaxent.scale import (
    IDENTITY,
    LogLinear,
    ObservableReduction,
    PureLog,
    ScaleParams,
    ScaleSpec,
)

LINEAR = ScaleParams(0.0, 1.0, 0.0)
INF = math.inf


def spec(*levels):
    return ScaleSpec(tuple(levels))


def total_mass(model):
    v, _ = integrate.quad(model.pdf, *model.support, limit=200)
    return v


# --- synthesis ---------------------------------------------------------------


def test_exponential_from_identity():
    m = synth_density(spec(), LINEAR, IDENTITY, Uniform, (0.0, INF), 1.0)
    assert m.Z == pytest.approx(1.0, rel=1e-10)
    y = np.linspace(0.01, 20, 50)
    assert np.allclose(m.pdf(y), np.exp(-y), rtol=1e-10)


def test_gaussian_kernel_from_centered_square():
    m = synth_density(spec(), LINEAR, ObservableReduction.centered_square(0.0), Uniform, (-INF, INF), 1.0)
    assert m.Z == pytest.approx(math.sqrt(math.pi), rel=1e-10)


def test_double_log_pareto_diverges():
    with pytest.raises(NotNormalizableError):
        synth_density(spec(PureLog(), PureLog()), LINEAR, IDENTITY, Uniform, (math.e, INF), 2.0)


def test_support_outside_domain():
    with pytest.raises(DomainError):
        synth_density(spec(PureLog()), LINEAR, IDENTITY, Uniform, (-1.0, INF), 2.0)


def test_degenerate_support():
    with pytest.raises((DomainError, ValueError)):
        density_from_kernel(lambda y: np.zeros_like(y), (1.0, 1.0))


@pytest.mark.parametrize(
    "s, p, red, measure, support, lam",
    [
        (spec(), LINEAR, IDENTITY, Uniform, (0.0, INF), 0.7),
        (spec(PureLog()), LINEAR, IDENTITY, Uniform, (1.0, INF), 3.0),
        (spec(PureLog()), ScaleParams(0.0, 1.0, 1.0), IDENTITY, Uniform, (0.0, INF), 2.0),
        (spec(LogLinear(0.5)), LINEAR, IDENTITY, Uniform, (0.0, INF), 0.5),
        (spec(PureLog()), ScaleParams(0.0, 1.0, 1.5), IDENTITY, CumulativeDerivative, (0.0, INF), 1.2),
        (spec(), LINEAR, ObservableReduction.centered_square(1.0), Uniform, (-INF, INF), 0.3),
        (spec(PureLog()), LINEAR, IDENTITY, JACOBIAN_LOG, (1.0, INF), 2.5),
    ],
)
def test_models_integrate_to_one(s, p, red, measure, support, lam):
    m = synth_density(s, p, red, measure, support, lam)
    assert total_mass(m) == pytest.approx(1.0, abs=1e-6)


# --- normalization -----------------------------------------------------------


@pytest.mark.parametrize(
    "log_kernel, support, Z",
    [
        (lambda y: 2 * np.log(y) - y, (0.0, INF), 2.0),
        (lambda y: np.zeros_like(y), (0.0, 1.0), 1.0),
        (lambda y: -np.sqrt(y), (0.0, INF), 2.0),
        (lambda y: -np.abs(y), (-INF, INF), 2.0),
        (lambda y: -1.5 * np.log(y), (1.0, INF), 2.0),
    ],
)
def test_normalize_constants(log_kernel, support, Z):
    from scalemaxent.maxent import DensityModel

    z, m = normalize(DensityModel(support, log_kernel))
    assert z == pytest.approx(Z, rel=1e-10)
    assert m.Z == pytest.approx(Z, rel=1e-10)


# --- multiplier solving ------------------------------------------------------


@pytest.mark.parametrize(
    "s, red, support, target, lam",
    [
        (spec(), IDENTITY, (0.0, INF), 2.0, 0.5),
        (spec(), ObservableReduction.centered_square(0.0), (-INF, INF), 0.5, 1.0),
        (spec(PureLog()), IDENTITY, (1.0, INF), 1.0, 2.0),
    ],
)
def test_solve_multiplier_examples(s, red, support, target, lam):
    m = solve_multiplier(s, red, Uniform, support, target)
    assert m.multiplier == pytest.approx(lam, rel=1e-9)
    assert abs(m.mean_T() - target) / (1 + abs(target)) < 1e-8


def test_pareto_log_mean_by_quadrature():
    # E[log y] under (g-1) y^{-g} on (1, inf) is 1/(g-1)
    g = 2.0
    v, _ = integrate.quad(lambda y: (g - 1) * y**-g * math.log(y), 1, INF)
    assert v == pytest.approx(1.0, rel=1e-10)


@settings(max_examples=15, deadline=None)
@given(target=st.floats(0.1, 20.0))
def test_constraint_satisfaction_property(target):
    m = solve_multiplier(spec(), IDENTITY, Uniform, (0.0, INF), target)
    assert abs(m.mean_T() - target) / (1 + target) < 1e-8
    assert m.multiplier == pytest.approx(1.0 / target, rel=1e-8)


def test_mean_T_monotone_in_multiplier():
    lams = np.geomspace(1.2, 20.0, 12)
    means = [synth_density(spec(PureLog()), LINEAR, IDENTITY, Uniform, (1.0, INF), l).mean_T() for l in lams]
    assert np.all(np.diff(means) < 0)


# --- relative entropy --------------------------------------------------------


def test_entropy_exp():
    m = synth_density(spec(), LINEAR, IDENTITY, Uniform, (0.0, INF), 1.0)
    assert relative_entropy(m) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("lam", [0.5, 2.0, 7.0])
def test_entropy_exp_rate(lam):
    m = synth_density(spec(), LINEAR, IDENTITY, Uniform, (0.0, INF), lam)
    assert relative_entropy(m) == pytest.approx(1 - math.log(lam), abs=1e-10)


def test_entropy_uniform():
    m = density_from_kernel(lambda y: np.zeros_like(y), (0.0, 1.0))
    assert relative_entropy(m) == pytest.approx(0.0, abs=1e-12)


def test_entropy_gaussian():
    m = synth_density(spec(), LINEAR, ObservableReduction.centered_square(0.0), Uniform, (-INF, INF), 1.0)
    expected = 0.5 * (1 + math.log(math.pi))
    assert relative_entropy(m) == pytest.approx(expected, abs=1e-10)
    assert expected == pytest.approx(stats.norm(scale=math.sqrt(0.5)).entropy(), rel=1e-14)


# --- solution invariance -----------------------------------------------------


def test_invariance_log_square():
    d = solution_invariance(spec(PureLog()), LINEAR, lambda f: f * f, IDENTITY, Uniform, (1.0, INF), 1.0)
    assert d < 1e-10


def test_invariance_linear_shift():
    d = solution_invariance(spec(), LINEAR, lambda f: f + 5.0, IDENTITY, Uniform, (0.0, INF), 2.0)
    assert d < 1e-10


def test_invariance_identity_is_exact():
    d = solution_invariance(spec(PureLog()), LINEAR, lambda f: f, IDENTITY, Uniform, (1.0, INF), 1.0)
    assert d == 0.0


def test_invariance_needs_G_prime_for_cumulative_measure():
    with pytest.raises(ValueError):
        solution_invariance(spec(), LINEAR, lambda f: f, IDENTITY, CumulativeDerivative, (0.0, INF), 1.0)


# --- change of variable ------------------------------------------------------


def standard_normal():
    return synth_density(spec(), ScaleParams(0.0, 0.5, 0.0), ObservableReduction.centered_square(0.0), Uniform, (-INF, INF), 1.0)


def test_lognormal_from_exp_map():
    ln = change_of_variable(standard_normal(), np.exp, np.log, np.exp)
    assert ln.support == (0.0, INF)
    assert ln.pdf(1.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-12)
    y = np.geomspace(0.05, 20, 40)
    assert np.allclose(ln.pdf(y), stats.lognorm(1.0).pdf(y), rtol=1e-10)


def test_identity_change_is_noop():
    m = standard_normal()
    same = change_of_variable(m, lambda y: y, lambda z: z, lambda y: np.ones_like(y))
    y = np.linspace(-6, 6, 101)
    assert np.max(np.abs(same.pdf(y) - m.pdf(y))) == 0.0


def test_round_trip():
    m = synth_density(spec(), LINEAR, IDENTITY, Uniform, (0.0, INF), 1.0)
    there = change_of_variable(m, np.sqrt, np.square, lambda y: 0.5 / np.sqrt(y))
    back = change_of_variable(there, np.square, np.sqrt, lambda z: 2 * z)
    y = quantile_grid(m, 200, 1e-9)
    assert np.max(np.abs(back.pdf(y) - m.pdf(y))) < 1e-10


def test_change_rejects_non_monotone():
    with pytest.raises(DomainError):
        change_of_variable(standard_normal(), np.square, np.sqrt, lambda y: 2 * y)


# --- scale reading -----------------------------------------------------------


@pytest.mark.parametrize("c, lam", [(1.0, 0.5), (0.5, 0.8), (2.0, 0.3)])
def test_log_linear_gives_gamma_type_density(c, lam):
    m = synth_density(spec(LogLinear(c)), LINEAR, IDENTITY, Uniform, (0.0, INF), lam)
    # y^{-g} e^{-c g y} is gamma with shape 1 - g and rate c g
    ref = stats.gamma(1 - lam, scale=1 / (c * lam))
    y = quantile_grid(m, 100, 1e-6)
    assert np.max(np.abs(m.pdf(y) - ref.pdf(y)) / ref.pdf(y)) < 1e-8


# --- grids and emission ------------------------------------------------------


def test_quantile_grid_is_sorted_and_inside():
    m = synth_density(spec(PureLog()), LINEAR, IDENTITY, Uniform, (1.0, INF), 3.0)
    y = quantile_grid(m, 64)
    assert np.all(np.diff(y) > 0)
    assert y[0] > 1.0 and np.isfinite(y[-1])
    # the extreme nodes sit at cumulative mass 1e-12 from either end
    tail = (y[-1]) ** -2.0
    assert tail == pytest.approx(1e-12, rel=1e-3)


def test_grid_csv_format():
    text = grid_csv([0.5, 1.0], [0.25, 1.0 / 3.0])
    assert text == "y,pdf\n0.5,0.25\n1,0.33333333333333331\n"


def test_report_fields():
    m = synth_density(spec(), LINEAR, IDENTITY, Uniform, (0.0, INF), 0.5)
    r = report(m)
    assert set(r) == {"Z", "multiplier", "mean_T", "entropy"}
    assert r["mean_T"] == pytest.approx(2.0, rel=1e-10)
    assert r["entropy"] == pytest.approx(1 + math.log(2), rel=1e-10)
    assert json.loads(report_json(m)) == pytest.approx(r)


@pytest.mark.parametrize("name", ["uniform", "cumulative_derivative", "log_jacobian"])
def test_measure_names(name):
    assert measure_from_name(name).kind in ("uniform", "cumulative_derivative", "jacobian")


def test_unknown_measure():
    with pytest.raises(ValueError):
        measure_from_name("counting")
