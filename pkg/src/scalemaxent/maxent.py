"""Maximum-entropy densities ``p_y ∝ m_y exp(-lambda T(f_y))``.

The log-density is always assembled as ``log m_y - lambda * T(f_y)`` with T
in its expm1 form, so the ``beta -> 0`` limit and the full solution share a
single code path.  ``Lambda = lambda (T0 + alpha/beta)`` and
``gamma = lambda * alpha`` are reported as derived quantities.
"""
from __future__ import annotations

import io
import json
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit, logit

from . import quadrature as quad
from .errors import DomainError, NotNormalizableError, UnattainableTargetError
from .scale import (
    IDENTITY,
    ObservableReduction,
    ScaleParams,
    ScaleSpec,
    check_affine_invariance,
    measurement,
)

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# measure policies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MeasurePolicy:
    """Reference measure ``m_y``.

    ``uniform`` is ``m_y = 1``; ``cumulative_derivative`` is
    ``m_y = |dT(f_y)/dy|``; ``jacobian`` is ``m_y = |g'(y)|`` for a change of
    variable ``y -> g(y)``.
    """

    kind: str = "uniform"
    g: Callable | None = field(default=None, compare=False)
    g_prime: Callable | None = field(default=None, compare=False)
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("uniform", "cumulative_derivative", "jacobian"):
            raise ValueError(f"unknown measure policy {self.kind!r}")
        if self.kind == "jacobian" and self.g_prime is None:
            raise ValueError("jacobian measure needs g_prime")

    def log_m(self, y, dT=None):
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.kind == "uniform":
                return np.zeros_like(y)
            if self.kind == "cumulative_derivative":
                return np.log(np.abs(dT))
            return np.log(np.abs(np.asarray(self.g_prime(y), dtype=float)))

    def to_json(self):
        if self.kind == "jacobian":
            return {"kind": "jacobian", "g": self.label or "custom"}
        return {"kind": self.kind}


Uniform = MeasurePolicy("uniform")
CumulativeDerivative = MeasurePolicy("cumulative_derivative")


def Jacobian(g, g_prime, label=""):
    return MeasurePolicy("jacobian", g=g, g_prime=g_prime, label=label)


JACOBIAN_LOG = Jacobian(np.log, lambda y: 1.0 / y, label="log")


_MEASURES_BY_NAME = {
    "uniform": Uniform,
    "cumulative_derivative": CumulativeDerivative,
    "log_jacobian": JACOBIAN_LOG,
}


def measure_from_name(name: str) -> MeasurePolicy:
    try:
        return _MEASURES_BY_NAME[name]
    except KeyError:
        raise ValueError(f"unknown measure {name!r}; expected one of {sorted(_MEASURES_BY_NAME)}") from None


# ---------------------------------------------------------------------------
# density model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstraintTarget:
    mean_T: float


@dataclass(frozen=True)
class DensityModel:
    """Normalized density on an open support.

    ``log_unnormalized`` and ``log_measure`` are vectorized callables; ``T``
    maps ``y`` to the constrained quantity ``T(f_y)`` when the model came from
    a scale.
    """

    support: tuple[float, float]
    log_unnormalized: Callable = field(compare=False)
    logZ: float = math.nan
    multiplier: float | None = None
    spec: ScaleSpec | None = None
    params: ScaleParams | None = None
    measure: MeasurePolicy = Uniform
    reduction: ObservableReduction = IDENTITY
    T: Callable | None = field(default=None, compare=False)
    log_measure: Callable | None = field(default=None, compare=False)
    breakpoints: tuple[float, ...] = ()

    def __post_init__(self):
        lo, hi = (float(v) for v in self.support)
        if not lo < hi:
            raise DomainError(f"degenerate support ({lo}, {hi})")
        object.__setattr__(self, "support", (lo, hi))

    @property
    def Z(self) -> float:
        return math.exp(self.logZ)

    @property
    def normalized(self) -> bool:
        return math.isfinite(self.logZ)

    @property
    def Lambda(self) -> float | None:
        p, lam = self.params, self.multiplier
        if p is None or lam is None or p.linear:
            return None
        return lam * (p.T0 + p.alpha / p.beta)

    @property
    def gamma(self) -> float | None:
        if self.params is None or self.multiplier is None:
            return None
        return self.multiplier * self.params.alpha

    def _inside(self, y):
        lo, hi = self.support
        return (y > lo) & (y < hi)

    def logpdf(self, y):
        y = np.asarray(y, dtype=float)
        with np.errstate(all="ignore"):
            v = np.asarray(self.log_unnormalized(y), dtype=float) - self.logZ
        v = np.where(self._inside(y) & ~np.isnan(v), v, -np.inf)
        return float(v) if v.ndim == 0 else v

    def pdf(self, y):
        return np.exp(self.logpdf(y))

    def log_m(self, y):
        if self.log_measure is None:
            return np.zeros_like(np.asarray(y, dtype=float))
        return self.log_measure(y)

    def expectation(self, fn: Callable) -> float:
        value, shift = quad.integrate_weighted(self.logpdf, self.support, self.breakpoints, weight=fn)
        return value * math.exp(shift)

    def mean_T(self) -> float:
        if self.T is None:
            raise ValueError("model carries no measurement function")
        return self.expectation(self.T)

    def var_T(self) -> float:
        m = self.mean_T()
        return self.expectation(lambda y: (self.T(y) - m) ** 2)

    def cdf_table(self) -> quad.CDFTable:
        return quad.build_cdf_table(self.logpdf, self.support)


def _image_within(image, domain) -> bool:
    # closed comparison: boundary hits such as |k| = 0 have measure zero
    return domain[0] <= image[0] and image[1] <= domain[1]


def _check_support(spec: ScaleSpec, reduction: ObservableReduction, support):
    lo, hi = (float(v) for v in support)
    if not lo < hi:
        raise DomainError(f"degenerate support ({lo}, {hi})")
    rlo, rhi = reduction.domain
    if lo < rlo or hi > rhi:
        raise DomainError(f"support ({lo}, {hi}) lies outside the reduction domain ({rlo}, {rhi})")
    image = reduction.image((lo, hi))
    dom = spec.domain()
    if not _image_within(image, dom):
        raise DomainError(
            f"support ({lo}, {hi}) maps to f in [{image[0]}, {image[1]}], outside the scale domain {dom}"
        )
    return lo, hi


def _y_breakpoints(spec: ScaleSpec, reduction: ObservableReduction, support) -> tuple[float, ...]:
    fs = spec.breakpoints()
    out = []
    if reduction.is_identity:
        out = list(fs)
    elif reduction.kind == "centered_square" and reduction.inner is None:
        out = [reduction.mu] + [reduction.mu + s * math.sqrt(f) for f in fs if f > 0 for s in (-1, 1)]
    elif reduction.kind == "absolute_value":
        out = [0.0] + [s * f for f in fs if f > 0 for s in (-1, 1)]
    lo, hi = support
    return tuple(sorted({float(v) for v in out if lo < v < hi}))


def _build(
    support,
    T_and_prime: Callable,
    measure: MeasurePolicy,
    multiplier: float,
    spec=None,
    params=None,
    reduction=IDENTITY,
    breakpoints=(),
) -> DensityModel:
    lam = float(multiplier)

    def log_measure(y):
        if measure.kind == "cumulative_derivative":
            return measure.log_m(y, T_and_prime(y)[1])
        return measure.log_m(y)

    def log_unnormalized(y):
        T, dT = T_and_prime(y)
        with np.errstate(all="ignore"):
            lm = measure.log_m(y, dT)
            return lm if lam == 0.0 else lm - lam * T

    def T_fn(y):
        return T_and_prime(y)[0]

    model = DensityModel(
        support,
        log_unnormalized,
        math.nan,
        lam,
        spec,
        params,
        measure,
        reduction,
        T_fn,
        log_measure,
        tuple(breakpoints),
    )
    return normalize(model)[1]


def synth_density(
    spec: ScaleSpec,
    params: ScaleParams,
    reduction: ObservableReduction,
    measure: MeasurePolicy,
    support,
    multiplier: float = 1.0,
) -> DensityModel:
    """Normalized maximum-entropy density for a scale and multiplier ``lambda``.

    Raises
    ------
    DomainError
        If the support does not map into the scale domain.
    NotNormalizableError
        If the integral of the kernel diverges.
    """
    lo, hi = _check_support(spec, reduction, support)

    def T_and_prime(y):
        return measurement(spec, params, reduction, y)

    return _build(
        (lo, hi), T_and_prime, measure, multiplier, spec, params, reduction, _y_breakpoints(spec, reduction, (lo, hi))
    )


def normalize(model: DensityModel) -> tuple[float, DensityModel]:
    """Integrate ``exp(log_unnormalized)`` over the support and store ``log Z``."""
    res = quad.integrate_log(model.log_unnormalized, model.support, model.breakpoints)
    out = replace(model, logZ=res.logvalue)
    return math.exp(res.logvalue), out


def density_from_kernel(log_kernel: Callable, support, breakpoints=()) -> DensityModel:
    """Normalized model from any log kernel (no scale attached)."""
    return normalize(DensityModel(support, log_kernel, breakpoints=tuple(breakpoints)))[1]


def relative_entropy(model: DensityModel) -> float:
    """``-∫ p log(p/m) dy``."""
    if not model.normalized:
        model = normalize(model)[1]

    def integrand(y):
        return model.logpdf(y) - model.log_m(y)

    return -model.expectation(integrand)


# ---------------------------------------------------------------------------
# multiplier solving
# ---------------------------------------------------------------------------

_START_GUESSES = [1.0, 2.0, 0.5, 4.0, 0.25, 8.0, 0.125, 16.0, 0.0625]
_MAX_EXPANSIONS = 80
_XTOL = 1e-12


def _solve_for_target(make: Callable[[float], DensityModel], target: float) -> DensityModel:
    """Find lambda with ``E[T](lambda) = target``; ``E[T]`` decreases in lambda."""
    cache: dict[float, DensityModel | None] = {}

    def model_at(lam):
        if lam not in cache:
            try:
                cache[lam] = make(lam)
            except NotNormalizableError:
                cache[lam] = None
        return cache[lam]

    def resid(lam):
        m = model_at(lam)
        if m is None:
            return None
        try:
            return m.mean_T() - target
        except NotNormalizableError:
            # E[T] itself diverges: treat as outside the feasible range
            return None

    lam0, r0 = None, None
    for guess in _START_GUESSES:
        r = resid(guess)
        if r is not None and math.isfinite(r):
            lam0, r0 = guess, r
            break
    if lam0 is None:
        raise UnattainableTargetError("no normalizable multiplier found near the starting guesses")
    if r0 == 0.0:
        return model_at(lam0)

    # r0 > 0 means E[T] is too large, so lambda has to grow
    direction = 1.0 if r0 > 0 else -1.0
    feasible, f_res = lam0, r0
    step = max(abs(lam0), 1.0)
    bracket = None
    for _ in range(_MAX_EXPANSIONS):
        cand = feasible + direction * step
        r = resid(cand)
        if r is None or not math.isfinite(r):
            # walk towards the feasibility boundary between feasible and cand
            bad = cand
            for _ in range(200):
                mid = 0.5 * (feasible + bad)
                if mid in (feasible, bad):
                    break
                rm = resid(mid)
                if rm is None or not math.isfinite(rm):
                    bad = mid
                    continue
                if rm * f_res <= 0:
                    bracket = (feasible, mid)
                    break
                feasible, f_res = mid, rm
            if bracket is None:
                raise UnattainableTargetError(
                    f"target {target} is not reached before the multiplier leaves its feasible range near {feasible}"
                )
            break
        if r * f_res <= 0:
            bracket = (feasible, cand)
            break
        feasible, f_res = cand, r
        step *= 2.0
    if bracket is None:
        raise UnattainableTargetError(f"could not bracket target {target}")

    a, b = sorted(bracket)

    def f(lam):
        r = resid(lam)
        if r is None:
            raise UnattainableTargetError("multiplier left the feasible range during bisection")
        return r

    lam = brentq(f, a, b, xtol=_XTOL * max(1.0, abs(a)), rtol=4 * np.finfo(float).eps, maxiter=500)
    best = model_at(lam)
    best_r = abs(f(lam))
    # one Newton polish: dE[T]/dlambda = -Var T
    var = best.var_T()
    if var > 0:
        lam_n = lam + f(lam) / var
        if a <= lam_n <= b:
            rn = resid(lam_n)
            if rn is not None and abs(rn) < best_r:
                best = model_at(lam_n)
    return best


def solve_multiplier(
    spec: ScaleSpec,
    reduction: ObservableReduction,
    measure: MeasurePolicy,
    support,
    target: ConstraintTarget | float,
    beta: float = 0.0,
    params: ScaleParams | None = None,
) -> DensityModel:
    """Density whose ``E[T(f_Y)]`` equals the target mean.

    ``params`` defaults to ``T0 = 0, alpha = 1`` with the given ``beta``.

    Raises
    ------
    UnattainableTargetError
        If no feasible multiplier brackets the target.
    """
    t = target.mean_T if isinstance(target, ConstraintTarget) else float(target)
    params = params or ScaleParams(T0=0.0, alpha=1.0, beta=beta)
    lo, hi = _check_support(spec, reduction, support)
    return _solve_for_target(lambda lam: synth_density(spec, params, reduction, measure, (lo, hi), lam), t)


def quantile_grid(model: DensityModel, n: int = 512, mass: float = 1e-12) -> np.ndarray:
    """Points equally spaced in logit of the cumulative between ``mass`` and ``1 - mass``."""
    table = model.cdf_table()
    u = expit(np.linspace(logit(mass), logit(1.0 - mass), n))
    y = np.asarray(table.quantile(u))
    lo, hi = model.support
    y = y[(y > lo) & (y < hi) & np.isfinite(y)]
    return np.unique(y)


def solution_invariance(
    spec: ScaleSpec,
    params: ScaleParams,
    G: Callable,
    reduction: ObservableReduction,
    measure: MeasurePolicy,
    support,
    target: ConstraintTarget | float,
    G_prime: Callable | None = None,
    grid: Sequence[float] | None = None,
    sample_points: Sequence[float] | None = None,
) -> float:
    """Sup-norm gap between the maxent solutions built from ``T(f)`` and ``T(G(f))``.

    The second solve constrains ``T(G(f))`` to ``a + b * mean_T``, where
    ``T(G(f)) = a + b T(f)`` is the affine relation fitted on ``sample_points``;
    that is the constraint value carried by the same observations.
    """
    t = target.mean_T if isinstance(target, ConstraintTarget) else float(target)
    lo, hi = _check_support(spec, reduction, support)
    if measure.kind == "cumulative_derivative" and G_prime is None:
        raise ValueError("cumulative-derivative measure needs G_prime")

    def TG_and_prime(y):
        f, df = reduction.value_and_derivative(y)
        g = np.asarray(G(f), dtype=float)
        T, dT = measurement(spec, params, IDENTITY, g)
        if G_prime is not None:
            dT = dT * np.asarray(G_prime(f), dtype=float) * df
        return T, dT

    model_a = solve_multiplier(spec, reduction, measure, (lo, hi), t, params=params)
    if sample_points is None:
        sample_points = quantile_grid(model_a, 16, 1e-3)
    pts = np.asarray(sample_points, dtype=float)
    f_pts = np.asarray(reduction(pts), dtype=float)
    Tf = measurement(spec, params, IDENTITY, f_pts)[0]
    TGf = TG_and_prime(pts)[0]
    if np.array_equal(Tf, TGf):
        t_b = t
    else:
        fit = check_affine_invariance(spec, params, G, pts, reduction)
        if fit.max_residual > 1e-8 * (1.0 + np.max(np.abs(TGf))):
            log.warning("G is not an invariance of T: affine residual %g", fit.max_residual)
        t_b = fit.a + fit.b * t
    bps = _y_breakpoints(spec, reduction, (lo, hi))
    model_b = _solve_for_target(
        lambda lam: _build((lo, hi), TG_and_prime, measure, lam, spec, params, reduction, bps), t_b
    )
    ys = np.asarray(grid, dtype=float) if grid is not None else quantile_grid(model_a, 512, 1e-9)
    return float(np.max(np.abs(model_a.pdf(ys) - model_b.pdf(ys))))


# ---------------------------------------------------------------------------
# change of variable
# ---------------------------------------------------------------------------


def _sample_points(support, n=257):
    x = np.linspace(-30.0, 30.0, n)
    y = quad.from_real_line(x, support)
    lo, hi = support
    return y[(y > lo) & (y < hi) & np.isfinite(y)]


def change_of_variable(model: DensityModel, g: Callable, g_inverse: Callable, g_derivative: Callable) -> DensityModel:
    """Density of ``g(Y)``: ``p(g^{-1}(z)) / |g'(g^{-1}(z))|``.

    Raises
    ------
    DomainError
        If ``g'`` changes sign on sampled support points or is zero on all of them.
    """
    ys = _sample_points(model.support)
    with np.errstate(all="ignore"):
        d = np.asarray(g_derivative(ys), dtype=float)
    # exact zeros are taken as underflow, as in the cumulative monotone check
    d = d[np.isfinite(d) & (d != 0)]
    if d.size == 0 or not (np.all(d > 0) or np.all(d < 0)):
        raise DomainError("g is not strictly monotone on the support")
    with np.errstate(all="ignore"):
        ends = [float(g(np.float64(v))) for v in model.support]
    zlo, zhi = min(ends), max(ends)

    def log_unnormalized(z):
        y = np.asarray(g_inverse(np.asarray(z, dtype=float)), dtype=float)
        with np.errstate(all="ignore"):
            return model.logpdf(y) - np.log(np.abs(np.asarray(g_derivative(y), dtype=float)))

    def log_measure(z):
        y = np.asarray(g_inverse(np.asarray(z, dtype=float)), dtype=float)
        with np.errstate(all="ignore"):
            return np.asarray(model.log_m(y), dtype=float) - np.log(np.abs(np.asarray(g_derivative(y), dtype=float)))

    T = None
    if model.T is not None:
        T = lambda z: model.T(np.asarray(g_inverse(np.asarray(z, dtype=float)), dtype=float))
    bps = tuple(sorted(float(g(np.float64(b))) for b in model.breakpoints))
    return DensityModel(
        (zlo, zhi),
        log_unnormalized,
        0.0,
        model.multiplier,
        model.spec,
        model.params,
        replace(model.measure),
        model.reduction,
        T,
        log_measure,
        bps,
    )


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------


def format_number(v: float) -> str:
    return f"{float(v):.17g}"


def grid_csv(y, pdf) -> str:
    buf = io.StringIO(newline="")
    buf.write("y,pdf\n")
    for a, b in zip(np.asarray(y, dtype=float), np.asarray(pdf, dtype=float)):
        buf.write(f"{format_number(a)},{format_number(b)}\n")
    return buf.getvalue()


def report(model: DensityModel) -> dict:
    mean_T = model.mean_T() if model.T is not None else None
    return {
        "Z": model.Z,
        "multiplier": model.multiplier,
        "mean_T": mean_T,
        "entropy": relative_entropy(model),
    }


def report_json(model: DensityModel) -> str:
    return json.dumps(report(model), sort_keys=True, indent=2)
