"""Cumulative-constraint densities and block-extreme experiments.

When the measurement constrains the cumulative ``F(y) = exp(-lambda T(f_y))``
rather than the density, the maximum-entropy density is ``|dF/dy|``, i.e.
``p ∝ |T'| exp(-lambda T)``: the cumulative-derivative measure.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from . import quadrature as quad
from .errors import DomainError, NonMonotoneError
from .maxent import CumulativeDerivative, DensityModel
from .scale import IDENTITY, ObservableReduction, ScaleParams, ScaleSpec, T_of_w, measurement

MONOTONE_SAMPLES = 257


class Orientation(enum.Enum):
    """``LOWER``: ``F`` increases with ``y`` (a left CDF); ``UPPER``: ``F`` is a survival function."""

    LOWER = "lower"
    UPPER = "upper"


class Mode(enum.Enum):
    MAX = "max"
    MIN = "min"


@dataclass(frozen=True)
class CumulativeModel:
    """``F(y) = exp(-lambda T(f_y))`` on a support, with its orientation.

    ``orientation=None`` infers it from the sampled monotonicity check;
    ``support=None`` uses the scale domain.
    """

    spec: ScaleSpec
    params: ScaleParams
    lam: float
    orientation: Orientation | None = None
    support: tuple[float, float] | None = None
    reduction: ObservableReduction = IDENTITY

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError("lambda must be positive")
        if self.support is None:
            if not self.reduction.is_identity:
                raise ValueError("an explicit support is needed with a non-identity reduction")
            object.__setattr__(self, "support", self.spec.domain())
        lo, hi = (float(v) for v in self.support)
        if not lo < hi:
            raise DomainError(f"degenerate support ({lo}, {hi})")
        object.__setattr__(self, "support", (lo, hi))
        observed = _check_monotone(self)
        if self.orientation is None:
            object.__setattr__(self, "orientation", observed)
        elif Orientation(self.orientation) is not observed:
            raise NonMonotoneError(
                f"F is {'increasing' if observed is Orientation.LOWER else 'decreasing'} "
                f"but orientation {Orientation(self.orientation).value} was requested",
                self.support,
            )
        else:
            object.__setattr__(self, "orientation", Orientation(self.orientation))

    def T(self, y):
        return measurement(self.spec, self.params, self.reduction, y)[0]

    def log_F(self, y):
        return -self.lam * np.asarray(self.T(y), dtype=float)

    def _log_F_end(self, which: int) -> float:
        """``log F`` at an end of the support, as a one-sided limit."""
        y = self.support[which]
        w = np.asarray(_reduction_limit(self.reduction, y), dtype=float)
        with np.errstate(all="ignore"):
            for level in self.spec.levels:
                w = level.limit(w)
            T = float(T_of_w(w, self.params))
        if math.isnan(T):
            # fall back to the nearest sampled interior point
            x = 40.0 if which else -40.0
            T = float(self.T(quad.from_real_line(np.float64(x), self.support)))
        return -self.lam * T

    @property
    def log_F_bounds(self) -> tuple[float, float]:
        return self._log_F_end(0), self._log_F_end(1)

    @property
    def log_delta_F(self) -> float:
        a, b = self.log_F_bounds
        big, small = max(a, b), min(a, b)
        if big == -math.inf:
            raise NonMonotoneError("F vanishes on the whole support", self.support)
        return big + math.log1p(-math.exp(small - big)) if small > -math.inf else big


def _reduction_limit(reduction: ObservableReduction, y: float):
    u = np.float64(y) if reduction.inner is None else _reduction_limit(reduction.inner, y)
    with np.errstate(all="ignore"):
        return reduction._outer(u)[0]


def _check_monotone(model: CumulativeModel) -> Orientation:
    x = np.linspace(-30.0, 30.0, MONOTONE_SAMPLES)
    y = quad.from_real_line(x, model.support)
    lo, hi = model.support
    y = np.unique(y[(y > lo) & (y < hi) & np.isfinite(y)])
    with np.errstate(all="ignore"):
        T, dT = measurement(model.spec, model.params, model.reduction, y)
    if np.any(np.isnan(T)) or np.any(np.isnan(dT)):
        bad = y[np.isnan(T) | np.isnan(dT)]
        raise NonMonotoneError("F is undefined at sampled support points", (float(bad.min()), float(bad.max())))
    # zeros are tail underflow of |T'|; only a sign change breaks monotonicity
    s = np.sign(dT)
    nz = s != 0
    if np.any(nz) and np.all(s[nz] < 0):
        return Orientation.LOWER
    if np.any(nz) and np.all(s[nz] > 0):
        return Orientation.UPPER
    if not np.any(nz):
        raise NonMonotoneError("F is constant on the support", model.support)
    ref = 1.0 if np.sum(s > 0) >= np.sum(s < 0) else -1.0
    idx = np.flatnonzero(s == -ref)
    i0, i1 = idx[0], idx[-1]
    interval = (float(y[max(i0 - 1, 0)]), float(y[min(i1 + 1, y.size - 1)]))
    raise NonMonotoneError(f"F = exp(-lambda T) is not strictly monotone on {interval}", interval)


def density_from_cumulative(model: CumulativeModel) -> DensityModel:
    """Density ``|dF/dy| / |F(hi) - F(lo)|`` under the cumulative-derivative measure.

    ``Z`` is known analytically from the end values of ``F``, so no quadrature
    is involved.
    """
    lam = model.lam
    spec, params, red = model.spec, model.params, model.reduction

    def log_measure(y):
        _, dT = measurement(spec, params, red, y)
        with np.errstate(divide="ignore"):
            return np.log(np.abs(dT))

    def log_unnormalized(y):
        T, dT = measurement(spec, params, red, y)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log(np.abs(dT)) - lam * T

    def T_fn(y):
        return measurement(spec, params, red, y)[0]

    # the kernel is |T'| e^{-lam T}, whose integral is delta F / lam
    logZ = model.log_delta_F - math.log(lam)
    return DensityModel(
        model.support,
        log_unnormalized,
        logZ,
        lam,
        spec,
        params,
        CumulativeDerivative,
        red,
        T_fn,
        log_measure,
        tuple(spec.breakpoints()) if red.is_identity else (),
    )


def cdf(model: CumulativeModel) -> Callable:
    """Standardized left CDF built from ``F`` with the orientation flip applied."""
    la, lb = model.log_F_bounds
    ldf = model.log_delta_F
    lower = model.orientation is Orientation.LOWER

    def G(y):
        lf = model.log_F(y)
        with np.errstate(all="ignore"):
            if lower:
                # (F - F_lo) / dF
                out = np.exp(lf - ldf) - (math.exp(la - ldf) if la > -math.inf else 0.0)
            else:
                # (F_lo - F) / dF, computed through the survival 1 - G = (F - F_hi)/dF
                surv = np.exp(lf - ldf) - (math.exp(lb - ldf) if lb > -math.inf else 0.0)
                out = 1.0 - surv
        out = np.clip(out, 0.0, 1.0)
        return float(out) if np.ndim(out) == 0 else out

    return G


def quantile(model: CumulativeModel, u: float) -> float:
    """Inverse of :func:`cdf` by bracketed root finding in a real-line coordinate."""
    if not 0.0 < u < 1.0:
        raise ValueError("u must lie in (0, 1)")
    G = cdf(model)
    h = lambda x: G(quad.from_real_line(np.float64(x), model.support)) - u
    a, b = -1.0, 1.0
    while h(a) > 0 and a > -700:
        a *= 2.0
    while h(b) < 0 and b < 700:
        b *= 2.0
    x = brentq(h, a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)
    return float(quad.from_real_line(np.float64(x), model.support))


def entropy_on_T(model: CumulativeModel) -> float:
    """``-∫ p_T log p_T dT`` with ``p_T = lambda e^{-lambda T} / dF`` on the range of T."""
    la, lb = model.log_F_bounds
    lam = model.lam
    Ta, Tb = -la / lam, -lb / lam
    interval = (min(Ta, Tb), max(Ta, Tb))
    ldf = model.log_delta_F

    def logp(T):
        return math.log(lam) - lam * np.asarray(T, dtype=float) - ldf

    value, shift = quad.integrate_weighted(logp, interval, weight=lambda T: -logp(T))
    return value * math.exp(shift)


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------

CHUNK = 256


def simulate_extremes(
    base_sampler: Callable,
    n_per_block: int,
    replicates: int,
    mode: Mode | str = Mode.MAX,
    seed: int = 0,
) -> np.ndarray:
    """Block maxima (or minima) of ``n_per_block`` draws, ``replicates`` times.

    Parameters
    ----------
    base_sampler : callable
        ``base_sampler(rng, size)`` returning an array of that shape.
    mode : Mode or {"max", "min"}
    seed : int
        Seed for ``numpy.random.default_rng``; blocks are generated in
        fixed-size chunks in replicate order, so the output is reproducible.
    """
    if n_per_block < 1 or replicates < 1:
        raise ValueError("n_per_block and replicates must be at least 1")
    mode = Mode(mode)
    rng = np.random.default_rng(seed)
    out = np.empty(replicates)
    reduce = np.max if mode is Mode.MAX else np.min
    for start in range(0, replicates, CHUNK):
        m = min(CHUNK, replicates - start)
        draws = np.asarray(base_sampler(rng, (m, n_per_block)), dtype=float)
        out[start : start + m] = reduce(draws, axis=1)
    return out


def ks_distance(samples, cdf_fn: Callable) -> float:
    """Two-sided Kolmogorov-Smirnov statistic of ``samples`` against ``cdf_fn``."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise ValueError("need at least one sample")
    F = np.asarray(cdf_fn(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def block_extreme_cdf(base_cdf: Callable, n: int, mode: Mode | str = Mode.MAX) -> Callable:
    """CDF of the extreme of ``n`` i.i.d. draws: ``F**n`` or ``1 - (1 - F)**n``."""
    mode = Mode(mode)
    if mode is Mode.MAX:
        return lambda y: np.asarray(base_cdf(y), dtype=float) ** n
    return lambda y: -np.expm1(n * np.log1p(-np.asarray(base_cdf(y), dtype=float)))


def gumbel_cdf(location: float = 0.0, scale: float = 1.0) -> Callable:
    return lambda y: np.exp(-np.exp(-(np.asarray(y, dtype=float) - location) / scale))


def frechet_cdf(alpha: float, scale: float = 1.0) -> Callable:
    def F(y):
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(y > 0, np.exp(-((np.maximum(y, 0.0) / scale) ** -alpha)), 0.0)

    return F


def weibull_min_cdf(shape: float, scale: float = 1.0) -> Callable:
    return lambda y: -np.expm1(-((np.maximum(np.asarray(y, dtype=float), 0.0) / scale) ** shape))


@dataclass(frozen=True)
class ExtremeExperiment:
    """Base law plus the textbook normalization and limit law of its block extreme."""

    family: str
    params: dict
    mode: Mode
    normalize: Callable[[np.ndarray, int], np.ndarray]
    target: Callable[[int], Callable]
    target_family: str


EXPERIMENTS = {
    # Exp(1): max - log n -> Gumbel
    ("exponential", Mode.MAX): ExtremeExperiment(
        "exponential", {"gamma": 1.0}, Mode.MAX, lambda x, n: x - math.log(n), lambda n: gumbel_cdf(), "gumbel"
    ),
    # Exp(1): n * min is again Exp(1), the Weibull limit with shape 1
    ("exponential", Mode.MIN): ExtremeExperiment(
        "exponential", {"gamma": 1.0}, Mode.MIN, lambda x, n: n * x, lambda n: weibull_min_cdf(1.0), "weibull"
    ),
    # Pareto I with density 2 y^-3: max / n^(1/2) -> Frechet(2)
    ("pareto_i", Mode.MAX): ExtremeExperiment(
        "pareto_i", {"gamma": 3.0}, Mode.MAX, lambda x, n: x / math.sqrt(n), lambda n: frechet_cdf(2.0), "frechet"
    ),
    # standard Gaussian: Gumbel with the usual b_n, a_n
    ("gaussian", Mode.MAX): ExtremeExperiment(
        "gaussian",
        {"gamma": 0.5, "mu": 0.0},
        Mode.MAX,
        lambda x, n: (x - _gauss_bn(n)) * _gauss_bn(n),
        lambda n: gumbel_cdf(),
        "gumbel",
    ),
    # Gumbel row as written is the minimum convention: min + log n -> same law
    ("gumbel", Mode.MIN): ExtremeExperiment(
        "gumbel", {"beta": 1.0, "Lambda": 1.0}, Mode.MIN, lambda x, n: x + math.log(n), lambda n: _gumbel_min_cdf, "gumbel_min"
    ),
}


def _gumbel_min_cdf(y):
    return -np.expm1(-np.exp(np.asarray(y, dtype=float)))


def _gauss_bn(n: int) -> float:
    t = math.sqrt(2.0 * math.log(n))
    return t - (math.log(math.log(n)) + math.log(4.0 * math.pi)) / (2.0 * t) if n > 1 else 0.0


def run_experiment(family: str, n: int, replicates: int, mode: Mode | str = Mode.MAX, seed: int = 0) -> dict:
    """Simulate normalized block extremes of a catalog base law and measure KS to its limit.

    ``n = 1`` compares against the base law itself.
    """
    from . import catalog

    mode = Mode(mode)
    fid = catalog.FamilyId.parse(family)
    if n == 1:
        # a block of one draw is the base law itself
        sampler = catalog.sampler(fid)
        draws = simulate_extremes(sampler, 1, replicates, mode, seed)
        ks = ks_distance(draws, catalog.cdf(fid))
        return {"n": n, "replicates": replicates, "ks": ks, "target_family": fid.value}
    key = (fid.value, mode)
    if key not in EXPERIMENTS:
        raise KeyError(f"no extreme-value experiment for base {fid.value!r} in mode {mode.value}")
    exp = EXPERIMENTS[key]
    sampler = catalog.sampler(exp.family, exp.params)
    draws = simulate_extremes(sampler, n, replicates, mode, seed)
    ks = ks_distance(exp.normalize(draws, n), exp.target(n))
    return {"n": n, "replicates": replicates, "ks": ks, "target_family": exp.target_family}
