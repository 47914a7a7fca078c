"""Quadrature over open intervals with infinite endpoints and tabulated CDFs.

Integrals are computed in log space: the integrand is supplied as a log
evaluator, shifted by its probed maximum, and split at the argmax and at any
caller-supplied breakpoints.  Infinite pieces are mapped onto ``[0, 1)`` by
``y = p + s t / (1 - t)``; finite pieces go straight to QUADPACK.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicHermiteSpline
from scipy.special import expit, logit, logsumexp

from .errors import NotNormalizableError, QuadratureError

log = logging.getLogger(__name__)

EPSREL = 1e-12
# absolute tolerance relative to a probe estimate of the integral's size
EPSABS_REL = 1e-13
LIMIT = 500
# quad results whose error estimate is below this relative level are accepted
# even when QUADPACK raised a roundoff flag
ACCEPT_REL = 1e-8
DIVERGENCE_RATIO = 0.999

X_SPAN = 40.0
LOG_CAP = 700.0
LOG_TAIL_REL = 1e-10


def from_real_line(x, interval, center=0.0, scale=1.0):
    """Map ``x`` in R monotonically onto the open ``interval``."""
    lo, hi = interval
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        if math.isinf(lo) and math.isinf(hi):
            return center + scale * np.sinh(x)
        if math.isinf(hi):
            return lo + scale * np.exp(x)
        if math.isinf(lo):
            return hi - scale * np.exp(-x)
        return lo + (hi - lo) * expit(x)


def from_real_line_jacobian(x, interval, center=0.0, scale=1.0):
    """``dy/dx`` of :func:`from_real_line`."""
    lo, hi = interval
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        if math.isinf(lo) and math.isinf(hi):
            return scale * np.cosh(x)
        if math.isinf(hi):
            return scale * np.exp(x)
        if math.isinf(lo):
            return scale * np.exp(-x)
        e = expit(x)
        return (hi - lo) * e * (1.0 - e)


def to_real_line(y, interval, center=0.0, scale=1.0):
    lo, hi = interval
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        if math.isinf(lo) and math.isinf(hi):
            return np.arcsinh((y - center) / scale)
        if math.isinf(hi):
            return np.log((y - lo) / scale)
        if math.isinf(lo):
            return -np.log((hi - y) / scale)
        return logit((y - lo) / (hi - lo))


def _safe_log(logf: Callable, y):
    with np.errstate(all="ignore"):
        v = np.asarray(logf(np.asarray(y, dtype=float)), dtype=float)
    return np.where(np.isnan(v), -np.inf, v)


@dataclass(frozen=True)
class Probe:
    """Dense look at a log integrand: location and size of its peak."""

    shift: float
    argmax: float
    width: float
    bulk: float = math.nan
    at_edge: bool = False
    mass_width: float = math.nan
    grid: tuple = field(default=(), compare=False, repr=False)

    @property
    def quad_scale(self) -> float:
        # an endpoint spike has a meaningless peak width; the bulk sets the scale
        if self.at_edge and math.isfinite(self.mass_width) and self.mass_width > 0:
            return max(self.width, self.mass_width)
        return self.width


def probe(logf: Callable, interval, n: int = 2049) -> Probe:
    lo, hi = interval
    x = np.linspace(-X_SPAN, X_SPAN, n)
    center = 0.0
    y = from_real_line(x, interval, center)
    v = _safe_log(logf, y)
    ok = np.isfinite(v) & np.isfinite(y) & (y > lo) & (y < hi)
    if not ok.any():
        raise NotNormalizableError("integrand is zero or undefined everywhere on the support")
    vmax = float(np.max(v[ok]))
    if vmax == np.inf:
        raise NotNormalizableError("integrand is infinite inside the support")
    i = int(np.flatnonzero(ok & (v == vmax))[0])
    near = ok & (v >= vmax - 2.0)
    ys = y[near]
    width = float(ys.max() - ys.min())
    # refine the peak with a local bounded search in x
    from scipy.optimize import minimize_scalar

    a = x[max(i - 1, 0)]
    b = x[min(i + 1, n - 1)]
    if b > a:
        with np.errstate(invalid="ignore"):
            res = minimize_scalar(
                lambda t: -float(_safe_log(logf, from_real_line(t, interval, center))),
                bounds=(a, b),
                method="bounded",
                options={"xatol": 1e-10},
            )
        ystar = float(from_real_line(res.x, interval, center))
        vstar = -float(res.fun)
        if np.isfinite(vstar) and vstar >= vmax and lo < ystar < hi:
            vmax, yarg = vstar, ystar
        else:
            yarg = float(y[i])
    else:
        yarg = float(y[i])
    if width <= 0 or not np.isfinite(width):
        width = max(abs(yarg), 1.0) * 1e-3
    # where the mass sits in x: an integrable spike at a finite end can have
    # its peak far from the bulk
    with np.errstate(divide="ignore", invalid="ignore"):
        vx = v + np.log(from_real_line_jacobian(x, interval, center))
    okx = ok & np.isfinite(vx)
    bulk, mass_width = yarg, math.nan
    if okx.any():
        vxmax = float(np.max(vx[okx]))
        j = int(np.flatnonzero(okx & (vx == vxmax))[0])
        bulk = float(y[j])
        ym = y[okx & (vx >= vxmax - 2.0)]
        mass_width = float(ym.max() - ym.min())
        # keep the bulk representable without letting the spike overflow
        vmax = min(vmax, max(float(v[j]), vmax - 300.0))
    return Probe(vmax, yarg, width, bulk, i in (0, n - 1), mass_width, (x, y, vx, okx))


def _size_estimate(pr: Probe, weight) -> float:
    """Riemann sum of ``|weight| exp(logf - shift)`` over the probe grid."""
    if not pr.grid:
        return 0.0
    x, y, vx, ok = pr.grid
    if not ok.any():
        return 0.0
    dens = np.exp(np.where(ok, vx, -np.inf) - pr.shift)
    if weight is not None:
        try:
            with np.errstate(all="ignore"):
                w = np.abs(np.asarray(weight(np.where(ok, y, 1.0)), dtype=float))
            if w.shape != y.shape:
                raise ValueError
        except Exception:
            w = np.array([abs(float(weight(v))) if k else 0.0 for v, k in zip(y, ok)])
        dens = dens * np.where(ok & np.isfinite(w), w, 0.0)
    total = float(np.sum(dens[np.isfinite(dens)])) * (x[1] - x[0])
    return total if math.isfinite(total) else 0.0


def _quad(fn, a, b, epsabs=0.0):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, abserr, info, *rest = integrate.quad(
            fn, a, b, epsabs=epsabs, epsrel=EPSREL, limit=LIMIT, full_output=1
        )
    # scipy only hands back the message; QUADPACK's two roundoff codes (2 and 4)
    # are the ones whose message mentions roundoff
    if not rest:
        ier = 0
    else:
        ier = ROUNDOFF if "roundoff" in str(rest[0]).lower() else FAILED
    return value, abserr, ier


ROUNDOFF, FAILED = 2, 1


def _converged(value, err, ier) -> bool:
    # a roundoff flag is raised against EPSREL; the estimate may still be
    # far inside the acceptance tolerance
    if not math.isfinite(value):
        return False
    return ier == 0 or (ier == ROUNDOFF and err <= ACCEPT_REL * abs(value))


def _shell_ratio(shell_integral: Callable[[int], float], kmax: int = 60, last: int = 8) -> float:
    vals = np.array([shell_integral(k) for k in range(kmax)])
    tail = vals[-(last + 1):]
    if np.all(tail <= 0):
        return 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        r = tail[1:] / tail[:-1]
    r = r[np.isfinite(r)]
    return float(np.mean(r)) if r.size else math.inf


def _piece(fn, a, b, scale, epsabs=0.0, floor=0.0):
    """Integral of ``fn`` over ``(a, b)``; at most one endpoint infinite.

    ``epsabs`` goes to QUADPACK; ``floor`` is the absolute error accepted
    when QUADPACK reports trouble (the signed-weight case, where the value
    itself may vanish).
    """
    if math.isinf(b):
        g = lambda t: fn(a + scale * t / (1.0 - t)) * scale / (1.0 - t) ** 2 if t < 1 else 0.0
        value, err, ier = _quad(g, 0.0, 1.0, epsabs)
        if _converged(value, err, ier):
            return value, err
        ratio = _shell_ratio(lambda k: _quad(fn, a + scale * 2.0**k, a + scale * 2.0 ** (k + 1))[0])
        if ratio >= DIVERGENCE_RATIO:
            raise NotNormalizableError(f"integral diverges towards +inf (shell ratio {ratio:.4f})")
        # slowly decaying tails: integrate in v = log(1 + (y - a)/s), where y
        # beyond v = LOG_CAP is not representable
        k = lambda v: fn(a + scale * math.expm1(v)) * scale * math.exp(v)

        def h(t):
            if t >= 1:
                return 0.0
            v = t / (1.0 - t)
            return k(v) / (1.0 - t) ** 2 if v <= LOG_CAP else 0.0

        v2, e2, ier2 = _quad(h, 0.0, 1.0, epsabs)
        # the truncated value is only trusted if the last v-shells are negligible
        v_ratio = _shell_ratio(lambda j: _quad(k, 2.0**j, 2.0 ** (j + 1))[0], kmax=9, last=3)
        if v_ratio >= DIVERGENCE_RATIO:
            raise NotNormalizableError(f"integral diverges towards +inf (log-shell ratio {v_ratio:.4f})")
        tail = abs(_quad(k, LOG_CAP / 2, LOG_CAP)[0])
        if math.isfinite(v2) and tail <= LOG_TAIL_REL * abs(v2):
            if ier2 == 0:
                return v2, e2
            if not math.isfinite(err) or e2 < err:
                value, err = v2, e2
    elif math.isinf(a):
        return _piece(lambda y: fn(-y), -b, math.inf, scale, epsabs, floor)
    else:
        value, err, ier = _quad(fn, a, b, epsabs)
        if _converged(value, err, ier):
            return value, err
        d = b - a
        r_lo = _shell_ratio(lambda k: _quad(fn, a + d * 2.0 ** -(k + 2), a + d * 2.0 ** -(k + 1))[0])
        r_hi = _shell_ratio(lambda k: _quad(fn, b - d * 2.0 ** -(k + 1), b - d * 2.0 ** -(k + 2))[0])
        if max(r_lo, r_hi) >= DIVERGENCE_RATIO:
            raise NotNormalizableError(f"integral diverges at a finite endpoint of ({a}, {b})")
    if math.isfinite(value) and err <= max(ACCEPT_REL * abs(value), floor):
        return value, err
    raise QuadratureError(f"quadrature on ({a}, {b}) did not converge: value={value}, abserr={err}")


@dataclass(frozen=True)
class LogIntegral:
    logvalue: float
    abserr_rel: float


def integrate_log(
    logf: Callable,
    interval: tuple[float, float],
    breakpoints: Sequence[float] = (),
    weight: Callable | None = None,
) -> LogIntegral:
    """``log`` of the integral of ``exp(logf)`` (times optional ``weight``) over ``interval``.

    Parameters
    ----------
    logf : callable
        Vectorized log integrand; NaN is read as zero density.
    interval : tuple
        Open interval, endpoints may be infinite.
    breakpoints : sequence of float
        Extra subdivision points (scale transition constants).
    weight : callable, optional
        Real factor multiplying the integrand; the result is then the log of
        the absolute value and the sign is lost, so use :func:`integrate_weighted`
        for signed weights.

    Raises
    ------
    NotNormalizableError
        When shell integrals show the integral diverges.
    QuadratureError
        When QUADPACK fails and the error estimate is too large.
    """
    value, err, pr = _integrate(logf, interval, breakpoints, weight)
    if not value > 0:
        raise NotNormalizableError("integral is not positive")
    return LogIntegral(pr.shift + math.log(value), err / value)


def integrate_weighted(logf, interval, breakpoints=(), weight=None, pr: Probe | None = None) -> tuple[float, float]:
    """Signed integral of ``weight * exp(logf - shift)`` and the shift used."""
    value, err, pr = _integrate(logf, interval, breakpoints, weight, pr)
    return value, pr.shift


def _integrate(logf, interval, breakpoints, weight, pr=None):
    lo, hi = float(interval[0]), float(interval[1])
    if not lo < hi:
        raise ValueError(f"degenerate interval ({lo}, {hi})")
    pr = pr or probe(logf, (lo, hi))
    shift = pr.shift

    def fn(y):
        v = float(_safe_log(logf, y))
        if v == -math.inf:
            return 0.0
        if v - shift > 700.0:
            # far above the probed peak: only unbounded growth gets here
            raise NotNormalizableError(f"integrand grows without bound near y={y!r}")
        out = math.exp(v - shift)
        if weight is not None and out != 0.0:
            out = out * float(weight(y))
        return out

    # a peak on the probe edge is an endpoint spike; cutting next to it
    # would hide the singularity from the extrapolation
    size = _size_estimate(pr, weight)
    epsabs = EPSABS_REL * size
    floor = ACCEPT_REL * size if weight is not None else 0.0
    cuts = (set() if pr.at_edge else {pr.argmax}) | ({pr.bulk} if pr.at_edge and lo < pr.bulk < hi else set()) | {float(b) for b in breakpoints if lo < b < hi}
    pts = [lo] + sorted(cuts) + [hi]
    total, total_err = 0.0, 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        if b <= a:
            continue
        v, e = _piece(fn, a, b, pr.quad_scale, epsabs, floor)
        total += v
        total_err += e
    log.debug("integrate %s pieces=%d value=%r err=%r", interval, len(pts) - 1, total, total_err)
    return total, total_err, pr


# ---------------------------------------------------------------------------
# tabulated cumulative distributions
# ---------------------------------------------------------------------------

TABLE_CELLS = 4096
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class CDFTable:
    """Tabulated left CDF on a real-line coordinate ``x`` with Hermite-cubic inverse."""

    interval: tuple[float, float]
    center: float
    scale: float
    x: np.ndarray
    logit_cdf: np.ndarray
    _inverse: CubicHermiteSpline
    _forward: CubicHermiteSpline

    def quantile(self, u):
        u = np.clip(np.asarray(u, dtype=float), 1e-300, 1 - 1e-16)
        z = np.clip(logit(u), self.logit_cdf[0], self.logit_cdf[-1])
        x = self._inverse(z)
        return from_real_line(x, self.interval, self.center, self.scale)

    def cdf(self, y):
        x = to_real_line(y, self.interval, self.center, self.scale)
        x = np.clip(x, self.x[0], self.x[-1])
        return expit(self._forward(x))


TABLE_SPAN_CAP = 700
LOGIT_CAP = 800.0
TABLE_EDGE_REL = 1e-20


def _table_spans(logpdf, interval, center, scale, span):
    """Grow each side of the ``x`` window until the mass density there is negligible."""

    def log_density(x):
        x = np.asarray([x], dtype=float)
        y = from_real_line(x, interval, center, scale)
        with np.errstate(all="ignore"):
            v = _safe_log(logpdf, y) + np.log(from_real_line_jacobian(x, interval, center, scale))
        ok = np.isfinite(y) & (y > interval[0]) & (y < interval[1])
        return float(np.where(ok, v, -np.inf)[0])

    xs = np.linspace(-span, span, 257)
    peak = max(log_density(x) for x in xs)
    out = []
    for sign in (-1.0, 1.0):
        s = span
        while s < TABLE_SPAN_CAP and log_density(sign * s) - peak > math.log(TABLE_EDGE_REL):
            s = min(2.0 * s, TABLE_SPAN_CAP)
        out.append(s)
    return out[0], out[1]


def _monotone_limit(d, secant):
    """Clip knot slopes to three times the smaller adjacent secant.

    This is the Fritsch-Carlson condition, so the Hermite spline stays
    monotone and its coefficients finite in very steep or flat cells.
    """
    bound = np.empty_like(d)
    bound[0], bound[-1] = secant[0], secant[-1]
    bound[1:-1] = np.minimum(secant[:-1], secant[1:])
    return np.minimum(d, 3.0 * bound)


def build_cdf_table(logpdf: Callable, interval, center=None, scale=None, cells=TABLE_CELLS, span=X_SPAN) -> CDFTable:
    """Tabulate the CDF of ``exp(logpdf)`` on ``interval``.

    Mass per cell comes from 8-point Gauss-Legendre in ``x``; the left and
    right cumulative sums give ``logit C = log C - log S`` without
    cancellation in either tail.
    """
    lo, hi = interval
    if center is None or scale is None:
        pr = probe(logpdf, interval)
        center = pr.argmax if center is None else center
        if scale is None:
            if math.isinf(lo) and math.isinf(hi):
                scale = pr.width
            elif math.isinf(hi):
                scale = max(pr.argmax - lo, pr.width)
            elif math.isinf(lo):
                scale = max(hi - pr.argmax, pr.width)
            else:
                scale = 1.0
    left_span, right_span = _table_spans(logpdf, interval, center, scale, span)
    step = 2.0 * span / cells
    n_left, n_right = int(math.ceil(left_span / step)), int(math.ceil(right_span / step))
    edges = step * np.arange(-n_left, n_right + 1, dtype=float)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    xs = mid[:, None] + half[:, None] * _GL_X[None, :]
    ys = from_real_line(xs, interval, center, scale)
    jac = from_real_line_jacobian(xs, interval, center, scale)
    with np.errstate(all="ignore"):
        lv = _safe_log(logpdf, ys) + np.log(jac) + np.log(half[:, None] * _GL_W[None, :])
    lv = np.where(np.isfinite(ys) & (ys > lo) & (ys < hi), lv, -np.inf)
    cell_log = logsumexp(lv, axis=1)
    left = np.logaddexp.accumulate(cell_log)
    right = np.logaddexp.accumulate(cell_log[::-1])[::-1]
    # C at edge i+1 is left[i]; S at edge i+1 is right[i+1]
    with np.errstate(invalid="ignore"):
        lc = left[:-1] - right[1:]
    xe = edges[1:-1]
    # exact slope d logit C / dx = p J (1/C + 1/S) at the inner edges
    ye = from_real_line(xe, interval, center, scale)
    with np.errstate(all="ignore"):
        lpj = _safe_log(logpdf, ye) + np.log(from_real_line_jacobian(xe, interval, center, scale))
        slope = np.exp(lpj - left[:-1]) + np.exp(lpj - right[1:])
    # beyond |logit| ~ 745 the tail mass is below the smallest double
    keep = np.abs(lc) < LOGIT_CAP
    xe, lc, slope = xe[keep], lc[keep], slope[keep]
    # strictly increasing for the inverse, with steps large enough that the
    # inverse spline's divided differences stay finite
    keep = np.zeros(lc.size, dtype=bool)
    last = -np.inf
    for i, v in enumerate(lc):
        if v > last + 1e-10 * max(1.0, abs(v)):
            keep[i] = True
            last = v
    xe, lc, slope = xe[keep], lc[keep], slope[keep]
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        usable = lambda d: np.isfinite(d) & (d > 0) & np.isfinite(1.0 / d)
        slope = np.where(usable(slope), slope, np.gradient(lc, xe))
        # knots without a usable slope sit in tails too far out to matter
        ok = usable(slope)
    xe, lc, slope = xe[ok], lc[ok], slope[ok]
    if xe.size < 2:
        raise QuadratureError("cumulative table is degenerate")
    secant = np.diff(lc) / np.diff(xe)
    inverse = CubicHermiteSpline(lc, xe, _monotone_limit(1.0 / slope, 1.0 / secant), extrapolate=True)
    forward = CubicHermiteSpline(xe, lc, _monotone_limit(slope, secant), extrapolate=True)
    return CDFTable((float(lo), float(hi)), float(center), float(scale), xe, lc, inverse, forward)
