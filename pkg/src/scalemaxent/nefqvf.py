"""Natural exponential families with quadratic variance functions.

A family is fixed by ``V(mu) = v0 + v1 mu + v2 mu**2`` and a reference mean
``mu0``. Along the family ``d psi / d theta = mu``, ``d mu / d theta = V(mu)``
and the relative entropy ``S(mu)`` about ``mu0`` is the Legendre dual of the
cumulant-generating function ``psi``: ``dS/dmu = -theta`` and
``d2S/dmu2 = -1/V``. Up to offset and scale there are six families.

Closed forms below are written with numpy ufuncs so that they evaluate in
whatever float precision they are handed; :func:`check_legendre` uses
``numpy.longdouble`` to keep finite-difference roundoff small.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar

import numpy as np
from scipy import stats
from scipy.special import expit, gammaln, logit, loggamma

from . import quadrature as quad
from .errors import DegenerateError, NotCanonicalError, RangeError, SupportError

FD_STEP = 1e-5
SUM_REL_TOL = 1e-16
SUM_MAX_TERMS = 10**6
_INTEGER_TOL = 1e-9


@dataclass(frozen=True)
class VarianceFunction:
    v0: float
    v1: float
    v2: float

    def __call__(self, mu):
        return self.v0 + self.v1 * mu + self.v2 * mu * mu

    @property
    def discriminant(self) -> float:
        return self.v1 * self.v1 - 4.0 * self.v0 * self.v2


@dataclass(frozen=True)
class RootPair:
    """Roots with ``mu1 <= mu2`` when real, ``Im mu1 < 0`` when complex."""

    mu1: complex
    mu2: complex

    @property
    def real(self) -> bool:
        return self.mu1.imag == 0.0 and self.mu2.imag == 0.0


def roots(vf: VarianceFunction) -> RootPair:
    """Roots of ``V``; raises :class:`DegenerateError` when ``v2 == 0``."""
    v0, v1, v2 = vf.v0, vf.v1, vf.v2
    if v2 == 0:
        raise DegenerateError("v2 = 0: the variance function has at most one root")
    d = vf.discriminant
    if d < 0:
        re = -v1 / (2.0 * v2)
        im = math.sqrt(-d) / (2.0 * abs(v2))
        return RootPair(complex(re, -im), complex(re, im))
    # cancellation-free form of the quadratic formula
    q = -0.5 * (v1 + math.copysign(math.sqrt(d), v1))
    if q == 0.0:
        r1 = r2 = 0.0
    else:
        r1, r2 = q / v2, v0 / q
    lo, hi = sorted((r1, r2))
    return RootPair(complex(lo, 0.0), complex(hi, 0.0))


# ---------------------------------------------------------------------------
# families
# ---------------------------------------------------------------------------


def _poisson_form(a, b):
    """``a - b - a log(a/b)``; shared by the Poisson and gamma entropies."""
    return a - b - a * np.log(a / b)


@dataclass(frozen=True)
class NEFFamily:
    """Base class. Subclasses provide the closed forms at ``theta``/``mu``."""

    name: ClassVar[str] = ""
    discrete: ClassVar[bool] = False

    # ranges -----------------------------------------------------------------
    def mean_range(self) -> tuple[float, float]:
        raise NotImplementedError

    def theta_range(self) -> tuple[float, float]:
        raise NotImplementedError

    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    @property
    def mu0(self) -> float:
        raise NotImplementedError

    def variance_function(self) -> VarianceFunction:
        raise NotImplementedError

    def V(self, mu):
        vf = self.variance_function()
        return vf.v0 + vf.v1 * mu + vf.v2 * mu * mu

    def _check_mu(self, mu):
        lo, hi = self.mean_range()
        m = float(mu)
        if not lo < m < hi:
            raise RangeError(f"mean {m} outside the mean range ({lo}, {hi}) of {self.name}")

    def _check_theta(self, theta):
        lo, hi = self.theta_range()
        t = float(theta)
        if not lo < t < hi:
            raise RangeError(f"theta {t} outside the natural domain ({lo}, {hi}) of {self.name}")

    # closed forms (unchecked; precision follows the argument) ----------------
    def _S(self, mu):
        raise NotImplementedError

    def _theta(self, mu):
        raise NotImplementedError

    def _psi(self, theta):
        raise NotImplementedError

    def _mu(self, theta):
        raise NotImplementedError

    def _logpdf(self, x):
        raise NotImplementedError

    def ld_correction(self, x) -> float:
        """Additive correction to ``log p`` in the large-deviation comparison."""
        return 0.0

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Gaussian(NEFFamily):
    v0: float
    mu0_: float = 0.0
    name: ClassVar[str] = "gaussian"

    def __post_init__(self):
        if not self.v0 > 0:
            raise RangeError("Gaussian variance v0 must be positive")

    @property
    def mu0(self):
        return self.mu0_

    def mean_range(self):
        return (-math.inf, math.inf)

    def theta_range(self):
        return (-math.inf, math.inf)

    def support(self):
        return (-math.inf, math.inf)

    def variance_function(self):
        return VarianceFunction(self.v0, 0.0, 0.0)

    def _S(self, mu):
        d = mu - self.mu0_
        return -d * d / (2 * self.v0)

    def _theta(self, mu):
        return (mu - self.mu0_) / self.v0

    def _psi(self, theta):
        return self.mu0_ * theta + self.v0 * theta * theta / 2

    def _mu(self, theta):
        return self.mu0_ + self.v0 * theta

    def _logpdf(self, x):
        return stats.norm.logpdf(x, self.mu0_, math.sqrt(self.v0))

    def ld_correction(self, x):
        return 0.5 * math.log(2 * math.pi * self.v0)

    def to_json(self):
        return {"family": self.name, "v0": self.v0, "mu0": self.mu0_}


@dataclass(frozen=True)
class Gamma(NEFFamily):
    """Gamma with shape ``q`` and mean ``mu0`` (scale ``mu0/q``); canonically ``mu0 = q``."""

    q: float
    mu0_: float | None = None
    name: ClassVar[str] = "gamma"

    def __post_init__(self):
        if not self.q > 0:
            raise RangeError("gamma shape q must be positive")
        if self.mu0_ is None:
            object.__setattr__(self, "mu0_", float(self.q))
        if not self.mu0_ > 0:
            raise RangeError("gamma reference mean must be positive")

    @property
    def mu0(self):
        return self.mu0_

    def mean_range(self):
        return (0.0, math.inf)

    def theta_range(self):
        return (-math.inf, self.q / self.mu0_)

    def support(self):
        return (0.0, math.inf)

    def variance_function(self):
        return VarianceFunction(0.0, 0.0, 1.0 / self.q)

    def _S(self, mu):
        # equals the Poisson form with mu and mu0 exchanged, exactly when q = mu0
        if self.q == self.mu0_:
            return _poisson_form(self.mu0_, mu)
        return (self.q / self.mu0_) * _poisson_form(self.mu0_, mu)

    def _theta(self, mu):
        return self.q / self.mu0_ - self.q / mu

    def _psi(self, theta):
        return -self.q * np.log1p(-theta * self.mu0_ / self.q)

    def _mu(self, theta):
        return self.q / (self.q / self.mu0_ - theta)

    def _logpdf(self, x):
        return stats.gamma.logpdf(x, self.q, scale=self.mu0_ / self.q)

    def ld_correction(self, x):
        # two-term Stirling remainder of log Gamma(q) = log (q-1)!
        n = self.q - 1.0
        return 0.5 * math.log(2 * math.pi * n) if n > 0 else 0.0

    def to_json(self):
        return {"family": self.name, "q": self.q, "mu0": self.mu0_}


@dataclass(frozen=True)
class HyperbolicCosecant(NEFFamily):
    """``V = v2 (lambda_csch**2 + mu**2)``; the canonical density has ``v2 = 1``, ``mu0 = 0``.

    For general ``v2`` the zero-tilt member is the generalized hyperbolic
    secant law with shape ``1/v2`` scaled by ``v2 * lambda_csch`` and tilted to
    mean ``mu0``.
    """

    lambda_csch: float
    v2: float = 1.0
    mu0_: float = 0.0
    name: ClassVar[str] = "hyperbolic_cosecant"

    def __post_init__(self):
        if not (self.lambda_csch > 0 and self.v2 > 0):
            raise RangeError("hyperbolic-cosecant family needs lambda_csch > 0 and v2 > 0")

    @property
    def mu0(self):
        return self.mu0_

    @property
    def _a0(self):
        return math.atan(self.mu0_ / self.lambda_csch)

    def mean_range(self):
        return (-math.inf, math.inf)

    def theta_range(self):
        c = self.v2 * self.lambda_csch
        return ((-math.pi / 2 - self._a0) / c, (math.pi / 2 - self._a0) / c)

    def support(self):
        return (-math.inf, math.inf)

    def variance_function(self):
        return VarianceFunction(self.v2 * self.lambda_csch**2, 0.0, self.v2)

    def _S(self, mu):
        L = self.lambda_csch
        x, x0 = mu / L, self.mu0_ / L
        return (0.5 * (np.log1p(x * x) - np.log1p(x0 * x0)) + x * (np.arctan(x0) - np.arctan(x))) / self.v2

    def _theta(self, mu):
        L = self.lambda_csch
        return (np.arctan(mu / L) - np.arctan(self.mu0_ / L)) / (self.v2 * L)

    def _psi(self, theta):
        a0 = np.arctan(self.mu0_ / self.lambda_csch)
        return np.log(np.cos(a0) / np.cos(a0 + self.v2 * self.lambda_csch * theta)) / self.v2

    def _mu(self, theta):
        L = self.lambda_csch
        return L * np.tan(np.arctan(self.mu0_ / L) + self.v2 * L * theta)

    def _logpdf(self, x):
        r = 1.0 / self.v2
        c = self.v2 * self.lambda_csch
        a0 = self._a0
        x = np.asarray(x, dtype=float)
        if r == 1.0:
            # 1 / (2 cosh(pi y / 2)) without complex arithmetic
            y = np.abs(x / c)
            log_fr = -np.pi * y / 2 - np.log1p(np.exp(-np.pi * y))
        else:
            y = x / c
            log_fr = (r - 2) * math.log(2.0) - math.log(math.pi) - gammaln(r) + 2.0 * np.real(loggamma(r / 2 + 0.5j * y))
        theta_star = a0 / c
        return log_fr - math.log(c) + theta_star * x + r * math.log(math.cos(a0))

    def to_json(self):
        return {"family": self.name, "lambda_csch": self.lambda_csch, "v2": self.v2, "mu0": self.mu0_}


@dataclass(frozen=True)
class Poisson(NEFFamily):
    mu0_: float
    name: ClassVar[str] = "poisson"
    discrete: ClassVar[bool] = True

    def __post_init__(self):
        if not self.mu0_ > 0:
            raise RangeError("Poisson mean must be positive")

    @property
    def mu0(self):
        return self.mu0_

    def mean_range(self):
        return (0.0, math.inf)

    def theta_range(self):
        return (-math.inf, math.inf)

    def support(self):
        return (0, math.inf)

    def variance_function(self):
        return VarianceFunction(0.0, 1.0, 0.0)

    def _S(self, mu):
        return _poisson_form(mu, self.mu0_)

    def _theta(self, mu):
        return np.log(mu / self.mu0_)

    def _psi(self, theta):
        return self.mu0_ * np.expm1(theta)

    def _mu(self, theta):
        return self.mu0_ * np.exp(theta)

    def _logpdf(self, x):
        return stats.poisson.logpmf(x, self.mu0_)

    def ld_correction(self, x):
        return 0.5 * math.log(2 * math.pi * x)

    def to_json(self):
        return {"family": self.name, "mu0": self.mu0_}


@dataclass(frozen=True)
class Binomial(NEFFamily):
    N: int
    p: float
    name: ClassVar[str] = "binomial"
    discrete: ClassVar[bool] = True

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise RangeError("binomial N must be a positive integer")
        object.__setattr__(self, "N", int(self.N))
        if not 0 < self.p < 1:
            raise RangeError("binomial p must lie in (0, 1)")

    @property
    def mu0(self):
        return self.N * self.p

    def mean_range(self):
        return (0.0, float(self.N))

    def theta_range(self):
        return (-math.inf, math.inf)

    def support(self):
        return (0, self.N)

    def variance_function(self):
        return VarianceFunction(0.0, 1.0, -1.0 / self.N)

    def _S(self, mu):
        N, m0 = self.N, self.mu0
        return -((N - mu) * np.log((N - mu) / (N - m0)) + mu * np.log(mu / m0))

    def _theta(self, mu):
        N, m0 = self.N, self.mu0
        return np.log(mu / m0) - np.log((N - mu) / (N - m0))

    def _psi(self, theta):
        return self.N * np.log1p(self.p * np.expm1(theta))

    def _mu(self, theta):
        if isinstance(theta, np.longdouble):
            lp = np.log(np.longdouble(self.p) / (1 - np.longdouble(self.p)))
            return self.N / (1 + np.exp(-(lp + theta)))
        return self.N * expit(logit(self.p) + theta)

    def _logpdf(self, x):
        return stats.binom.logpmf(x, self.N, self.p)

    def ld_correction(self, x):
        N = self.N
        return 0.5 * math.log(2 * math.pi * x * (N - x) / N)

    def to_json(self):
        return {"family": self.name, "N": self.N, "p": self.p}


@dataclass(frozen=True)
class NegativeBinomial(NEFFamily):
    """Counts with pmf ``C(N-1+x, x) p**x (1-p)**N`` and mean ``N p / (1-p)``."""

    N: int
    p: float
    name: ClassVar[str] = "negative_binomial"
    discrete: ClassVar[bool] = True

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise RangeError("negative-binomial N must be a positive integer")
        object.__setattr__(self, "N", int(self.N))
        if not 0 < self.p < 1:
            raise RangeError("negative-binomial p must lie in (0, 1)")

    @property
    def mu0(self):
        return self.N * self.p / (1 - self.p)

    def mean_range(self):
        return (0.0, math.inf)

    def theta_range(self):
        return (-math.inf, -math.log(self.p))

    def support(self):
        return (0, math.inf)

    def variance_function(self):
        return VarianceFunction(0.0, 1.0, 1.0 / self.N)

    def _S(self, mu):
        N, m0 = self.N, self.mu0
        return (N + mu) * np.log((N + mu) / (N + m0)) - mu * np.log(mu / m0)

    def _theta(self, mu):
        N, m0 = self.N, self.mu0
        return np.log(mu / m0) - np.log((N + mu) / (N + m0))

    def _psi(self, theta):
        p = self.p
        return -self.N * np.log1p(-p * np.expm1(theta) / (1 - p))

    def _mu(self, theta):
        pe = self.p * np.exp(theta)
        return self.N * pe / (1 - pe)

    def _logpdf(self, x):
        # scipy's success probability is the complement of p here
        return stats.nbinom.logpmf(x, self.N, 1.0 - self.p)

    def ld_correction(self, x):
        # remainders of log x! + log (N-1)! - log (N+x-1)!
        n = self.N - 1
        rem = lambda k: 0.5 * math.log(2 * math.pi * k) if k > 0 else 0.0
        return rem(x) + rem(n) - rem(n + x)

    def to_json(self):
        return {"family": self.name, "N": self.N, "p": self.p}


FAMILY_TYPES = {cls.name: cls for cls in (Gaussian, Gamma, HyperbolicCosecant, Poisson, Binomial, NegativeBinomial)}


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AffineRecord:
    """``x_canonical = scale * (x - offset)``."""

    offset: float
    scale: float


def _integer(value: float) -> int | None:
    n = round(value)
    return int(n) if n >= 1 and abs(value - n) <= _INTEGER_TOL * max(1.0, abs(n)) else None


def classify(vf: VarianceFunction, mu0: float) -> NEFFamily:
    """Identify the family of a variance function already in canonical position.

    Canonical means ``v1 = 0`` for the continuous families and ``(v0, v1) = (0, 1)``
    for the discrete ones. Anything else raises :class:`NotCanonicalError`
    whose hint names the offset and scale that would normalize it (see
    :func:`canonicalize`).
    """
    v0, v1, v2 = float(vf.v0), float(vf.v1), float(vf.v2)
    mu0 = float(mu0)
    if not all(math.isfinite(v) for v in (v0, v1, v2, mu0)):
        raise NotCanonicalError("variance coefficients and mu0 must be finite", "supply finite values")
    if v1 == 0.0:
        if v2 == 0.0:
            if v0 > 0:
                return Gaussian(v0, mu0)
            raise NotCanonicalError("V is not positive anywhere", "a positive constant v0 is required")
        if v0 == 0.0 and v2 > 0:
            if not mu0 > 0:
                raise RangeError("gamma reference mean must be positive")
            return Gamma(1.0 / v2, mu0)
        if v0 > 0 and v2 > 0:
            return HyperbolicCosecant(math.sqrt(v0 / v2), v2, mu0)
    if v0 == 0.0 and v1 == 1.0:
        if v2 == 0.0:
            return Poisson(mu0)
        if v2 < 0:
            N = _integer(-1.0 / v2)
            if N is None:
                raise NotCanonicalError(
                    f"-1/v2 = {-1.0 / v2} is not a positive integer sample count",
                    "binomial families need v2 = -1/N for integer N",
                )
            if not 0 < mu0 < N:
                raise RangeError(f"binomial reference mean {mu0} outside (0, {N})")
            return Binomial(N, mu0 / N)
        N = _integer(1.0 / v2)
        if N is None:
            raise NotCanonicalError(
                f"1/v2 = {1.0 / v2} is not a positive integer",
                "negative-binomial families need v2 = 1/N for integer N",
            )
        if not mu0 > 0:
            raise RangeError("negative-binomial reference mean must be positive")
        return NegativeBinomial(N, mu0 / (N + mu0))
    raise NotCanonicalError(f"variance function ({v0}, {v1}, {v2}) is not in canonical position", _hint(vf, mu0))


def _hint(vf: VarianceFunction, mu0: float) -> str:
    try:
        canon, m, rec = canonicalize(vf, mu0)
    except (NotCanonicalError, RangeError) as exc:
        return str(exc)
    return (
        f"substitute x' = {rec.scale!r} * (x - {rec.offset!r}) to obtain "
        f"(v0, v1, v2) = ({canon.v0!r}, {canon.v1!r}, {canon.v2!r}) with mu0 = {m!r}"
    )


def canonicalize(vf: VarianceFunction, mu0: float) -> tuple[VarianceFunction, float, AffineRecord]:
    """Offset and scale ``x`` into canonical position.

    Complex roots are made purely imaginary by an offset; with real roots one
    root nearest ``mu0`` on the positive-variance side is moved to the origin
    and ``x`` is rescaled so that ``v1 = 1``. ``v2`` is unchanged by both
    operations.

    Returns
    -------
    (VarianceFunction, float, AffineRecord)
        Canonical coefficients, the transformed reference mean, and the map.
    """
    v0, v1, v2 = float(vf.v0), float(vf.v1), float(vf.v2)
    if not vf(mu0) > 0:
        raise RangeError(f"V(mu0) = {vf(mu0)} must be positive at the reference mean")
    if v2 == 0.0:
        if v1 == 0.0:
            return VarianceFunction(v0, 0.0, 0.0), float(mu0), AffineRecord(0.0, 1.0)
        c = -v0 / v1
        s = 1.0 / v1
        return VarianceFunction(0.0, 1.0, 0.0), s * (mu0 - c), AffineRecord(c, s)
    d = vf.discriminant
    if d < 0:
        c = -v1 / (2.0 * v2)
        return VarianceFunction(v0 - v1 * v1 / (4.0 * v2), 0.0, v2), mu0 - c, AffineRecord(c, 1.0)
    rp = roots(vf)
    r1, r2 = rp.mu1.real, rp.mu2.real
    if d == 0:
        c = r1
        s = 1.0 if mu0 > c else -1.0
        return VarianceFunction(0.0, 0.0, v2), s * (mu0 - c), AffineRecord(c, s)
    if v2 < 0:
        c = r1
    else:
        c = r2 if mu0 > r2 else r1
    slope = 2.0 * v2 * c + v1
    s = 1.0 / slope
    return VarianceFunction(0.0, 1.0, v2), s * (mu0 - c), AffineRecord(c, s)


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def entropy_S(family: NEFFamily, mu: float) -> float:
    """Relative entropy ``S(mu)`` about the reference member, with ``S(mu0) = 0``."""
    family._check_mu(mu)
    return float(family._S(float(mu)))


def theta_of_mu(family: NEFFamily, mu: float) -> float:
    family._check_mu(mu)
    return float(family._theta(float(mu)))


def mu_of_theta(family: NEFFamily, theta: float) -> float:
    family._check_theta(theta)
    return float(family._mu(float(theta)))


def psi_of_theta(family: NEFFamily, theta: float) -> float:
    family._check_theta(theta)
    return float(family._psi(float(theta)))


def _check_support(family: NEFFamily, x):
    lo, hi = family.support()
    xv = float(x)
    if family.discrete:
        if xv != math.floor(xv) or not lo <= xv <= hi:
            raise SupportError(f"{family.name} needs an integer in [{lo}, {hi}], got {x!r}")
    elif not lo < xv < hi:
        raise SupportError(f"{x!r} is outside the support ({lo}, {hi}) of {family.name}")
    return xv


def family_logpdf(family: NEFFamily, x) -> float:
    return float(family._logpdf(_check_support(family, x)))


def family_pdf(family: NEFFamily, x) -> float:
    """Density or mass of the zero-tilt member at ``x``."""
    return math.exp(family_logpdf(family, x))


def _discrete_log_sum(family: NEFFamily, theta: float) -> float:
    """``log sum_x p(x) e^{theta x}`` summed until terms drop below the relative tolerance."""
    lo, hi = family.support()
    block = 1024
    start = 0
    total = 0.0
    shift = None
    past_peak = False
    while start < SUM_MAX_TERMS:
        stop = min(start + block, SUM_MAX_TERMS)
        if math.isfinite(hi):
            stop = min(stop, int(hi) + 1)
        x = np.arange(start, stop, dtype=float)
        lt = family._logpdf(x) + theta * x
        if shift is None:
            shift = float(np.max(lt))
        if np.max(lt) > shift:
            # rescale the running sum to a new maximum
            new = float(np.max(lt))
            total *= math.exp(shift - new)
            shift = new
        terms = np.exp(lt - shift)
        # fsum keeps the discrete normalization accurate to the last bits
        total += math.fsum(terms)
        dec = np.diff(lt) < 0
        if dec.size and dec[-1]:
            past_peak = True
        if past_peak and terms[-1] < SUM_REL_TOL * total:
            break
        if math.isfinite(hi) and stop > hi:
            break
        start = stop
    return shift + math.log(total)


def log_cgf_numeric(family: NEFFamily, theta: float) -> float:
    """``log`` of the tilted integral or sum of the zero-tilt member."""
    family._check_theta(theta)
    if family.discrete:
        return _discrete_log_sum(family, theta)
    logf = lambda x: family._logpdf(np.asarray(x, dtype=float)) + theta * np.asarray(x, dtype=float)
    return quad.integrate_log(logf, family.support()).logvalue


def verify_cgf(family: NEFFamily, theta: float) -> float:
    """``|log(∫ p e^{theta x}) - psi(theta)|``."""
    return abs(log_cgf_numeric(family, theta) - psi_of_theta(family, theta))


def normalization(family: NEFFamily) -> float:
    """Total mass of the zero-tilt member by quadrature or summation."""
    return math.exp(log_cgf_numeric(family, 0.0))


def large_deviation_compare(family: NEFFamily, x_grid) -> list[dict]:
    """``log p(x)`` against ``S(mu = x)`` pointwise.

    Each record holds ``x``, ``logp``, ``S_at_x``, ``diff = logp - S``, and
    ``corrected = logp + correction - S`` where ``correction`` is the
    two-term Stirling remainder of the factorials in ``p`` (the Gaussian uses
    its normalizer, and the hyperbolic-cosecant family has none).
    """
    out = []
    for x in x_grid:
        lp = family_logpdf(family, x)
        S = entropy_S(family, x)
        c = family.ld_correction(float(x))
        out.append({"x": float(x), "logp": lp, "S_at_x": S, "diff": lp - S, "correction": c, "corrected": lp + c - S})
    return out


def _fd(fn, x, h):
    xl = np.longdouble(x)
    hl = np.longdouble(h)
    f_p, f_m, f_0 = fn(xl + hl), fn(xl - hl), fn(xl)
    return (f_p - f_m) / (2 * hl), (f_p - 2 * f_0 + f_m) / (hl * hl)


def check_legendre(family: NEFFamily, theta_grid, h: float = FD_STEP) -> dict:
    """Finite-difference residuals of the Legendre relations on ``theta_grid``.

    ``dual1 = max|psi'(theta) - mu(theta)|``, ``dual2 = max|S'(mu) + theta(mu)|``
    and ``curvature = max|S''(mu) V(mu) + 1|`` with ``mu = mu(theta)``,
    using centered differences in extended precision.
    """
    d1 = d2 = curv = 0.0
    for t in theta_grid:
        family._check_theta(t)
        tl = np.longdouble(t)
        mu = family._mu(tl)
        dpsi, _ = _fd(family._psi, t, h)
        d1 = max(d1, float(abs(dpsi - mu)))
        dS, d2S = _fd(family._S, mu, h)
        d2 = max(d2, float(abs(dS + family._theta(mu))))
        curv = max(curv, float(abs(d2S * family.V(mu) + 1)))
    return {"dual1": d1, "dual2": d2, "curvature": curv}


def default_theta_grid(family: NEFFamily, n: int = 21) -> np.ndarray:
    """Grid inside ``[-1, 1]`` and at most halfway to a finite edge of the natural domain.

    Near an edge ``mu`` and ``V(mu)`` grow without bound, and the fixed-step
    finite differences lose accuracy in proportion.
    """
    lo, hi = family.theta_range()
    a = max(-1.0, lo / 2) if math.isfinite(lo) else -1.0
    b = min(1.0, hi / 2) if math.isfinite(hi) else 1.0
    return np.linspace(a, b, n)


def default_test_family(name: str) -> NEFFamily:
    """Documented parameters used by the structural checks."""
    return {
        "gaussian": Gaussian(2.0, 0.0),
        "gamma": Gamma(3.0),
        "hyperbolic_cosecant": HyperbolicCosecant(1.0, 1.0, 0.0),
        "poisson": Poisson(1.0),
        "binomial": Binomial(10, 0.3),
        "negative_binomial": NegativeBinomial(5, 2.0 / 7.0),
    }[name]


def roots_json(vf: VarianceFunction):
    try:
        rp = roots(vf)
    except DegenerateError:
        return None
    return [[rp.mu1.real, rp.mu1.imag], [rp.mu2.real, rp.mu2.imag]]


def nef_report(vf: VarianceFunction, mu0: float) -> dict:
    fam = classify(vf, mu0)
    return {
        "family": fam.name,
        "parameters": fam.to_json(),
        "roots": roots_json(vf),
        "checks": check_legendre(fam, default_theta_grid(fam)),
    }
