"""Measurement-scale deformations and the measurement function T.

A scale is a stack of deformation levels applied innermost-first to an
observable ``f``::

    w0 = f,   w_i = level_i(w_{i-1}),   w = w_depth

and the measurement function built on top of it is

    T(f) = T0 * exp(beta * w) + (alpha / beta) * (exp(beta * w) - 1)

which tends to ``T0 + alpha * w`` as ``beta -> 0``.  Every level carries an
analytic derivative, so ``dT/dy`` is assembled by the chain rule.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, ClassVar, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, SpecParseError

# |beta| below this uses the linear branch T = T0 + alpha * w
BETA_LINEAR_THRESHOLD = 1e-9

_INF = math.inf


def _as_array(x):
    return np.asarray(x, dtype=float)


def _maybe_scalar(x, like):
    if np.ndim(like) == 0:
        return float(x)
    return x


# ---------------------------------------------------------------------------
# deformation levels
# ---------------------------------------------------------------------------


class Level:
    """One deformation ``w -> level(w)`` with its analytic derivative."""

    kind: ClassVar[str] = ""

    @property
    def arg_interval(self) -> tuple[float, float]:
        """Open interval of admissible arguments."""
        raise NotImplementedError

    @property
    def increasing(self) -> bool | None:
        """True/False when strictly monotone on its arguments, else None."""
        raise NotImplementedError

    def _value(self, w):
        raise NotImplementedError

    def _derivative(self, w):
        raise NotImplementedError

    def transitions(self) -> list[float]:
        """Arguments where the level switches between linear and log behaviour."""
        return []

    def apply(self, w):
        """Return ``(value, derivative)``; entries are NaN outside the domain."""
        w = _as_array(w)
        lo, hi = self.arg_interval
        ok = (w > lo) & (w < hi)
        with np.errstate(all="ignore"):
            val = np.where(ok, self._value(w), np.nan)
            der = np.where(ok, self._derivative(w), np.nan)
        return val, der

    def limit(self, w):
        """Value with the one-sided limits at the interval edges (may be +-inf)."""
        with np.errstate(all="ignore"):
            return self._value(_as_array(w))

    def invert(self, z):
        """Inverse map for monotone levels (numerical by default)."""
        if self.increasing is None:
            raise DomainError(f"{self.kind} level is not monotone; no inverse")
        z = _as_array(z)
        out = np.array([self._invert_one(float(v)) for v in np.ravel(z)])
        return out.reshape(z.shape)

    def _invert_one(self, z):
        lo, hi = self.arg_interval
        return _solve_monotone(lambda w: float(self._value(np.float64(w))), z, lo, hi)

    def to_json(self) -> dict:
        raise NotImplementedError


def _solve_monotone(fn, target, lo, hi):
    """Solve ``fn(w) = target`` for a monotone ``fn`` on the open ``(lo, hi)``."""
    if not math.isfinite(target):
        return hi if target > 0 else lo
    # start from an interior point and expand until the target is bracketed
    if math.isfinite(lo) and math.isfinite(hi):
        span = hi - lo
        ts = [2.0**-k for k in range(1070, 1, -8)] + [0.5] + [1 - 2.0**-k for k in range(2, 54, 2)]
        pts = [lo + span * t for t in ts if lo < lo + span * t < hi]
    elif math.isfinite(lo):
        pts = [lo + 1e-300] + [lo + 2.0**k for k in range(-60, 1024, 4)]
    elif math.isfinite(hi):
        pts = [hi - 2.0**k for k in range(1020, -61, -4)] + [hi - 1e-300]
    else:
        pts = [-(2.0**k) for k in range(1020, -4, -4)] + [2.0**k for k in range(-4, 1021, 4)]
    vals = []
    for p in pts:
        with np.errstate(all="ignore"):
            vals.append(fn(p) - target)
    for (p0, v0), (p1, v1) in zip(zip(pts, vals), zip(pts[1:], vals[1:])):
        if not (math.isfinite(v0) and math.isfinite(v1)):
            continue
        if v0 == 0.0:
            return p0
        if v0 * v1 < 0:
            return brentq(lambda w: fn(w) - target, p0, p1, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=400)
        if v1 == 0.0:
            return p1
    raise DomainError(f"value {target!r} is outside the range of the level")


@dataclass(frozen=True)
class PureLog(Level):
    """``w -> log w``."""

    kind: ClassVar[str] = "pure_log"

    @property
    def arg_interval(self):
        return (0.0, _INF)

    @property
    def increasing(self):
        return True

    def _value(self, w):
        return np.log(w)

    def _derivative(self, w):
        return 1.0 / w

    def _invert_one(self, z):
        return math.exp(z) if z < 709.78 else _INF

    def to_json(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class LinearLog(Level):
    """``w -> log(c + w)``: linear for ``w << c``, logarithmic for ``w >> c``."""

    c: float = 0.0
    kind: ClassVar[str] = "linear_log"

    def __post_init__(self):
        if not (self.c >= 0 and math.isfinite(self.c)):
            raise DomainError(f"linear_log requires finite c >= 0, got {self.c}")

    @property
    def arg_interval(self):
        return (-self.c, _INF)

    @property
    def increasing(self):
        return True

    def transitions(self):
        return [self.c] if self.c > 0 else []

    def _value(self, w):
        return np.log(self.c + w)

    def _derivative(self, w):
        return 1.0 / (self.c + w)

    def _invert_one(self, z):
        return (math.exp(z) if z < 709.78 else _INF) - self.c

    def to_json(self):
        return {"kind": self.kind, "c": self.c}


@dataclass(frozen=True)
class LogLinear(Level):
    """``w -> c*w + log w``: logarithmic for small ``w``, linear for large ``w``.

    Negative ``c`` is accepted so that gamma laws with shape above one stay
    reachable; the level is then not monotone past ``w = -1/c``.
    """

    c: float = 0.0
    kind: ClassVar[str] = "log_linear"

    def __post_init__(self):
        if not math.isfinite(self.c):
            raise DomainError(f"log_linear requires finite c, got {self.c}")

    @property
    def arg_interval(self):
        return (0.0, _INF)

    @property
    def increasing(self):
        return True if self.c >= 0 else None

    def transitions(self):
        return [1.0 / abs(self.c)] if self.c != 0 else []

    def _value(self, w):
        return self.c * w + np.log(w)

    def _derivative(self, w):
        return self.c + 1.0 / w

    def to_json(self):
        return {"kind": self.kind, "c": self.c}


@dataclass(frozen=True)
class LogLinearLog(Level):
    """``w -> log((c2 - w) * (w - c1)**b)`` on ``(c1, c2)``."""

    c1: float = 0.0
    c2: float = 1.0
    b: float = 1.0
    kind: ClassVar[str] = "log_linear_log"

    def __post_init__(self):
        if not (math.isfinite(self.c1) and math.isfinite(self.c2) and self.c1 < self.c2):
            raise DomainError(f"log_linear_log requires finite c1 < c2, got ({self.c1}, {self.c2})")
        if not math.isfinite(self.b):
            raise DomainError("log_linear_log requires finite b")

    @property
    def arg_interval(self):
        return (self.c1, self.c2)

    @property
    def increasing(self):
        return False if self.b <= 0 else None

    def transitions(self):
        if self.b > 0:
            return [(self.c1 + self.b * self.c2) / (1.0 + self.b)]
        return [0.5 * (self.c1 + self.c2)]

    def _value(self, w):
        return np.log(self.c2 - w) + self.b * np.log(w - self.c1)

    def _derivative(self, w):
        return -1.0 / (self.c2 - w) + self.b / (w - self.c1)

    def to_json(self):
        return {"kind": self.kind, "c1": self.c1, "c2": self.c2, "b": self.b}


@dataclass(frozen=True)
class LinearLogLinear(Level):
    """``w -> c2*w + b*log(c1 + w)``: linear, then log, then linear again."""

    c1: float = 0.0
    c2: float = 0.0
    b: float = 1.0
    kind: ClassVar[str] = "linear_log_linear"

    def __post_init__(self):
        if not (self.c1 >= 0 and self.c2 >= 0 and math.isfinite(self.c1) and math.isfinite(self.c2)):
            raise DomainError("linear_log_linear requires finite c1 >= 0 and c2 >= 0")
        if not math.isfinite(self.b):
            raise DomainError("linear_log_linear requires finite b")

    @property
    def arg_interval(self):
        return (-self.c1, _INF)

    @property
    def increasing(self):
        if self.b >= 0 and (self.b > 0 or self.c2 > 0):
            return True
        if self.b < 0 and self.c2 == 0:
            return False
        return None

    def transitions(self):
        out = [self.c1] if self.c1 > 0 else []
        if self.c2 > 0 and self.b != 0:
            out.append(abs(self.b) / self.c2)
        return out

    def _value(self, w):
        return self.c2 * w + self.b * np.log(self.c1 + w)

    def _derivative(self, w):
        return self.c2 + self.b / (self.c1 + w)

    def to_json(self):
        return {"kind": self.kind, "c1": self.c1, "c2": self.c2, "b": self.b}


_LEVEL_KINDS = {
    "pure_log": (PureLog, ()),
    "linear_log": (LinearLog, ("c",)),
    "log_linear": (LogLinear, ("c",)),
    "log_linear_log": (LogLinearLog, ("c1", "c2", "b")),
    "linear_log_linear": (LinearLogLinear, ("c1", "c2", "b")),
}


def level_from_json(doc: dict) -> Level:
    if not isinstance(doc, dict) or "kind" not in doc:
        raise SpecParseError(f"level must be an object with a 'kind' field, got {doc!r}")
    kind = doc["kind"]
    if kind not in _LEVEL_KINDS:
        raise SpecParseError(f"unknown level kind {kind!r}")
    cls, names = _LEVEL_KINDS[kind]
    extra = set(doc) - {"kind", *names}
    if extra:
        raise SpecParseError(f"unexpected fields for {kind}: {sorted(extra)}")
    kwargs = {}
    for name in names:
        if name not in doc:
            raise SpecParseError(f"{kind} level is missing field {name!r}")
        value = doc[name]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SpecParseError(f"{kind}.{name} must be a number, got {value!r}")
        kwargs[name] = float(value)
    try:
        return cls(**kwargs)
    except DomainError as exc:
        raise SpecParseError(str(exc)) from exc


# ---------------------------------------------------------------------------
# composed scale
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScaleSpec:
    """Ordered stack of deformation levels; depth 0 is the identity ``w = f``."""

    levels: tuple[Level, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))

    @property
    def depth(self) -> int:
        return len(self.levels)

    def w_and_derivative(self, f):
        """Composite deformation and ``dw/df``; NaN where any stage is invalid."""
        w = _as_array(f).copy()
        der = np.ones_like(w)
        for level in self.levels:
            w, d = level.apply(w)
            der = der * d
        return w, der

    def w(self, f):
        return self.w_and_derivative(f)[0]

    def w_inverse(self, z):
        """Inverse of the composite deformation (monotone stacks only)."""
        z = _as_array(z)
        for level in reversed(self.levels):
            z = level.invert(z)
        return z

    @property
    def monotone(self) -> bool:
        return all(level.increasing is not None for level in self.levels)

    def domain(self) -> tuple[float, float]:
        """Maximal open interval of ``f`` on which every stage is defined."""
        lo, hi = -_INF, _INF
        prefix: list[Level] = []
        for level in self.levels:
            a, b = level.arg_interval
            if not prefix:
                lo, hi = a, b
            elif all(p.increasing is not None for p in prefix):
                lo, hi = _monotone_preimage(prefix, (lo, hi), (a, b))
            else:
                lo, hi = _sampled_preimage(ScaleSpec(tuple(prefix)), (lo, hi), (a, b))
            prefix.append(level)
        return (lo, hi)

    def breakpoints(self) -> list[float]:
        """Transition constants of every level, mapped back to ``f``."""
        out: list[float] = []
        for i, level in enumerate(self.levels):
            prefix = ScaleSpec(self.levels[:i])
            for c in level.transitions():
                try:
                    f = float(prefix.w_inverse(c)) if prefix.depth else c
                except DomainError:
                    continue
                if math.isfinite(f):
                    out.append(f)
        return sorted(set(out))

    # serialization -------------------------------------------------------

    def to_json(self) -> dict:
        return {"levels": [level.to_json() for level in self.levels]}

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, doc) -> "ScaleSpec":
        if isinstance(doc, (str, bytes)):
            try:
                doc = json.loads(doc)
            except json.JSONDecodeError as exc:
                raise SpecParseError(f"invalid JSON: {exc}") from exc
        if not isinstance(doc, dict) or "levels" not in doc:
            raise SpecParseError("scale spec must be an object with a 'levels' array")
        levels = doc["levels"]
        if not isinstance(levels, list):
            raise SpecParseError("'levels' must be an array")
        return cls(tuple(level_from_json(item) for item in levels))


def _monotone_preimage(prefix, current, target):
    """Preimage of ``target`` under a composition of monotone levels."""
    lo, hi = target
    for level in reversed(prefix):
        a, b = level.arg_interval
        fa, fb = float(level.limit(a)), float(level.limit(b))
        if level.increasing:
            new_lo = a if lo <= fa else float(level.invert(lo))
            new_hi = b if hi >= fb else float(level.invert(hi))
        else:
            new_lo = a if hi >= fa else float(level.invert(hi))
            new_hi = b if lo <= fb else float(level.invert(lo))
        lo, hi = new_lo, new_hi
    return (max(lo, current[0]), min(hi, current[1]))


def _sampled_preimage(prefix: ScaleSpec, current, target, n=4097):
    """Preimage by dense sampling; must come out as a single interval."""
    from .quadrature import from_real_line

    x = np.linspace(-40.0, 40.0, n)
    f = from_real_line(x, current)
    w = prefix.w(f)
    ok = np.isfinite(w) & (w > target[0]) & (w < target[1])
    if not ok.any():
        raise DomainError("scale spec has an empty domain")
    idx = np.flatnonzero(ok)
    if idx[-1] - idx[0] + 1 != idx.size:
        raise DomainError("scale spec domain is not a single interval")

    def valid(xv):
        wv = float(prefix.w(from_real_line(np.float64(xv), current)))
        return math.isfinite(wv) and target[0] < wv < target[1]

    def edge(inside, outside):
        for _ in range(200):
            mid = 0.5 * (inside + outside)
            if mid in (inside, outside):
                break
            if valid(mid):
                inside = mid
            else:
                outside = mid
        return float(from_real_line(np.float64(inside), current))

    lo = current[0] if idx[0] == 0 else edge(x[idx[0]], x[idx[0] - 1])
    hi = current[1] if idx[-1] == n - 1 else edge(x[idx[-1]], x[idx[-1] + 1])
    return (lo, hi)


def compose(*levels: Level) -> ScaleSpec:
    return ScaleSpec(tuple(levels))


# ---------------------------------------------------------------------------
# observable reductions
# ---------------------------------------------------------------------------

_REDUCTION_DOMAINS = {
    "identity": (-_INF, _INF),
    "centered_square": (-_INF, _INF),
    "absolute_value": (-_INF, _INF),
    "power": (0.0, _INF),
    "log": (0.0, _INF),
    "ratio": (-1.0, _INF),
}


@dataclass(frozen=True)
class ObservableReduction:
    """Sufficient summary ``f_y`` of an observation.

    ``inner`` (optional) is applied first, so ``CenteredSquare(mu)`` over an
    inner ``Log`` gives ``(log y - mu)**2``.
    """

    kind: str = "identity"
    mu: float = 0.0
    k: float = 1.0
    domain: tuple[float, float] | None = None
    inner: "ObservableReduction | None" = None

    def __post_init__(self):
        if self.kind not in _REDUCTION_DOMAINS:
            raise DomainError(f"unknown reduction kind {self.kind!r}")
        if self.kind == "power" and (self.k == 0 or not math.isfinite(self.k)):
            raise DomainError("power reduction requires finite k != 0")
        if self.domain is None:
            dom = self.inner.domain if self.inner is not None else _REDUCTION_DOMAINS[self.kind]
            object.__setattr__(self, "domain", tuple(float(v) for v in dom))
        else:
            object.__setattr__(self, "domain", tuple(float(v) for v in self.domain))

    # constructors matching the reduction kinds
    @classmethod
    def identity(cls):
        return cls("identity")

    @classmethod
    def centered_square(cls, mu=0.0, inner=None):
        return cls("centered_square", mu=mu, inner=inner)

    @classmethod
    def absolute_value(cls):
        return cls("absolute_value")

    @classmethod
    def power(cls, k):
        return cls("power", k=k)

    @classmethod
    def log(cls):
        return cls("log")

    @classmethod
    def ratio(cls):
        return cls("ratio")

    @property
    def is_identity(self) -> bool:
        return self.kind == "identity" and self.inner is None

    def _outer(self, u):
        kind = self.kind
        with np.errstate(all="ignore"):
            if kind == "identity":
                return u, np.ones_like(u)
            if kind == "centered_square":
                d = u - self.mu
                return d * d, 2.0 * d
            if kind == "absolute_value":
                return np.abs(u), np.sign(u)
            if kind == "power":
                return u**self.k, self.k * u ** (self.k - 1.0)
            if kind == "log":
                return np.log(u), 1.0 / u
            if kind == "ratio":
                return np.where(np.isposinf(u), 1.0, u / (1.0 + u)), 1.0 / (1.0 + u) ** 2
        raise AssertionError(kind)

    def value_and_derivative(self, y):
        y = _as_array(y)
        if self.inner is not None:
            u, du = self.inner.value_and_derivative(y)
        else:
            u, du = y, np.ones_like(y)
        lo, hi = self.domain
        inside = (y > lo) & (y < hi) if self.inner is None else np.isfinite(u)
        f, df = self._outer(u)
        f = np.where(inside, f, np.nan)
        return f, np.where(inside, df * du, np.nan)

    def __call__(self, y):
        return _maybe_scalar(self.value_and_derivative(y)[0], y)

    def _outer_image(self, lo, hi):
        """Image of the closed hull of ``(lo, hi)`` under the outer map."""
        with np.errstate(all="ignore"):
            ends = self._outer(np.array([lo, hi]))[0]
        vals = [float(v) for v in ends if not math.isnan(v)]
        if self.kind == "centered_square" and lo <= self.mu <= hi:
            vals.append(0.0)
        if self.kind == "absolute_value" and lo <= 0.0 <= hi:
            vals.append(0.0)
        return (min(vals), max(vals))

    def image(self, support):
        lo, hi = support
        if self.inner is not None:
            lo, hi = self.inner.image(support)
        return self._outer_image(lo, hi)

    def to_json(self) -> dict:
        doc: dict = {"kind": self.kind}
        if self.kind == "centered_square":
            doc["mu"] = self.mu
        if self.kind == "power":
            doc["k"] = self.k
        if self.inner is not None:
            doc["inner"] = self.inner.to_json()
        return doc

    @classmethod
    def from_json(cls, doc) -> "ObservableReduction":
        if not isinstance(doc, dict) or doc.get("kind") not in _REDUCTION_DOMAINS:
            raise SpecParseError(f"invalid reduction {doc!r}")
        inner = cls.from_json(doc["inner"]) if "inner" in doc else None
        try:
            return cls(doc["kind"], mu=float(doc.get("mu", 0.0)), k=float(doc.get("k", 1.0)), inner=inner)
        except (TypeError, ValueError) as exc:
            raise SpecParseError(str(exc)) from exc


IDENTITY = ObservableReduction.identity()


# ---------------------------------------------------------------------------
# measurement function
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScaleParams:
    """Constants of the general solution ``T0 e^{bw} + (a/b)(e^{bw} - 1)``."""

    T0: float = 0.0
    alpha: float = 1.0
    beta: float = 0.0

    def __post_init__(self):
        for name in ("T0", "alpha", "beta"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"ScaleParams.{name} must be finite")

    @property
    def linear(self) -> bool:
        return abs(self.beta) < BETA_LINEAR_THRESHOLD


@dataclass(frozen=True)
class AffineFit:
    """Least-squares fit ``T(G(f)) ~ a + b T(f)`` with its max-norm residual."""

    a: float
    b: float
    max_residual: float


def _zero_like(w):
    return np.where(np.isnan(w), np.nan, 0.0)


def T_of_w(w, params: ScaleParams):
    """Measurement function as a function of the deformation ``w``."""
    w = _as_array(w)
    with np.errstate(over="ignore", invalid="ignore"):
        # zero coefficients drop their term so that 0 * inf never appears
        if params.linear:
            return params.T0 + (params.alpha * w if params.alpha else _zero_like(w))
        bw = params.beta * w
        first = params.T0 * np.exp(bw) if params.T0 else _zero_like(w)
        second = params.alpha * (np.expm1(bw) / params.beta) if params.alpha else _zero_like(w)
        return first + second


def dT_dw(w, params: ScaleParams):
    """``dT/dw = alpha + beta*T = (alpha + beta*T0) e^{beta w}``."""
    w = _as_array(w)
    if params.linear:
        return np.full_like(w, params.alpha)
    c = params.alpha + params.beta * params.T0
    with np.errstate(over="ignore", invalid="ignore"):
        return c * np.exp(params.beta * w) if c else np.zeros_like(w)


def _check_domain(values, what, argument):
    nan = np.isnan(values)
    if np.any(nan):
        bad = np.ravel(_as_array(argument))[np.ravel(nan)]
        raise DomainError(f"{what} undefined at {bad[:5].tolist()}")


def eval_w(spec: ScaleSpec, f):
    """Composite deformation ``w(f)``; raises DomainError outside the domain."""
    w = spec.w(f)
    _check_domain(w, "deformation", f)
    return _maybe_scalar(w, f)


def eval_w_prime(spec: ScaleSpec, f):
    w, d = spec.w_and_derivative(f)
    _check_domain(w, "deformation", f)
    return _maybe_scalar(d, f)


def eval_T(spec: ScaleSpec, params: ScaleParams, f):
    """Measurement function ``T(f)``.

    Raises
    ------
    DomainError
        If some log argument in the level stack is not positive.
    OverflowError
        If ``exp(beta*w)`` is not representable.
    """
    w = eval_w(spec, f)
    T = T_of_w(w, params)
    if np.any(np.isinf(T) & np.isfinite(_as_array(w))):
        raise OverflowError("exp(beta*w) overflows")
    return _maybe_scalar(T, f)


def eval_T_prime(spec: ScaleSpec, params: ScaleParams, y, reduction: ObservableReduction = IDENTITY):
    """``dT(f_y)/dy`` assembled from analytic per-level derivatives."""
    f, df = reduction.value_and_derivative(y)
    _check_domain(f, "reduction", y)
    w, dw = spec.w_and_derivative(f)
    _check_domain(w, "deformation", y)
    with np.errstate(over="ignore", invalid="ignore"):
        out = dT_dw(w, params) * dw * df
    if np.any(np.isinf(out)):
        raise OverflowError("exp(beta*w) overflows")
    return _maybe_scalar(out, y)


def measurement(spec: ScaleSpec, params: ScaleParams, reduction: ObservableReduction, y):
    """Vectorized ``(T(f_y), dT/dy)`` with NaN outside the domain, no raising."""
    f, df = reduction.value_and_derivative(y)
    w, dw = spec.w_and_derivative(f)
    with np.errstate(all="ignore"):
        T = T_of_w(w, params)
        dT = dT_dw(w, params) * dw * df
    return T, dT


# ---------------------------------------------------------------------------
# one-parameter group of affine transformations
# ---------------------------------------------------------------------------


def finite_transform(alpha: float, beta: float, epsilon, T_value):
    """Action of the group element with parameter ``epsilon`` on a value of T.

    ``(alpha/beta)(e^{eps beta} - 1) + e^{eps beta} T``, with ``T + eps*alpha``
    as the ``beta -> 0`` branch.
    """
    eps = _as_array(epsilon)
    T = _as_array(T_value)
    if abs(beta) < BETA_LINEAR_THRESHOLD:
        out = T + eps * alpha
    else:
        eb = eps * beta
        out = alpha * np.expm1(eb) / beta + np.exp(eb) * T
    return _maybe_scalar(out, np.broadcast_arrays(eps, T)[0] if np.ndim(eps) or np.ndim(T) else 0.0)


def generator_flow(spec: ScaleSpec, epsilon: float) -> Callable:
    """Map ``G(f) = w^{-1}(w(f) + epsilon)``, an exact invariance of every T on this scale."""
    if not spec.monotone:
        raise DomainError("generator flow needs a monotone level stack")

    def G(f):
        w = eval_w(spec, f)
        out = spec.w_inverse(_as_array(w) + epsilon)
        return _maybe_scalar(out, f)

    return G


def fit_affine(T_base, T_image) -> AffineFit:
    """Ordinary least squares of ``T_image ~ a + b T_base``."""
    x = _as_array(T_base)
    yv = _as_array(T_image)
    A = np.column_stack([np.ones_like(x), x])
    (a, b), *_ = np.linalg.lstsq(A, yv, rcond=None)
    resid = float(np.max(np.abs(yv - a - b * x)))
    return AffineFit(float(a), float(b), resid)


def check_affine_invariance(
    spec: ScaleSpec,
    params: ScaleParams,
    G: Callable,
    sample_points: Sequence[float],
    reduction: ObservableReduction = IDENTITY,
) -> AffineFit:
    """Fit ``T(G(f)) = a + b T(f)`` on the sample; the caller judges the residual."""
    pts = _as_array(sample_points)
    if pts.size < 3:
        raise ValueError("need at least 3 sample points")
    f = _as_array(reduction(pts))
    lo, hi = spec.domain()
    if np.any(~np.isfinite(f)) or np.any((f <= lo) | (f >= hi)):
        raise DomainError("sample points outside the scale domain")
    g = _as_array([G(v) for v in f])
    if np.any(~np.isfinite(g)) or np.any((g <= lo) | (g >= hi)):
        raise DomainError("G maps sample points outside the scale domain")
    return fit_affine(eval_T(spec, params, f), eval_T(spec, params, g))
