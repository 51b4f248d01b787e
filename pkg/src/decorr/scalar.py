"""One-dimensional linear SDE with a vanishing time-dependent drift.

    dX_t = -(theta - A(t)) X_t dt + eps sigma dB_t,   X_0 ~ N(mu0, sigma0^2)

The fundamental solution is ``Phi(t) = exp(-theta t + I(t))`` with
``I(t) = int_0^t A``. Every formula below is written through the shifted
integral ``V(t) = Phi(t)^2 int_0^t Phi(u)^{-2} du``, which stays bounded
(it tends to ``1/(2 theta)``) while ``Phi^{-2}`` itself overflows near
``t = 350/theta``.

With ``nu(t) = sigma0^2 Phi(t)^2 / (eps^2 sigma^2 V(t))`` the joint law of
``(X_0, X_t)`` has correlation ``phi_t = sqrt(nu/(1+nu))`` and

    KL(joint | product)  = log1p(nu) / 2
    KL(product | joint)  = nu - log1p(nu) / 2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import ClassVar, NamedTuple

import numpy as np
from scipy import integrate

from .errors import IntegrationError, ModelFormatError, ModelValidationError, PreconditionError
from .ou import DistanceValue, tv_from_canonical
from .trend import CScalingRow, DIAMETER_PROXY, summarize, trend_verdict, validate_eps_grid

QUAD_EPSABS = 1e-12
QUAD_EPSREL = 1e-12
QUAD_LIMIT = 500
PROFILE_METRICS = ("kl", "kl_rev", "w2", "tv")


# ---------------------------------------------------------------------------
# drift perturbations A(t)


@dataclass(frozen=True)
class ZeroDrift:
    kind: ClassVar[str] = "zero"

    def __call__(self, t):
        return 0.0 * np.asarray(t, dtype=float)

    def integral(self, t):
        return 0.0

    @property
    def total(self):
        return 0.0

    @property
    def abs_integral(self):
        return 0.0

    @property
    def tail_bound(self):
        return 0.0

    def to_dict(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class ExpDecay:
    """``A(t) = c exp(-lam t)``."""

    lam: float
    c: float
    kind: ClassVar[str] = "exp_decay"

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ModelValidationError(f"exp_decay needs lam > 0, got {self.lam}")
        if not math.isfinite(self.c):
            raise ModelValidationError("exp_decay coefficient must be finite")

    def __call__(self, t):
        return self.c * np.exp(-self.lam * np.asarray(t, dtype=float))

    def integral(self, t):
        return -self.c * math.expm1(-self.lam * t) / self.lam

    @property
    def total(self):
        return self.c / self.lam

    @property
    def abs_integral(self):
        return abs(self.c) / self.lam

    @property
    def tail_bound(self):
        return 0.0

    def to_dict(self):
        return {"kind": self.kind, "lam": self.lam, "c": self.c}


@dataclass(frozen=True)
class PowerDecay:
    """``A(t) = c (t0 + t)^(-p)`` with ``p > 1``."""

    p: float
    c: float
    t0: float = 1.0
    kind: ClassVar[str] = "power_decay"

    def __post_init__(self):
        if not self.p > 1:
            raise ModelValidationError(f"power_decay needs p > 1 for integrability, got {self.p}")
        if not self.t0 > 0:
            raise ModelValidationError(f"power_decay needs t0 > 0, got {self.t0}")
        if not math.isfinite(self.c):
            raise ModelValidationError("power_decay coefficient must be finite")

    def __call__(self, t):
        return self.c * (self.t0 + np.asarray(t, dtype=float)) ** (-self.p)

    def integral(self, t):
        q = 1.0 - self.p
        return self.c * (self.t0**q - (self.t0 + t) ** q) / (self.p - 1.0)

    @property
    def total(self):
        return self.c * self.t0 ** (1.0 - self.p) / (self.p - 1.0)

    @property
    def abs_integral(self):
        return abs(self.total)

    @property
    def tail_bound(self):
        return 0.0

    def to_dict(self):
        return {"kind": self.kind, "p": self.p, "c": self.c, "t0": self.t0}


@dataclass(frozen=True, eq=False)
class TableDrift:
    """Piecewise-linear ``A`` through samples ``(t_k, a_k)``, zero after the last knot.

    ``tail`` is a user-declared bound on ``|int_{t_last}^inf A|``; it does not
    enter any value, only the uncertainty reported for ``alpha``.
    """

    t: np.ndarray
    values: np.ndarray
    tail: float = 0.0
    kind: ClassVar[str] = "table"
    _cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        a = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != a.shape or len(t) < 2:
            raise ModelValidationError("table drift needs matching 1-D 't' and 'values' with at least two knots")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise ModelValidationError("table knots must start at 0 and increase strictly")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(t))):
            raise ModelValidationError("table drift has non-finite entries")
        if not (self.tail >= 0 and math.isfinite(self.tail)):
            raise ModelValidationError(f"table tail bound must be finite and nonnegative, got {self.tail}")
        cum = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(t) * (a[1:] + a[:-1]))])
        for name, arr in (("t", t), ("values", a), ("_cum", cum)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __call__(self, t):
        return np.interp(t, self.t, self.values, right=0.0)

    def integral(self, t):
        if t >= self.t[-1]:
            return float(self._cum[-1])
        k = int(np.searchsorted(self.t, t, side="right")) - 1
        h = t - self.t[k]
        return float(self._cum[k] + 0.5 * h * (self.values[k] + self(t)))

    @property
    def total(self):
        return float(self._cum[-1])

    @property
    def abs_integral(self):
        t, a = self.t, self.values
        # exact integral of |piecewise linear|, splitting segments at sign changes
        out = 0.0
        for t0, t1, a0, a1 in zip(t[:-1], t[1:], a[:-1], a[1:]):
            h = t1 - t0
            if a0 * a1 >= 0:
                out += 0.5 * h * abs(a0 + a1)
            else:
                out += 0.5 * h * (a0 * a0 + a1 * a1) / (abs(a0) + abs(a1))
        return out + self.tail

    @property
    def tail_bound(self):
        return self.tail

    def to_dict(self):
        return {"kind": self.kind, "t": self.t.tolist(), "values": self.values.tolist(), "tail_bound": self.tail}


def drift_from_dict(data):
    if data is None:
        return ZeroDrift()
    if not isinstance(data, dict) or "kind" not in data:
        raise ModelFormatError("field 'A' must be an object with a 'kind'")
    kind = data["kind"]
    try:
        if kind == "zero":
            return ZeroDrift()
        if kind == "exp_decay":
            return ExpDecay(float(data["lam"]), float(data["c"]))
        if kind == "power_decay":
            return PowerDecay(float(data["p"]), float(data["c"]), float(data.get("t0", 1.0)))
        if kind == "table":
            return TableDrift(data["t"], data["values"], float(data.get("tail_bound", 0.0)))
    except KeyError as exc:
        raise ModelFormatError(f"field 'A' of kind {kind!r} is missing {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ModelValidationError):
            raise
        raise ModelFormatError(f"field 'A': {exc}") from exc
    raise ModelFormatError(f"field 'A': unknown kind {kind!r}")


# ---------------------------------------------------------------------------
# model


@dataclass(frozen=True, eq=False)
class ScalarLSDEModel:
    theta: float
    sigma: float
    epsilon: float
    sigma0_sq: float
    mu0: float = 0.0
    A: ZeroDrift | ExpDecay | PowerDecay | TableDrift = field(default_factory=ZeroDrift)

    def __post_init__(self):
        for name in ("theta", "sigma", "epsilon", "sigma0_sq"):
            value = float(getattr(self, name))
            if not (value > 0 and math.isfinite(value)):
                raise ModelValidationError(f"{name} must be positive and finite, got {getattr(self, name)}")
            object.__setattr__(self, name, value)
        object.__setattr__(self, "mu0", float(self.mu0))
        if not math.isfinite(self.A.abs_integral):
            raise ModelValidationError("drift perturbation is not integrable")

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(
                theta=data["theta"],
                sigma=data["sigma"],
                epsilon=data["epsilon"],
                sigma0_sq=data["sigma0_sq"],
                mu0=data.get("mu0", 0.0),
                A=drift_from_dict(data.get("A")),
            )
        except KeyError as exc:
            raise ModelFormatError(f"missing field {exc.args[0]!r}") from exc
        except TypeError as exc:
            raise ModelFormatError(str(exc)) from exc

    @classmethod
    def from_ou(cls, model):
        """The scalar model equivalent to a one-dimensional OU model."""
        if model.d != 1:
            raise PreconditionError(f"need a one-dimensional OU model, got d={model.d}")
        return cls(
            theta=-float(model.Q[0, 0]),
            sigma=float(np.linalg.norm(model.sigma)),
            epsilon=model.epsilon,
            sigma0_sq=float(model.Sigma0[0, 0]),
            mu0=float(model.mu0[0]),
        )

    def with_epsilon(self, epsilon):
        return ScalarLSDEModel(self.theta, self.sigma, epsilon, self.sigma0_sq, self.mu0, self.A)

    @cached_property
    def alpha(self):
        return math.exp(-self.A.total)

    @cached_property
    def alpha_uncertainty(self):
        """Bound on ``|alpha - alpha_true|`` implied by the declared tail of ``A``."""
        return self.alpha * math.expm1(self.A.tail_bound)

    def t_epsilon(self, eps=None):
        eps = self.epsilon if eps is None else eps
        if not 0 < eps < 1:
            raise PreconditionError(f"noise level must lie in (0, 1), got {eps}")
        return -math.log(eps) / self.theta


def phi(model: ScalarLSDEModel, t):
    """Fundamental solution ``exp(-theta t + int_0^t A)``."""
    if t < 0:
        raise PreconditionError(f"time must be nonnegative, got {t}")
    return math.exp(-model.theta * t + model.A.integral(t))


def variance_integral(model: ScalarLSDEModel, t):
    """``Phi(t)^2 int_0^t Phi(u)^{-2} du``, evaluated without forming ``Phi^{-2}``.

    After the change of variables ``s = t - u`` the integrand is
    ``exp(-2 theta s + 2 (I(t) - I(t - s)))``, which is at most
    ``exp(2 int |A|)`` and decays like ``exp(-2 theta s)``.
    """
    if t < 0:
        raise PreconditionError(f"time must be nonnegative, got {t}")
    if t == 0:
        return 0.0
    th = model.theta
    if isinstance(model.A, ZeroDrift):
        return -math.expm1(-2.0 * th * t) / (2.0 * th)
    A = model.A
    It = A.integral(t)

    def integrand(s):
        return math.exp(-2.0 * th * s + 2.0 * (It - A.integral(t - s)))

    # past ~40/theta the integrand is below e^{-80} relative; splitting there
    # keeps quad from sampling a long flat tail
    knee = min(t, 40.0 / th)
    points = None
    if isinstance(A, TableDrift):
        knots = t - A.t[(A.t > 0) & (A.t < t)]
        points = [p for p in knots if 0 < p < knee][:QUAD_LIMIT // 4] or None
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            head, err = integrate.quad(
                integrand, 0.0, knee, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT, points=points
            )
            tail = tail_err = 0.0
            if knee < t:
                tail, tail_err = integrate.quad(integrand, knee, t, epsabs=QUAD_EPSABS, limit=QUAD_LIMIT)
        except integrate.IntegrationWarning as exc:
            raise IntegrationError(f"quadrature for the variance integral failed at t={t}: {exc}") from exc
    err += tail_err
    if err > 1e3 * QUAD_EPSABS + 1e-10 * abs(head):
        raise IntegrationError(f"variance integral at t={t} reached only {err:.2e}", achieved=err)
    return head + tail


def _nu(model: ScalarLSDEModel, t):
    V = variance_integral(model, t)
    # Phi^2 / V with both pieces finite; Phi^2 may underflow to 0, which is the right limit
    return model.sigma0_sq * phi(model, t) ** 2 / (model.epsilon**2 * model.sigma**2 * V)


def _w2_from_abc(a, b, c, ab_minus_c2):
    """2-Wasserstein between ``N(0, [[a, c], [c, b]])`` and ``N(0, diag(a, b))``.

    The eigenvalues of the squared-distance problem cancel catastrophically
    when ``c`` is small; everything is rewritten through ``ab - c^2``, which
    the caller supplies from an exact expression.
    """
    ab = a * b
    rab = math.sqrt(ab)
    gap = rab * c * c / (rab + math.sqrt(ab_minus_c2))  # ab - sqrt(ab (ab - c^2))
    total = a + b
    w2sq = 4.0 * gap / (total + math.sqrt(max(total * total - 2.0 * gap, 0.0)))
    return math.sqrt(max(w2sq, 0.0))


def _tv_from_nu(nu):
    est = tv_from_canonical([nu])
    return DistanceValue(est.estimate, est.error_bound)


def scalar_finite_distance(model: ScalarLSDEModel, t, metric) -> DistanceValue:
    """Distance between the law of ``(X_0, X_t)`` and the product of its marginals.

    ``w2`` is the raw distance; divide by ``epsilon`` for the normalised one.
    """
    if metric not in PROFILE_METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    if t < 0:
        raise PreconditionError(f"time must be nonnegative, got {t}")
    if t == 0:
        return DistanceValue(1.0 if metric == "tv" else math.inf)
    if metric in ("kl", "kl_rev", "tv"):
        nu = _nu(model, t)
        if metric == "tv":
            return _tv_from_nu(nu)
        fwd = 0.5 * math.log1p(nu)
        return DistanceValue(fwd if metric == "kl" else nu - fwd)
    a = model.sigma0_sq
    Phi = phi(model, t)
    noise = model.epsilon**2 * model.sigma**2 * variance_integral(model, t)
    b = noise + a * Phi * Phi
    c = a * Phi
    return DistanceValue(_w2_from_abc(a, b, c, a * noise))


# ---------------------------------------------------------------------------
# limiting profiles


class ProfilePoint(NamedTuple):
    r: float
    value: float
    metric: str
    error: float = 0.0


def profile_x(model: ScalarLSDEModel, r, w=1.0):
    """``2 theta sigma0^2 / (sigma^2 alpha^2 e^{2 theta r w})``, the limit of ``nu`` at ``t_eps + r w``."""
    if not w > 0:
        raise PreconditionError(f"window w must be positive, got {w}")
    th = model.theta
    log_x = math.log(2.0 * th * model.sigma0_sq / model.sigma**2) + 2.0 * model.A.total - 2.0 * th * r * w
    return math.exp(log_x) if log_x < 709.0 else math.inf


def profile(model: ScalarLSDEModel, metric, r, w=1.0) -> ProfilePoint:
    """Limit of the distance at ``|ln eps|/theta + r w`` as ``eps -> 0``.

    ``w2`` here is the normalised profile (limit of ``W2 / eps``).
    """
    if metric not in PROFILE_METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    x = profile_x(model, r, w)
    if metric == "kl":
        return ProfilePoint(r, 0.5 * math.log1p(x), metric)
    if metric == "kl_rev":
        if math.isinf(x):
            return ProfilePoint(r, math.inf, metric)
        return ProfilePoint(r, x - 0.5 * math.log1p(x), metric)
    if metric == "tv":
        tv = _tv_from_nu(x)
        return ProfilePoint(r, tv.value, metric, tv.error)
    # W2: with p = sigma^2/(2 theta sigma0^2) and q = e^{-2 theta r w}/alpha^2,
    # G^2 = 2 sigma0^2 (p + q - sqrt(p (p + q))) = 2 sigma0^2 q (p + q) / (p + q + sqrt(p (p + q)))
    p = model.sigma**2 / (2.0 * model.theta * model.sigma0_sq)
    q = x * p
    if math.isinf(q):
        return ProfilePoint(r, math.inf, metric)
    s = p + q
    return ProfilePoint(r, math.sqrt(2.0 * model.sigma0_sq * q * s / (s + math.sqrt(p * s))), metric)


def profile_correlation(model: ScalarLSDEModel, r, w=1.0):
    x = profile_x(model, r, w)
    return 1.0 if math.isinf(x) else math.sqrt(x / (1.0 + x))


def abruptness_check(model: ScalarLSDEModel, metric, c_values, eps_grid):
    """Evaluate the distance at ``c t_eps`` along a decreasing noise grid for each ``c``.

    Returns an :class:`~decorr.trend.AbruptnessReport`. ``w2`` is normalised by eps.
    """
    if metric not in DIAMETER_PROXY:
        raise ValueError(f"unknown metric {metric!r}")
    eps = validate_eps_grid(eps_grid)
    rows = []
    for c in c_values:
        if not c > 0:
            raise ValueError(f"window scale c must be positive, got {c}")
        vals, errs = [], []
        for e in eps:
            m = model.with_epsilon(e)
            d = scalar_finite_distance(m, c * m.t_epsilon(), metric)
            scale = e if metric == "w2" else 1.0
            vals.append(d.value / scale)
            errs.append(d.error / scale)
        rows.append(CScalingRow(float(c), tuple(eps), tuple(vals), tuple(errs), trend_verdict(c, vals, errs, metric)))
    return summarize(metric, rows)
