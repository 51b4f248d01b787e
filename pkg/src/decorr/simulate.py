"""Monte Carlo checks of the analytic covariance of ``(X_0, X_t)``.

Random numbers come from a counter-based generator: sample ``i`` lives in
chunk ``i // CHUNK`` and each chunk draws from ``Philox(seed)`` jumped
``chunk`` times. A batch therefore depends only on ``(seed, sample index)``,
not on how many samples were requested or in which order chunks are made.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError
from .linalg import check_psd, expm, symmetrize
from .ou import OUModel, joint_pair, varsigma
from .scalar import ScalarLSDEModel, phi, variance_integral

CHUNK = 65_536
MIN_CHECK_SAMPLES = 10_000
Z_BAND = 4.0


@dataclass(frozen=True, eq=False)
class SampleBatch:
    x0: np.ndarray
    xt: np.ndarray
    t: float
    seed: int
    scheme: str  # "exact" or "euler"
    dt: float | None = None
    noise: np.ndarray | None = field(default=None, repr=False)
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        if self.x0.shape != self.xt.shape or self.x0.ndim != 2:
            raise ValueError("x0 and xt must be (n, d) arrays of equal shape")
        if self.x0.shape[0] < 2:
            raise ValueError("a batch needs at least two samples")
        if not (np.all(np.isfinite(self.x0)) and np.all(np.isfinite(self.xt))):
            raise ValueError("batch has non-finite samples")

    @property
    def n(self):
        return self.x0.shape[0]

    @property
    def d(self):
        return self.x0.shape[1]

    @property
    def pairs(self):
        return np.hstack([self.x0, self.xt])


def _normals(seed, n, width):
    """``(n, width)`` standard normals; row ``i`` depends only on ``(seed, i)``."""
    out = np.empty((n, width))
    base = np.random.Philox(seed)
    for chunk, start in enumerate(range(0, n, CHUNK)):
        stop = min(start + CHUNK, n)
        rng = np.random.Generator(base.jumped(chunk))
        out[start:stop] = rng.standard_normal((CHUNK, width))[: stop - start]
    return out


def _factor(S, name, notes):
    """A matrix ``F`` with ``F F^T = S``: Cholesky, or a clamped eigen square root."""
    try:
        return np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        _, lam, V = check_psd(S, name=name)
        notes.append(f"{name}: Cholesky failed, used eigenvalue square root with clamping")
        return V * np.sqrt(np.clip(lam, 0.0, None))


def _check_common(t, n, seed):
    if t < 0:
        raise PreconditionError(f"time must be nonnegative, got {t}")
    if n < 2:
        raise PreconditionError(f"need at least two samples, got {n}")
    if not 0 <= seed < 2**64:
        raise PreconditionError("seed must be a 64-bit unsigned integer")


def sample_exact(model, t, n_samples, seed) -> SampleBatch:
    """Draw ``(X_0, X_t)`` from its exact law.

    ``X_t = e^{tQ} X_0 + eps * N(0, varsigma_t)`` with the noise term
    independent of ``X_0``; no time discretisation is involved. Scalar models
    use ``Phi(t)`` and the variance integral in place of ``e^{tQ}`` and
    ``varsigma_t``.
    """
    _check_common(t, n_samples, seed)
    notes = []
    if isinstance(model, ScalarLSDEModel):
        d = 1
        mu0 = np.array([model.mu0])
        F0 = np.array([[math.sqrt(model.sigma0_sq)]])
        E = np.array([[phi(model, t)]])
        Ft = np.array([[model.sigma * math.sqrt(variance_integral(model, t))]])
    else:
        d = model.d
        mu0 = model.mu0
        F0 = _factor(model.Sigma0, "Sigma0", notes)
        E = expm(model.Q, t)
        Ft = _factor(varsigma(model, t), "varsigma_t", notes) if t > 0 else np.zeros((d, d))
    z = _normals(seed, n_samples, 2 * d)
    x0 = mu0 + z[:, :d] @ F0.T
    noise = model.epsilon * (z[:, d:] @ Ft.T)
    xt = x0.copy() if t == 0 else x0 @ E.T + noise
    return SampleBatch(x0, xt, float(t), int(seed), "exact", None, noise, tuple(notes))


def sample_euler(model: ScalarLSDEModel, t, dt, n_samples, seed) -> SampleBatch:
    """Euler-Maruyama for the scalar model, ``ceil(t/dt)`` equal steps of size at most ``dt``."""
    _check_common(t, n_samples, seed)
    if not isinstance(model, ScalarLSDEModel):
        raise PreconditionError("the Euler scheme is provided for the scalar model only")
    if not 0 < dt <= t:
        raise PreconditionError(f"need 0 < dt <= t, got dt={dt}, t={t}")
    if model.theta * dt >= 0.5:
        raise PreconditionError(f"unstable step: theta*dt = {model.theta * dt:.3g} >= 0.5")
    steps = math.ceil(t / dt - 1e-12)
    h = t / steps
    z = _normals(seed, n_samples, steps + 1)
    x0 = model.mu0 + math.sqrt(model.sigma0_sq) * z[:, 0]
    x = x0.copy()
    kick = model.epsilon * model.sigma * math.sqrt(h)
    for k in range(steps):
        rate = model.theta - float(model.A(k * h))
        x = x - rate * x * h + kick * z[:, k + 1]
    return SampleBatch(x0[:, None], x[:, None], float(t), int(seed), "euler", h)


def analytic_joint_covariance(model, t):
    if isinstance(model, ScalarLSDEModel):
        a = model.sigma0_sq
        P = phi(model, t)
        b = a * P * P + model.epsilon**2 * model.sigma**2 * variance_integral(model, t)
        return np.array([[a, a * P], [a * P, b]])
    return np.array(joint_pair(model, t).joint.cov)


def euler_bias_allowance(model: ScalarLSDEModel, t, dt):
    """Crude weak-order-one bound on the covariance bias of the Euler scheme, relative to scale."""
    rate = model.theta + model.A.abs_integral
    return 2.0 * rate * (1.0 + rate * t) * dt


@dataclass(frozen=True)
class CovarianceReport:
    passed: bool
    z: np.ndarray
    empirical: np.ndarray
    analytic: np.ndarray
    blocks: dict
    n: int
    allowance: float

    def table(self):
        k = self.z.shape[0]
        d = k // 2
        labels = [f"x0_{i + 1}" for i in range(d)] + [f"xt_{i + 1}" for i in range(d)]
        lines = ["z-scores (|z| <= 4 passes):", " " * 8 + "".join(f"{lab:>10}" for lab in labels)]
        for lab, row in zip(labels, self.z):
            lines.append(f"{lab:>8}" + "".join(f"{v:10.3f}" for v in row))
        return "\n".join(lines)


def empirical_covariance_check(batch: SampleBatch, model, *, require_size=True) -> CovarianceReport:
    """Compare the sample covariance of ``(X_0, X_t)`` with the analytic one entry by entry.

    The standard error of entry ``(i, j)`` is ``sqrt((c_ii c_jj + c_ij^2)/n)``
    (Gaussian fourth moments). An entry passes when its z-score is within
    ``+-4``. For Euler batches the deviation is first reduced by a bias
    allowance proportional to ``dt`` times ``sqrt(c_ii c_jj)``.
    """
    if require_size and batch.n < MIN_CHECK_SAMPLES:
        raise PreconditionError("batch too small for pass/fail mode")
    C = analytic_joint_covariance(model, batch.t)
    E = np.cov(batch.pairs, rowvar=False).reshape(C.shape)
    diag = np.diag(C)
    scale = np.sqrt(np.outer(diag, diag))
    se = np.sqrt((scale**2 + C**2) / batch.n)
    allowance = euler_bias_allowance(model, batch.t, batch.dt) if batch.scheme == "euler" else 0.0
    dev = np.abs(E - C) - allowance * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, np.sign(E - C) * np.clip(dev, 0.0, None) / se, np.where(dev > 0, np.inf, 0.0))
    d = batch.d
    ok = np.abs(z) <= Z_BAND
    blocks = {
        "Sigma0": bool(np.all(ok[:d, :d])),
        "cross": bool(np.all(ok[:d, d:]) and np.all(ok[d:, :d])),
        "rho_t": bool(np.all(ok[d:, d:])),
    }
    return CovarianceReport(bool(np.all(ok)), symmetrize(z), E, C, blocks, batch.n, allowance)


def export_csv(batch: SampleBatch, path):
    """Write ``sample,x0_1..x0_d,xt_1..xt_d`` with round-trip precision."""
    d = batch.d
    header = ["sample"] + [f"x0_{i + 1}" for i in range(d)] + [f"xt_{i + 1}" for i in range(d)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i, row in enumerate(batch.pairs):
            writer.writerow([i] + [repr(float(v)) for v in row])


def euler_variance_errors(model: ScalarLSDEModel, t, dts, n_samples, seed):
    """``|empirical Var(X_t) - analytic|`` for each step size, same seed and sample count."""
    exact = analytic_joint_covariance(model, t)[1, 1]
    return [abs(float(np.var(sample_euler(model, t, dt, n_samples, seed).xt, ddof=1)) - exact) for dt in dts]
