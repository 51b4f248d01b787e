"""Multivariate Ornstein-Uhlenbeck model ``dX = Q X dt + eps sigma dB``.

Builds the covariance objects behind every distance in the package: the
Gramian ``varsigma_t = int_0^t e^{sQ} sigma sigma^T e^{sQ^T} ds`` (always
*without* the ``eps^2`` factor), the auto-covariance ``rho(s, t)``, and the
joint law of ``(X_0, X_t)`` next to the independent product law.
"""

from __future__ import annotations

import math
from dataclasses import InitVar, dataclass, field, replace
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .errors import ModelValidationError, PreconditionError, StabilityError
from .gaussian import GaussianLaw, TVEstimate, kl_divergence, tv_distance, wasserstein2
from .linalg import (
    TOL_PSD,
    TOL_RANK,
    TOL_STAB,
    as_square,
    check_psd,
    expm,
    lyapunov_solve,
    numerical_rank,
    symmetrize,
)

METRICS = ("kl", "kl_rev", "w2", "tv")


class DistanceValue(NamedTuple):
    """A distance and its numerical error bound (zero for closed forms)."""

    value: float
    error: float = 0.0


def check_hurwitz(Q, tol=TOL_STAB):
    """Return ``(stable, max_real_part)``; stable means every eigenvalue has Re < -tol*scale."""
    Q = as_square(Q, "Q")
    try:
        eig = np.linalg.eigvals(Q)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise ArithmeticError(f"eigenvalue computation failed: {exc}") from exc
    top = float(np.max(eig.real))
    scale = max(1.0, float(np.linalg.norm(Q, 2)))
    return top < -tol * scale, top


def controllability_matrix(Q, sigma):
    Q = as_square(Q, "Q")
    sigma = np.asarray(sigma, dtype=float).reshape(Q.shape[0], -1)
    blocks = [sigma]
    for _ in range(Q.shape[0] - 1):
        blocks.append(Q @ blocks[-1])
    return np.hstack(blocks)


def check_controllability(Q, sigma, tol=TOL_RANK):
    """Return ``(ok, rank)`` of ``[sigma, Q sigma, ..., Q^{d-1} sigma]``."""
    C = controllability_matrix(Q, sigma)
    rank = numerical_rank(C, tol)
    return rank == C.shape[0], rank


@dataclass(frozen=True, eq=False)
class OUModel:
    """Parameters of the multivariate OU process.

    ``jordan`` optionally carries exact Jordan data for ``Q`` (see
    :mod:`decorr.spectral`). Pass ``validate=False`` to build a model that
    skips the stability/rank checks, e.g. to report on an invalid file.
    """

    Q: np.ndarray
    sigma: np.ndarray
    epsilon: float
    mu0: np.ndarray
    Sigma0: np.ndarray
    jordan: dict | None = field(default=None, repr=False)
    validate: InitVar[bool] = True

    def __post_init__(self, validate):
        Q = as_square(self.Q, "Q")
        d = Q.shape[0]
        sigma = np.asarray(self.sigma, dtype=float)
        if sigma.ndim == 1:
            sigma = sigma.reshape(d, -1)
        if sigma.ndim != 2 or sigma.shape[0] != d:
            raise ModelValidationError(f"sigma must have {d} rows, got shape {sigma.shape}")
        mu0 = np.atleast_1d(np.asarray(self.mu0, dtype=float))
        if mu0.shape != (d,):
            raise ModelValidationError(f"mu0 must have length {d}, got shape {mu0.shape}")
        try:
            Sigma0, _, _ = check_psd(np.atleast_2d(self.Sigma0), name="Sigma0")
        except ValueError as exc:
            raise ModelValidationError(str(exc)) from exc
        if Sigma0.shape != (d, d):
            raise ModelValidationError(f"Sigma0 must be {d}x{d}, got {Sigma0.shape}")
        eps = float(self.epsilon)
        if not (eps > 0 and math.isfinite(eps)):
            raise ModelValidationError(f"epsilon must be positive and finite, got {self.epsilon}")
        for name, arr in (("Q", Q), ("sigma", sigma), ("mu0", mu0), ("Sigma0", Sigma0)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "epsilon", eps)
        if validate:
            stable, top = check_hurwitz(Q)
            if not stable:
                raise ModelValidationError(f"not Hurwitz-stable (max real part {top:.6g})")
            ok, rank = check_controllability(Q, sigma)
            if not ok:
                raise ModelValidationError(f"rank condition fails: rank={rank}<{d}")

    @property
    def d(self):
        return self.Q.shape[0]

    @property
    def n(self):
        return self.sigma.shape[1]

    def with_epsilon(self, epsilon):
        return replace(self, epsilon=epsilon)

    @cached_property
    def diffusion(self):
        return symmetrize(self.sigma @ self.sigma.T)

    @cached_property
    def varsigma_inf(self):
        return lyapunov_solve(self.Q, self.diffusion)

    def joint_covariance(self, t):
        return joint_pair(self, t).joint.cov

    def joint_mean(self, t):
        return np.concatenate([self.mu0, expm(self.Q, t) @ self.mu0])


def varsigma(model: OUModel, t):
    """Gramian ``int_0^t e^{sQ} sigma sigma^T e^{sQ^T} ds`` (no eps^2 factor).

    ``t = inf`` gives the Lyapunov solution. Finite ``t`` uses
    ``varsigma_inf - e^{tQ} varsigma_inf e^{tQ^T}``, which stays bounded for
    any ``t`` unlike direct quadrature of the e^{-uQ} form.
    """
    if t < 0:
        raise PreconditionError(f"time must be nonnegative, got {t}")
    stable, top = check_hurwitz(model.Q)
    if not stable:
        raise StabilityError(f"Q is not Hurwitz-stable (max real part {top:.3e})")
    V = model.varsigma_inf
    if math.isinf(t):
        return V.copy()
    if t == 0:
        return np.zeros_like(V)
    E = expm(model.Q, t)
    return symmetrize(V - E @ V @ E.T)


def covariance(model: OUModel, s, t):
    """Auto-covariance ``rho(s, t) = Cov(X_s, X_t)``."""
    if s < 0 or t < 0:
        raise PreconditionError(f"times must be nonnegative, got s={s}, t={t}")
    if s > t:
        return covariance(model, t, s).T
    eps2 = model.epsilon**2
    Es, Et = expm(model.Q, s), expm(model.Q, t)
    out = Es @ model.Sigma0 @ Et.T + eps2 * varsigma(model, s) @ expm(model.Q, t - s).T
    return symmetrize(out) if s == t else out


class JointLawPair(NamedTuple):
    """Law of ``(X_0, X_t)`` and of ``(Y, X_t)`` with ``Y`` an independent copy of ``X_0``."""

    joint: GaussianLaw
    product: GaussianLaw
    t: float


def joint_pair(model: OUModel, t) -> JointLawPair:
    if t < 0:
        raise PreconditionError(f"time must be nonnegative, got {t}")
    E = expm(model.Q, t)
    S0 = model.Sigma0
    rho = symmetrize(E @ S0 @ E.T + model.epsilon**2 * varsigma(model, t))
    cross = E @ S0
    d = model.d
    joint = np.block([[S0, cross.T], [cross, rho]])
    product = np.block([[S0, np.zeros((d, d))], [np.zeros((d, d)), rho]])
    mean = np.concatenate([model.mu0, E @ model.mu0])
    return JointLawPair(GaussianLaw(mean, joint), GaussianLaw(mean, product), float(t))


def kl_nu_spectrum(G, Sigma0, gram):
    """Eigenvalues ``nu`` of ``gram^{-1/2} G Sigma0 G^T gram^{-1/2}``.

    With ``G = e^{tQ}/eps`` and ``gram = varsigma_t`` these give the exact
    forward KL as ``sum(log1p(nu))/2`` and the reversed KL as
    ``sum(nu) - KL``; with ``G = Gamma`` and ``gram = varsigma_inf`` they give
    the limiting profile. Returns None if ``gram`` is not positive definite.
    """
    try:
        L = np.linalg.cholesky(symmetrize(gram))
    except np.linalg.LinAlgError:
        return None
    B = np.linalg.solve(L, G @ Sigma0 @ G.T)
    K = symmetrize(np.linalg.solve(L, B.T))
    return np.clip(np.linalg.eigvalsh(K), 0.0, None)


def tv_from_canonical(nu, *, method="quadrature", budget=None, rng=None):
    """TV between joint and product laws whose canonical correlations are ``sqrt(nu/(1+nu))``.

    In whitened coordinates the joint law is a product of ``N(0, 1 +- s_j)``
    along pairs of axes (ones elsewhere), so only the nonzero ``nu`` matter.
    ``1 - s_j`` is formed as ``1/((1+nu)(1+s_j))`` to keep its relative
    precision when the correlation is close to one.
    """
    nu = np.asarray(nu, dtype=float)
    nu = nu[nu > 0]
    if nu.size == 0:
        return TVEstimate(0.0, 0.0)
    if np.any(np.isinf(nu)):
        return TVEstimate(1.0, 0.0)
    s = np.sqrt(nu / (1.0 + nu))
    lam = np.concatenate([1.0 + s, 1.0 / ((1.0 + nu) * (1.0 + s))])
    P = GaussianLaw(np.zeros(lam.size), np.diag(lam))
    return tv_distance(P, GaussianLaw.standard(lam.size), method=method, budget=budget, rng=rng)


def _kl_pair(nu):
    fwd = 0.5 * float(np.sum(np.log1p(nu)))
    return fwd, float(np.sum(nu)) - fwd


def finite_eps_distance(model: OUModel, t, metric, *, tv_method="quadrature", budget=None, rng=None) -> DistanceValue:
    """Distance between the joint law of ``(X_0, X_t)`` and the product of its marginals.

    ``metric`` is one of ``kl`` (D(joint | product)), ``kl_rev``
    (D(product | joint)), ``w2`` (raw 2-Wasserstein, not divided by eps) or
    ``tv``.

    Both KL directions go through the d x d reduced form: with
    ``G = e^{tQ}/eps`` and ``nu`` the spectrum of
    ``varsigma_t^{-1/2} G Sigma0 G^T varsigma_t^{-1/2}``,
    ``-ln det(I - G Sigma0 G^T f_t(G)^{-1}) = sum ln(1 + nu)``. This never
    forms a 2d x 2d determinant and keeps full relative precision both when
    the divergence is huge (small t) and when it underflows (large t).

    TV uses the same spectrum: ``sqrt(nu/(1+nu))`` are the canonical
    correlations between ``X_0`` and ``X_t``, which determine the TV distance
    completely (see :func:`tv_from_canonical`). W2 goes through the full
    joint covariance.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
    if t < 0:
        raise PreconditionError(f"time must be nonnegative, got {t}")
    if metric == "w2":
        pair = joint_pair(model, t)
        return DistanceValue(wasserstein2(pair.joint, pair.product))
    if t == 0:
        return DistanceValue(1.0 if metric == "tv" else math.inf)
    G = expm(model.Q, t) / model.epsilon
    nu = kl_nu_spectrum(G, model.Sigma0, varsigma(model, t))
    if nu is None:
        if metric == "tv":
            pair = joint_pair(model, t)
            est = tv_distance(pair.joint, pair.product, method=tv_method, budget=budget, rng=rng)
            return DistanceValue(est.estimate, est.error_bound)
        return DistanceValue(math.inf)
    if metric == "tv":
        est = tv_from_canonical(nu, method=tv_method, budget=budget, rng=rng)
        return DistanceValue(est.estimate, est.error_bound)
    fwd, rev = _kl_pair(nu)
    return DistanceValue(fwd if metric == "kl" else rev)


def generic_kl(model: OUModel, t, reverse=False):
    """KL through the full 2d x 2d Gaussian formula; only used for cross-checks."""
    pair = joint_pair(model, t)
    if reverse:
        return kl_divergence(pair.product, pair.joint)
    return kl_divergence(pair.joint, pair.product)


def psd_order_gap(A, B, tol=TOL_PSD):
    """Smallest eigenvalue of ``B - A`` relative to the scale of B (>= -tol means A <= B)."""
    lam = np.linalg.eigvalsh(symmetrize(B - A))
    scale = max(float(np.max(np.abs(np.linalg.eigvalsh(symmetrize(B))))), 1e-300)
    return float(lam[0] / scale)
