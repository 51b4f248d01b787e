"""Dense small-matrix kernels.

Everything here is a pure function on numpy arrays. Matrices are assumed small
(order up to a few dozen); no attempt is made at sparse or out-of-core work.

Relative tolerances used across the package live here so that every module
agrees on what "numerically zero" means.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
import scipy.linalg

from .errors import NonConvergenceError, NonFiniteError, NotPSDError, StabilityError

TOL_PSD = 1e-10
TOL_FRO = 1e-10
TOL_LYAP = 1e-9
TOL_PINV = 1e-10
TOL_DET = 1e-10
TOL_STAB = 1e-10
TOL_RANK = 1e-10

# Above this order the Kronecker system (d^2 x d^2) gets too big to be sensible.
KRONECKER_MAX_ORDER = 20


def as_square(A, name="matrix"):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonFiniteError(f"{name} has non-finite entries")
    return A


def symmetrize(S):
    S = np.asarray(S, dtype=float)
    return 0.5 * (S + S.T)


def expm(A, t=1.0):
    """Matrix exponential ``exp(t A)``.

    Backed by scipy's scaling-and-squaring Pade implementation.

    Raises
    ------
    NonFiniteError
        If ``t A`` is so large that the result overflows.
    """
    A = as_square(A, "A")
    with np.errstate(over="ignore", invalid="ignore"):
        E = scipy.linalg.expm(float(t) * A)
    if not np.all(np.isfinite(E)):
        raise NonFiniteError(f"exp(tA) overflowed at t={t}")
    return E


def check_psd(S, tol=TOL_PSD, name="matrix"):
    """Symmetrize ``S`` and return ``(S_sym, eigenvalues, eigenvectors)``.

    Raises NotPSDError when an eigenvalue is below ``-tol * max(|eigenvalues|)``.
    """
    S = symmetrize(as_square(S, name))
    lam, V = np.linalg.eigh(S)
    scale = max(float(np.max(np.abs(lam))), np.finfo(float).tiny)
    if lam[0] < -tol * scale:
        raise NotPSDError(
            f"{name} is not positive semidefinite: smallest eigenvalue {lam[0]:.3e} "
            f"(largest magnitude {scale:.3e})"
        )
    return S, lam, V


def sqrtm_psd(S, tol=TOL_PSD):
    """Symmetric PSD square root via the eigendecomposition.

    Eigenvalues in ``[-tol * lambda_max, 0)`` are treated as rounding noise and
    clamped to zero.
    """
    _, lam, V = check_psd(S, tol)
    r = np.sqrt(np.clip(lam, 0.0, None))
    return symmetrize((V * r) @ V.T)


def inv_sqrtm_pd(S, tol=TOL_PSD):
    """Inverse symmetric square root of a positive definite matrix."""
    _, lam, V = check_psd(S, tol)
    if lam[0] <= tol * lam[-1]:
        raise NotPSDError(f"matrix is singular to tolerance (eigenvalues {lam[0]:.3e}..{lam[-1]:.3e})")
    return symmetrize((V / np.sqrt(lam)) @ V.T)


def max_real_part(Q):
    return float(np.max(np.linalg.eigvals(as_square(Q, "Q")).real))


def lyapunov_solve(Q, C):
    """Solve ``Q X + X Q^T + C = 0`` for a Hurwitz-stable ``Q``.

    For order up to ``KRONECKER_MAX_ORDER`` this solves the vectorised system
    ``(Q (x) I + I (x) Q) vec X = -vec C`` directly, which costs O(d^6).
    Larger problems are handed to scipy's Bartels-Stewart solver.
    """
    Q = as_square(Q, "Q")
    C = symmetrize(as_square(C, "C"))
    d = Q.shape[0]
    if C.shape != Q.shape:
        raise ValueError(f"Q {Q.shape} and C {C.shape} differ in shape")
    theta = max_real_part(Q)
    if theta >= 0.0:
        raise StabilityError(f"Q is not Hurwitz-stable (max real part {theta:.3e})")
    if not np.any(C):
        return np.zeros_like(C)
    if d <= KRONECKER_MAX_ORDER:
        eye = np.eye(d)
        K = np.kron(Q, eye) + np.kron(eye, Q)
        X = np.linalg.solve(K, -C.reshape(-1)).reshape(d, d)
    else:
        X = scipy.linalg.solve_continuous_lyapunov(Q, -C)
    return symmetrize(X)


def lyapunov_residual(Q, X, C):
    """Relative Frobenius residual of ``Q X + X Q^T + C``."""
    R = Q @ X + X @ Q.T + C
    return float(np.linalg.norm(R) / max(np.linalg.norm(C), np.finfo(float).tiny))


def _default_deltas(M):
    scale = max(float(np.linalg.norm(M, 2)) ** 2, 1.0)
    return scale * np.logspace(-2, -10, 9)


def pinv_limit(M, deltas: Sequence[float] | None = None, tol=TOL_PINV):
    """Moore-Penrose pseudoinverse as the limit of ``M^T (M M^T + delta I)^{-1}``.

    The regularised inverse is evaluated along a strictly decreasing sequence
    of ``delta`` values and the last two iterates must agree to ``sqrt(tol)``
    (relative to the size of the iterate), otherwise NonConvergenceError is
    raised. The default sequence runs from ``1e-2`` down to ``1e-10`` times
    ``max(||M||_2^2, 1)``.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if not np.all(np.isfinite(M)):
        raise NonFiniteError("M has non-finite entries")
    if not np.any(M):
        return np.zeros(M.T.shape)
    deltas = _default_deltas(M) if deltas is None else np.asarray(deltas, dtype=float)
    if deltas.ndim != 1 or len(deltas) < 2:
        raise ValueError("need at least two delta values")
    if np.any(np.diff(deltas) >= 0) or deltas[-1] <= 0:
        raise ValueError("delta sequence must be positive and strictly decreasing")
    if deltas[-1] < tol:
        raise ValueError(f"delta floor {deltas[-1]:.1e} is below tol_pinv={tol:.1e}")
    MMt = M @ M.T
    eye = np.eye(MMt.shape[0])
    prev = None
    gap = np.inf
    for delta in deltas:
        X = np.linalg.solve(MMt + delta * eye, M).T
        if prev is not None:
            gap = np.linalg.norm(X - prev) / max(np.linalg.norm(X), 1.0)
        prev = X
    if gap > np.sqrt(tol):
        raise NonConvergenceError(
            f"regularised inverse still moving at delta={deltas[-1]:.1e} (relative step {gap:.2e}); "
            "M has singular values too close to the regularisation floor"
        )
    return prev


def block_det_reduce(B12, B21):
    """``det(I - B21 B12)``, the determinant of ``[[I, B12], [B21, I]]``."""
    B12 = as_square(B12, "B12")
    B21 = as_square(B21, "B21")
    if B12.shape != B21.shape:
        raise ValueError(f"blocks differ in shape: {B12.shape} vs {B21.shape}")
    return float(np.linalg.det(np.eye(B12.shape[0]) - B21 @ B12))


def numerical_rank(A, tol=TOL_RANK):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))
