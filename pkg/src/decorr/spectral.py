"""Leading spectral data of the drift and the limiting decorrelation profiles.

For a Hurwitz-stable ``Q`` let ``vartheta`` be the largest real part of its
eigenvalues, ``m`` the size of the largest Jordan block attached to an
eigenvalue on that line and ``ell`` the number of such blocks. The memory of
the initial condition dies at

    t_eps = (|ln eps| + (m - 1) ln|ln eps|) / |vartheta|,

and when the leading eigenvalue is real, ``eps^{-1} exp((t_eps + r w/|vartheta|) Q)``
converges to ``e^{-r w} Gamma`` with

    Gamma = lim_t |vartheta|^{1-m} t^{1-m} e^{|vartheta| t} e^{tQ}.

The profiles only depend on the singular values ``sigma_j`` of
``B = L^{-1} Gamma Sigma0^{1/2}`` where ``varsigma_inf = L L^T`` is the
(eps-free) Lyapunov Gramian:

    G_KL(r) = 1/2 sum_j log(1 + e^{-2rw} sigma_j^2)

and ``G_TV(r)`` is the TV distance between ``N(0, M(r))`` and the standard
law, where ``M(r)`` has eigenvalues ``1 +- s_j`` with
``s_j = (1 + e^{2rw}/sigma_j^2)^{-1/2}`` (and ones elsewhere).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import IllConditionedError, NonConvergenceError, NotPSDError, PreconditionError
from .gaussian import TVEstimate
from .linalg import TOL_RANK, as_square, expm, pinv_limit, sqrtm_psd, symmetrize
from .ou import OUModel, check_hurwitz, finite_eps_distance, tv_from_canonical
from .scalar import ScalarLSDEModel, scalar_finite_distance
from .scalar import profile as scalar_profile
from .trend import DIAMETER_PROXY, CScalingRow, summarize, trend_verdict, validate_eps_grid

TOL_CRIT = 1e-8
TOL_GAMMA = 1e-6
TOL_GAMMA_MATCH = 1e-5
# |vartheta| t beyond this would overflow e^{|vartheta| t} in the unscaled form
OVERFLOW_HORIZON = 600.0
CAUCHY_RTOL = 1e-2
WINDOW_TOL = 1e-2
WINDOW_EPS_MAX = 1e-4


@dataclass(frozen=True, eq=False)
class SpectralSummary:
    vartheta: float
    m: int
    ell: int
    critical_real: bool
    Gamma: np.ndarray | None
    condition_report: str = ""
    critical_eigenvalues: tuple[complex, ...] = ()
    spectral_gap: float = math.inf
    gamma_source: str = ""
    nullities: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if self.Gamma is not None:
            G = np.array(self.Gamma, dtype=float)
            G.setflags(write=False)
            object.__setattr__(self, "Gamma", G)


# ---------------------------------------------------------------------------
# Jordan structure


def _critical_clusters(eig, vartheta, scale):
    """Group the eigenvalues on the leading line into distinct critical values.

    Returns ``(clusters, notes)``; each cluster is an array of eigenvalues
    believed to be one (possibly defective) eigenvalue. Rounding splits a
    defective eigenvalue of index k by about ``(u |Q|)^(1/k)``, so the
    grouping radius grows with the cluster before we give up on it.
    """
    notes = []
    u = np.finfo(float).eps
    band = TOL_CRIT * max(abs(vartheta), 1.0)
    d = len(eig)
    # eigenvalues whose real part is within the widest plausible splitting of the top
    loose = (u * scale) ** (1.0 / d) * 10 if d > 1 else band
    near = eig[np.abs(eig.real - vartheta) <= max(loose, band)]
    clusters = []
    remaining = list(near)
    while remaining:
        remaining.sort(key=lambda z: (-z.real, z.imag))
        seed = remaining[0]
        group = [z for z in remaining if abs(z - seed) <= max(loose, band)]
        k = len(group)
        radius = max(band, 10 * (u * scale) ** (1.0 / k)) if k > 1 else band
        group = [z for z in remaining if abs(z - seed) <= radius]
        for z in group:
            remaining.remove(z)
        clusters.append(np.array(group))
    critical, dropped = [], []
    for g in clusters:
        center = g.mean()
        offset = abs(center.real - vartheta)
        if offset <= max(band, np.ptp(g.real) if len(g) > 1 else 0.0):
            critical.append(g)
        elif offset <= 1e-6 * max(abs(vartheta), 1.0):
            dropped.append(center)
    if dropped:
        notes.append(
            "eigenvalues close to the leading line but not treated as critical: "
            + ", ".join(f"{z:.6g}" for z in dropped)
        )
    return critical, notes


def _staircase(Q, lam, cluster_size, spread):
    """Nullities of ``(Q - lam I)^k`` for k = 1..d, with a spread-aware rank threshold."""
    d = Q.shape[0]
    N = Q - lam * np.eye(d)
    scale = max(np.linalg.norm(Q, 2), 1.0)
    P = np.eye(d, dtype=N.dtype)
    nullities = [0]
    for k in range(1, d + 1):
        P = P @ N
        s = np.linalg.svd(P, compute_uv=False)
        thresh = max(TOL_RANK * scale**k, 10.0 * (spread * scale ** (k - 1)))
        nullities.append(int(np.sum(s <= thresh)))
        # once the kernel stops growing it never grows again
        if nullities[-1] == nullities[-2] or nullities[-1] >= cluster_size:
            break
    return nullities


def _structure_from_nullities(nullities, cluster_size, lam):
    n = nullities
    inc = [b - a for a, b in zip(n, n[1:])]
    diag = {"eigenvalue": complex(lam), "nullities": list(n), "algebraic_multiplicity": cluster_size}
    if any(b > a for a, b in zip(inc, inc[1:])) or n[-1] != cluster_size or inc[0] <= 0:
        raise IllConditionedError(
            f"Jordan staircase at {lam:.6g} is inconsistent: nullities {n}, multiplicity {cluster_size}",
            diagnostics=diag,
        )
    m = max(k for k, step in enumerate(inc, start=1) if step > 0)
    ell = inc[m - 1] - (inc[m] if m < len(inc) else 0)
    return m, ell


def _jordan_from_sidecar(Q, jordan):
    """Exact ``(m, ell, critical_real, Gamma)`` from user-supplied Jordan data, or None."""
    blocks = jordan.get("blocks") or []
    if not blocks:
        return None
    vartheta = max(b["lambda_re"] for b in blocks)
    crit = [b for b in blocks if abs(b["lambda_re"] - vartheta) <= TOL_CRIT * max(abs(vartheta), 1.0)]
    m = max(int(b["size"]) for b in crit)
    maximal = [b for b in crit if int(b["size"]) == m]
    real = all(abs(b.get("lambda_im", 0.0)) <= TOL_CRIT * (1 + abs(vartheta)) for b in crit)
    ell = len(maximal)
    if not real:
        # a conjugate pair contributes two blocks of each size; count chains per eigenvalue
        ell = sum(1 for b in maximal if b.get("lambda_im", 0.0) >= 0)
    Gamma = None
    P = jordan.get("P")
    if real and P is not None:
        P = np.asarray(P, dtype=float)
        d = Q.shape[0]
        sizes = [int(b["size"]) for b in blocks]
        if P.shape != (d, d) or sum(sizes) != d:
            raise IllConditionedError("Jordan sidecar does not match the order of Q", {"sizes": sizes})
        if any(abs(b.get("lambda_im", 0.0)) > 0 for b in blocks):
            return m, ell, real, None, "complex non-critical blocks: sidecar reconstruction skipped"
        J = np.zeros((d, d))
        E = np.zeros((d, d))
        pos = 0
        for b, k in zip(blocks, sizes):
            J[pos:pos + k, pos:pos + k] = b["lambda_re"] * np.eye(k) + np.eye(k, k=1)
            if b in maximal:
                E[pos, pos + k - 1] = 1.0
            pos += k
        Pinv = np.linalg.inv(P)
        recon = np.linalg.norm(P @ J @ Pinv - Q) / max(np.linalg.norm(Q), 1.0)
        if recon > 1e-8:
            raise IllConditionedError(
                f"Jordan sidecar does not reproduce Q (relative error {recon:.2e})", {"reconstruction": recon}
            )
        Gamma = abs(vartheta) ** (1 - m) / math.factorial(m - 1) * (P @ E @ Pinv)
    return m, ell, real, Gamma, ""


def spectral_summary(Q, jordan=None, t_grid=None) -> SpectralSummary:
    """Leading eigenvalue data of a Hurwitz-stable ``Q``.

    ``jordan`` is optional exact Jordan data ``{"P": ..., "blocks": [...]}``
    (upper Jordan blocks, columns of P ordered like ``blocks``). When it is
    given it decides ``m``, ``ell`` and ``Gamma``; the numerical staircase
    still runs and any disagreement is written to ``condition_report``.
    """
    Q = as_square(Q, "Q")
    stable, vartheta = check_hurwitz(Q)
    if not stable:
        raise PreconditionError(f"Q is not Hurwitz-stable (max real part {vartheta:.6g})")
    d = Q.shape[0]
    eig = np.linalg.eigvals(Q)
    scale = max(float(np.linalg.norm(Q, 2)), 1.0)
    clusters, notes = _critical_clusters(eig, vartheta, scale)
    centers = [g.mean() for g in clusters]
    vartheta = max(c.real for c in centers)
    imag_tol = TOL_CRIT * (1 + abs(vartheta))
    # one representative per conjugate pair
    reps = [(c, g) for c, g in zip(centers, clusters) if c.imag >= -imag_tol]
    m_num, ell_num = 0, 0
    all_nullities = ()
    for c, g in reps:
        lam = c.real if abs(c.imag) <= imag_tol else c
        spread = float(np.max(np.abs(g - c))) if len(g) > 1 else 0.0
        nullities = _staircase(Q, lam, len(g), spread)
        m_c, ell_c = _structure_from_nullities(nullities, len(g), lam)
        if len(g) > 1 and spread > 0:
            notes.append(f"critical cluster at {c:.6g} has numerical spread {spread:.1e}")
        if m_c > m_num:
            m_num, ell_num, all_nullities = m_c, ell_c, tuple(nullities)
        elif m_c == m_num:
            ell_num += ell_c
    critical_real = all(abs(c.imag) <= imag_tol for c in centers)
    others = np.array([z for z in eig if not any(np.any(np.isclose(z, g)) for g in clusters)])
    gap = float(vartheta - np.max(others.real)) if len(others) else math.inf

    m, ell, Gamma, source = m_num, ell_num, None, ""
    if jordan is not None:
        exact = _jordan_from_sidecar(Q, jordan)
        if exact is not None:
            m_s, ell_s, real_s, Gamma_s, note = exact
            if note:
                notes.append(note)
            if (m_s, ell_s, real_s) != (m_num, ell_num, critical_real):
                notes.append(
                    f"staircase gives m={m_num}, ell={ell_num}, real={critical_real}; "
                    f"using supplied Jordan data m={m_s}, ell={ell_s}, real={real_s}"
                )
            m, ell, critical_real = m_s, ell_s, real_s
            if Gamma_s is not None:
                Gamma, source = Gamma_s, "jordan"

    summary = SpectralSummary(vartheta, m, ell, critical_real, None, "", tuple(centers), gap, "", all_nullities)
    if critical_real:
        try:
            G_hat, resid = gamma_estimate(Q, summary, t_grid)
        except NonConvergenceError as exc:
            notes.append(str(exc))
            G_hat = None
        if G_hat is not None:
            if Gamma is not None:
                mismatch = np.linalg.norm(Gamma - G_hat) / np.linalg.norm(Gamma)
                notes.append(f"Gamma: supplied vs limit estimate differ by {mismatch:.1e} (relative)")
                if mismatch > TOL_GAMMA_MATCH:
                    notes.append("warning: Gamma cross-check exceeds tolerance")
            else:
                Gamma, source = G_hat, "limit"
                notes.append(f"Gamma from limit estimate (residual {resid:.1e})")
        if Gamma is not None:
            rank = int(np.linalg.matrix_rank(Gamma, tol=1e-8 * np.linalg.norm(Gamma, 2)))
            if rank != ell:
                notes.append(f"warning: rank(Gamma)={rank} differs from ell={ell}")
    else:
        notes.append("critical eigenvalue: complex")
    return SpectralSummary(
        vartheta, m, ell, critical_real, Gamma, "; ".join(notes), tuple(centers), gap, source, all_nullities
    )


# ---------------------------------------------------------------------------
# Gamma and the time scale


def _gamma_hat(Q, vartheta, m, t):
    d = Q.shape[0]
    # |vartheta|^{1-m} t^{1-m} e^{|vartheta| t} e^{tQ}, without ever forming e^{|vartheta| t}
    return expm(Q - vartheta * np.eye(d), t) * (abs(vartheta) * t) ** (1 - m)


def _extrapolate(ts, mats):
    """Value at ``1/t = 0`` of the polynomial in ``1/t`` through the given points."""
    x = 1.0 / np.asarray(ts)
    out = np.zeros_like(mats[0])
    for i, xi in enumerate(x):
        weight = np.prod([xj / (xj - xi) for j, xj in enumerate(x) if j != i])
        out = out + weight * mats[i]
    return out


def default_t_grid(summary: SpectralSummary):
    theta = abs(summary.vartheta)
    gap = summary.spectral_gap
    t0 = 20.0 / theta if math.isinf(gap) else max(20.0 / theta, 36.0 / gap)
    t0 = min(t0, 0.5 * OVERFLOW_HORIZON / theta)
    return [t0 * (1.0 + 0.5 * k) for k in range(summary.m + 1)]


def gamma_estimate(Q, summary: SpectralSummary, t_grid=None):
    """Estimate ``Gamma`` from ``|vartheta|^{1-m} t^{1-m} e^{|vartheta| t} e^{tQ}``.

    For ``m > 1`` that expression converges only like ``1/t``, but its
    critical part is an exact polynomial of degree ``m-1`` in ``1/t``, so the
    last ``m`` grid points are extrapolated to ``1/t = 0``. The residual
    compares this with the extrapolation from the ``m`` points before.

    Returns ``(Gamma_hat, residual)``. Raises NonConvergenceError when the
    residual exceeds ``1e-6`` (small spectral gap, or a complex leading
    eigenvalue whose rotation never settles).
    """
    Q = as_square(Q, "Q")
    m, vartheta = summary.m, summary.vartheta
    ts = sorted(float(t) for t in (default_t_grid(summary) if t_grid is None else t_grid))
    if len(ts) < 2:
        raise ValueError("need at least two times")
    if any(abs(vartheta) * t > OVERFLOW_HORIZON for t in ts):
        raise PreconditionError(f"times beyond the overflow horizon |vartheta| t <= {OVERFLOW_HORIZON}")
    mats = [_gamma_hat(Q, vartheta, m, t) for t in ts]
    k = min(m, len(ts) - 1)
    last = _extrapolate(ts[-k:], mats[-k:])
    prev = _extrapolate(ts[-k - 1:-1], mats[-k - 1:-1])
    norm = np.linalg.norm(last)
    resid = float(np.linalg.norm(last - prev) / norm) if norm > 0 else math.inf
    if not resid <= TOL_GAMMA:
        raise NonConvergenceError(
            f"Gamma estimate did not settle (residual {resid:.1e} at t={ts[-1]:.4g}); "
            f"spectral gap {summary.spectral_gap:.3g} is too small or the leading eigenvalue rotates"
        )
    return last, resid


def gamma_from_jordan(P, blocks):
    P = np.asarray(P, dtype=float)
    Q = P @ _jordan_matrix(blocks) @ np.linalg.inv(P)
    exact = _jordan_from_sidecar(Q, {"P": P, "blocks": blocks})
    return exact[3]


def _jordan_matrix(blocks):
    d = sum(int(b["size"]) for b in blocks)
    J = np.zeros((d, d))
    pos = 0
    for b in blocks:
        k = int(b["size"])
        J[pos:pos + k, pos:pos + k] = b["lambda_re"] * np.eye(k) + np.eye(k, k=1)
        pos += k
    return J


def _check_log_eps(eps=None, log_eps=None):
    if log_eps is None:
        if eps is None or not 0 < eps < math.exp(-1):
            raise PreconditionError(f"noise level must lie in (0, 1/e), got {eps}")
        log_eps = math.log(eps)
    if not log_eps < -1:
        raise PreconditionError(f"log noise level must be below -1, got {log_eps}")
    return log_eps


def t_epsilon(summary: SpectralSummary, eps=None, *, log_eps=None):
    """``(|ln eps| + (m-1) ln|ln eps|) / |vartheta|``; pass ``log_eps`` for eps below 1e-308."""
    L = -_check_log_eps(eps, log_eps)
    return (L + (summary.m - 1) * math.log(L)) / abs(summary.vartheta)


def scaled_propagator(Q, summary: SpectralSummary, eps=None, r=0.0, w=1.0, *, log_eps=None):
    """``eps^{-1} exp((t_eps + r w/|vartheta|) Q)``, which tends to ``e^{-rw} Gamma``.

    Evaluated as ``e^{t(Q - vartheta I)} |ln eps|^{1-m} e^{-rw}`` so that it
    stays accurate for any ``eps`` representable through its logarithm.
    """
    Q = as_square(Q, "Q")
    L = -_check_log_eps(eps, log_eps)
    t = t_epsilon(summary, log_eps=-L) + r * w / abs(summary.vartheta)
    factor = math.exp((1 - summary.m) * math.log(L) - r * w)
    return expm(Q - summary.vartheta * np.eye(Q.shape[0]), t) * factor


# ---------------------------------------------------------------------------
# profiles


def _require_real(summary):
    if not summary.critical_real or summary.Gamma is None:
        raise PreconditionError("no decorrelation profile: complex critical eigenvalue (window decorrelation only)")


def profile_singular_values(model: OUModel, summary: SpectralSummary):
    """Singular values of ``L^{-1} Gamma Sigma0^{1/2}`` with ``varsigma_inf = L L^T``."""
    _require_real(summary)
    L = np.linalg.cholesky(model.varsigma_inf)
    B = np.linalg.solve(L, summary.Gamma @ sqrtm_psd(model.Sigma0))
    return np.linalg.svd(B, compute_uv=False)


def profile_kl(model: OUModel, summary: SpectralSummary, r, w=1.0):
    """Limit of the KL divergence at ``t_eps + r w/|vartheta|``."""
    if not w > 0:
        raise PreconditionError(f"window w must be positive, got {w}")
    sv = profile_singular_values(model, summary)
    sv = sv[sv > 0]
    # log(1 + e^{z}) with z = 2 ln s - 2 r w, safe for either sign of z
    return float(0.5 * np.sum(np.logaddexp(0.0, 2.0 * np.log(sv) - 2.0 * r * w)))


def profile_kl_rev(model: OUModel, summary: SpectralSummary, r, w=1.0):
    """Limit of the reversed KL divergence: ``sum_j x_j - G_KL`` with ``x_j = e^{-2rw} sigma_j^2``."""
    sv = profile_singular_values(model, summary)
    x = np.exp(2.0 * np.log(sv[sv > 0]) - 2.0 * r * w)
    return float(np.sum(x) - profile_kl(model, summary, r, w))


def profile_tv_matrix(model: OUModel, summary: SpectralSummary, r, w=1.0):
    """``M(r) = [[I, C], [C^T, I]]`` with ``C = Sigma0^{1/2} Gamma^T H^{-1/2}``, ``H = Gamma Sigma0 Gamma^T + e^{2rw} varsigma_inf``."""
    _require_real(summary)
    G = summary.Gamma
    H = symmetrize(G @ model.Sigma0 @ G.T + math.exp(2.0 * r * w) * model.varsigma_inf)
    lam, V = np.linalg.eigh(H)
    if lam[0] <= 0:
        raise NotPSDError(f"H(r) is singular at r={r} (smallest eigenvalue {lam[0]:.3e})")
    C = sqrtm_psd(model.Sigma0) @ G.T @ ((V / np.sqrt(lam)) @ V.T)
    d = model.d
    M = np.block([[np.eye(d), C], [C.T, np.eye(d)]])
    ev = np.linalg.eigvalsh(symmetrize(M))
    if ev[0] < -1e-10:
        raise NotPSDError(f"M(r) is not positive semidefinite: eigenvalues {ev}")
    return symmetrize(M)


def profile_tv(model: OUModel, summary: SpectralSummary, r, w=1.0) -> TVEstimate:
    """Limit of the TV distance at ``t_eps + r w/|vartheta|``.

    ``N(0, M(r))`` is rotated to its eigenbasis, where it is the product of
    ``N(0, 1 +- s_j)``; ``1 - s_j`` is evaluated without cancellation so that
    the quadrature sees the true near-singular direction when ``r << 0``.
    """
    if not w > 0:
        raise PreconditionError(f"window w must be positive, got {w}")
    profile_tv_matrix(model, summary, r, w)  # PSD assembly check
    sv = profile_singular_values(model, summary)
    return tv_from_canonical(np.exp(2.0 * np.log(sv[sv > 0]) - 2.0 * r * w))


def moore_penrose_gap(model: OUModel, summary: SpectralSummary):
    """``det(I - B^+ B)`` for ``B = varsigma_inf^{-1/2} Gamma Sigma0^{1/2}``, via the regularised limit.

    Zero whenever ``B != 0``: ``B^+ B`` is then a nonzero orthogonal projection.
    """
    _require_real(summary)
    R = np.linalg.inv(sqrtm_psd(model.varsigma_inf))
    B = R @ summary.Gamma @ sqrtm_psd(model.Sigma0)
    proj = pinv_limit(B) @ B
    return float(np.linalg.det(np.eye(B.shape[1]) - proj))


# ---------------------------------------------------------------------------
# finite-noise evaluation shared by OU and scalar models


def _time_scale(model, summary, eps):
    if isinstance(model, ScalarLSDEModel):
        return -math.log(eps) / model.theta, 1.0
    return t_epsilon(summary, eps), 1.0 / abs(summary.vartheta)


def finite_value(model, metric, t, eps):
    """Finite-noise distance with ``w2`` normalised by eps; returns ``(value, error)``."""
    if isinstance(model, ScalarLSDEModel):
        d = scalar_finite_distance(model.with_epsilon(eps), t, metric)
        value, err = d.value, d.error
    else:
        d = finite_eps_distance(model.with_epsilon(eps), t, metric)
        value, err = d.value, d.error
    if metric == "w2":
        return value / eps, err / eps
    return value, err


def limiting_profile(model, summary, metric, r, w=1.0):
    """``(value, error)`` of the limiting profile for either model type."""
    if isinstance(model, ScalarLSDEModel):
        p = scalar_profile(model, metric, r, w)
        return p.value, p.error
    if metric == "kl":
        return profile_kl(model, summary, r, w), 0.0
    if metric == "kl_rev":
        return profile_kl_rev(model, summary, r, w), 0.0
    if metric == "tv":
        return tuple(profile_tv(model, summary, r, w))
    raise PreconditionError(f"no multivariate profile implemented for metric {metric!r}")


def summary_for(model):
    if isinstance(model, ScalarLSDEModel):
        return SpectralSummary(-model.theta, 1, 1, True, np.ones((1, 1)) / model.alpha, "scalar model", (), math.inf, "alpha")
    return spectral_summary(model.Q, model.jordan)


@dataclass(frozen=True)
class DecorrelationReport:
    classification: str  # "profile", "window_only", "abrupt_only", "inconclusive"
    metric: str
    t_eps: dict
    evidence: list
    critical_real: bool
    notes: tuple[str, ...] = ()

    def to_json(self):
        return {
            "classification": self.classification,
            "metric": self.metric,
            "critical_real": self.critical_real,
            "t_eps": {repr(k): v for k, v in self.t_eps.items()},
            "evidence": self.evidence,
            "notes": list(self.notes),
        }


def pairwise_gap_ratio(values):
    """``max / min`` over pairwise distances of the given vectors or matrices."""
    items = [np.atleast_1d(np.asarray(v, dtype=float)) for v in values]
    gaps = [np.linalg.norm(a - b) for i, a in enumerate(items) for b in items[i + 1:]]
    lo = min(gaps)
    return math.inf if lo == 0 else max(gaps) / lo


def classify(model, metric, eps_grid, r_grid=(-2, -1, 0, 1, 2), c_grid=(0.5, 0.9, 1.1, 2.0), w=1.0, window_r=10.0):
    """Empirical level of decorrelation along a shrinking-noise grid.

    * ``profile``: the leading eigenvalue is real and, at every ``r``, the
      last two noise levels agree to 1% (relative).
    * ``window_only``: no profile, but at ``r = -window_r`` every value for
      eps <= 1e-4 is within 0.01 of the metric's diameter (or its proxy for
      unbounded metrics) and at ``r = +window_r`` below 0.01. The left point
      is moved to ``t_eps / 2`` when ``r = -window_r`` would come earlier.
    * ``abrupt_only``: only the ``c t_eps`` dichotomy holds.
    """
    if metric not in DIAMETER_PROXY:
        raise ValueError(f"unknown metric {metric!r}")
    eps = validate_eps_grid(eps_grid)
    summary = summary_for(model)
    evidence = []
    t_eps = {}
    notes = [summary.condition_report] if summary.condition_report else []

    def at(e, t, kind, x):
        value, err = finite_value(model, metric, t, e)
        evidence.append({"kind": kind, "eps": e, "x": x, "t": t, "value": value, "error": err})
        return value, err

    cauchy = True
    for r in r_grid:
        vals = []
        for e in eps:
            t0, unit = _time_scale(model, summary, e)
            t_eps[e] = t0
            vals.append(at(e, t0 + r * w * unit, "r", r))
        (v1, e1), (v2, e2) = vals[-2], vals[-1]
        if not abs(v2 - v1) <= CAUCHY_RTOL * abs(v2) + e1 + e2 + 1e-12:
            cauchy = False
    if summary.critical_real and cauchy:
        return DecorrelationReport("profile", metric, t_eps, evidence, True, tuple(notes))

    small = [e for e in eps if e <= WINDOW_EPS_MAX] or eps[-1:]
    high = DIAMETER_PROXY[metric] if metric != "tv" else 1.0 - WINDOW_TOL
    window = True
    for e in small:
        t0, unit = _time_scale(model, summary, e)
        t_left = max(t0 - window_r * w * unit, 0.5 * t0)
        lo_v, lo_e = at(e, t_left, "window", (t_left - t0) / (w * unit))
        hi_v, hi_e = at(e, t0 + window_r * w * unit, "window", window_r)
        if not (lo_v + lo_e >= high and hi_v - hi_e <= WINDOW_TOL):
            window = False
    if window:
        return DecorrelationReport("window_only", metric, t_eps, evidence, summary.critical_real, tuple(notes))

    rows = []
    for c in c_grid:
        vals, errs = [], []
        for e in eps:
            t0, _ = _time_scale(model, summary, e)
            v, er = at(e, c * t0, "c", c)
            vals.append(v)
            errs.append(er)
        rows.append(CScalingRow(float(c), tuple(eps), tuple(vals), tuple(errs), trend_verdict(c, vals, errs, metric)))
    if summarize(metric, rows).passed:
        return DecorrelationReport("abrupt_only", metric, t_eps, evidence, summary.critical_real, tuple(notes))
    return DecorrelationReport("inconclusive", metric, t_eps, evidence, summary.critical_real, tuple(notes))
