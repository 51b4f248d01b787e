import numpy as np

from decorr.ou import OUModel

JORDAN_Q = [[-1.0, 1.0], [0.0, -1.0]]
DIAG_Q = [[-1.0, 0.0], [0.0, -2.0]]
ROT_Q = [[-1.0, 2.0], [-2.0, -1.0]]


def ou(Q, eps=1e-3, sigma=None, Sigma0=None, mu0=None, jordan=None):
    Q = np.asarray(Q, dtype=float)
    d = Q.shape[0]
    return OUModel(
        Q,
        np.eye(d) if sigma is None else sigma,
        eps,
        np.zeros(d) if mu0 is None else mu0,
        np.eye(d) if Sigma0 is None else Sigma0,
        jordan=jordan,
    )


def random_hurwitz(rng, d):
    A = rng.normal(size=(d, d))
    shift = np.max(np.linalg.eigvals(A).real) + rng.uniform(0.2, 2.0)
    return A - shift * np.eye(d)


def random_spd(rng, d, floor=0.1):
    A = rng.normal(size=(d, d))
    return A @ A.T + floor * np.eye(d)
