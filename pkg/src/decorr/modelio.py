"""Reading model files.

Two JSON layouts are accepted. A multivariate OU model::

    {"d": 2, "n": 2, "Q": [[...]], "sigma": [[...]], "epsilon": 0.01,
     "mu0": [...], "Sigma0": [[...]],
     "jordan": {"P": [[...]], "blocks": [{"lambda_re": -1, "lambda_im": 0, "size": 2}]}}

(``jordan`` optional), and a scalar model with time-dependent drift::

    {"theta": 1, "sigma": 1, "epsilon": 0.01, "mu0": 0, "sigma0_sq": 1,
     "A": {"kind": "exp_decay", "lam": 1, "c": 1}}
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ModelFormatError
from .ou import OUModel
from .scalar import ScalarLSDEModel

_OU_FIELDS = ("Q", "sigma", "epsilon", "mu0", "Sigma0")


def _matrix(data, name, shape):
    try:
        arr = np.array(data[name], dtype=float)
    except KeyError:
        raise ModelFormatError(f"missing field {name!r}") from None
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"field {name!r} is not a numeric array: {exc}") from None
    if arr.shape != shape:
        raise ModelFormatError(f"field {name!r} has shape {arr.shape}, expected {shape}")
    if not np.all(np.isfinite(arr)):
        raise ModelFormatError(f"field {name!r} has non-finite entries")
    return arr


def _jordan(data, d):
    if data is None:
        return None
    if not isinstance(data, dict) or not isinstance(data.get("blocks"), list):
        raise ModelFormatError("field 'jordan' must be an object with a 'blocks' list")
    blocks = []
    for i, b in enumerate(data["blocks"]):
        try:
            blocks.append(
                {"lambda_re": float(b["lambda_re"]), "lambda_im": float(b.get("lambda_im", 0.0)), "size": int(b["size"])}
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelFormatError(f"jordan block {i} is malformed: {exc}") from None
        if blocks[-1]["size"] < 1:
            raise ModelFormatError(f"jordan block {i} has size < 1")
    out = {"blocks": blocks}
    if "P" in data:
        out["P"] = _matrix(data, "P", (d, d))
    return out


def ou_from_dict(data, validate=True):
    if "Q" not in data:
        raise ModelFormatError("missing field 'Q'")
    try:
        Q = np.array(data["Q"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"field 'Q' is not a numeric array: {exc}") from None
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ModelFormatError(f"field 'Q' must be square, got shape {Q.shape}")
    d = Q.shape[0]
    if "d" in data and int(data["d"]) != d:
        raise ModelFormatError(f"field 'd'={data['d']} disagrees with Q of order {d}")
    sig = np.array(data.get("sigma", []), dtype=float)
    if sig.ndim == 1 and d == 1 and sig.size:
        sig = sig.reshape(1, -1)
    n = int(data.get("n", sig.shape[1] if sig.ndim == 2 else -1))
    for name in _OU_FIELDS:
        if name not in data:
            raise ModelFormatError(f"missing field {name!r}")
    sigma = _matrix({"sigma": sig}, "sigma", (d, n))
    mu0 = _matrix(data, "mu0", (d,))
    Sigma0 = _matrix(data, "Sigma0", (d, d))
    try:
        eps = float(data["epsilon"])
    except (TypeError, ValueError):
        raise ModelFormatError("field 'epsilon' must be a number") from None
    return OUModel(Q, sigma, eps, mu0, Sigma0, jordan=_jordan(data.get("jordan"), d), validate=validate)


def model_from_dict(data, validate=True):
    """Build an :class:`OUModel` or :class:`ScalarLSDEModel` depending on the keys present."""
    if not isinstance(data, dict):
        raise ModelFormatError("model file must contain a JSON object")
    if "theta" in data:
        return ScalarLSDEModel.from_dict(data)
    return ou_from_dict(data, validate=validate)


def load_model(path, validate=True):
    """Parse a model file. Syntax problems raise ModelFormatError with line and column."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return model_from_dict(data, validate=validate)


def model_to_dict(model):
    if isinstance(model, ScalarLSDEModel):
        return {
            "theta": model.theta,
            "sigma": model.sigma,
            "epsilon": model.epsilon,
            "mu0": model.mu0,
            "sigma0_sq": model.sigma0_sq,
            "A": model.A.to_dict(),
        }
    out = {
        "d": model.d,
        "n": model.n,
        "Q": model.Q.tolist(),
        "sigma": model.sigma.tolist(),
        "epsilon": model.epsilon,
        "mu0": model.mu0.tolist(),
        "Sigma0": model.Sigma0.tolist(),
    }
    if model.jordan is not None:
        jd = dict(model.jordan)
        if "P" in jd:
            jd["P"] = np.asarray(jd["P"]).tolist()
        out["jordan"] = jd
    return out
