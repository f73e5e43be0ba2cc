"""JSON forms of decompositions, transforms and certificates.

Decomposition::

    {"m": 2, "p": 2, "n": 2, "F": 7, "U": [F x p x m], "V": [F x n x p], "W": [F x m x n]}

Transform::

    {"sigma": [1-based], "lambda": [...], "mu": [...], "nu": [...], "P": .., "Q": .., "R": ..}
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

from .core import Decomposition
from .errors import InvalidArgumentError
from .transforms import InvarianceTransform


def _reject_constant(name):
    raise InvalidArgumentError(f"non-finite number {name} in JSON input")


def loads(text):
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise InvalidArgumentError(f"malformed JSON: {exc}") from exc


def read_text(path):
    """Contents of ``path``; ``-`` means standard input."""
    if str(path) == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InvalidArgumentError(f"cannot read {path}: {exc}") from exc


def _array(obj, key, shape=None):
    if key not in obj:
        raise InvalidArgumentError(f"missing field {key!r}")
    try:
        a = np.array(obj[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidArgumentError(f"field {key!r} is not a numeric array") from exc
    if shape is not None and a.shape != shape:
        raise InvalidArgumentError(f"field {key!r} has shape {a.shape}, expected {shape}")
    return a


def _int(obj, key):
    v = obj.get(key)
    if not isinstance(v, int) or isinstance(v, bool) or v < 1:
        raise InvalidArgumentError(f"field {key!r} must be a positive integer")
    return v


def decomposition_to_dict(dec):
    return {
        "m": dec.m, "p": dec.p, "n": dec.n, "F": dec.F,
        "U": dec.U.tolist(), "V": dec.V.tolist(), "W": dec.W.tolist(),
    }


def decomposition_from_dict(obj):
    if not isinstance(obj, dict):
        raise InvalidArgumentError("decomposition JSON must be an object")
    m, p, n, F = (_int(obj, k) for k in ("m", "p", "n", "F"))
    U = _array(obj, "U", (F, p, m))
    V = _array(obj, "V", (F, n, p))
    W = _array(obj, "W", (F, m, n))
    return Decomposition(m, p, n, U, V, W)


def transform_to_dict(t):
    return {
        "sigma": (t.sigma + 1).tolist(),
        "lambda": t.lam.tolist(), "mu": t.mu.tolist(), "nu": t.nu.tolist(),
        "P": t.P.tolist(), "Q": t.Q.tolist(), "R": t.R.tolist(),
    }


def transform_from_dict(obj):
    if not isinstance(obj, dict):
        raise InvalidArgumentError("transform JSON must be an object")
    sigma = _array(obj, "sigma")
    if sigma.ndim != 1 or np.any(sigma != np.round(sigma)):
        raise InvalidArgumentError("sigma must be a list of integers")
    return InvarianceTransform(
        sigma.astype(int) - 1,
        _array(obj, "lambda"), _array(obj, "mu"), _array(obj, "nu"),
        _array(obj, "P"), _array(obj, "Q"), _array(obj, "R"),
    )


def load_decomposition(path):
    return decomposition_from_dict(loads(read_text(path)))


def dump_json(obj, path=None):
    text = json.dumps(obj, indent=2) + "\n"
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)
    return text


def certificate_to_dict(cert, timing=False):
    stats = cert.probe_stats
    out = {
        "verdict": cert.verdict,
        "residual": cert.residual,
        "permutation": None if cert.permutation is None else [i + 1 for i in cert.permutation],
        "clustering": None if cert.clustering is None else [list(c) for c in cert.clustering],
        "probe_stats": {"visited": stats.visited, "leaves": stats.leaves, "depth": stats.depth},
        "transform": None if cert.transform is None else transform_to_dict(cert.transform),
    }
    if cert.reason:
        out["reason"] = cert.reason
    if timing:
        out["probe_stats"]["wall_time"] = stats.wall_time
    return out
