"""Permutation, scaling and trace transformations of decompositions.

A transform is kept in the normal form "permute, then scale, then conjugate":

    U'_r = lambda_r Q^-1 U_sigma(r) P
    V'_r = mu_r     R^-1 V_sigma(r) Q
    W'_r = nu_r     P^-1 W_sigma(r) R

``sigma`` is stored 0-based; the JSON form is 1-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Decomposition
from .errors import InvalidArgumentError

SINGULAR_FLOOR = 1e-10
SCALING_TOL = 1e-12


def _smallest_sv(X):
    return float(np.linalg.svd(X, compute_uv=False)[-1])


@dataclass(frozen=True, eq=False)
class InvarianceTransform:
    sigma: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    nu: np.ndarray
    P: np.ndarray = field(repr=False)
    Q: np.ndarray = field(repr=False)
    R: np.ndarray = field(repr=False)

    def __post_init__(self):
        sigma = np.array(self.sigma, dtype=int).ravel()
        F = sigma.size
        if sorted(sigma.tolist()) != list(range(F)):
            raise InvalidArgumentError("sigma is not a permutation of 0..F-1")
        arrays = {"sigma": sigma}
        for name in ("lam", "mu", "nu"):
            a = np.array(getattr(self, name), dtype=float).ravel()
            if a.size != F:
                raise InvalidArgumentError(f"{name} must have length F = {F}")
            arrays[name] = a
        for name in ("P", "Q", "R"):
            a = np.atleast_2d(np.array(getattr(self, name), dtype=float))
            if a.ndim != 2 or a.shape[0] != a.shape[1]:
                raise InvalidArgumentError(f"{name} must be square")
            arrays[name] = a
        for name, a in arrays.items():
            if not np.all(np.isfinite(a)):
                raise InvalidArgumentError(f"{name} contains non-finite entries")
        prod = arrays["lam"] * arrays["mu"] * arrays["nu"]
        if np.any(np.abs(prod - 1.0) > SCALING_TOL):
            worst = float(np.abs(prod - 1.0).max())
            raise InvalidArgumentError(f"lambda * mu * nu must be 1 for every term (off by {worst:.2e})")
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def F(self):
        return self.sigma.size

    @property
    def dims(self):
        return (self.P.shape[0], self.Q.shape[0], self.R.shape[0])

    def scaling_products(self):
        return self.lam * self.mu * self.nu

    def check_invertible(self, floor=SINGULAR_FLOOR):
        for name in ("P", "Q", "R"):
            s = _smallest_sv(getattr(self, name))
            if s <= floor:
                raise InvalidArgumentError(
                    f"{name} is numerically singular (smallest singular value {s:.3g})"
                )


def identity(dims, F):
    m, p, n = dims
    one = np.ones(F)
    return InvarianceTransform(np.arange(F), one, one, one, np.eye(m), np.eye(p), np.eye(n))


def permutation(sigma, dims):
    sigma = np.asarray(sigma, dtype=int)
    t = identity(dims, sigma.size)
    return InvarianceTransform(sigma, t.lam, t.mu, t.nu, t.P, t.Q, t.R)


def _check_compatible(t, dims, F):
    if t.F != F:
        raise InvalidArgumentError(f"transform has {t.F} terms, decomposition has {F}")
    if t.dims != tuple(dims):
        raise InvalidArgumentError(f"transform acts on dims {t.dims}, decomposition has {tuple(dims)}")


def apply(t, dec, floor=SINGULAR_FLOOR):
    """Apply ``t`` to ``dec``; the result decomposes the same tensor."""
    _check_compatible(t, dec.dims, dec.F)
    t.check_invertible(floor)
    Pi, Qi, Ri = (np.linalg.inv(t.P), np.linalg.inv(t.Q), np.linalg.inv(t.R))
    s = t.sigma
    U = t.lam[:, None, None] * (Qi @ dec.U[s] @ t.P)
    V = t.mu[:, None, None] * (Ri @ dec.V[s] @ t.Q)
    W = t.nu[:, None, None] * (Pi @ dec.W[s] @ t.R)
    return Decomposition(dec.m, dec.p, dec.n, U, V, W)


def compose(t2, t1):
    """The transform equal to applying ``t1`` first and then ``t2``."""
    if t1.F != t2.F or t1.dims != t2.dims:
        raise InvalidArgumentError("transforms are not shape-compatible")
    s2 = t2.sigma
    return InvarianceTransform(
        sigma=t1.sigma[s2],
        lam=t2.lam * t1.lam[s2],
        mu=t2.mu * t1.mu[s2],
        nu=t2.nu * t1.nu[s2],
        P=t1.P @ t2.P,
        Q=t1.Q @ t2.Q,
        R=t1.R @ t2.R,
    )


def inverse(t, floor=SINGULAR_FLOOR):
    t.check_invertible(floor)
    inv = np.argsort(t.sigma)
    return InvarianceTransform(
        sigma=inv,
        lam=1.0 / t.lam[inv],
        mu=1.0 / t.mu[inv],
        nu=1.0 / t.nu[inv],
        P=np.linalg.inv(t.P),
        Q=np.linalg.inv(t.Q),
        R=np.linalg.inv(t.R),
    )


def rotate(t, shift):
    """The transform matching ``core.cyclic_rotate(dec, shift)``.

    ``apply(rotate(t, s), cyclic_rotate(dec, s)) == cyclic_rotate(apply(t, dec), s)``.
    """
    if shift not in (0, 1, 2):
        raise InvalidArgumentError(f"shift must be 0, 1 or 2, got {shift!r}")
    mats = [t.P, t.Q, t.R]
    scal = [t.lam, t.mu, t.nu]
    k = shift
    mats = mats[-k:] + mats[:-k] if k else mats
    scal = scal[-k:] + scal[:-k] if k else scal
    return InvarianceTransform(t.sigma, scal[0], scal[1], scal[2], mats[0], mats[1], mats[2])


def _random_invertible(rng, size, condition_cap):
    while True:
        X = rng.standard_normal((size, size))
        if np.linalg.cond(X) <= condition_cap:
            return X


def random_transform(dims, F, rng=None, scale_range=(0.25, 4.0), condition_cap=1e4):
    """Draw a random transform.

    ``sigma`` is uniform, ``lam`` and ``mu`` are log-uniform in
    ``scale_range`` with ``nu = 1 / (lam * mu)``, and ``P, Q, R`` have
    standard normal entries, redrawn until their condition number is at most
    ``condition_cap``.
    """
    rng = np.random.default_rng(rng)
    lo, hi = np.log(scale_range[0]), np.log(scale_range[1])
    if not lo <= hi:
        raise InvalidArgumentError("scale_range must be increasing and positive")
    m, p, n = dims
    sigma = rng.permutation(F)
    lam = np.exp(rng.uniform(lo, hi, F))
    mu = np.exp(rng.uniform(lo, hi, F))
    nu = 1.0 / (lam * mu)
    P = _random_invertible(rng, m, condition_cap)
    Q = _random_invertible(rng, p, condition_cap)
    R = _random_invertible(rng, n, condition_cap)
    return InvarianceTransform(sigma, lam, mu, nu, P, Q, R)


def triple_products(dec):
    """``M_r = W_r V_r U_r`` for every term, an array of shape (F, m, m)."""
    return dec.W @ dec.V @ dec.U
