"""Numerical F-term decompositions of small matrix multiplication tensors.

Each restart draws factors uniformly in ``[-1, 1]``, runs a few ridge
regularized alternating least squares sweeps, then Levenberg-Marquardt on
the full residual until the max-norm reconstruction error is tiny.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .core import Decomposition, MatMulTensor, build_tensor, verify_decomposition
from .errors import InvalidArgumentError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolveConfig:
    max_restarts: int = 200
    max_iters: int = 600
    init_range: tuple = (-1.0, 1.0)
    als_sweeps: int = 20
    damping: float = 1e-2
    residual_target: float = 1e-9
    polish_target: float = 1e-13
    norm_cap: float = 1e3
    seed: int | None = 0

    def __post_init__(self):
        if not self.residual_target > 0:
            raise InvalidArgumentError("residual_target must be positive")
        if self.max_iters < 1 or self.max_restarts < 1:
            raise InvalidArgumentError("max_iters and max_restarts must be >= 1")


@dataclass
class Population:
    decompositions: list
    trials: list
    residuals: list
    exhausted: bool = False
    requested: int = 0
    meta: dict = field(default_factory=dict)


def _residual(T, A, B, C):
    return np.einsum("ir,jr,kr->ijk", A, B, C) - T


def _jacobian(A, B, C):
    I, F = A.shape
    J, K = B.shape[0], C.shape[0]
    eI, eJ, eK = np.eye(I), np.eye(J), np.eye(K)
    dA = np.einsum("ia,jr,kr->ijkar", eI, B, C).reshape(I * J * K, I * F)
    dB = np.einsum("ir,jb,kr->ijkbr", A, eJ, C).reshape(I * J * K, J * F)
    dC = np.einsum("ir,jr,kc->ijkcr", A, B, eK).reshape(I * J * K, K * F)
    return np.hstack([dA, dB, dC])


def _split(x, I, J, K, F):
    a, b = I * F, (I + J) * F
    return x[:a].reshape(I, F), x[a:b].reshape(J, F), x[b:].reshape(K, F)


def _als(T, A, B, C, sweeps, ridge):
    I, J, K = T.shape
    F = A.shape[1]
    reg = ridge * np.eye(F)
    for _ in range(sweeps):
        # mode-wise normal equations with Khatri-Rao products
        KR = np.einsum("jr,kr->jkr", B, C).reshape(J * K, F)
        A = np.linalg.solve(KR.T @ KR + reg, KR.T @ T.reshape(I, J * K).T).T
        KR = np.einsum("ir,kr->ikr", A, C).reshape(I * K, F)
        B = np.linalg.solve(KR.T @ KR + reg, KR.T @ T.transpose(1, 0, 2).reshape(J, I * K).T).T
        KR = np.einsum("ir,jr->ijr", A, B).reshape(I * J, F)
        C = np.linalg.solve(KR.T @ KR + reg, KR.T @ T.transpose(2, 0, 1).reshape(K, I * J).T).T
    return A, B, C


def _levenberg_marquardt(T, x, shape, cfg):
    I, J, K, F = shape
    mu = cfg.damping
    r = _residual(T, *_split(x, I, J, K, F)).ravel()
    cost = r @ r
    n = x.size
    best = np.abs(r).max()
    since = 0
    for _ in range(cfg.max_iters):
        Jm = _jacobian(*_split(x, I, J, K, F))
        g = Jm.T @ r
        H = Jm.T @ Jm
        while True:
            step = np.linalg.solve(H + mu * np.eye(n), -g)
            x_new = x + step
            r_new = _residual(T, *_split(x_new, I, J, K, F)).ravel()
            cost_new = r_new @ r_new
            if cost_new < cost:
                x, r, cost = x_new, r_new, cost_new
                mu = max(mu / 10, 1e-15)
                break
            mu *= 10
            if mu > 1e12:
                return x, np.abs(r).max()
        err = np.abs(r).max()
        if err < cfg.polish_target or np.abs(x).max() > cfg.norm_cap:
            return x, err
        if err < 0.5 * best:
            best, since = err, 0
        else:
            since += 1
            if since > 80:
                return x, err
    return x, np.abs(r).max()


def decompose(tensor, F, cfg=None, return_trials=False):
    """Search for an F-term decomposition of ``tensor``.

    Returns a verified :class:`Decomposition` (balanced term norms), or
    ``None`` after ``cfg.max_restarts`` failed restarts. With
    ``return_trials`` the number of restarts used is returned as well.
    """
    cfg = cfg or SolveConfig()
    if F < 1:
        raise InvalidArgumentError("F must be >= 1")
    if not isinstance(tensor, MatMulTensor):
        raise InvalidArgumentError("expected a MatMulTensor")
    m, p, n = tensor.m, tensor.p, tensor.n
    T = np.asarray(tensor.entries, dtype=float)
    I, J, K = T.shape
    rng = np.random.default_rng(cfg.seed)
    lo, hi = cfg.init_range
    found = None
    trial = 0
    for trial in range(1, cfg.max_restarts + 1):
        A = rng.uniform(lo, hi, (I, F))
        B = rng.uniform(lo, hi, (J, F))
        C = rng.uniform(lo, hi, (K, F))
        A, B, C = _als(T, A, B, C, cfg.als_sweeps, ridge=1e-3)
        x = np.concatenate([A.ravel(), B.ravel(), C.ravel()])
        x, err = _levenberg_marquardt(T, x, (I, J, K, F), cfg)
        if not (err < cfg.residual_target and np.all(np.isfinite(x))):
            continue
        dec = Decomposition.from_stacked(m, p, n, *_split(x, I, J, K, F)).balanced()
        if verify_decomposition(dec, cfg.residual_target).passed:
            found = dec
            break
    if found is None:
        log.info("no %d-term decomposition of (%d,%d,%d) after %d restarts", F, m, p, n, trial)
    return (found, trial) if return_trials else found


def sample_population(tensor, F, count, cfg=None):
    """``count`` decompositions from independent child seeds of ``cfg.seed``.

    Each sample may use up to ``cfg.max_restarts`` restarts; if one runs out
    the population is returned short with ``exhausted`` set.
    """
    cfg = cfg or SolveConfig()
    if count < 1:
        raise InvalidArgumentError("count must be >= 1")
    children = np.random.SeedSequence(cfg.seed).spawn(count)
    pop = Population([], [], [], requested=count,
                     meta={"dims": (tensor.m, tensor.p, tensor.n), "F": F, "seed": cfg.seed})
    for child in children:
        sub = SolveConfig(**{**cfg.__dict__, "seed": child})
        dec, trials = decompose(tensor, F, sub, return_trials=True)
        if dec is None:
            pop.exhausted = True
            log.warning("population budget exhausted after %d of %d samples",
                        len(pop.decompositions), count)
            break
        pop.decompositions.append(dec)
        pop.trials.append(trials)
        pop.residuals.append(verify_decomposition(dec).max_residual)
    return pop


def decompose_dims(m, p, n, F, cfg=None):
    return decompose(build_tensor(m, p, n), F, cfg)
