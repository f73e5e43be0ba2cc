"""Deciding equivalence of two decompositions of the same tensor.

Two layers:

* :func:`solve_scaling_trace` finds ``P, Q, R`` and per-term scalings for a
  fixed term order by solving two homogeneous linear systems. It needs a
  factor mode whose stacked matrix has clustering number one; the
  decompositions are cyclically rotated so that mode sits in the U slot.
* :func:`check_equivalence` searches term permutations depth-first, pruning
  partial permutations whose triple products ``M_r = W_r V_r U_r`` are not
  simultaneously similar to the matching prefix of the other decomposition.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import transforms as tf
from .clustering import RANK_TOL, clustering_vector
from .core import Decomposition, cyclic_rotate, unvec
from .discretize import char_poly
from .errors import (
    AssumptionViolationError,
    DegenerateDecompositionError,
    InvalidArgumentError,
)

# position of each factor mode after rotation to the U slot
_MODE_SHIFT = {0: 0, 1: 2, 2: 1}


@dataclass(frozen=True)
class Tolerances:
    nstol: float = 1e-8           # nullspace: singular values below nstol * max
    kron_tol: float = 1e-6        # Kronecker test: s2 <= kron_tol * s1
    zero_tol: float = 1e-8        # scalings below zero_tol * max are zero
    eig_tol: float = 1e-6         # similarity probe, relative
    pair_tol: float = 1e-6        # pairwise invariants, relative
    residual_tol: float = 1e-8    # reconstruction, relative to max(1, max|dec2|)
    rank_tol: float = RANK_TOL    # clustering numbers, term independence
    singular_floor: float = 1e-10


@dataclass
class ScalingTraceResult:
    transform: tf.InvarianceTransform | None
    residual: float = math.inf
    reason: str = ""
    mode: int | None = None
    diagnostics: dict = field(default_factory=dict)

    def __bool__(self):
        return self.transform is not None


@dataclass
class ProbeStats:
    visited: int = 0
    leaves: int = 0
    depth: int = 0
    wall_time: float = 0.0
    rejected: list | None = None


@dataclass
class EquivalenceCertificate:
    verdict: str
    transform: tf.InvarianceTransform | None = None
    residual: float | None = None
    permutation: tuple | None = None
    probe_stats: ProbeStats = field(default_factory=ProbeStats)
    clustering: tuple | None = None
    reason: str = ""

    @property
    def equivalent(self):
        return self.verdict == "equivalent"


# --------------------------------------------------------------------------
# linear algebra helpers
# --------------------------------------------------------------------------

def intertwiner_system(A, B):
    """Matrix of ``M A - B diag(xi) = 0`` in the unknowns ``(vec(M), xi)``."""
    rows, n = A.shape
    left = np.kron(A.T, np.eye(B.shape[0]))
    right = np.zeros((B.shape[0] * n, n))
    for j in range(n):
        right[j * B.shape[0]:(j + 1) * B.shape[0], j] = B[:, j]
    return np.hstack([left, -right])


def _nullspace(S, tol):
    """Orthonormal nullspace basis (columns) and the singular spectrum."""
    _, s, Vh = np.linalg.svd(S)
    top = s[0] if s.size else 0.0
    rank = int(np.sum(s > tol * top)) if top > 0 else 0
    return Vh[rank:].T, s


def _gap_ratio(s, dim, ncols):
    full = np.zeros(ncols)
    full[: s.size] = s
    k = ncols - dim
    if k <= 0 or k >= ncols:
        return None
    if full[k] == 0:
        return math.inf
    return float(full[k - 1] / full[k])


def nearest_kronecker(M, a, b):
    """Best ``X (a x a) kron Y (b x b)`` approximation of ``M``.

    Returns ``X, Y`` and the ratio of the second to the first singular value
    of the rearranged matrix (zero for an exact Kronecker product).
    """
    Rm = M.reshape(a, b, a, b).transpose(0, 2, 1, 3).reshape(a * a, b * b)
    u, s, vh = np.linalg.svd(Rm)
    if s[0] == 0:
        return np.zeros((a, a)), np.zeros((b, b)), math.inf
    X = (u[:, 0] * math.sqrt(s[0])).reshape(a, a)
    Y = (vh[0] * math.sqrt(s[0])).reshape(b, b)
    ratio = float(s[1] / s[0]) if s.size > 1 else 0.0
    return X, Y, ratio


def _kron_in_span(basis, a, b, rng, iters=500, tol=1e-12):
    """Alternating projections between a subspace and Kronecker products.

    ``basis`` has orthonormal columns spanning candidate ``vec``-ed
    matrices of size ``ab x ab``. Returns coefficients of a point whose
    rearrangement is (numerically) rank one, or ``None``.
    """
    c = rng.standard_normal(basis.shape[1])
    c /= np.linalg.norm(c)
    for _ in range(iters):
        M = unvec(basis @ c, a * b, a * b)
        X, Y, ratio = nearest_kronecker(M, a, b)
        if ratio < tol:
            return c
        c = basis.T @ np.kron(X, Y).flatten(order="F")
        nc = np.linalg.norm(c)
        if nc == 0:
            return None
        c /= nc
    return None


def _is_invertible(X, floor):
    s = np.linalg.svd(X, compute_uv=False)
    return s[-1] > floor * max(s[0], 1e-300)


def _normalize(X):
    d = abs(np.linalg.det(X))
    return X / d ** (1.0 / X.shape[0]) if d > 0 else X


def _project_scalings(dec1, dec2, P, Q, R):
    """Least-squares per-term scalings for fixed ``P, Q, R``."""
    Pi, Qi, Ri = np.linalg.inv(P), np.linalg.inv(Q), np.linalg.inv(R)
    BU = Qi @ dec1.U @ P
    BV = Ri @ dec1.V @ Q
    BW = Pi @ dec1.W @ R

    def fit(B, target):
        num = np.einsum("rij,rij->r", B, target)
        den = np.einsum("rij,rij->r", B, B)
        return num / np.where(den > 0, den, 1.0)

    return fit(BU, dec2.U), fit(BV, dec2.V), fit(BW, dec2.W)


# --------------------------------------------------------------------------
# scaling + trace equivalence for a fixed term order
# --------------------------------------------------------------------------

def _solve_u_slot(dec1, dec2, tols, fallback, rng, restarts=12):
    """Scaling+trace transform from ``dec1`` to ``dec2``, U mode has clustering number one."""
    m, p, n = dec1.dims
    k = p * m
    Ut1, Ut2 = dec1.stacked().Ut, dec2.stacked().Ut
    S = intertwiner_system(Ut1, Ut2)
    null, spectrum = _nullspace(S, tols.nstol)
    dim = null.shape[1]
    diag = {"u_nullspace_dim": dim, "u_gap_ratio": _gap_ratio(spectrum, dim, S.shape[1])}
    if dim == 0:
        return ScalingTraceResult(None, reason="linearized U system has only the zero solution",
                                  diagnostics=diag)
    if dim > 1 and not fallback:
        return ScalingTraceResult(None, reason=f"linearized U system has dimension {dim} != 1",
                                  diagnostics=diag)

    if dim == 1:
        candidates = [null[:, 0]]
    else:
        # several clusters: look for a Kronecker-structured point in the span
        Mpart = null[: k * k]
        Qm, Rm = np.linalg.qr(Mpart)
        candidates = []
        for _ in range(restarts):
            c = _kron_in_span(Qm, m, p, rng)
            if c is not None:
                candidates.append(null @ np.linalg.solve(Rm, c))

    last = ScalingTraceResult(None, reason="no Kronecker-structured solution", diagnostics=diag)
    for x in candidates:
        res = _finish_from_u(dec1, dec2, x, tols, fallback, rng, diag)
        if res:
            return res
        last = res
    return last


def _finish_from_u(dec1, dec2, x, tols, fallback, rng, diag):
    m, p, n = dec1.dims
    F = dec1.F
    k = p * m
    M = unvec(x[: k * k], k, k)
    lam = x[k * k:]
    if np.any(np.abs(lam) <= tols.zero_tol * np.abs(lam).max()):
        return ScalingTraceResult(None, reason="some U scaling vanishes", diagnostics=diag)
    X, Y, ratio = nearest_kronecker(M, m, p)
    diag = dict(diag, kron_ratio=ratio)
    if ratio > tols.kron_tol:
        return ScalingTraceResult(None, reason="U intertwiner is not a Kronecker product",
                                  diagnostics=diag)
    if not (_is_invertible(X, tols.singular_floor) and _is_invertible(Y, tols.singular_floor)):
        return ScalingTraceResult(None, reason="P or Q is singular", diagnostics=diag)
    P = _normalize(X.T)
    Q = _normalize(np.linalg.inv(Y))

    # R V'_r = mu_r V_r Q and P^-1 W_r R = nu~_r W'_r, unknowns (vec R, mu, nu~)
    Pi = np.linalg.inv(P)
    rows_v = n * p
    rows_w = m * n
    S = np.zeros((F * (rows_v + rows_w), n * n + 2 * F))
    In = np.eye(n)
    for r in range(F):
        o = r * rows_v
        S[o:o + rows_v, : n * n] = np.kron(dec2.V[r].T, In)
        S[o:o + rows_v, n * n + r] = -(dec1.V[r] @ Q).flatten(order="F")
        o = F * rows_v + r * rows_w
        S[o:o + rows_w, : n * n] = np.kron(In, Pi @ dec1.W[r])
        S[o:o + rows_w, n * n + F + r] = -dec2.W[r].flatten(order="F")
    null, spectrum = _nullspace(S, tols.nstol)
    dim = null.shape[1]
    diag = dict(diag, r_nullspace_dim=dim, r_gap_ratio=_gap_ratio(spectrum, dim, S.shape[1]))
    if dim == 0:
        return ScalingTraceResult(None, reason="R system has only the zero solution",
                                  diagnostics=diag)
    # extra freedom here is harmless: any invertible R in the span is
    # refit and accepted only if the factors match exactly
    tries = [null[:, 0]] if dim == 1 else [null @ rng.standard_normal(dim) for _ in range(8)]
    reason = ""
    for y in tries:
        R = unvec(y[: n * n], n, n)
        mus, nus = y[n * n: n * n + F], y[n * n + F:]
        if np.any(np.abs(mus) <= tols.zero_tol * np.abs(mus).max()) or np.any(
            np.abs(nus) <= tols.zero_tol * np.abs(nus).max()
        ):
            reason = "some V or W scaling vanishes"
            continue
        if not _is_invertible(R, tols.singular_floor):
            reason = "R is singular"
            continue
        R = _normalize(R)
        lam_t, mu_t, nu_fit = _project_scalings(dec1, dec2, P, Q, R)
        if np.any(lam_t * mu_t == 0) or np.any(np.abs(lam_t * mu_t * nu_fit - 1) > 1e-6):
            reason = "fitted scalings do not multiply to one"
            continue
        # the products are one up to rounding; make it exact and let the residual judge
        t = tf.InvarianceTransform(np.arange(F), lam_t, mu_t, 1.0 / (lam_t * mu_t), P, Q, R)
        residual = dec2.max_deviation(tf.apply(t, dec1, floor=0.0))
        if residual <= tols.residual_tol * max(1.0, dec2.max_abs()):
            return ScalingTraceResult(t, residual, diagnostics=diag)
        reason = f"reconstruction residual {residual:.3g} too large"
    return ScalingTraceResult(None, reason=reason, diagnostics=diag)


def solve_scaling_trace(dec1, dec2, tols=None, clustering=None, allow_fallback=False, rng=None):
    """Find a scaling+trace transform taking ``dec1`` to ``dec2`` (same term order).

    ``clustering`` may carry precomputed clustering vectors ``(cv1, cv2)``.
    With ``allow_fallback`` the solver also tries modes with clustering
    number above one, searching the larger solution space for a
    Kronecker-structured point; without it such inputs raise
    :class:`AssumptionViolationError`. Every returned transform has been
    checked by reconstruction.
    """
    tols = tols or Tolerances()
    _check_pair(dec1, dec2)
    rng = np.random.default_rng(rng)
    if clustering is None:
        clustering = (clustering_vector(dec1, tols.rank_tol), clustering_vector(dec2, tols.rank_tol))
    cv1, cv2 = clustering
    if tuple(cv1) != tuple(cv2):
        return ScalingTraceResult(None, reason=f"clustering vectors differ: {cv1} vs {cv2}")
    modes = [i for i in range(3) if cv1[i] == 1]
    if not modes:
        if not allow_fallback:
            raise AssumptionViolationError(
                f"no factor mode has clustering number one (clustering vector {tuple(cv1)})",
                tuple(cv1),
            )
        modes = sorted(range(3), key=lambda i: cv1[i])
        fallback = True
    else:
        modes = modes[:1]
        fallback = False

    result = ScalingTraceResult(None, reason="not attempted")
    for mode in modes:
        shift = _MODE_SHIFT[mode]
        r1, r2 = cyclic_rotate(dec1, shift), cyclic_rotate(dec2, shift)
        result = _solve_u_slot(r1, r2, tols, fallback, rng)
        result.mode = mode
        if result:
            t = tf.rotate(result.transform, (3 - shift) % 3)
            residual = dec2.max_deviation(tf.apply(t, dec1, floor=0.0))
            return replace(result, transform=t, residual=residual)
    return result


# --------------------------------------------------------------------------
# simultaneous similarity probe
# --------------------------------------------------------------------------

def spectra_match(A, B, eig_tol=1e-6):
    """Do ``A`` and ``B`` have the same eigenvalues with multiplicity (numerically)?

    Eigenvalues are paired by a minimum-cost matching in the complex plane.
    When that fails, the characteristic polynomial coefficients are compared
    instead; they are insensitive to the ill-conditioning of eigenvalues of
    defective matrices.
    """
    ea, eb = np.linalg.eigvals(A), np.linalg.eigvals(B)
    scale = max(np.abs(ea).max(), np.abs(eb).max())
    cost = np.abs(ea[:, None] - eb[None, :])
    rows, cols = linear_sum_assignment(cost)
    if cost[rows, cols].max() <= eig_tol * scale:
        return True
    m = A.shape[0]
    s = max(np.linalg.norm(A), np.linalg.norm(B))
    if s == 0:
        return True
    ca, cb = char_poly(A), char_poly(B)
    bound = np.array([eig_tol * math.comb(m, i) * s**i for i in range(1, m + 1)])
    return bool(np.all(np.abs(ca - cb) <= bound))


def similarity_probe(Ms, Ms2, rng=None, trials=3, eig_tol=1e-6):
    """Randomized necessary test for simultaneous similarity of two families.

    For each trial, draws standard normal ``alpha`` and compares the spectra
    of ``sum alpha_i Ms[i]`` and ``sum alpha_i Ms2[i]``. ``False`` certifies
    the families are not simultaneously similar (up to tolerance).
    """
    Ms, Ms2 = np.asarray(Ms, dtype=float), np.asarray(Ms2, dtype=float)
    if Ms.shape != Ms2.shape:
        raise InvalidArgumentError("families must have equal lengths and shapes")
    rng = np.random.default_rng(rng)
    for _ in range(trials):
        alpha = rng.standard_normal(Ms.shape[0])
        if not spectra_match(np.tensordot(alpha, Ms, 1), np.tensordot(alpha, Ms2, 1), eig_tol):
            return False
    return True


def pair_invariants(dec):
    """Per-pair quantities unchanged by scaling and trace transformations.

    Returns an ``(F, F, 4)`` array; entry ``[a, b]`` of the other
    decomposition matches entry ``[sigma(a), sigma(b)]`` when the two are
    equivalent with permutation ``sigma``.
    """
    U, V, W = dec.U, dec.V, dec.W
    X = np.einsum("aij,bjk,cki->abc", W, V, U)  # trace(W_a V_b U_c)
    F = dec.F
    d = np.arange(F)
    t1 = X[d[:, None], d[None, :], d[:, None]] * X[d[None, :], d[:, None], d[None, :]]
    t2 = X[d[:, None], d[:, None], d[None, :]] * X[d[None, :], d[None, :], d[:, None]]
    t3 = X[d[:, None], d[None, :], d[None, :]] * X[d[None, :], d[:, None], d[:, None]]
    Y = np.einsum("aij,bjk,bkl->abil", W, V, U)  # W_a V_b U_b
    t4 = np.einsum("abij,baji->ab", Y, Y)
    return np.stack([t1, t2, t3, t4], axis=-1)


def term_signatures(Ms):
    """Characteristic polynomial of each triple product, scaled per family."""
    scale = max(np.abs(Ms).max(), 1e-300)
    return np.array([char_poly(M / scale) for M in Ms]), scale


# --------------------------------------------------------------------------
# permutation search
# --------------------------------------------------------------------------

def _check_pair(dec1, dec2):
    if not isinstance(dec1, Decomposition) or not isinstance(dec2, Decomposition):
        raise InvalidArgumentError("expected two Decompositions")
    if dec1.dims != dec2.dims or dec1.F != dec2.F:
        raise InvalidArgumentError(
            f"decompositions differ in shape: {dec1.dims}/{dec1.F} vs {dec2.dims}/{dec2.F}"
        )


def check_independent_terms(dec, rank_tol=RANK_TOL):
    """Raise if the rank-1 terms of ``dec`` are linearly dependent."""
    s = dec.stacked()
    terms = np.einsum("ir,jr,kr->ijkr", s.Ut, s.Vt, s.Wt).reshape(-1, dec.F)
    sv = np.linalg.svd(terms, compute_uv=False)
    if sv[-1] <= rank_tol * sv[0]:
        raise DegenerateDecompositionError(
            f"rank-1 terms are linearly dependent (singular values {sv[-1]:.3g} / {sv[0]:.3g})"
        )


class _Search:
    def __init__(self, dec1, dec2, tols, trials, rng, mode, use_pairs, order_children,
                 fallback, clustering, record):
        self.dec1, self.dec2 = dec1, dec2
        self.F = dec1.F
        self.tols = tols
        self.mode = mode
        self.fallback = fallback
        self.clustering = clustering
        self.rng = rng
        self.M1 = tf.triple_products(dec1)
        self.M2 = tf.triple_products(dec2)
        self.alpha = rng.standard_normal((trials, self.F))
        # prefix sums of the second family, per trial
        self.S2 = np.cumsum(self.alpha.T[:, :, None, None] * self.M2[:, None], axis=0)
        self.use_pairs = use_pairs
        if use_pairs:
            self.T1, self.T2 = pair_invariants(dec1), pair_invariants(dec2)
            self.pair_scale = np.maximum(np.abs(self.T1).max(axis=(0, 1)),
                                         np.abs(self.T2).max(axis=(0, 1)))
        if order_children:
            sig1, s1 = term_signatures(self.M1)
            sig2, s2 = term_signatures(self.M2)
            self.dist = np.abs(sig1[:, None, :] * s1 - sig2[None, :, :] * s2).max(axis=2)
        else:
            self.dist = None
        self.stats = ProbeStats(rejected=[] if record else None)
        self.last_solve = None

    def prefix_ok(self, pi, ell, S1):
        k = len(pi)
        self.stats.visited += 1
        if self.use_pairs and k:
            a = np.asarray(pi)
            diff = np.abs(self.T1[a, ell] - self.T2[:k, k])
            if np.any(diff > self.tols.pair_tol * self.pair_scale):
                return False
        for t in range(self.alpha.shape[0]):
            if not spectra_match(S1[t], self.S2[k, t], self.tols.eig_tol):
                return False
        return True

    def reject(self, pi):
        self.stats.depth = max(self.stats.depth, len(pi))
        if self.stats.rejected is not None:
            self.stats.rejected.append(tuple(pi))

    def run(self, pi, S1):
        """Depth-first extension of the partial permutation ``pi``."""
        F = self.F
        if len(pi) == F:
            self.stats.leaves += 1
            if self.mode == "no_assumption":
                return ("inconclusive", tuple(pi), None)
            res = solve_scaling_trace(
                self.dec1.permuted(pi), self.dec2, self.tols, self.clustering,
                allow_fallback=self.fallback, rng=self.rng,
            )
            self.last_solve = res
            if res:
                return ("equivalent", tuple(pi), res)
            self.reject(pi)
            return None
        k = len(pi)
        used = set(pi)
        children = [ell for ell in range(F) if ell not in used]
        if self.dist is not None:
            children.sort(key=lambda ell: self.dist[ell, k])
        for ell in children:
            S1_next = S1 + self.alpha[:, k, None, None] * self.M1[ell]
            if not self.prefix_ok(pi, ell, S1_next):
                self.reject(pi + [ell])
                continue
            found = self.run(pi + [ell], S1_next)
            if found is not None:
                return found
        return None


def check_equivalence(dec1, dec2, trials=3, tols=None, mode="full", rng=0,
                      pair_invariants=True, order_children=True, record_rejections=False):
    """Decide whether ``dec2`` is obtained from ``dec1`` by invariance transformations.

    ``mode="full"`` returns ``"equivalent"`` (with a transform checked by
    reconstruction) or ``"inequivalent"``. ``mode="no_assumption"`` skips the
    scaling+trace solve and returns ``"inconclusive"`` as soon as a complete
    permutation survives the probes.

    When no factor mode has clustering number one, the full mode still tries
    a fallback solve at each complete permutation; if the search is exhausted
    without a transform it raises :class:`AssumptionViolationError`, since
    inequivalence is then not certified.
    """
    if mode not in ("full", "no_assumption"):
        raise InvalidArgumentError(f"unknown mode {mode!r}")
    tols = tols or Tolerances()
    _check_pair(dec1, dec2)
    rng = np.random.default_rng(rng)
    start = time.perf_counter()
    check_independent_terms(dec1, tols.rank_tol)
    check_independent_terms(dec2, tols.rank_tol)
    cv1 = clustering_vector(dec1, tols.rank_tol)
    cv2 = clustering_vector(dec2, tols.rank_tol)
    if cv1 != cv2:
        stats = ProbeStats(wall_time=time.perf_counter() - start)
        return EquivalenceCertificate("inequivalent", probe_stats=stats, clustering=(cv1, cv2),
                                      reason="clustering vectors differ")
    fallback = 1 not in cv1
    search = _Search(dec1, dec2, tols, trials, rng, mode, pair_invariants, order_children,
                     fallback, (cv1, cv2), record_rejections)
    m = dec1.m
    found = search.run([], np.zeros((trials, m, m)))
    stats = search.stats
    stats.wall_time = time.perf_counter() - start
    if found is None:
        if mode == "full" and fallback:
            raise AssumptionViolationError(
                f"no transform found and no mode has clustering number one "
                f"(clustering vector {cv1}); inequivalence is not certified",
                cv1,
            )
        return EquivalenceCertificate("inequivalent", probe_stats=stats, clustering=(cv1, cv2),
                                      reason="all permutations rejected")
    verdict, pi, res = found
    if verdict == "inconclusive":
        return EquivalenceCertificate("inconclusive", permutation=pi, probe_stats=stats,
                                      clustering=(cv1, cv2))
    t = res.transform
    t = tf.InvarianceTransform(np.asarray(pi), t.lam, t.mu, t.nu, t.P, t.Q, t.R)
    residual = dec2.max_deviation(tf.apply(t, dec1, floor=0.0))
    return EquivalenceCertificate("equivalent", transform=t, residual=residual, permutation=pi,
                                  probe_stats=stats, clustering=(cv1, cv2))


def check_equivalence_bruteforce(dec1, dec2, tols=None, rng=0, max_terms=8):
    """Try every permutation with the scaling+trace solver. Only for ``F <= max_terms``."""
    tols = tols or Tolerances()
    _check_pair(dec1, dec2)
    if dec1.F > max_terms:
        raise InvalidArgumentError(f"brute force refused for F = {dec1.F} > {max_terms}")
    rng = np.random.default_rng(rng)
    start = time.perf_counter()
    cv = (clustering_vector(dec1, tols.rank_tol), clustering_vector(dec2, tols.rank_tol))
    fallback = 1 not in cv[0]
    stats = ProbeStats()
    for pi in itertools.permutations(range(dec1.F)):
        stats.leaves += 1
        res = solve_scaling_trace(dec1.permuted(pi), dec2, tols, cv, allow_fallback=fallback,
                                  rng=rng)
        if res:
            t = res.transform
            t = tf.InvarianceTransform(np.asarray(pi), t.lam, t.mu, t.nu, t.P, t.Q, t.R)
            stats.wall_time = time.perf_counter() - start
            residual = dec2.max_deviation(tf.apply(t, dec1, floor=0.0))
            return EquivalenceCertificate("equivalent", transform=t, residual=residual,
                                          permutation=tuple(pi), probe_stats=stats,
                                          clustering=cv)
    stats.wall_time = time.perf_counter() - start
    return EquivalenceCertificate("inequivalent", probe_stats=stats, clustering=cv,
                                  reason="no permutation admits a scaling+trace transform")
