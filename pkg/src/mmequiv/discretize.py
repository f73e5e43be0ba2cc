"""Necessary criterion for equivalence to a discrete decomposition.

If a decomposition is equivalent to one with all factor entries in ``q Z``,
then for integer ``beta`` the characteristic polynomial of
``q**-3 * sum_r beta_r M_r`` (with ``M_r = W_r V_r U_r``) has integer
coefficients. The ND score measures how far sampled coefficients are from
the nearest integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InvalidArgumentError
from .transforms import triple_products

DEFAULT_DRAWS = 16
DEFAULT_BETA_BOUND = 5
DEFAULT_THRESHOLD = 0.1


def _is_exact(M):
    if M.dtype == object:
        return all(isinstance(x, (int, Fraction)) for x in M.flat)
    return np.issubdtype(M.dtype, np.integer)


def _leverrier_rational(A, m):
    N = [[Fraction(0)] * m for _ in range(m)]
    coeffs = []
    c = Fraction(1)
    for k in range(1, m + 1):
        # N <- A N + c I
        N = [[sum((A[i][l] * N[l][j] for l in range(m)), Fraction(0)) for j in range(m)]
             for i in range(m)]
        for i in range(m):
            N[i][i] += c
        tr = sum((A[i][l] * N[l][i] for i in range(m) for l in range(m)), Fraction(0))
        c = -tr / k
        coeffs.append(c)
    return coeffs


def char_poly(M, exact=None, rational_limit=8):
    """Coefficients ``(c_{m-1}, ..., c_0)`` of ``det(tI - M) = t^m + c_{m-1} t^{m-1} + ... + c_0``.

    Faddeev-LeVerrier recursion. Integer (or Fraction) input is handled in
    exact rational arithmetic and returns Fractions. Float input up to
    ``rational_limit`` rows runs the same rational recursion on the binary
    values of the entries and rounds once at the end, which avoids the
    cancellation the recursion suffers in floating point; larger float
    matrices use floating point with compensated trace sums.
    """
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidArgumentError(f"char_poly needs a square matrix, got shape {M.shape}")
    m = M.shape[0]
    if exact is None:
        exact = _is_exact(M)
    if exact:
        return _leverrier_rational([[Fraction(x) for x in row] for row in M.tolist()], m)

    A = M.astype(float)
    if not np.all(np.isfinite(A)):
        raise InvalidArgumentError("char_poly needs finite entries")
    if m <= rational_limit:
        rows = [[Fraction(x) for x in row] for row in A.tolist()]
        return np.array([float(c) for c in _leverrier_rational(rows, m)])
    N = np.zeros((m, m))
    coeffs = np.empty(m)
    c = 1.0
    for k in range(1, m + 1):
        N = A @ N + c * np.eye(m)
        AN = A * N.T  # trace(A N) = sum_ij A_ij N_ji
        c = -math.fsum(AN.ravel()) / k
        coeffs[k - 1] = c
    return coeffs


def char_poly_closed_form(M):
    """Closed forms for m <= 3, used as a cross-check."""
    M = np.asarray(M, dtype=float)
    m = M.shape[0]
    if m == 1:
        return np.array([-M[0, 0]])
    if m == 2:
        return np.array([-np.trace(M), np.linalg.det(M)])
    if m == 3:
        minors = (
            M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
            + M[0, 0] * M[2, 2] - M[0, 2] * M[2, 0]
            + M[1, 1] * M[2, 2] - M[1, 2] * M[2, 1]
        )
        return np.array([-np.trace(M), minors, -np.linalg.det(M)])
    raise InvalidArgumentError("closed forms only for m <= 3")


@dataclass(frozen=True)
class Draw:
    beta: np.ndarray
    coefficients: np.ndarray
    deviation: float


@dataclass(frozen=True)
class DiscretizabilityReport:
    q: float
    nd_score: float
    per_draw: tuple
    draws: int
    beta_range: int
    threshold: float = DEFAULT_THRESHOLD

    @property
    def passes(self):
        return self.nd_score < self.threshold

    def to_dict(self):
        return {
            "q": self.q,
            "nd_score": self.nd_score,
            "draws": self.draws,
            "beta_bound": self.beta_range,
            "threshold": self.threshold,
            "verdict": "passes" if self.passes else "fails",
            "per_draw": [
                {
                    "beta": d.beta.tolist(),
                    "coefficients": [float(c) for c in d.coefficients],
                    "deviation": d.deviation,
                }
                for d in self.per_draw
            ],
        }


def nd_score(dec, q=1.0, draws=DEFAULT_DRAWS, beta_bound=DEFAULT_BETA_BOUND, rng=None,
             threshold=DEFAULT_THRESHOLD):
    """Largest distance to the nearest integer over sampled char-poly coefficients."""
    if not q > 0:
        raise InvalidArgumentError("q must be positive")
    if draws < 1 or beta_bound < 0:
        raise InvalidArgumentError("draws must be >= 1 and beta_bound >= 0")
    rng = np.random.default_rng(rng)
    M = triple_products(dec) / q**3
    per_draw = []
    worst = 0.0
    for _ in range(draws):
        beta = rng.integers(-beta_bound, beta_bound + 1, size=dec.F)
        coeffs = char_poly(np.tensordot(beta, M, axes=1))
        dev = float(np.max(np.abs(coeffs - np.round(coeffs))))
        worst = max(worst, dev)
        per_draw.append(Draw(beta, coeffs, dev))
    return DiscretizabilityReport(float(q), worst, tuple(per_draw), draws, beta_bound, threshold)


def criterion(dec, q=1.0, draws=DEFAULT_DRAWS, beta_bound=DEFAULT_BETA_BOUND, rng=None,
              threshold=DEFAULT_THRESHOLD):
    """``"passes"`` or ``"fails"``.

    Failing certifies that ``dec`` is not equivalent to a decomposition with
    entries in ``q Z``; passing proves nothing.
    """
    report = nd_score(dec, q, draws, beta_bound, rng, threshold)
    return "passes" if report.passes else "fails"
