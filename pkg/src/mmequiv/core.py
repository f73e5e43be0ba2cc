"""Matrix multiplication tensors, polyadic decompositions and fixtures.

Conventions used everywhere in the package:

* A term ``r`` of a decomposition of the ``(m, p, n)`` tensor is a triple of
  matrices ``U[r]`` (p x m), ``V[r]`` (n x p) and ``W[r]`` (m x n), acting as
  ``A, B -> trace(U[r] A) * trace(V[r] B) * W[r]``.
* ``vec`` is column stacking, ``vec(X) = X.flatten(order="F")``.
* The tensor array has shape ``(pm, np, mn)`` and satisfies
  ``T[i, j, k] = sum_r vec(U[r])[i] * vec(V[r])[j] * vec(W[r])[k]``.
  Contracting it with ``vec(A.T)`` and ``vec(B.T)`` yields ``vec(A @ B)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError

DEFAULT_TOL = 1e-9


def vec(X):
    return np.asarray(X).flatten(order="F")


def unvec(x, rows, cols):
    return np.asarray(x).reshape((rows, cols), order="F")


@dataclass(frozen=True)
class MatMulTensor:
    m: int
    p: int
    n: int
    entries: np.ndarray = field(repr=False)

    @property
    def shape(self):
        return self.entries.shape

    def contract(self, A, B):
        """Evaluate the bilinear map on ``A`` (m x p) and ``B`` (p x n)."""
        x = vec(np.asarray(A).T)
        y = vec(np.asarray(B).T)
        z = np.einsum("ijk,i,j->k", self.entries, x, y)
        return unvec(z, self.m, self.n)


def _check_dim(name, d):
    if int(d) != d or d < 1:
        raise InvalidArgumentError(f"dimension {name} must be a positive integer, got {d!r}")
    return int(d)


def build_tensor(m, p, n):
    """Return the 0/1 array of the ``(m, p, n)`` matrix multiplication tensor."""
    m, p, n = _check_dim("m", m), _check_dim("p", p), _check_dim("n", n)
    T = np.zeros((p * m, n * p, m * n))
    # A[d, a] * B[a, e] contributes to C[d, e]
    for d in range(m):
        for a in range(p):
            for e in range(n):
                T[a + p * d, e + n * a, d + m * e] = 1.0
    return MatMulTensor(m, p, n, T)


@dataclass(frozen=True)
class StackedFactors:
    Ut: np.ndarray
    Vt: np.ndarray
    Wt: np.ndarray


@dataclass(frozen=True, eq=False)
class Decomposition:
    """An F-term polyadic decomposition of the ``(m, p, n)`` tensor.

    ``U``, ``V`` and ``W`` are stored as 3-d arrays of shapes ``(F, p, m)``,
    ``(F, n, p)`` and ``(F, m, n)``.
    """

    m: int
    p: int
    n: int
    U: np.ndarray = field(repr=False)
    V: np.ndarray = field(repr=False)
    W: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name in ("m", "p", "n"):
            _check_dim(name, getattr(self, name))
        U = np.array(self.U, dtype=float)
        V = np.array(self.V, dtype=float)
        W = np.array(self.W, dtype=float)
        m, p, n = self.m, self.p, self.n
        if U.ndim != 3 or V.ndim != 3 or W.ndim != 3:
            raise InvalidArgumentError("factor stacks must be 3-d arrays (F, rows, cols)")
        F = U.shape[0]
        if F < 1:
            raise InvalidArgumentError("a decomposition needs at least one term")
        expected = {"U": (F, p, m), "V": (F, n, p), "W": (F, m, n)}
        for name, arr in (("U", U), ("V", V), ("W", W)):
            if arr.shape != expected[name]:
                raise InvalidArgumentError(
                    f"{name} has shape {arr.shape}, expected {expected[name]}"
                )
            if not np.all(np.isfinite(arr)):
                raise InvalidArgumentError(f"{name} contains non-finite entries")
            arr.setflags(write=False)
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "W", W)

    @property
    def F(self):
        return self.U.shape[0]

    @property
    def dims(self):
        return (self.m, self.p, self.n)

    def stacked(self):
        """Matrices whose r-th columns are ``vec(U[r])``, ``vec(V[r])``, ``vec(W[r])``."""
        F = self.F
        return StackedFactors(
            Ut=self.U.transpose(0, 2, 1).reshape(F, -1).T.copy(),
            Vt=self.V.transpose(0, 2, 1).reshape(F, -1).T.copy(),
            Wt=self.W.transpose(0, 2, 1).reshape(F, -1).T.copy(),
        )

    @classmethod
    def from_stacked(cls, m, p, n, Ut, Vt, Wt):
        F = Ut.shape[1]
        U = np.asarray(Ut).T.reshape(F, m, p).transpose(0, 2, 1)
        V = np.asarray(Vt).T.reshape(F, p, n).transpose(0, 2, 1)
        W = np.asarray(Wt).T.reshape(F, n, m).transpose(0, 2, 1)
        return cls(m, p, n, U, V, W)

    def reconstruct(self):
        s = self.stacked()
        return np.einsum("ir,jr,kr->ijk", s.Ut, s.Vt, s.Wt)

    def permuted(self, order):
        order = np.asarray(order, dtype=int)
        return Decomposition(self.m, self.p, self.n, self.U[order], self.V[order], self.W[order])

    def max_abs(self):
        return float(max(np.abs(self.U).max(), np.abs(self.V).max(), np.abs(self.W).max()))

    def max_deviation(self, other):
        if self.dims != other.dims or self.F != other.F:
            raise InvalidArgumentError("decompositions have different shapes")
        return float(
            max(
                np.abs(self.U - other.U).max(),
                np.abs(self.V - other.V).max(),
                np.abs(self.W - other.W).max(),
            )
        )

    def balanced(self):
        """Rescale every term so its three factors have equal Frobenius norm."""
        nu = np.linalg.norm(self.U.reshape(self.F, -1), axis=1)
        nv = np.linalg.norm(self.V.reshape(self.F, -1), axis=1)
        nw = np.linalg.norm(self.W.reshape(self.F, -1), axis=1)
        g = np.cbrt(nu * nv * nw)
        with np.errstate(divide="ignore", invalid="ignore"):
            su = np.where(nu > 0, g / nu, 1.0)
            sv = np.where(nv > 0, g / nv, 1.0)
            sw = np.where(nw > 0, g / nw, 1.0)
        return Decomposition(
            self.m, self.p, self.n,
            self.U * su[:, None, None],
            self.V * sv[:, None, None],
            self.W * sw[:, None, None],
        )


@dataclass(frozen=True)
class VerificationReport:
    max_residual: float
    frobenius_residual: float
    tol: float

    @property
    def passed(self):
        return self.max_residual < self.tol


def verify_decomposition(dec, tol=DEFAULT_TOL):
    """Entrywise comparison of the reconstructed tensor with the exact one."""
    if not isinstance(dec, Decomposition):
        raise InvalidArgumentError("expected a Decomposition")
    diff = dec.reconstruct() - build_tensor(*dec.dims).entries
    return VerificationReport(
        max_residual=float(np.abs(diff).max()),
        frobenius_residual=float(np.linalg.norm(diff)),
        tol=tol,
    )


def cyclic_rotate(dec, shift):
    """Rotate the factor modes.

    ``shift=1`` gives ``(W, U, V)``, a decomposition of the ``(n, m, p)``
    tensor; ``shift=2`` gives ``(V, W, U)`` for ``(p, n, m)``.
    """
    if shift not in (0, 1, 2):
        raise InvalidArgumentError(f"shift must be 0, 1 or 2, got {shift!r}")
    m, p, n = dec.dims
    if shift == 0:
        return dec
    if shift == 1:
        return Decomposition(n, m, p, dec.W, dec.U, dec.V)
    return Decomposition(p, n, m, dec.V, dec.W, dec.U)


def factor_matrices(dec, mode):
    """The stacked factor matrix of a mode ("U", "V" or "W")."""
    s = dec.stacked()
    try:
        return {"U": s.Ut, "V": s.Vt, "W": s.Wt}[mode]
    except KeyError:
        raise InvalidArgumentError(f"unknown mode {mode!r}") from None


@dataclass(frozen=True)
class SpanReport:
    spans: bool
    rank: int
    target: int
    smallest_singular_value: float

    def __bool__(self):
        return self.spans


def factor_span_check(dec, mode, index_set, rank_tol=1e-8):
    """Check that the factors ``{X_r : r in index_set}`` span their matrix space.

    A decomposition guarantees this whenever ``|I| + k >= F + 1``, where
    ``k`` is ``n``, ``m`` or ``p`` for the U, V and W modes respectively.
    Returns a truthy :class:`SpanReport`.
    """
    m, p, n = dec.dims
    bound = {"U": n, "V": m, "W": p}
    if mode not in bound:
        raise InvalidArgumentError(f"unknown mode {mode!r}")
    idx = sorted(set(int(i) for i in index_set))
    if any(i < 0 or i >= dec.F for i in idx):
        raise InvalidArgumentError("index out of range")
    if len(idx) + bound[mode] < dec.F + 1:
        raise InvalidArgumentError(
            f"|I| + {bound[mode]} must be at least F + 1 = {dec.F + 1}, got |I| = {len(idx)}"
        )
    X = factor_matrices(dec, mode)[:, idx]
    target = X.shape[0]
    s = np.linalg.svd(X, compute_uv=False)
    full = np.zeros(target)
    full[: len(s)] = s
    rank = int(np.sum(full > rank_tol * max(full[0], 1e-300)))
    return SpanReport(rank == target, rank, target, float(full[-1]))


# --------------------------------------------------------------------------
# fixtures
# --------------------------------------------------------------------------

_TERM = re.compile(r"([+-]?)\s*([abc])(\d)(\d)")


def _coeffs(expr, letter, rows, cols):
    out = np.zeros((rows, cols), dtype=int)
    for sign, lt, i, j in _TERM.findall(expr.replace(" ", "")):
        if lt != letter:
            raise InvalidArgumentError(f"unexpected symbol {lt} in {expr!r}")
        out[int(i) - 1, int(j) - 1] += -1 if sign == "-" else 1
    return out


def _from_products(m, p, n, products, outputs):
    """Build a decomposition from product definitions and output sums.

    ``products`` lists ``(A-combination, B-combination)`` strings,
    ``outputs`` maps ``"cij"`` to the signed product indices summed into it.
    """
    F = len(products)
    U = np.zeros((F, p, m), dtype=int)
    V = np.zeros((F, n, p), dtype=int)
    W = np.zeros((F, m, n), dtype=int)
    for r, (a, b) in enumerate(products):
        U[r] = _coeffs(a, "a", m, p).T
        V[r] = _coeffs(b, "b", p, n).T
    for c, terms in outputs.items():
        i, j = int(c[1]) - 1, int(c[2]) - 1
        for t in terms:
            W[abs(t) - 1, i, j] += 1 if t > 0 else -1
    return Decomposition(m, p, n, U, V, W)


_STRASSEN = (
    [
        ("a11+a22", "b11+b22"),
        ("a21+a22", "b11"),
        ("a11", "b12-b22"),
        ("a22", "b21-b11"),
        ("a11+a12", "b22"),
        ("a21-a11", "b11+b12"),
        ("a12-a22", "b21+b22"),
    ],
    {
        "c11": [1, 4, -5, 7],
        "c12": [3, 5],
        "c21": [2, 4],
        "c22": [1, -2, 3, 6],
    },
)

_LADERMAN = (
    [
        ("a11+a12+a13-a21-a22-a32-a33", "b22"),
        ("a11-a21", "-b12+b22"),
        ("a22", "-b11+b12+b21-b22-b23-b31+b33"),
        ("-a11+a21+a22", "b11-b12+b22"),
        ("a21+a22", "-b11+b12"),
        ("a11", "b11"),
        ("-a11+a31+a32", "b11-b13+b23"),
        ("-a11+a31", "b13-b23"),
        ("a31+a32", "-b11+b13"),
        ("a11+a12+a13-a22-a23-a31-a32", "b23"),
        ("a32", "-b11+b13+b21-b22-b23-b31+b32"),
        ("-a13+a32+a33", "b22+b31-b32"),
        ("a13-a33", "b22-b32"),
        ("a13", "b31"),
        ("a32+a33", "-b31+b32"),
        ("-a13+a22+a23", "b23+b31-b33"),
        ("a13-a23", "b23-b33"),
        ("a22+a23", "-b31+b33"),
        ("a12", "b21"),
        ("a23", "b32"),
        ("a21", "b13"),
        ("a31", "b12"),
        ("a33", "b33"),
    ],
    {
        "c11": [6, 14, 19],
        "c12": [1, 4, 5, 6, 12, 14, 15],
        "c13": [6, 7, 9, 10, 14, 16, 18],
        "c21": [2, 3, 4, 6, 14, 16, 17],
        "c22": [2, 4, 5, 6, 20],
        "c23": [14, 16, 17, 18, 21],
        "c31": [6, 7, 8, 11, 12, 13, 14],
        "c32": [12, 13, 14, 15, 22],
        "c33": [6, 7, 8, 9, 23],
    },
)


def naive(m, p, n):
    """The ``mpn``-term decomposition with one term per scalar product."""
    m, p, n = _check_dim("m", m), _check_dim("p", p), _check_dim("n", n)
    U, V, W = [], [], []
    for d in range(m):
        for a in range(p):
            for e in range(n):
                Ur = np.zeros((p, m)); Ur[a, d] = 1
                Vr = np.zeros((n, p)); Vr[e, a] = 1
                Wr = np.zeros((m, n)); Wr[d, e] = 1
                U.append(Ur); V.append(Vr); W.append(Wr)
    return Decomposition(m, p, n, np.array(U), np.array(V), np.array(W))


def fixture(name, *dims):
    """Named reference decompositions.

    ``"strassen"``, ``"laderman"``, ``"dotprod121"`` or ``"naive"`` (which
    takes ``m, p, n``; ``"naive(2,3,2)"`` is also accepted).
    """
    key = name.strip().lower()
    match = re.fullmatch(r"naive\((\d+),(\d+),(\d+)\)", key.replace(" ", ""))
    if match:
        return naive(*(int(g) for g in match.groups()))
    if key == "naive":
        if len(dims) != 3:
            raise InvalidArgumentError("naive fixture needs dimensions m, p, n")
        return naive(*dims)
    if dims:
        raise InvalidArgumentError(f"fixture {name!r} takes no dimensions")
    if key == "strassen":
        return _from_products(2, 2, 2, *_STRASSEN)
    if key == "laderman":
        return _from_products(3, 3, 3, *_LADERMAN)
    if key == "dotprod121":
        U = np.array([[[1.0], [0.0]], [[0.0], [1.0]]])
        V = np.array([[[1.0, 0.0]], [[0.0, 1.0]]])
        W = np.ones((2, 1, 1))
        return Decomposition(1, 2, 1, U, V, W)
    raise InvalidArgumentError(f"unknown fixture {name!r}")


FIXTURE_NAMES = ("strassen", "laderman", "dotprod121", "naive")
