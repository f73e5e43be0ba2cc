"""Clustering number of a matrix.

The clustering number of ``A`` is the largest number of linearly independent
subspaces such that every column of ``A`` lies in one of them. Two ways of
computing it are provided: a graph on a column basis (full row-rank matrices
without zero columns) and the dimension of the solution space of
``M A = A diag(xi)``, which works for any matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .core import Decomposition
from .errors import NumericalRankError, PreconditionError

RANK_TOL = 1e-8
ENTRY_TOL = 1e-8


@dataclass(frozen=True)
class ClusteringReport:
    value: int
    method: str
    rank: int
    zero_columns: int
    components: tuple | None = None
    basis: tuple | None = None
    column_groups: tuple | None = None
    nullspace_dim: int | None = None
    spectrum: np.ndarray | None = None


def numerical_rank(A, rank_tol=RANK_TOL):
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > rank_tol * s[0]))


def zero_column_mask(A, rank_tol=RANK_TOL):
    norms = np.linalg.norm(A, axis=0)
    top = norms.max() if norms.size else 0.0
    if top == 0:
        return np.ones(A.shape[1], dtype=bool)
    return norms <= rank_tol * top


def _pivot_basis(A, m):
    _, _, piv = scipy.linalg.qr(A, mode="economic", pivoting=True)
    return sorted(int(i) for i in piv[:m])


def clustering_graph(A, rank_tol=RANK_TOL, entry_tol=ENTRY_TOL, basis=None):
    """Clustering number as the number of connected components of the basis graph.

    Nodes are ``m`` linearly independent columns of ``A`` (chosen by
    column-pivoted QR unless ``basis`` is given); every other column links all
    basis columns it has a nonzero coordinate on.

    ``components`` partitions the basis columns, ``column_groups`` extends
    that partition to all columns of ``A``. Indices are 0-based.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise PreconditionError("expected a matrix")
    m, ncols = A.shape
    rank = numerical_rank(A, rank_tol)
    if rank < m:
        raise PreconditionError(
            f"matrix has rank {rank} < {m} rows; use clustering_general"
        )
    zeros = zero_column_mask(A, rank_tol)
    if zeros.any():
        raise PreconditionError("matrix has zero columns; use clustering_general")

    if basis is None:
        basis = _pivot_basis(A, m)
    else:
        basis = [int(i) for i in basis]
        if len(set(basis)) != m or numerical_rank(A[:, basis], rank_tol) < m:
            raise PreconditionError("supplied basis columns are not linearly independent")
    others = [j for j in range(ncols) if j not in set(basis)]

    coords = np.linalg.solve(A[:, basis], A[:, others]) if others else np.zeros((m, 0))
    rows, cols = [], []
    owner = {}
    for c, j in enumerate(others):
        q = np.abs(coords[:, c])
        support = np.flatnonzero(q > entry_tol * q.max())
        owner[j] = int(support[0])
        rows.extend(support[:-1])
        cols.extend(support[1:])
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(m, m))
    count, labels = connected_components(graph, directed=False)

    comps = [[] for _ in range(count)]
    for node, lab in enumerate(labels):
        comps[lab].append(basis[node])
    groups = [list(c) for c in comps]
    for j, node in owner.items():
        groups[labels[node]].append(j)
    order = sorted(range(count), key=lambda k: min(groups[k]))
    return ClusteringReport(
        value=int(count),
        method="graph",
        rank=rank,
        zero_columns=0,
        components=tuple(tuple(sorted(comps[k])) for k in order),
        basis=tuple(basis),
        column_groups=tuple(tuple(sorted(groups[k])) for k in order),
    )


def eigen_system(A):
    """Matrix of the homogeneous system ``M A - A diag(xi) = 0``.

    Unknowns are ``vec(M)`` (column stacking) followed by ``xi``.
    """
    m, n = A.shape
    left = np.kron(A.T, np.eye(m))
    right = np.zeros((m * n, n))
    for j in range(n):
        right[j * m:(j + 1) * m, j] = A[:, j]
    return np.hstack([left, -right])


def nullspace_dimension(S, tol):
    """Count of (numerically) zero singular values of ``S``, plus missing ones."""
    s = np.linalg.svd(S, compute_uv=False)
    ncols = S.shape[1]
    top = s[0] if s.size else 0.0
    if top == 0:
        return ncols, s
    return ncols - int(np.sum(s > tol * top)), s


def clustering_general(A, rank_tol=RANK_TOL):
    """Clustering number from the dimension of the solution space of ``M A = A diag(xi)``.

    ``dim = value + (m - 1)(m - rank) + zero_columns``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m, n = A.shape
    dim, spectrum = nullspace_dimension(eigen_system(A), rank_tol)
    rank = numerical_rank(A, rank_tol)
    Z = int(zero_column_mask(A, rank_tol).sum())
    value = dim - (m - 1) * (m - rank) - Z
    if value < 1:
        raise NumericalRankError(
            f"inconsistent rank decisions: dim={dim}, rank={rank}, zero columns={Z}",
            spectrum,
        )
    return ClusteringReport(
        value=int(value),
        method="nullspace",
        rank=rank,
        zero_columns=Z,
        nullspace_dim=int(dim),
        spectrum=spectrum,
    )


def clustering_number(A, rank_tol=RANK_TOL):
    return clustering_general(A, rank_tol).value


def clustering_vector(dec: Decomposition, rank_tol=RANK_TOL):
    """Clustering numbers of the three stacked factor matrices."""
    s = dec.stacked()
    return tuple(clustering_general(X, rank_tol).value for X in (s.Ut, s.Vt, s.Wt))


def clustering_reports(dec: Decomposition, rank_tol=RANK_TOL):
    s = dec.stacked()
    return {name: clustering_general(X, rank_tol) for name, X in zip("UVW", (s.Ut, s.Vt, s.Wt))}
