"""Shared builders for tests."""

import numpy as np

from mmequiv import core
from mmequiv.core import Decomposition
from mmequiv.cpd import SolveConfig, sample_population

EXAMPLE_A = np.array([
    [1, 0, 0, 1, 0, 1],
    [0, 1, 0, 1, 0, 2],
    [0, 0, 1, 0, 1, 0],
], dtype=float)


def dotprod_family(rng):
    """2-term decomposition of the (1,2,1) tensor from a random invertible stacked U."""
    while True:
        Ut = rng.standard_normal((2, 2))
        if np.linalg.cond(Ut) < 1e3:
            break
    Vt = np.linalg.inv(Ut).T
    Wt = np.ones((1, 2))
    return Decomposition.from_stacked(1, 2, 1, Ut, Vt, Wt)


def well_conditioned(rng, rows, cols, cap=100.0):
    while True:
        X = rng.standard_normal((rows, cols))
        if np.linalg.cond(X) <= cap:
            return X


def clustered_matrix(rng, m_max=9, n_max=23, deficient=True, zeros=True):
    """Random matrix with planted subspace clusters, optional rank loss and zero columns."""
    m = int(rng.integers(1, m_max + 1))
    r = int(rng.integers(1, m + 1)) if deficient else m
    k = int(rng.integers(1, r + 1))
    cuts = np.sort(rng.choice(np.arange(1, r), size=k - 1, replace=False)) if k > 1 else []
    dims = np.diff(np.concatenate([[0], cuts, [r]])).astype(int)
    cols = []
    start = 0
    for d in dims:
        basis = np.zeros((r, d))
        basis[start:start + d] = well_conditioned(rng, d, d)
        start += d
        count = int(rng.integers(d, d + 3))
        cols.append(basis @ well_conditioned(rng, d, count))
    A = np.hstack(cols)
    Z = 0
    if zeros and rng.random() < 0.5:
        Z = int(rng.integers(1, 3))
        A = np.hstack([A, np.zeros((r, Z))])
    A = A[:, : n_max]
    A = well_conditioned(rng, m, r) @ A
    return A[:, rng.permutation(A.shape[1])]


def reduced_for_graph(A, tol=1e-8):
    """Drop zero columns and project onto the column space.

    Returns the reduced full row-rank matrix and the number of missing rank
    directions; each of those adds one to the clustering number.
    """
    norms = np.linalg.norm(A, axis=0)
    A = A[:, norms > tol * max(norms.max(), 1e-300)]
    u, s, _ = np.linalg.svd(A, full_matrices=False)
    r = int(np.sum(s > tol * s[0]))
    return u[:, :r].T @ A, A.shape[0] - r


def graph_oracle(A):
    from mmequiv.clustering import clustering_graph
    R, missing = reduced_for_graph(A)
    return clustering_graph(R).value + missing


def population(dims, F, count=20, seed=1):
    pop = sample_population(core.build_tensor(*dims), F, count, SolveConfig(seed=seed))
    assert not pop.exhausted
    return pop.decompositions


def assert_sound(cert, dec1, dec2, tol=1e-8):
    """Every equivalent verdict must carry a transform that reproduces dec2."""
    from mmequiv.transforms import apply
    if cert.verdict == "equivalent":
        assert cert.transform is not None
        dev = dec2.max_deviation(apply(cert.transform, dec1, floor=0.0))
        assert dev < tol * max(1.0, dec2.max_abs()), dev
