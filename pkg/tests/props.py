"""Seeded property suites. Each function runs its cases and returns a list of failure messages."""

import itertools

import numpy as np

from helpers import (
    assert_sound,
    clustered_matrix,
    dotprod_family,
    graph_oracle,
    well_conditioned,
)
from mmequiv import core, equivalence as eq, transforms as tf
from mmequiv.clustering import (
    clustering_general,
    clustering_graph,
    clustering_vector,
    numerical_rank,
    zero_column_mask,
)
from mmequiv.discretize import char_poly, nd_score

CASES = 100
SMALL_FIXTURES = ("strassen", "dotprod121", "naive(2,3,2)", "naive(2,2,2)")


def _fixture_cycle(names, k):
    return core.fixture(names[k % len(names)])


# transforms ---------------------------------------------------------------

def transform_apply_verifies():
    bad = []
    names = SMALL_FIXTURES + ("laderman",)
    for k in range(CASES):
        dec = _fixture_cycle(names, k)
        t = tf.random_transform(dec.dims, dec.F, np.random.default_rng(k))
        rep = core.verify_decomposition(tf.apply(t, dec), 1e-8)
        if not rep.passed:
            bad.append(f"case {k}: residual {rep.max_residual:.2e}")
    return bad


def transform_triple_products_conjugate():
    bad = []
    for k in range(CASES):
        dec = _fixture_cycle(SMALL_FIXTURES + ("laderman",), k)
        t = tf.random_transform(dec.dims, dec.F, np.random.default_rng(1000 + k))
        M = tf.triple_products(dec)
        M2 = tf.triple_products(tf.apply(t, dec))
        expect = np.linalg.inv(t.P) @ M[t.sigma] @ t.P
        err = np.abs(M2 - expect).max()
        if err > 1e-8 * max(1.0, np.abs(expect).max()):
            bad.append(f"case {k}: {err:.2e}")
    return bad


def _term_key(U, V, W):
    return tuple(np.round(np.concatenate([U.ravel(), V.ravel(), W.ravel()]), 12))


def transform_permutation_keeps_multiset():
    bad = []
    for k in range(CASES):
        dec = _fixture_cycle(SMALL_FIXTURES + ("laderman",), k)
        sigma = np.random.default_rng(k).permutation(dec.F)
        out = tf.apply(tf.permutation(sigma, dec.dims), dec)
        before = sorted(_term_key(*x) for x in zip(dec.U, dec.V, dec.W))
        after = sorted(_term_key(*x) for x in zip(out.U, out.V, out.W))
        if before != after:
            bad.append(f"case {k}")
    return bad


# clustering ---------------------------------------------------------------

def _graph_ready(rng):
    while True:
        A = clustered_matrix(rng, deficient=False, zeros=False)
        if numerical_rank(A) == A.shape[0] and not zero_column_mask(A).any():
            return A


def clustering_agreement(cases=200):
    bad = []
    rng = np.random.default_rng(7)
    for k in range(cases):
        A = _graph_ready(rng)
        g, c = clustering_graph(A).value, clustering_general(A).value
        if g != c:
            bad.append(f"case {k}: graph {g} vs nullspace {c}")
    return bad


def clustering_dimension_formula(cases=200):
    """Nullspace count against the graph method on a reduced matrix, any input."""
    bad = []
    rng = np.random.default_rng(11)
    for k in range(cases):
        A = clustered_matrix(rng)
        c, g = clustering_general(A).value, graph_oracle(A)
        if c != g:
            bad.append(f"case {k}: shape {A.shape}: nullspace {c} vs graph {g}")
    return bad


def clustering_basis_independence():
    bad = []
    rng = np.random.default_rng(13)
    for k in range(CASES):
        A = _graph_ready(rng)
        m = A.shape[0]
        values = set()
        tries = 0
        while len(values) < 10 and tries < 200:
            tries += 1
            basis = sorted(rng.choice(A.shape[1], size=m, replace=False))
            if numerical_rank(A[:, basis]) == m:
                values.add((tuple(basis), clustering_graph(A, basis=basis).value))
        if len({v for _, v in values}) > 1:
            bad.append(f"case {k}: values {sorted(values)}")
    return bad


def clustering_left_invariance():
    bad = []
    rng = np.random.default_rng(17)
    for k in range(CASES):
        A = clustered_matrix(rng)
        X = well_conditioned(rng, A.shape[0], A.shape[0])
        if clustering_general(X @ A).value != clustering_general(A).value:
            bad.append(f"case {k}")
    return bad


def clustering_lower_bound():
    bad = []
    rng = np.random.default_rng(19)
    for k in range(CASES):
        A = clustered_matrix(rng, zeros=False)
        m, r = A.shape[0], numerical_rank(A)
        if clustering_general(A).value < m + 1 - r:
            bad.append(f"case {k}")
    return bad


def clustering_zero_column_shift():
    bad = []
    rng = np.random.default_rng(23)
    for k in range(CASES):
        A = clustered_matrix(rng)
        a = clustering_general(A)
        b = clustering_general(np.hstack([A, np.zeros((A.shape[0], 1))]))
        if a.value != b.value or b.nullspace_dim != a.nullspace_dim + 1:
            bad.append(f"case {k}")
    return bad


def clustering_vector_invariance():
    bad = []
    for k in range(CASES):
        dec = _fixture_cycle(SMALL_FIXTURES + ("laderman",), k)
        t = tf.random_transform(dec.dims, dec.F, np.random.default_rng(2000 + k))
        if clustering_vector(dec) != clustering_vector(tf.apply(t, dec)):
            bad.append(f"case {k}")
    return bad


# equivalence --------------------------------------------------------------

def _round_trip_source(k):
    kind = k % 3
    if kind == 0:
        return dotprod_family(np.random.default_rng(k))
    if kind == 1:
        return core.fixture("strassen")
    return core.fixture("naive(2,3,2)")


def equivalence_round_trip():
    bad = []
    for k in range(CASES):
        dec = _round_trip_source(k)
        t = tf.random_transform(dec.dims, dec.F, np.random.default_rng(3000 + k))
        dec2 = tf.apply(t, dec)
        cert = eq.check_equivalence(dec, dec2, rng=k)
        try:
            assert_sound(cert, dec, dec2)
        except AssertionError as exc:
            bad.append(f"case {k}: unsound {exc}")
        if cert.verdict != "equivalent":
            bad.append(f"case {k}: {cert.verdict}")
    return bad


def oracle_pairs(pop222, pop212, pop121, count=CASES):
    """Mixed corpus of pairs with F <= 7, equivalent and not."""
    pairs = []
    p222 = list(itertools.combinations(range(len(pop222)), 2))
    p212 = list(itertools.combinations(range(len(pop212)), 2))
    p121 = list(itertools.combinations(range(len(pop121)), 2))
    rng = np.random.default_rng(29)
    strassen = core.fixture("strassen")
    for k in range(count):
        kind = k % 4
        if kind == 0:
            i, j = p222[rng.integers(len(p222))]
            pairs.append((pop222[i], pop222[j]))
        elif kind == 1:
            i, j = p212[rng.integers(len(p212))]
            pairs.append((pop212[i], pop212[j]))
        elif kind == 2:
            i, j = p121[rng.integers(len(p121))]
            pairs.append((pop121[i], pop121[j]))
        else:
            t = tf.random_transform((2, 2, 2), 7, rng)
            pairs.append((strassen, tf.apply(t, strassen)))
    return pairs


def equivalence_oracle_agreement(pairs):
    bad = []
    for k, (a, b) in enumerate(pairs):
        fast = eq.check_equivalence(a, b, rng=k)
        slow = eq.check_equivalence_bruteforce(a, b, rng=k)
        assert_sound(fast, a, b)
        assert_sound(slow, a, b)
        if fast.verdict != slow.verdict:
            bad.append(f"case {k}: {fast.verdict} vs {slow.verdict}")
    return bad


def equivalence_symmetry(pairs):
    bad = []
    for k, (a, b) in enumerate(pairs):
        ab = eq.check_equivalence(a, b, rng=k)
        ba = eq.check_equivalence(b, a, rng=k)
        assert_sound(ab, a, b)
        assert_sound(ba, b, a)
        if ab.verdict != ba.verdict:
            bad.append(f"case {k}: {ab.verdict} vs {ba.verdict}")
    return bad


def probe_monotonicity(pairs, per_prefix=3):
    """Every rejected prefix stays rejected when extended to longer prefixes."""
    bad = []
    checked = 0
    rng = np.random.default_rng(31)
    for k, (a, b) in enumerate(pairs):
        s = eq._Search(a, b, eq.Tolerances(), 3, np.random.default_rng(k), "full",
                       True, True, False, None, True)
        s.run([], np.zeros((3, a.m, a.m)))
        for prefix in s.stats.rejected:
            if len(prefix) >= a.F:
                continue
            for _ in range(per_prefix):
                rest = [x for x in rng.permutation(a.F) if x not in prefix]
                ext = list(prefix) + rest[: int(rng.integers(1, len(rest) + 1))]
                ok = True
                S1 = np.zeros((3, a.m, a.m))
                for pos, ell in enumerate(ext):
                    S1 = S1 + s.alpha[:, pos, None, None] * s.M1[ell]
                    ok = s.prefix_ok(ext[:pos], ell, S1)
                    if not ok:
                        break
                checked += 1
                if ok:
                    bad.append(f"pair {k}: prefix {prefix} accepted as {tuple(ext)}")
            if checked >= CASES * per_prefix:
                return bad
    if checked < CASES:
        bad.append(f"only {checked} extensions checked")
    return bad


def triple_product_conjugacy(pairs):
    bad = []
    count = 0
    for k, (a, b) in enumerate(pairs):
        cert = eq.check_equivalence(a, b, rng=k)
        if cert.verdict != "equivalent":
            continue
        count += 1
        t = cert.transform
        M, M2 = tf.triple_products(a), tf.triple_products(b)
        err = np.abs(M2 - np.linalg.inv(t.P) @ M[t.sigma] @ t.P).max()
        if err >= 1e-7:
            bad.append(f"case {k}: {err:.2e}")
    return bad, count


# discretize ---------------------------------------------------------------

def charpoly_transform_invariance(q=1.0):
    bad = []
    names = ("strassen", "laderman", "naive(2,3,2)", "naive(2,2,2)")
    for k in range(CASES):
        dec = _fixture_cycle(names, k)
        rng = np.random.default_rng(4000 + k)
        t = tf.random_transform(dec.dims, dec.F, rng)
        beta = rng.integers(-5, 6, dec.F)
        M = tf.triple_products(dec) / q**3
        M2 = tf.triple_products(tf.apply(t, dec)) / q**3
        c1 = char_poly(np.tensordot(beta, M2, 1))
        c0 = char_poly(np.tensordot(beta, M[t.sigma], 1))
        err = np.abs(c1 - c0).max()
        if err >= 1e-7:
            bad.append(f"case {k}: {err:.2e}")
    return bad


def _unimodular(rng, size):
    X = np.eye(size, dtype=int)
    for _ in range(3):
        i, j = rng.choice(size, 2, replace=False) if size > 1 else (0, 0)
        if i != j:
            E = np.eye(size, dtype=int)
            E[i, j] = rng.integers(-1, 2)
            X = X @ E
    return X.astype(float)


def nd_zero_on_discrete():
    """Integer decompositions under integer scalings and unimodular conjugation."""
    bad = []
    names = ("strassen", "laderman", "naive(2,3,2)")
    for k in range(CASES):
        dec = _fixture_cycle(names, k)
        rng = np.random.default_rng(5000 + k)
        m, p, n = dec.dims
        c = int(rng.integers(1, 3))
        lam = np.full(dec.F, float(c))
        t = tf.InvarianceTransform(rng.permutation(dec.F), lam, lam, 1 / lam**2,
                                   _unimodular(rng, m), _unimodular(rng, p), _unimodular(rng, n))
        out = tf.apply(t, dec)
        q = 1.0 / c**2
        if np.abs(out.stacked().Wt / q - np.round(out.stacked().Wt / q)).max() > 1e-9:
            bad.append(f"case {k}: construction not in qZ")
            continue
        score = nd_score(out, q, rng=k).nd_score
        if score >= 1e-9:
            bad.append(f"case {k}: nd {score:.2e}")
    return bad


def nd_monotone_in_draws():
    bad = []
    names = ("strassen", "laderman")
    for k in range(CASES):
        dec = _fixture_cycle(names, k)
        dec = tf.apply(tf.random_transform(dec.dims, dec.F, np.random.default_rng(k)), dec)
        a = nd_score(dec, 0.7, draws=4, rng=k).nd_score
        b = nd_score(dec, 0.7, draws=9, rng=k).nd_score
        if b < a:
            bad.append(f"case {k}: {a} > {b}")
    return bad


def charpoly_integer_exact():
    bad = []
    rng = np.random.default_rng(37)
    for k in range(CASES):
        size = int(rng.integers(1, 6))
        A = rng.integers(-6, 7, (size, size))
        coeffs = char_poly(A)
        if any(c.denominator != 1 for c in coeffs):
            bad.append(f"case {k}: non-integer {coeffs}")
        ref = np.poly(A.astype(float))[1:]
        if np.abs(np.array([float(c) for c in coeffs]) - ref).max() > 1e-6 * max(1, np.abs(ref).max()):
            bad.append(f"case {k}: differs from eigenvalue oracle")
    return bad
