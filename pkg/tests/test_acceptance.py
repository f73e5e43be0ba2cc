"""Acceptance criteria, one test per criterion.

Each test prints a single ``CRITERION n: PASS|FAIL ...`` line; the lines are
also collected into a section of the pytest terminal summary.
"""

import itertools
import time

import numpy as np

import props
from conftest import ACCEPTANCE_LINES
from helpers import EXAMPLE_A, assert_sound, dotprod_family
from mmequiv import core, equivalence as eq
from mmequiv import transforms as tf
from mmequiv.batch import sample_pairs
from mmequiv.clustering import clustering_general, clustering_graph, clustering_vector
from mmequiv.discretize import criterion, nd_score


def record(n, ok, detail):
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def test_criterion_01_fixture_verification():
    start = time.perf_counter()
    worst = 0.0
    for name in ("strassen", "laderman", "naive(2,2,2)", "dotprod121"):
        worst = max(worst, core.verify_decomposition(core.fixture(name), 1e-12).max_residual)
    elapsed = time.perf_counter() - start
    record(1, worst < 1e-12 and elapsed < 1.0,
           f"max residual {worst:.1e} (< 1e-12), runtime {elapsed:.3f}s (< 1s)")


def test_criterion_02_example_matrix_clustering():
    g = clustering_graph(EXAMPLE_A, basis=[0, 1, 2])
    n = clustering_general(EXAMPLE_A)
    # components reported 0-based; {1,2},{3} in 1-based labels
    comps = {frozenset(i + 1 for i in c) for c in g.components}
    ok = g.value == 2 and n.value == 2 and comps == {frozenset({1, 2}), frozenset({3})}
    record(2, ok, f"graph {g.value}, nullspace {n.value}, components {sorted(map(sorted, comps))}")


def test_criterion_03_dimension_formula():
    bad = props.clustering_dimension_formula(cases=200)
    record(3, not bad, f"{200 - len(bad)}/200 random matrices agree")


def test_criterion_04_round_trip():
    names = ("strassen", "laderman", "dotprod121", "naive(2,3,2)")
    passed, slow = 0, []
    worst_res = 0.0
    for k in range(100):
        dec = core.fixture(names[k % 4])
        t = tf.random_transform(dec.dims, dec.F, np.random.default_rng(10_000 + k))
        dec2 = tf.apply(t, dec)
        start = time.perf_counter()
        cert = eq.check_equivalence(dec, dec2, rng=k)
        elapsed = time.perf_counter() - start
        assert_sound(cert, dec, dec2)
        if cert.verdict == "equivalent" and cert.residual < 1e-8:
            passed += 1
            worst_res = max(worst_res, cert.residual)
        limit = {(2, 2, 2): 0.1, (3, 3, 3): 2.0}.get(dec.dims)
        if limit is not None and elapsed >= limit:
            slow.append((names[k % 4], round(elapsed, 3)))
    record(4, passed == 100 and not slow,
           f"{passed}/100 equivalent, worst residual {worst_res:.1e}, over time limit: {slow or 'none'}")


def test_criterion_05_222_uniqueness(pop222):
    verdicts = [eq.check_equivalence(a, b, rng=k).verdict
                for k, (a, b) in enumerate(itertools.combinations(pop222, 2))]
    hits = verdicts.count("equivalent")
    record(5, hits == 190, f"{hits}/190 pairs of (2,2,2) 7-term samples equivalent")


def test_criterion_06_generic_inequivalence(pop212):
    pairs = sample_pairs(len(pop212), 20, seed=6)
    verdicts = [eq.check_equivalence(pop212[i], pop212[j], rng=k).verdict
                for k, (i, j) in enumerate(pairs)]
    hits = verdicts.count("inequivalent")
    record(6, hits >= 18, f"{hits}/20 sampled (2,1,2) pairs inequivalent (need >= 18)")


def test_criterion_07_oracle_agreement(pop222):
    pairs = [(pop222[i], pop222[j]) for i, j in sample_pairs(len(pop222), 50, seed=7)]
    rng = np.random.default_rng(77)
    pairs += [(dotprod_family(rng), dotprod_family(rng)) for _ in range(20)]
    agree = 0
    for k, (a, b) in enumerate(pairs):
        fast = eq.check_equivalence(a, b, rng=k)
        slow = eq.check_equivalence_bruteforce(a, b, rng=k)
        assert_sound(fast, a, b)
        assert_sound(slow, a, b)
        agree += fast.verdict == slow.verdict
    record(7, agree == 70, f"{agree}/70 pairs agree with brute force")


def test_criterion_08_dotprod_universal():
    rng = np.random.default_rng(8)
    decs = [dotprod_family(rng) for _ in range(20)]
    verdicts = []
    for k, (a, b) in enumerate(itertools.combinations(decs, 2)):
        cert = eq.check_equivalence(a, b, rng=k)
        assert_sound(cert, a, b)
        verdicts.append(cert.verdict)
    hits = verdicts.count("equivalent")
    record(8, hits == 190, f"{hits}/190 pairs of (1,2,1) 2-term decompositions equivalent")


def test_criterion_09_discretizability(pop212):
    s = nd_score(core.fixture("strassen"), 1.0, 16, 5, rng=9).nd_score
    lad = nd_score(core.fixture("laderman"), 1.0, 16, 5, rng=9).nd_score
    fails = 0
    for k, dec in enumerate(pop212):
        rep = nd_score(dec, 0.5, 16, 5, rng=k)
        verdict = criterion(dec, 0.5, 16, 5, rng=k)
        fails += verdict == "fails" and rep.nd_score >= 0.1
    ok = s < 1e-9 and lad < 1e-9 and fails >= 15
    record(9, ok, f"Strassen ND {s:.1e}, Laderman ND {lad:.1e}, "
                  f"{fails}/20 (2,1,2) samples fail at q=1/2 (need >= 15)")


def test_criterion_10_assumption_prevalence(pop222, pop212):
    rates = {}
    for label, pop in (("(2,2,2)", pop222), ("(2,1,2)", pop212)):
        rates[label] = sum(1 in clustering_vector(d) for d in pop) / len(pop)
    ok = all(r >= 0.95 for r in rates.values())
    record(10, ok, ", ".join(f"{k}: {100 * v:.0f}%" for k, v in rates.items()) + " (need >= 95%)")


SUITES = [
    "transform_apply_verifies",
    "transform_triple_products_conjugate",
    "transform_permutation_keeps_multiset",
    "clustering_agreement",
    "clustering_basis_independence",
    "clustering_left_invariance",
    "clustering_lower_bound",
    "clustering_zero_column_shift",
    "clustering_vector_invariance",
    "equivalence_round_trip",
    "equivalence_oracle_agreement",
    "equivalence_symmetry",
    "probe_monotonicity",
    "triple_product_conjugacy",
    "charpoly_transform_invariance",
    "nd_zero_on_discrete",
    "nd_monotone_in_draws",
    "charpoly_integer_exact",
]


def test_criterion_11_property_suites(suite):
    failing = []
    for name in SUITES:
        result = suite(name)
        bad = result[0] if isinstance(result, tuple) else result
        if bad:
            failing.append(f"{name} ({len(bad)})")
    record(11, not failing, f"{len(SUITES) - len(failing)}/{len(SUITES)} property suites clean"
                            + (f"; failing: {', '.join(failing)}" if failing else ""))
