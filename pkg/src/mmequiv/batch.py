"""Population-level experiments: pairwise equivalence rates and ND histograms."""

from __future__ import annotations

import csv
import itertools
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import io
from .clustering import clustering_vector
from .discretize import nd_score
from .equivalence import check_equivalence
from .errors import AssumptionViolationError, DegenerateDecompositionError, InvalidArgumentError

ND_EDGES = (0.0, 1e-9, 1e-6, 1e-3, 0.1, 0.2, 0.3, 0.4, 0.5)
CSV_COLUMNS = ("idx1", "idx2", "verdict", "millis", "depth")


@dataclass
class PairRow:
    idx1: int
    idx2: int
    verdict: str
    millis: float
    depth: int


@dataclass
class BatchReport:
    case: dict
    samples: int
    pair_count: int
    equivalent_pct: float
    verdicts: dict
    nd_histogram: dict
    nd_scores: list
    clustering_tally: dict
    mean_equiv_time: float
    max_depth: int
    mean_depth: float
    rows: list

    def to_dict(self):
        d = asdict(self)
        d.pop("rows")
        return d

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for r in self.rows:
                writer.writerow([r.idx1, r.idx2, r.verdict, f"{r.millis:.3f}", r.depth])


def load_population(directory):
    """Decompositions in ``directory`` (all ``*.json`` except a manifest), sorted by name."""
    directory = Path(directory)
    if not directory.is_dir():
        raise InvalidArgumentError(f"{directory} is not a directory")
    files = sorted(f for f in directory.glob("*.json") if f.name != "manifest.json")
    decs = [io.load_decomposition(f) for f in files]
    if not decs:
        raise InvalidArgumentError(f"no decomposition files in {directory}")
    cases = {(d.dims, d.F) for d in decs}
    if len(cases) > 1:
        raise InvalidArgumentError(f"mixed cases in {directory}: {sorted(cases)}")
    return decs


def sample_pairs(count, max_pairs=None, seed=0):
    """Index pairs without replacement, in a seeded shuffled order."""
    pairs = list(itertools.combinations(range(count), 2))
    order = np.random.default_rng(seed).permutation(len(pairs))
    pairs = [pairs[i] for i in order]
    return pairs if max_pairs is None else pairs[:max_pairs]


def _check_pair(args):
    dec1, dec2, i, j, seed = args
    start = time.perf_counter()
    try:
        cert = check_equivalence(dec1, dec2, rng=seed)
        verdict, depth = cert.verdict, cert.probe_stats.depth
    except AssumptionViolationError:
        verdict, depth = "assumption-violation", 0
    except DegenerateDecompositionError:
        verdict, depth = "degenerate", 0
    return PairRow(i, j, verdict, 1000 * (time.perf_counter() - start), depth)


def nd_histogram(scores, edges=ND_EDGES):
    counts, _ = np.histogram(np.clip(scores, edges[0], edges[-1]), bins=edges)
    return {"edges": list(edges), "counts": counts.tolist()}


def run_batch(decs, max_pairs=None, seed=0, jobs=1, q=0.5, draws=16, beta_bound=5):
    """Pairwise equivalence and ND statistics over one population."""
    if isinstance(decs, (str, Path)):
        decs = load_population(decs)
    m, p, n = decs[0].dims
    F = decs[0].F
    pairs = sample_pairs(len(decs), max_pairs, seed)
    tasks = [(decs[i], decs[j], i, j, seed + k) for k, (i, j) in enumerate(pairs)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_check_pair, tasks))
    else:
        rows = [_check_pair(t) for t in tasks]

    scores = [nd_score(d, q, draws, beta_bound, rng=seed + k).nd_score for k, d in enumerate(decs)]
    tally = Counter(",".join(map(str, clustering_vector(d))) for d in decs)
    verdicts = Counter(r.verdict for r in rows)
    depths = [r.depth for r in rows]
    return BatchReport(
        case={"m": m, "p": p, "n": n, "F": F, "q": q},
        samples=len(decs),
        pair_count=len(rows),
        equivalent_pct=100.0 * verdicts["equivalent"] / len(rows) if rows else 0.0,
        verdicts=dict(sorted(verdicts.items())),
        nd_histogram=nd_histogram(scores),
        nd_scores=scores,
        clustering_tally=dict(sorted(tally.items())),
        mean_equiv_time=float(np.mean([r.millis for r in rows]) / 1000) if rows else 0.0,
        max_depth=max(depths, default=0),
        mean_depth=float(np.mean(depths)) if depths else 0.0,
        rows=rows,
    )
