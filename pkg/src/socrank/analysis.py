"""Measurement pipeline: URL cohorts, affected sets, distances, consistency.

Everything here is a pure function of immutable snapshots, so per-URL work
can fan out to threads. Randomized selections are reproducible from integer
seeds (per-URL sub-seeds are derived arithmetically, never from string
hashes).
"""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .ranking import RankedList

DISTANCE_DIRECTIONS = ("undirected", "follow", "reverse")

SEED_STRIDE = 1_000_003


@dataclass
class UrlSetSelection:
    """The two evaluation cohorts: most-shared URLs and a seeded uniform sample."""

    popular: list[int]
    random: list[int]
    seed: int
    sizes: tuple[int, int]
    overlap: tuple[int, ...]


def select_url_sets(index, n_popular, n_random, seed):
    """Top-N URLs by spreader count (ties by ascending id) plus a seeded sample.

    The random cohort is drawn uniformly without replacement; its order is
    part of the selection (downstream "first k" sub-sampling relies on it).
    The two cohorts may overlap on small corpora; the overlap is recorded.
    """
    if n_popular > index.n_urls or n_random > index.n_urls:
        raise ValueError(
            f"requested {n_popular} popular / {n_random} random URLs "
            f"but only {index.n_urls} exist")
    by_popularity = sorted(range(index.n_urls),
                           key=lambda u: (-index.spreader_count(u), u))
    popular = by_popularity[:n_popular]
    rng = random.Random(seed)
    randoms = rng.sample(range(index.n_urls), n_random)
    overlap = tuple(sorted(set(popular) & set(randoms)))
    return UrlSetSelection(popular, randoms, seed, (n_popular, n_random), overlap)


# ---------------------------------------------------------------------------
# Affected sets
# ---------------------------------------------------------------------------

@dataclass
class AffectedSetStats:
    url: int
    affected_size: int
    spreader_count: int


def affected_nodes(graph, index, url):
    """Followers of the URL's spreaders who did not spread it themselves."""
    spreaders = index.spreaders[url]
    if len(spreaders) == 0:
        return np.zeros(0, dtype=np.int64)
    followers = np.concatenate([graph.in_neighbors(int(s)) for s in spreaders])
    return np.setdiff1d(followers.astype(np.int64), spreaders.astype(np.int64))


def affected_set(graph, index, url):
    """Size of the affected set (union of spreader followers minus spreaders)."""
    return AffectedSetStats(url=url,
                            affected_size=len(affected_nodes(graph, index, url)),
                            spreader_count=index.spreader_count(url))


# ---------------------------------------------------------------------------
# Distance sampling
# ---------------------------------------------------------------------------

@dataclass
class DistanceSample:
    """Average shortest-path length from sampled users to sampled spreaders.

    `avg_distance` is None when no (source, spreader) pair was reachable.
    """

    url: int
    avg_distance: float | None
    sampled_sources: int
    sampled_spreaders: int
    reachable_pairs: int
    unreachable_pairs: int


def sample_sources(graph, n_sources, seed):
    """The experiment's fixed source users: uniform without replacement."""
    rng = random.Random(seed)
    return rng.sample(range(graph.n), min(n_sources, graph.n))


def bfs_distances(graph, source, direction="undirected"):
    """Hop counts from one source to every node; -1 marks unreachable."""
    if direction not in DISTANCE_DIRECTIONS:
        raise ValueError(f"direction must be one of {DISTANCE_DIRECTIONS}")
    dist = np.full(graph.n, -1, dtype=np.int64)
    dist[source] = 0
    queue = deque([source])
    use_out = direction in ("undirected", "follow")
    use_in = direction in ("undirected", "reverse")
    while queue:
        v = queue.popleft()
        d = dist[v] + 1
        if use_out:
            for w in graph.out_neighbors(v):
                if dist[w] < 0:
                    dist[w] = d
                    queue.append(int(w))
        if use_in:
            for w in graph.in_neighbors(v):
                if dist[w] < 0:
                    dist[w] = d
                    queue.append(int(w))
    return dist


def avg_distance_to_spreaders(graph, index, url, n_sources=10,
                              n_spreader_sample=10, seed=0,
                              direction="undirected"):
    """Mean hops from sampled users to a sampled subset of the URL's spreaders.

    Sources are fixed by `seed` (shared across URLs of one experiment); the
    spreader subset uses a per-URL derived seed. Unreachable pairs are counted
    and excluded from the mean.
    """
    if n_sources < 1 or n_spreader_sample < 1:
        raise ValueError("sample sizes must be >= 1")
    sources = sample_sources(graph, n_sources, seed)
    source_dists = {s: bfs_distances(graph, s, direction) for s in sources}
    return _distance_from_tables(index, url, sources, source_dists,
                                 n_spreader_sample, seed)


def distance_samples_for_urls(graph, index, urls, n_sources=10,
                              n_spreader_sample=10, seed=0,
                              direction="undirected", threads=1):
    """Batch variant sharing one BFS per source across all URLs."""
    sources = sample_sources(graph, n_sources, seed)
    source_dists = {s: bfs_distances(graph, s, direction) for s in sources}
    return [_distance_from_tables(index, url, sources, source_dists,
                                  n_spreader_sample, seed)
            for url in urls]


def _distance_from_tables(index, url, sources, source_dists, n_spreader_sample, seed):
    spreaders = [int(v) for v in index.spreaders[url]]
    rng = random.Random(seed * SEED_STRIDE + url)
    chosen = (rng.sample(spreaders, n_spreader_sample)
              if len(spreaders) > n_spreader_sample else spreaders)
    total = 0
    reachable = 0
    unreachable = 0
    for s in sources:
        dist = source_dists[s]
        for v in chosen:
            d = int(dist[v])
            if d < 0:
                unreachable += 1
            else:
                total += d
                reachable += 1
    avg = total / reachable if reachable else None
    return DistanceSample(url=url, avg_distance=avg,
                          sampled_sources=len(sources),
                          sampled_spreaders=len(chosen),
                          reachable_pairs=reachable,
                          unreachable_pairs=unreachable)


# ---------------------------------------------------------------------------
# Ranking consistency
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConsistencyStats:
    """Sum and average of absolute rank-position differences over one URL set."""

    w: int
    sum_diff: int

    @property
    def avg_diff(self):
        return Fraction(self.sum_diff, self.w)

    @property
    def avg_display(self):
        return format_avg(self.sum_diff, self.w)


def format_avg(sum_diff, w):
    """Exact 1-decimal display (round half up on the rational, not the float)."""
    tenths = (sum_diff * 20 + w) // (2 * w)
    return f"{tenths // 10}.{tenths % 10}"


def consistency(a, b):
    """Position-difference statistics for two rankings of the same URL set."""
    if set(a.ids) != set(b.ids):
        raise ValueError("rankings cover different URL sets")
    sum_diff = sum(abs(a.position_of(u) - b.position_of(u)) for u in a.ids)
    return ConsistencyStats(w=len(a.ids), sum_diff=sum_diff)


def pairwise_consistency(rankings):
    """Symmetric matrix of average position differences for every pair.

    Accepts RankedLists or PersonalizedRankings; the diagonal is exact zero.
    """
    ranked = [r.ranking if hasattr(r, "ranking") else r for r in rankings]
    if len(ranked) < 2:
        raise ValueError("need at least two rankings")
    k = len(ranked)
    matrix = [[Fraction(0)] * k for _ in range(k)]
    for i in range(k):
        for j in range(i + 1, k):
            stats = consistency(ranked[i], ranked[j])
            matrix[i][j] = matrix[j][i] = stats.avg_diff
    return matrix


# ---------------------------------------------------------------------------
# Cohort separator (perceptron on log-size vs distance)
# ---------------------------------------------------------------------------

@dataclass
class SeparatorFit:
    """Linear boundary weights (w_logsize, w_distance, bias) + miss list."""

    weights: tuple[float, float, float]
    misclassified: tuple[int, ...]


def separator_features(x, y):
    """Feature map used by the separator: (log10 affected size, avg distance)."""
    if x <= 0:
        raise ValueError("affected-set size must be positive for the log scale")
    return (math.log10(x), float(y))


def classify(weights, x, y):
    """+1 for the popular side of the boundary, -1 otherwise (0 counts as -1)."""
    f1, f2 = separator_features(x, y)
    w1, w2, b = weights
    return 1 if w1 * f1 + w2 * f2 + b > 0 else -1


def fit_linear_separator(points, epochs=1000, seed=0):
    """Perceptron separating popular from random cohorts in (log size, distance).

    `points` are (affected_size, avg_distance, label) triples with label
    "popular" (+1) or "random" (-1); point ids are input indices. Training
    shuffles with a seeded RNG each epoch, learning rate 1. Deterministic.
    """
    labels = []
    feats = []
    for x, y, label in points:
        if label not in ("popular", "random"):
            raise ValueError(f"unknown label {label!r}")
        labels.append(1 if label == "popular" else -1)
        feats.append(separator_features(x, y))
    if len(set(labels)) < 2:
        raise ValueError("both cohorts must be present to fit a separator")
    rng = random.Random(seed)
    w1 = w2 = b = 0.0
    order = list(range(len(points)))
    for _ in range(epochs):
        rng.shuffle(order)
        mistakes = 0
        for i in order:
            f1, f2 = feats[i]
            if labels[i] * (w1 * f1 + w2 * f2 + b) <= 0:
                w1 += labels[i] * f1
                w2 += labels[i] * f2
                b += labels[i]
                mistakes += 1
        if mistakes == 0:
            break
    weights = (w1, w2, b)
    missed = tuple(i for i, (x, y, _) in enumerate(points)
                   if classify(weights, x, y) != labels[i])
    return SeparatorFit(weights=weights, misclassified=missed)
