"""Scaled PageRank over the follow graph and URL score aggregation (PRSN).

A node's rank flows out along its follow edges, each carrying 1/outdeg of the
score; every link is scaled by sigma and the withheld (1 - sigma) mass is
redistributed uniformly. The PRSN score of a URL is the normalized sum of its
spreaders' converged ranks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .ranking import RankedList, competition_rank


@dataclass(frozen=True)
class PageRankParams:
    """Iteration controls: sigma in (0,1), max iterations >= 1, L1 tolerance."""

    sigma: float = 0.85
    iterations: int = 100
    epsilon: float = 1e-10

    def __post_init__(self):
        if not 0.0 < self.sigma < 1.0:
            raise ValueError(f"sigma must be in (0, 1), got {self.sigma}")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.epsilon < 0.0:
            raise ValueError("epsilon must be >= 0")


@dataclass
class ScoreVector:
    """Per-node non-negative scores summing to 1, plus iteration metadata."""

    values: np.ndarray
    iterations_run: int
    converged: bool


class TransitionOperator:
    """The implicit row-stochastic link matrix, applied by streaming edges.

    Entry (i, j) is 1/outdeg(i) for each stored follow edge i -> j. Rows of
    sink nodes (outdeg 0) are patched to uniform 1/n so score mass is exactly
    conserved. Never materialized densely except by `dense()` for small-n
    oracle checks.
    """

    def __init__(self, graph):
        self.n = graph.n
        degrees = graph.out_degrees.astype(np.float64)
        self._dangling = degrees == 0
        src = np.repeat(np.arange(self.n, dtype=np.int64), graph.out_degrees)
        dst = graph.out_targets.astype(np.int64)
        weights = 1.0 / degrees[src] if len(src) else np.zeros(0)
        # transposed up front: propagate() is F^T @ scores
        self._transposed = sp.csr_matrix((weights, (dst, src)), shape=(self.n, self.n))

    def propagate(self, scores):
        """F^T @ scores with dangling rows treated as uniform 1/n."""
        out = self._transposed @ scores
        sink_mass = float(scores[self._dangling].sum())
        if sink_mass:
            out += sink_mass / self.n
        return out

    def dense(self):
        """The patched row-stochastic matrix as a dense array (tests/oracles)."""
        mat = self._transposed.toarray().T
        mat[self._dangling, :] = 1.0 / self.n
        return mat


def transition_weights(graph):
    """Build the share-propagation operator for a graph."""
    return TransitionOperator(graph)


def scaled_pagerank(graph, params=None, on_iteration=None):
    """Power-iterate R <- sigma*F^T*R + (1-sigma)/n from the uniform vector.

    Stops when the L1 change drops below ``params.epsilon`` or after
    ``params.iterations`` rounds. The returned scores sum to 1. The optional
    ``on_iteration(i, scores)`` callback observes every intermediate vector.
    """
    params = params or PageRankParams()
    if graph.n == 0:
        raise ValueError("cannot rank an empty graph")
    op = TransitionOperator(graph)
    n = graph.n
    teleport = (1.0 - params.sigma) / n
    scores = np.full(n, 1.0 / n)
    iterations_run = 0
    converged = False
    for i in range(1, params.iterations + 1):
        nxt = params.sigma * op.propagate(scores) + teleport
        iterations_run = i
        if on_iteration is not None:
            on_iteration(i, nxt)
        delta = float(np.abs(nxt - scores).sum())
        scores = nxt
        if delta < params.epsilon:
            converged = True
            break
    return ScoreVector(scores, iterations_run, converged)


def prsn_scores(ranks, index, url_set):
    """PRSN(u): sum of spreader ranks, normalized over the evaluated URL set.

    Returns url_id -> score; scores over `url_set` sum to 1. Raises if the
    set is empty or no URL in it has a spreader with positive rank mass.
    """
    if not url_set:
        raise ValueError("url_set must be non-empty")
    raw = {u: float(ranks.values[index.spreaders[u]].sum()) for u in url_set}
    denom = sum(raw.values())
    if denom <= 0.0:
        raise ValueError("no URL in the set has a spreader present in the graph")
    return {u: s / denom for u, s in raw.items()}


def rank_urls(table):
    """Competition-rank a url -> score table (descending score)."""
    return competition_rank(table)
