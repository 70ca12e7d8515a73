"""Hubs-and-authorities scoring of the sharer->URL bipartite structure (HSN).

Hubs are users who shared at least one URL of the evaluated set, authorities
are the URLs themselves. Follow edges play no part here: the outcome depends
only on who shared what, so rewiring the social graph while holding the share
index fixed leaves HSN output bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .ranking import RankedList, competition_rank

CONVERGENCE_TOL = 1e-12


@dataclass
class BipartiteShareMatrix:
    """0/1 incidence between sharing users (rows) and URLs (columns)."""

    hub_ids: tuple[int, ...]
    url_ids: tuple[int, ...]
    matrix: sp.csr_matrix


@dataclass
class HitsState:
    """Hub and authority score vectors after iteration.

    Authority scores are finalized to sum to 1; hub scores stay L2-normalized.
    """

    hub_ids: tuple[int, ...]
    hub_scores: np.ndarray
    url_ids: tuple[int, ...]
    authority_scores: np.ndarray
    iterations_run: int


def build_share_matrix(index, url_set):
    """Incidence matrix over hubs = union of the URL set's spreader sets.

    m[i, j] = 1 iff hub i shared authority j. Raises if the set is empty,
    contains duplicates, or has no spreaders at all.
    """
    if not url_set:
        raise ValueError("url_set must be non-empty")
    url_ids = tuple(url_set)
    if len(set(url_ids)) != len(url_ids):
        raise ValueError("url_set contains duplicates")
    hub_set = set()
    for u in url_ids:
        members = index.spreaders[u]
        if len(members) == 0:
            raise ValueError(f"URL {u} has no spreaders; every authority needs a hub")
        hub_set.update(int(v) for v in members)
    hub_ids = tuple(sorted(hub_set))
    hub_row = {v: i for i, v in enumerate(hub_ids)}
    rows, cols = [], []
    for j, u in enumerate(url_ids):
        for v in index.spreaders[u]:
            rows.append(hub_row[int(v)])
            cols.append(j)
    matrix = sp.csr_matrix((np.ones(len(rows)), (rows, cols)),
                           shape=(len(hub_ids), len(url_ids)))
    return BipartiteShareMatrix(hub_ids, url_ids, matrix)


def hits(matrix, k=50):
    """Alternate authority <- M^T h and hub <- M a updates for up to k rounds.

    Hub scores start at each hub's share count. Both vectors are
    L2-normalized every round to keep magnitudes bounded (the limiting
    direction is unchanged); iteration stops early once both change by less
    than ``CONVERGENCE_TOL`` in L1. Authority scores are then divided by
    their sum.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    m = matrix.matrix
    if m.shape[0] == 0 or m.shape[1] == 0:
        raise ValueError("empty share matrix")
    hubs = np.asarray(m.sum(axis=1)).ravel().astype(np.float64)
    hubs /= np.linalg.norm(hubs)
    auth = np.zeros(m.shape[1])
    iterations_run = 0
    for i in range(1, k + 1):
        new_auth = m.T @ hubs
        new_auth /= np.linalg.norm(new_auth)
        new_hubs = m @ new_auth
        new_hubs /= np.linalg.norm(new_hubs)
        iterations_run = i
        done = (np.abs(new_auth - auth).sum() < CONVERGENCE_TOL
                and np.abs(new_hubs - hubs).sum() < CONVERGENCE_TOL)
        auth, hubs = new_auth, new_hubs
        if done:
            break
    return HitsState(matrix.hub_ids, hubs, matrix.url_ids,
                     auth / auth.sum(), iterations_run)


def hsn_rank(state):
    """Competition-rank URLs by descending authority score."""
    table = {u: float(s) for u, s in zip(state.url_ids, state.authority_scores)}
    return competition_rank(table)


def hsn_scores(index, url_set, k=50):
    """Convenience pipeline: build the incidence, iterate, return url -> score."""
    state = hits(build_share_matrix(index, url_set), k=k)
    return {u: float(s) for u, s in zip(state.url_ids, state.authority_scores)}
