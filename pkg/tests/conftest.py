import numpy as np
import pytest

from socrank.graph_store import GraphSnapshot, ShareIndex


def make_graph(edge_pairs, n=None, handles=None):
    """Snapshot from (a, b) id pairs; handles default to n0, n1, ..."""
    edges = sorted(set(edge_pairs))
    size = n if n is not None else (max((max(a, b) for a, b in edges), default=-1) + 1)
    handles = handles or [f"n{i}" for i in range(size)]
    return GraphSnapshot.from_edges(size, np.array(edges, np.int64).reshape(-1, 2),
                                    handles)


def make_index(graph, url_spreaders):
    """ShareIndex from {url_string: [node ids]} over an existing graph."""
    urls = list(url_spreaders)
    spreaders = [sorted(set(url_spreaders[u])) for u in urls]
    by_user = [[] for _ in range(graph.n)]
    for uid, members in enumerate(spreaders):
        for v in members:
            by_user[v].append(uid)
    return ShareIndex(urls, [np.array(s, np.int32) for s in spreaders],
                      [np.array(s, np.int32) for s in by_user])


@pytest.fixture
def square_graph():
    # 4 mutually connected nodes plus a pendant follower of node 0
    edges = [(a, b) for a in range(4) for b in range(4) if a != b] + [(4, 0)]
    return make_graph(edges)


def random_digraph(rng, n, p):
    edges = [(a, b) for a in range(n) for b in range(n)
             if a != b and rng.random() < p]
    return make_graph(edges, n=n)
