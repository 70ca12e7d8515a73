"""
PRSN: PageRank mass aggregated per URL
======================================

Scaled PageRank runs on the follow graph alone. A URL then inherits the rank
mass of the people who shared it, normalized over the evaluated URL set. The
effect: a URL shared by one well-followed account can outrank a URL shared by
several peripheral ones.
"""

import numpy as np

from socrank import GraphSnapshot, ShareIndex, prsn_scores, rank_urls, scaled_pagerank
from socrank.prsn import PageRankParams, transition_weights


def index_from(graph, url_spreaders):
    urls = list(url_spreaders)
    spreaders = [sorted(url_spreaders[u]) for u in urls]
    by_user = [[] for _ in range(graph.n)]
    for uid, members in enumerate(spreaders):
        for v in members:
            by_user[v].append(uid)
    return ShareIndex(urls, [np.array(s, np.int32) for s in spreaders],
                      [np.array(s, np.int32) for s in by_user])


# a small graph: node 0 is a hub everyone follows
edges = [(1, 0), (2, 0), (3, 0), (4, 0), (5, 0),
         (0, 1), (1, 2), (2, 1),
         (6, 7), (7, 6), (5, 6)]
handles = [f"user{i}" for i in range(8)]
graph = GraphSnapshot.from_edges(8, np.array(edges), handles)

op = transition_weights(graph)
print("Row-stochastic link weights (each row of the dense view sums to 1):")
print(np.round(op.dense(), 3))

result = scaled_pagerank(graph, PageRankParams(sigma=0.85, iterations=200,
                                               epsilon=1e-12))
print(f"\nConverged in {result.iterations_run} iterations "
      f"(sum of scores = {result.values.sum():.12f})")
for v in np.argsort(result.values)[::-1]:
    print(f"  {handles[v]:6} {result.values[v]:.4f}")

# u_hub is shared only by the hub; u_crowd by three peripheral users
index = index_from(graph, {"http://hub-pick.example.com": [0],
                           "http://crowd-pick.example.com": [4, 5, 6]})
table = prsn_scores(result, index, [0, 1])
ranked = rank_urls(table)
print("\nURL scores over the evaluated set (they sum to 1):")
for uid in ranked.ids:
    print(f"  #{ranked.position_of(uid)}  {index.urls[uid]:35} {table[uid]:.3f}")
print("\nOne influential spreader beat three peripheral ones.")
