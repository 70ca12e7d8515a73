"""
HSN: hubs and authorities over who-shared-what
==============================================

HSN ignores the follow graph entirely. Users who share become hubs, URLs
become authorities, and the two score vectors reinforce each other through
the share incidence alone: an authority is strong when strong hubs share it,
a hub is strong when it shares strong authorities. Rewiring the social graph
cannot change the outcome.
"""

import numpy as np

from socrank import GraphSnapshot, ShareIndex, build_share_matrix, hits, hsn_rank


def index_from(graph, url_spreaders):
    urls = list(url_spreaders)
    spreaders = [sorted(url_spreaders[u]) for u in urls]
    by_user = [[] for _ in range(graph.n)]
    for uid, members in enumerate(spreaders):
        for v in members:
            by_user[v].append(uid)
    return ShareIndex(urls, [np.array(s, np.int32) for s in spreaders],
                      [np.array(s, np.int32) for s in by_user])


graph = GraphSnapshot.from_edges(6, np.array([(0, 1)]), [f"user{i}" for i in range(6)])
index = index_from(graph, {
    "http://everywhere.example.com": [0, 1, 2, 3],   # shared by almost everyone
    "http://tech.example.com": [0, 1],               # shared by the prolific pair
    "http://niche.example.com": [4],                 # one casual sharer
})

matrix = build_share_matrix(index, [0, 1, 2])
print(f"Incidence: {len(matrix.hub_ids)} hubs x {len(matrix.url_ids)} authorities")
print(matrix.matrix.toarray().astype(int))

state = hits(matrix, k=100)
print(f"\nConverged after {state.iterations_run} iterations; "
      f"authority scores sum to {state.authority_scores.sum():.6f}")
ranked = hsn_rank(state)
for uid in ranked.ids:
    score = state.authority_scores[list(state.url_ids).index(uid)]
    print(f"  #{ranked.position_of(uid)}  {index.urls[uid]:32} {score:.3f}")

print("\nHub scores (users 0 and 1 share the strong authorities, so they are")
print("the strongest hubs, which in turn boosts what they share):")
for hub, score in zip(state.hub_ids, state.hub_scores):
    print(f"  user{hub}  {score:.3f}")
