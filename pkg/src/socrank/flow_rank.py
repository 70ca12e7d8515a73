"""Personalized URL ranking by maximum flow from one person to a super sink.

The flow graph copies the social layer reachable from the person p within a
hop limit (arc capacity = 1/outdeg inside the copied layer), attaches one
node per evaluated URL fed by capacity-1 arcs from its in-layer spreaders,
and drains every URL node into a super sink t through a capacity-1 arc. The
flow a URL's sink arc carries under the deterministic maximum flow is its
personalized score; flow ties are broken by a baseline ranking (PRSN or HSN).

All capacities and flows are exact rationals, so feasibility, conservation,
and min-cut comparisons are exact.
"""

from __future__ import annotations

from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .ranking import RankedList, rank_by_key

DEFAULT_DEPTH_CAP = 3


@dataclass(frozen=True)
class Arc:
    src: int
    dst: int
    capacity: Fraction


@dataclass
class FlowGraph:
    """The personalized graph: social copy + URL nodes + super sink.

    Local node ids: 0 is the person (source), social nodes follow in BFS
    discovery order, then URL nodes in evaluation order, then the sink last.
    `labels` carries handles / URL strings / "t" for debugging dumps.
    """

    person: int
    depth_cap: int
    n_nodes: int
    source: int
    sink: int
    arcs: list[Arc]
    social_local: dict[int, int]
    url_local: dict[int, int]
    url_sink_arc: dict[int, int]
    labels: tuple[str, ...]


@dataclass
class FlowAssignment:
    """Per-arc flows (parallel to FlowGraph.arcs) and the total s-t value."""

    flows: tuple[Fraction, ...]
    total: Fraction


@dataclass
class PersonalizedRanking:
    """One person's URL positions, with the flow each URL received."""

    person: int
    ranking: RankedList
    url_flows: dict[int, Fraction]

    @property
    def url_positions(self):
        return self.ranking.as_dict()


def build_flow_graph(graph, index, person, url_set, depth_cap=DEFAULT_DEPTH_CAP):
    """Construct the personalized flow graph for `person` over `url_set`.

    The social layer is the set of nodes within `depth_cap` follow-hops of
    the person; all follow arcs between layer members are kept except arcs
    into the person. Social capacities are 1/outdeg counted inside the layer
    (assigned after the layer is complete). URL nodes are always added, even
    with no in-layer spreader (they simply receive zero flow).
    """
    if not 0 <= person < graph.n:
        raise ValueError(f"person {person} not in graph")
    if depth_cap < 1:
        raise ValueError("depth_cap must be >= 1")
    if not url_set:
        raise ValueError("url_set must be non-empty")

    # social layer, level by level, ties broken by ascending node id
    social = [person]
    seen = {person}
    frontier = [person]
    for _ in range(depth_cap):
        nxt = set()
        for v in frontier:
            for w in graph.out_neighbors(v):
                if int(w) not in seen:
                    nxt.add(int(w))
        frontier = sorted(nxt)
        seen.update(frontier)
        social.extend(frontier)
        if not frontier:
            break
    local = {v: i for i, v in enumerate(social)}

    social_arcs = []
    out_counts = [0] * len(social)
    for v in social:
        for w in graph.out_neighbors(v):
            w = int(w)
            if w in local and w != person:
                social_arcs.append((local[v], local[w]))
                out_counts[local[v]] += 1

    arcs = [Arc(a, b, Fraction(1, out_counts[a])) for a, b in social_arcs]

    url_local = {}
    url_sink_arc = {}
    sink = len(social) + len(url_set)
    for j, u in enumerate(url_set):
        node = len(social) + j
        url_local[u] = node
        for s in index.spreaders[u]:
            s = int(s)
            if s in local:
                arcs.append(Arc(local[s], node, Fraction(1)))
        url_sink_arc[u] = len(arcs)
        arcs.append(Arc(node, sink, Fraction(1)))

    labels = tuple([graph.handles[v] for v in social]
                   + [index.urls[u] for u in url_set] + ["t"])
    return FlowGraph(person=person, depth_cap=depth_cap, n_nodes=sink + 1,
                     source=0, sink=sink, arcs=arcs, social_local=local,
                     url_local=url_local, url_sink_arc=url_sink_arc, labels=labels)


def max_flow(fg):
    """Exact maximum flow by shortest augmenting paths (BFS).

    The BFS scans residual arcs in ascending destination-node order (reverse
    arcs interleaved by the paired arc's index), so the returned per-arc
    assignment, not just the total, is deterministic. No augmenting path
    means total 0.
    """
    n = fg.n_nodes
    caps = [arc.capacity for arc in fg.arcs]
    flows = [Fraction(0)] * len(fg.arcs)
    # adjacency of (neighbor, arc index, is_forward), scanned in sorted order
    adj = [[] for _ in range(n)]
    for k, arc in enumerate(fg.arcs):
        adj[arc.src].append((arc.dst, k, True))
        adj[arc.dst].append((arc.src, k, False))
    for entries in adj:
        entries.sort(key=lambda e: (e[0], e[1]))

    total = Fraction(0)
    while True:
        parent = [None] * n
        parent[fg.source] = (fg.source, -1, True)
        queue = deque([fg.source])
        while queue and parent[fg.sink] is None:
            v = queue.popleft()
            for w, k, forward in adj[v]:
                if parent[w] is not None:
                    continue
                residual = caps[k] - flows[k] if forward else flows[k]
                if residual > 0:
                    parent[w] = (v, k, forward)
                    queue.append(w)
        if parent[fg.sink] is None:
            break
        # bottleneck along the recorded path
        bottleneck = None
        v = fg.sink
        while v != fg.source:
            prev, k, forward = parent[v]
            residual = caps[k] - flows[k] if forward else flows[k]
            bottleneck = residual if bottleneck is None else min(bottleneck, residual)
            v = prev
        v = fg.sink
        while v != fg.source:
            prev, k, forward = parent[v]
            flows[k] = flows[k] + bottleneck if forward else flows[k] - bottleneck
            v = prev
        total += bottleneck
    return FlowAssignment(tuple(flows), total)


def url_flow(fg, assignment, url_id):
    """Flow delivered on a URL's sink arc."""
    return assignment.flows[fg.url_sink_arc[url_id]]


def personalized_rank(fg, assignment, tie_breaker):
    """Order URLs by descending delivered flow, breaking ties by a baseline.

    Tied flows (zero-flow groups included) fall back to the tie-breaker's
    positions. Final positions are competition ranks over the combined
    (flow, baseline position) key. Raises if the tie-breaker misses a URL.
    """
    url_ids = list(fg.url_local)
    flows = {u: url_flow(fg, assignment, u) for u in url_ids}
    for u in url_ids:
        try:
            tie_breaker.position_of(u)
        except KeyError:
            raise ValueError(f"tie_breaker does not cover URL {u}") from None
    ranking = rank_by_key(url_ids, lambda u: (-flows[u], tie_breaker.position_of(u)))
    return PersonalizedRanking(fg.person, ranking, flows)


def rank_for_person(graph, index, person, url_set, depth_cap, tie_breaker):
    """build -> max_flow -> rank for a single person."""
    fg = build_flow_graph(graph, index, person, url_set, depth_cap)
    return personalized_rank(fg, max_flow(fg), tie_breaker)


def rank_for_users(graph, index, persons, url_set, depth_cap=DEFAULT_DEPTH_CAP,
                   tie_breaker=None, threads=1):
    """Independent personalized rankings, output order = input order.

    Persons are processed independently over immutable inputs, so they may
    fan out to a thread pool; results are joined in order either way.
    """
    if not persons:
        raise ValueError("persons must be non-empty")
    if tie_breaker is None:
        raise ValueError("a tie_breaker ranking is required")
    run = lambda p: rank_for_person(graph, index, p, url_set, depth_cap, tie_breaker)
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run, persons))
    return [run(p) for p in persons]


def dump_flow_graph(fg, path):
    """Debug dump: one `src<TAB>dst<TAB>num/den` line per arc."""
    lines = []
    for arc in fg.arcs:
        cap = arc.capacity
        lines.append(f"{fg.labels[arc.src]}\t{fg.labels[arc.dst]}\t"
                     f"{cap.numerator}/{cap.denominator}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
