"""Deterministic synthetic corpora: power-law follow graphs + share cascades.

Gives the toolkit desk-scale stand-ins for crawled social data. Generation is
a pure function of the spec: the same spec always produces byte-identical
edges.tsv / shares.tsv files.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class SynthSpec:
    """Knobs for the generated corpus.

    `celebrity_fraction` marks the earliest nodes as celebrities; each follow
    edge routes to a celebrity with probability `celebrity_bias`, which
    concentrates indegree far above the mean (the few-accounts-with-millions-
    of-followers effect, at desk scale). Per-URL spreader counts are
    2 + a Pareto(alpha) draw, so a few URLs go viral while most stay niche.
    """

    n_nodes: int = 2000
    follows_per_node: int = 8
    n_urls: int = 1000
    celebrity_fraction: float = 0.0
    celebrity_bias: float = 0.4
    spreader_alpha: float = 1.3
    cascade_p: float = 0.7
    seed: int = 0

    def __post_init__(self):
        if self.n_nodes < 2:
            raise ValueError("n_nodes must be >= 2")
        if self.follows_per_node < 1:
            raise ValueError("follows_per_node must be >= 1")
        if self.n_urls < 0:
            raise ValueError("n_urls must be >= 0")
        if not 0.0 <= self.celebrity_fraction <= 1.0:
            raise ValueError("celebrity_fraction must be in [0, 1]")
        if not 0.0 <= self.celebrity_bias <= 1.0:
            raise ValueError("celebrity_bias must be in [0, 1]")
        if self.spreader_alpha <= 0:
            raise ValueError("spreader_alpha must be positive")
        if not 0.0 <= self.cascade_p <= 1.0:
            raise ValueError("cascade_p must be in [0, 1]")
        if self.n_urls > 0 and self.n_nodes < 2 + 1:
            raise ValueError("need at least 3 nodes to seed share cascades")


def handle(i):
    return f"u{i:06d}"


def url_string(j):
    return f"http://site{j:05d}.example.org/story"


def generate_follow_edges(spec):
    """Preferential-attachment follow edges as (follower, followee) id pairs.

    Each new node follows `follows_per_node` distinct earlier nodes, chosen
    proportionally to indegree + 1 (celebrities get an extra routing bias).
    The first follows_per_node + 1 nodes form a seed ring.
    """
    rng = random.Random(spec.seed)
    m = spec.follows_per_node
    core = min(m + 1, spec.n_nodes)
    edges = [(i, (i + 1) % core) for i in range(core) if core > 1]
    # endpoint list realizes indegree-proportional sampling in O(1) per draw
    endpoints = [b for _, b in edges] + list(range(core))
    n_celebrities = int(spec.celebrity_fraction * spec.n_nodes)
    celebrities = list(range(min(n_celebrities, core))) or None
    for i in range(core, spec.n_nodes):
        targets = set()
        guard = 0
        while len(targets) < min(m, i) and guard < 50 * m:
            guard += 1
            if celebrities and rng.random() < spec.celebrity_bias:
                t = rng.choice(celebrities)
            else:
                t = rng.choice(endpoints)
            if t != i:
                targets.add(t)
        for t in sorted(targets):
            edges.append((i, t))
            endpoints.append(t)
        endpoints.append(i)
        if celebrities is not None and i < n_celebrities:
            celebrities.append(i)
    return edges


def generate_shares(spec, edges):
    """Share cascades: seed spreader, then followers of spreaders join in.

    With probability `cascade_p` the next spreader is a follower of an
    existing one (information travels along the graph); otherwise an
    independent discovery. Timestamps increase within each cascade.
    """
    followers_of = {}
    for a, b in edges:
        followers_of.setdefault(b, []).append(a)
    rng = random.Random(spec.seed + 1)
    base_time = 1_600_000_000
    shares = []
    for j in range(spec.n_urls):
        count = 2 + int(rng.paretovariate(spec.spreader_alpha))
        count = min(count, max(2, spec.n_nodes // 2))
        first = rng.randrange(spec.n_nodes)
        spreaders = [first]
        member_set = {first}
        while len(spreaders) < count:
            candidate = None
            if rng.random() < spec.cascade_p:
                origin = spreaders[rng.randrange(len(spreaders))]
                candidates = followers_of.get(origin)
                if candidates:
                    candidate = candidates[rng.randrange(len(candidates))]
            if candidate is None or candidate in member_set:
                candidate = rng.randrange(spec.n_nodes)
            if candidate in member_set:
                continue
            member_set.add(candidate)
            spreaders.append(candidate)
        url = url_string(j)
        for step, v in enumerate(spreaders):
            shares.append((v, base_time + j * 1000 + step * 10, url))
    return shares


def write_corpus(spec, out_dir):
    """Generate and write edges.tsv / shares.tsv; returns the two paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    edges = generate_follow_edges(spec)
    shares = generate_shares(spec, edges)
    edges_path = out_dir / "edges.tsv"
    shares_path = out_dir / "shares.tsv"
    with open(edges_path, "w", encoding="utf-8", newline="\n") as fh:
        for a, b in edges:
            fh.write(f"{handle(a)}\t{handle(b)}\n")
    with open(shares_path, "w", encoding="utf-8", newline="\n") as fh:
        for v, ts, url in shares:
            fh.write(f"{handle(v)}\t{ts}\t{url}\n")
    return edges_path, shares_path
