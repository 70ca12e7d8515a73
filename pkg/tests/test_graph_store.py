import random

import numpy as np
import pytest

from socrank.errors import (
    CanonicalizationError,
    MalformedLineError,
    SnapshotFormatError,
)
from socrank.graph_store import (
    bfs_sample,
    canonicalize_url,
    load_edges,
    load_redirects,
    load_share_index,
    load_shares,
    load_shares_with_stats,
    load_snapshot,
    save_share_index,
    save_snapshot,
)
from socrank.synth import SynthSpec, generate_follow_edges

from conftest import make_graph


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# load_edges
# ---------------------------------------------------------------------------

def test_two_cycle(tmp_path):
    g = load_edges(write(tmp_path, "e.tsv", "a\tb\nb\ta\n"))
    assert g.n == 2 and g.m == 2
    assert list(g.out_degrees) == [1, 1]
    assert list(g.in_degrees) == [1, 1]


def test_duplicate_and_self_loop_dropped(tmp_path):
    g = load_edges(write(tmp_path, "e.tsv", "a\tb\na\tb\na\ta\n"))
    assert g.n == 2 and g.m == 1


def test_comments_and_blank_lines_skipped(tmp_path):
    g = load_edges(write(tmp_path, "e.tsv", "# header\n\na\tb\n"))
    assert g.n == 2 and g.m == 1


def test_malformed_line_reports_number(tmp_path):
    path = write(tmp_path, "e.tsv", "a\tb\nbroken line\n")
    with pytest.raises(MalformedLineError) as err:
        load_edges(path)
    assert err.value.line_no == 2


def test_empty_file_is_empty_graph(tmp_path):
    g = load_edges(write(tmp_path, "e.tsv", ""))
    assert g.n == 0 and g.m == 0


def test_node_manifest_extends_node_set(tmp_path):
    edges = write(tmp_path, "e.tsv", "a\tb\n")
    nodes = write(tmp_path, "n.txt", "a\nc\n")
    g = load_edges(edges, nodes)
    assert g.n == 3 and g.node_id("c") == 2


def test_transpose_consistency(tmp_path):
    rng = random.Random(7)
    lines = [f"h{rng.randrange(30)}\th{rng.randrange(30)}" for _ in range(150)]
    g = load_edges(write(tmp_path, "e.tsv", "\n".join(lines) + "\n"))
    for a in range(g.n):
        for b in g.out_neighbors(a):
            assert a in g.in_neighbors(int(b))
    for b in range(g.n):
        for a in g.in_neighbors(b):
            assert b in g.out_neighbors(int(a))
    assert g.out_degrees.sum() == g.in_degrees.sum() == g.m


def test_degree_sums_match_on_synthetic_corpus():
    edges = generate_follow_edges(SynthSpec(n_nodes=400, follows_per_node=5, seed=3))
    g = make_graph(edges)
    assert g.out_degrees.sum() == g.in_degrees.sum() == g.m


def test_ingestion_determinism(tmp_path):
    rng = random.Random(11)
    text = "".join(f"h{rng.randrange(40)}\th{rng.randrange(40)}\n" for _ in range(200))
    g1 = load_edges(write(tmp_path, "e1.tsv", text))
    g2 = load_edges(write(tmp_path, "e2.tsv", text))
    save_snapshot(g1, tmp_path / "s1")
    save_snapshot(g2, tmp_path / "s2")
    assert (tmp_path / "s1").read_bytes() == (tmp_path / "s2").read_bytes()


# ---------------------------------------------------------------------------
# canonicalize_url
# ---------------------------------------------------------------------------

def test_case_and_slash_normalization():
    assert canonicalize_url("HTTP://CNN.com/") == "http://cnn.com"


def test_single_hop_redirect():
    redirects = {"bit.ly/x": "http://nytimes.com/a"}
    assert canonicalize_url("http://bit.ly/x", redirects) == "http://nytimes.com/a"


def test_redirect_cycle_detected():
    with pytest.raises(CanonicalizationError, match="cycle"):
        canonicalize_url("a", {"a": "b", "b": "a"})


def test_redirect_cycle_matches_visited_walk_oracle():
    # independent oracle: walk the alias map with a visited set
    cases = [
        ({"a": "b", "b": "c", "c": "a"}, "a"),
        ({"x": "y", "y": "x"}, "y"),
        ({"p": "q", "q": "r", "r": "http://ok.com"}, "p"),
    ]
    for table, start in cases:
        seen, cur, cyclic = set(), start, False
        while cur in table:
            if cur in seen:
                cyclic = True
                break
            seen.add(cur)
            cur = table[cur]
        if cyclic:
            with pytest.raises(CanonicalizationError):
                canonicalize_url(start, table)
        else:
            assert canonicalize_url(start, table) == "http://ok.com"


def test_redirect_hop_limit():
    chain = {f"s{i}": f"s{i+1}" for i in range(30)}
    with pytest.raises(CanonicalizationError, match="hops"):
        canonicalize_url("s0", chain)


def test_default_port_and_fragment_stripped():
    assert canonicalize_url("https://Ex.org:443/a#frag") == "https://ex.org/a"
    assert canonicalize_url("http://ex.org:8080/a") == "http://ex.org:8080/a"


def test_unparseable_rejected():
    for bad in ["", "   ", "not a url", "http://", "mailto:x@y.z"]:
        with pytest.raises(CanonicalizationError):
            canonicalize_url(bad)


def test_idempotent_on_corpus():
    rng = random.Random(5)
    redirects = {"short.ly/a": "http://long.example.com/a",
                 "http://old.example.com": "HTTP://New.Example.com/"}
    hosts = ["CNN.com", "ex.org:80", "a.b.c.example.com", "short.ly"]
    paths = ["", "/", "/x", "/x/", "/x?q=1", "/x#f", "/a"]
    for _ in range(200):
        raw = f"http://{rng.choice(hosts)}{rng.choice(paths)}"
        once = canonicalize_url(raw, redirects)
        assert canonicalize_url(once, redirects) == once


# ---------------------------------------------------------------------------
# load_shares
# ---------------------------------------------------------------------------

def test_min_spreaders_filter(tmp_path):
    g = load_edges(write(tmp_path, "e.tsv", "v1\tv2\nv2\tv3\nv3\tv1\n"))
    shares = write(tmp_path, "s.tsv",
                   "v1\t10\thttp://u.com\nv2\t11\thttp://u.com\nv3\t12\thttp://w.com\n")
    idx = load_shares(shares, g, min_spreaders=2)
    assert idx.urls == ("http://u.com",)
    assert list(idx.spreaders[0]) == [g.node_id("v1"), g.node_id("v2")]

    idx1 = load_shares(shares, g, min_spreaders=1)
    assert set(idx1.urls) == {"http://u.com", "http://w.com"}


def test_duplicate_share_collapses(tmp_path):
    g = load_edges(write(tmp_path, "e.tsv", "v1\tv2\n"))
    shares = write(tmp_path, "s.tsv",
                   "v1\t10\thttp://u.com\nv1\t20\thttp://u.com\n")
    idx = load_shares(shares, g)
    assert list(idx.spreaders[0]) == [g.node_id("v1")]
    assert idx.share_times[(0, g.node_id("v1"))] == 10  # earliest kept


def test_unknown_user_dropped_with_count(tmp_path):
    g = load_edges(write(tmp_path, "e.tsv", "v1\tv2\n"))
    shares = write(tmp_path, "s.tsv",
                   "v1\t10\thttp://u.com\nghost\t11\thttp://u.com\n")
    idx, stats = load_shares_with_stats(shares, g)
    assert stats.dropped_unknown_user == 1
    assert list(idx.spreaders[0]) == [g.node_id("v1")]


def test_bad_url_counted_not_fatal(tmp_path):
    g = load_edges(write(tmp_path, "e.tsv", "v1\tv2\n"))
    shares = write(tmp_path, "s.tsv", "v1\t10\tnot a url\nv1\t11\thttp://u.com\n")
    idx, stats = load_shares_with_stats(shares, g)
    assert stats.dropped_bad_url == 1
    assert idx.urls == ("http://u.com",)


def test_bad_timestamp_is_malformed(tmp_path):
    g = load_edges(write(tmp_path, "e.tsv", "v1\tv2\n"))
    shares = write(tmp_path, "s.tsv", "v1\tsoon\thttp://u.com\n")
    with pytest.raises(MalformedLineError, match="timestamp"):
        load_shares(shares, g)


def test_share_index_bidirectional(tmp_path):
    g = load_edges(write(tmp_path, "e.tsv", "v1\tv2\nv2\tv3\nv3\tv1\n"))
    lines = []
    rng = random.Random(2)
    for i in range(20):
        lines.append(f"v{rng.randrange(1, 4)}\t{i}\thttp://u{rng.randrange(5)}.com")
    idx = load_shares(write(tmp_path, "s.tsv", "\n".join(lines) + "\n"), g)
    for uid in range(idx.n_urls):
        for v in idx.spreaders[uid]:
            assert uid in idx.shares_by_user[int(v)]
    for v in range(idx.n_users):
        for uid in idx.shares_by_user[v]:
            assert v in idx.spreaders[int(uid)]


def test_redirects_applied_at_load(tmp_path):
    g = load_edges(write(tmp_path, "e.tsv", "v1\tv2\n"))
    rmap = load_redirects(write(tmp_path, "r.tsv", "sho.rt/1\thttp://dest.com/x\n"))
    shares = write(tmp_path, "s.tsv",
                   "v1\t10\thttp://sho.rt/1\nv2\t11\thttp://dest.com/x\n")
    idx = load_shares(shares, g, rmap, min_spreaders=2)
    assert idx.urls == ("http://dest.com/x",)
    assert len(idx.spreaders[0]) == 2


# ---------------------------------------------------------------------------
# bfs_sample
# ---------------------------------------------------------------------------

def test_bfs_sample_star_lowest_leaves():
    g = make_graph([(0, i) for i in range(1, 6)])
    sub = bfs_sample(g, 0, 3)
    assert sub.n == 3
    assert sub.handles == ("n0", "n1", "n2")


def test_bfs_sample_saturation():
    g = make_graph([(0, 1), (1, 2), (2, 0), (3, 4)])
    sub = bfs_sample(g, 0, 100)
    assert sub.n == 3  # nodes 3, 4 unreachable from 0
    assert sub.m == 3


def test_bfs_sample_level_ties_ascending():
    # seed follows 5 and 2; their followees decide level 2 membership
    g = make_graph([(0, 5), (0, 2), (5, 1), (2, 4), (2, 3)])
    sub = bfs_sample(g, 0, 4)
    # level 1 sorted = [2, 5]; level 2 candidates {1, 3, 4} -> lowest first
    assert sub.handles == ("n0", "n2", "n5", "n1")


def test_bfs_sample_skews_mean_degree_up():
    edges = generate_follow_edges(SynthSpec(n_nodes=100, follows_per_node=3, seed=9))
    g = make_graph(edges)
    degrees = g.out_degrees + g.in_degrees  # oracle: exhaustive degree computation
    seed = int(np.argmax(degrees))
    sub = bfs_sample(g, seed, 30)
    sampled_ids = [g.node_id(h) for h in sub.handles]
    assert degrees[sampled_ids].mean() >= degrees.mean()


# ---------------------------------------------------------------------------
# binary caches
# ---------------------------------------------------------------------------

def test_snapshot_roundtrip(tmp_path, square_graph):
    save_snapshot(square_graph, tmp_path / "g.bin")
    loaded = load_snapshot(tmp_path / "g.bin")
    assert loaded.n == square_graph.n and loaded.m == square_graph.m
    assert (loaded.out_targets == square_graph.out_targets).all()
    assert (loaded.in_targets == square_graph.in_targets).all()
    assert loaded.handles == square_graph.handles


def test_share_cache_roundtrip(tmp_path):
    g = make_graph([(0, 1), (1, 2), (2, 0)])
    from conftest import make_index
    idx = make_index(g, {"http://a.com": [0, 1], "http://b.com": [2]})
    idx.share_times.update({(0, 0): 5, (0, 1): 6, (1, 2): 7})
    save_share_index(idx, tmp_path / "s.bin")
    loaded = load_share_index(tmp_path / "s.bin")
    assert loaded.urls == idx.urls
    assert all((a == b).all() for a, b in zip(loaded.spreaders, idx.spreaders))
    assert all((a == b).all() for a, b in zip(loaded.shares_by_user, idx.shares_by_user))
    assert loaded.share_times == idx.share_times


def test_wrong_magic_rejected(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"SOCRANK9" + b"\x00" * 64)
    with pytest.raises(SnapshotFormatError, match="magic"):
        load_snapshot(path)


def test_wrong_section_rejected(tmp_path, square_graph):
    save_snapshot(square_graph, tmp_path / "g.bin")
    with pytest.raises(SnapshotFormatError, match="section"):
        load_share_index(tmp_path / "g.bin")


def test_truncated_cache_rejected(tmp_path, square_graph):
    save_snapshot(square_graph, tmp_path / "g.bin")
    blob = (tmp_path / "g.bin").read_bytes()
    (tmp_path / "t.bin").write_bytes(blob[:len(blob) // 2])
    with pytest.raises(SnapshotFormatError, match="truncated"):
        load_snapshot(tmp_path / "t.bin")
