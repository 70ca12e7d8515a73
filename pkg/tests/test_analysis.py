import math
import random
from collections import deque
from fractions import Fraction

import pytest
from scipy.stats import spearmanr

from socrank.analysis import (
    affected_nodes,
    affected_set,
    avg_distance_to_spreaders,
    bfs_distances,
    consistency,
    distance_samples_for_urls,
    fit_linear_separator,
    format_avg,
    pairwise_consistency,
    select_url_sets,
    classify,
)
from socrank.cli import bundled_positions_path, read_rankings_csv
from socrank.ranking import RankedList
from socrank.synth import SynthSpec, generate_follow_edges

from conftest import make_graph, make_index


# ---------------------------------------------------------------------------
# select_url_sets
# ---------------------------------------------------------------------------

def selection_fixture():
    g = make_graph([(0, 1)], n=8)
    return make_index(g, {
        "http://u1.com": [0, 1, 2, 3, 4],
        "http://u2.com": [0, 1, 2],
        "http://u3.com": [3, 4, 5],
        "http://u4.com": [6],
    })


def test_popular_top_n_with_url_id_ties():
    sel = select_url_sets(selection_fixture(), n_popular=2, n_random=1, seed=0)
    assert sel.popular == [0, 1]  # u2 vs u3 tie broken by ascending id


def test_random_saturation_covers_universe():
    idx = selection_fixture()
    sel = select_url_sets(idx, n_popular=1, n_random=idx.n_urls, seed=3)
    assert sorted(sel.random) == list(range(idx.n_urls))


def test_same_seed_same_selection():
    idx = selection_fixture()
    a = select_url_sets(idx, 2, 3, seed=7)
    b = select_url_sets(idx, 2, 3, seed=7)
    assert a.popular == b.popular and a.random == b.random


def test_popular_is_seed_invariant():
    idx = selection_fixture()
    assert (select_url_sets(idx, 3, 1, seed=1).popular
            == select_url_sets(idx, 3, 1, seed=999).popular)


def test_oversized_request_rejected():
    with pytest.raises(ValueError):
        select_url_sets(selection_fixture(), n_popular=99, n_random=1, seed=0)


# ---------------------------------------------------------------------------
# affected sets
# ---------------------------------------------------------------------------

def test_star_affected_size():
    g = make_graph([(i, 0) for i in range(1, 6)])  # five nodes follow node 0
    idx = make_index(g, {"http://u.com": [0]})
    stats = affected_set(g, idx, 0)
    assert stats.affected_size == 5 and stats.spreader_count == 1


def test_common_followers_counted_once():
    # followers 2, 3, 4 follow both spreaders 0 and 1
    g = make_graph([(f, s) for f in (2, 3, 4) for s in (0, 1)])
    idx = make_index(g, {"http://u.com": [0, 1]})
    assert affected_set(g, idx, 0).affected_size == 3


def test_spreader_following_spreader_excluded():
    g = make_graph([(1, 0), (2, 0)])  # 1 and 2 follow 0; 1 is a spreader too
    idx = make_index(g, {"http://u.com": [0, 1]})
    stats = affected_set(g, idx, 0)
    assert stats.affected_size == 1
    assert set(affected_nodes(g, idx, 0).tolist()) == {2}


def test_affected_never_contains_spreader_and_bounded():
    rng = random.Random(12)
    for trial in range(20):
        edges = [(rng.randrange(25), rng.randrange(25)) for _ in range(80)]
        g = make_graph([e for e in edges if e[0] != e[1]], n=25)
        spreaders = rng.sample(range(25), rng.randint(1, 5))
        idx = make_index(g, {"http://u.com": spreaders})
        nodes = affected_nodes(g, idx, 0)
        assert not set(nodes.tolist()) & set(spreaders)
        assert len(nodes) <= sum(len(g.in_neighbors(s)) for s in spreaders)


# ---------------------------------------------------------------------------
# distances
# ---------------------------------------------------------------------------

def seed_with_sources(n, wanted, n_sources=1, limit=5000):
    """Find a seed whose uniform sample equals `wanted` (test determinism aid)."""
    for seed in range(limit):
        if random.Random(seed).sample(range(n), n_sources) == wanted:
            return seed
    raise AssertionError("no seed found")


def test_path_graph_distance():
    g = make_graph([(0, 1), (1, 2)], n=3)
    idx = make_index(g, {"http://u.com": [2]})
    seed = seed_with_sources(3, [0])
    sample = avg_distance_to_spreaders(g, idx, 0, n_sources=1,
                                       n_spreader_sample=5, seed=seed)
    assert sample.avg_distance == 2.0
    assert sample.reachable_pairs == 1 and sample.unreachable_pairs == 0


def test_source_that_is_spreader_contributes_zero():
    g = make_graph([(0, 1), (1, 2)], n=3)
    idx = make_index(g, {"http://u.com": [0, 2]})
    seed = seed_with_sources(3, [0])
    sample = avg_distance_to_spreaders(g, idx, 0, n_sources=1,
                                       n_spreader_sample=5, seed=seed)
    assert sample.avg_distance == pytest.approx(1.0)  # pairs (0,0)=0, (0,2)=2


def test_unreachable_pairs_flagged():
    g = make_graph([(0, 1)], n=3)  # node 2 isolated
    idx = make_index(g, {"http://u.com": [2]})
    seed = seed_with_sources(3, [0])
    sample = avg_distance_to_spreaders(g, idx, 0, n_sources=1,
                                       n_spreader_sample=5, seed=seed,
                                       direction="follow")
    assert sample.avg_distance is None
    assert sample.unreachable_pairs == 1


def test_direction_modes():
    g = make_graph([(0, 1), (1, 2)], n=3)
    assert list(bfs_distances(g, 0, "follow")) == [0, 1, 2]
    assert list(bfs_distances(g, 0, "reverse")) == [0, -1, -1]
    assert list(bfs_distances(g, 2, "reverse")) == [2, 1, 0]
    assert list(bfs_distances(g, 2, "undirected")) == [2, 1, 0]
    with pytest.raises(ValueError):
        bfs_distances(g, 0, "sideways")


def oracle_bfs(adjacency, source):
    dist = {source: 0}
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for w in adjacency[v]:
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def test_batch_matches_single_and_oracle_and_trend():
    # small-world-ish fixture: ring plus random chords
    rng = random.Random(77)
    n = 150
    edges = [(i, (i + 1) % n) for i in range(n)]
    edges += [(rng.randrange(n), rng.randrange(n)) for _ in range(60)]
    g = make_graph([e for e in edges if e[0] != e[1]], n=n)
    sizes = [2, 3, 4, 6, 9, 13, 19, 28, 42, 63, 94, 140]
    idx = make_index(g, {f"http://u{k}.com": rng.sample(range(n), s)
                         for k, s in enumerate(sizes)})
    urls = list(range(len(sizes)))
    batch = distance_samples_for_urls(g, idx, urls, n_sources=10,
                                      n_spreader_sample=10, seed=5)
    # oracle: independent dict-adjacency BFS over the undirected graph
    undirected = {v: set() for v in range(n)}
    for a in range(n):
        for b in g.out_neighbors(a):
            undirected[a].add(int(b))
            undirected[int(b)].add(a)
    for sample, url in zip(batch, urls):
        single = avg_distance_to_spreaders(g, idx, url, n_sources=10,
                                           n_spreader_sample=10, seed=5)
        assert single == sample
        rng_url = random.Random(5 * 1_000_003 + url)
        spreaders = [int(v) for v in idx.spreaders[url]]
        chosen = (rng_url.sample(spreaders, 10) if len(spreaders) > 10 else spreaders)
        sources = random.Random(5).sample(range(n), 10)
        expected = [oracle_bfs(undirected, s).get(v)
                    for s in sources for v in chosen]
        reachable = [d for d in expected if d is not None]
        assert sample.reachable_pairs == len(reachable)
        assert sample.avg_distance == pytest.approx(sum(reachable) / len(reachable))
    affected = [affected_set(g, idx, u).affected_size for u in urls]
    rho = spearmanr(affected, [s.avg_distance for s in batch]).statistic
    assert rho < 0  # bigger affected sets sit closer to random users


# ---------------------------------------------------------------------------
# consistency
# ---------------------------------------------------------------------------

def test_popular_table_replay():
    table = read_rankings_csv(bundled_positions_path("buzz_popular"))
    stats = consistency(table.prsn, table.hsn)
    assert stats.w == 30
    assert stats.sum_diff == 86
    assert stats.avg_display == "2.9"
    assert stats.avg_diff == Fraction(86, 30)


def test_random_table_replay():
    table = read_rankings_csv(bundled_positions_path("buzz_random"))
    stats = consistency(table.prsn, table.hsn)
    assert stats.sum_diff == 288
    assert stats.avg_display == "9.6"


def test_identical_rankings_zero():
    ranked = RankedList((0, 1, 2), (1, 2, 3))
    stats = consistency(ranked, ranked)
    assert stats.sum_diff == 0 and stats.avg_display == "0.0"


def test_mismatched_sets_rejected():
    with pytest.raises(ValueError):
        consistency(RankedList((0, 1), (1, 2)), RankedList((0, 2), (1, 2)))


def test_sum_equals_avg_times_w_exactly():
    rng = random.Random(1)
    for trial in range(50):
        w = rng.randint(1, 40)
        a = rng.sample(range(1, w + 1), w)
        b = rng.sample(range(1, w + 1), w)
        stats = consistency(RankedList(tuple(range(w)), tuple(a)),
                            RankedList(tuple(range(w)), tuple(b)))
        assert stats.avg_diff * w == stats.sum_diff
        assert stats.sum_diff <= w * (w - 1)  # max displacement bound


def test_pseudometric_properties():
    rng = random.Random(2)
    ids = tuple(range(30))
    for trial in range(200):
        perms = [RankedList(ids, tuple(rng.sample(range(1, 31), 30)))
                 for _ in range(3)]
        d_ab = consistency(perms[0], perms[1]).sum_diff
        d_ba = consistency(perms[1], perms[0]).sum_diff
        d_ac = consistency(perms[0], perms[2]).sum_diff
        d_bc = consistency(perms[1], perms[2]).sum_diff
        assert d_ab == d_ba
        assert consistency(perms[0], perms[0]).sum_diff == 0
        assert (d_ab == 0) == (perms[0].positions == perms[1].positions)
        assert d_ac <= d_ab + d_bc


def test_format_avg_rounding():
    assert format_avg(86, 30) == "2.9"
    assert format_avg(288, 30) == "9.6"
    assert format_avg(0, 7) == "0.0"
    assert format_avg(9, 4) == "2.3"  # 2.25 rounds half up on the rational
    assert format_avg(301, 10) == "30.1"


# ---------------------------------------------------------------------------
# pairwise consistency
# ---------------------------------------------------------------------------

def test_pairwise_symmetry_and_zero_diagonal():
    rng = random.Random(9)
    ids = tuple(range(10))
    rankings = [RankedList(ids, tuple(rng.sample(range(1, 11), 10)))
                for _ in range(4)]
    matrix = pairwise_consistency(rankings)
    for i in range(4):
        assert matrix[i][i] == 0
        for j in range(4):
            assert matrix[i][j] == matrix[j][i]


def test_identical_pair_is_zero():
    ranked = RankedList((0, 1), (1, 2))
    assert pairwise_consistency([ranked, ranked])[0][1] == 0


def test_pairwise_random_set_replay():
    # the per-person columns of the bundled random table reproduce the
    # published pairwise averages exactly at 1-decimal rounding
    table = read_rankings_csv(bundled_positions_path("buzz_random"))
    matrix = pairwise_consistency(table.mf)
    expected = {(0, 1): "5.1", (0, 2): "1.7", (0, 3): "2.4",
                (1, 2): "4.8", (1, 3): "6.7", (2, 3): "3.1"}
    for (i, j), display in expected.items():
        frac = matrix[i][j]
        assert format_avg(frac.numerator, frac.denominator) == display


def test_pairwise_popular_set_reproducible_cells():
    # two published popular-set cells do not match their own table columns
    # (3.27 and 1.87 recompute); the others agree at 1-decimal rounding
    table = read_rankings_csv(bundled_positions_path("buzz_popular"))
    matrix = pairwise_consistency(table.mf)
    expected = {(0, 1): "3.2", (0, 2): "2.5", (1, 2): "2.6", (2, 3): "2.5"}
    for (i, j), display in expected.items():
        frac = matrix[i][j]
        assert format_avg(frac.numerator, frac.denominator) == display


# ---------------------------------------------------------------------------
# separator
# ---------------------------------------------------------------------------

def test_separable_cohorts_fit_cleanly():
    points = ([(10 ** k, 5.0 + k, "popular") for k in range(1, 6)]
              + [(10 ** k, 1.0 + k * 0.2, "random") for k in range(1, 6)])
    fit = fit_linear_separator(points, epochs=200, seed=0)
    assert fit.misclassified == ()
    # invariant: the reported miss set equals re-evaluation of the weights
    for i, (x, y, label) in enumerate(points):
        want = 1 if label == "popular" else -1
        assert (classify(fit.weights, x, y) != want) == (i in fit.misclassified)


def test_flipped_labels_same_miss_count():
    rng = random.Random(44)
    points = [(rng.randint(1, 10000), rng.uniform(0, 8),
               rng.choice(["popular", "random"])) for _ in range(40)]
    flipped = [(x, y, "random" if lbl == "popular" else "popular")
               for x, y, lbl in points]
    a = fit_linear_separator(points, epochs=50, seed=3)
    b = fit_linear_separator(flipped, epochs=50, seed=3)
    assert len(a.misclassified) == len(b.misclassified)
    assert a.weights == tuple(-w for w in b.weights)


def segments_cross(p1, p2, q1, q2):
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return (v > 0) - (v < 0)
    return (orient(p1, p2, q1) != orient(p1, p2, q2)
            and orient(q1, q2, p1) != orient(q1, q2, p2))


def test_xor_points_cannot_be_separated():
    # features: log10(x) in {0, 1}, y in {0, 1}; classes on opposite corners
    points = [(1, 0.0, "popular"), (10, 1.0, "popular"),
              (1, 1.0, "random"), (10, 0.0, "random")]
    # oracle: the class segments cross, so no separating line exists
    assert segments_cross((0, 0), (1, 1), (0, 1), (1, 0))
    fit = fit_linear_separator(points, epochs=100, seed=1)
    assert len(fit.misclassified) >= 1


def test_separator_input_validation():
    with pytest.raises(ValueError, match="cohort"):
        fit_linear_separator([(10, 1.0, "popular")])
    with pytest.raises(ValueError, match="positive"):
        fit_linear_separator([(0, 1.0, "popular"), (5, 2.0, "random")])
    with pytest.raises(ValueError, match="label"):
        fit_linear_separator([(1, 1.0, "viral"), (5, 2.0, "random")])


def test_separator_deterministic():
    rng = random.Random(10)
    points = [(rng.randint(1, 500), rng.uniform(0, 5),
               rng.choice(["popular", "random"])) for _ in range(30)]
    a = fit_linear_separator(points, epochs=100, seed=8)
    b = fit_linear_separator(points, epochs=100, seed=8)
    assert a.weights == b.weights and a.misclassified == b.misclassified
