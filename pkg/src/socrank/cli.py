"""Deterministic experiment driver.

Subcommands: `synth`, `ingest`, `rank`, `analyze`, `summary`. Every run is a
pure function of (input files, config, seed): outputs are byte-identical
across repeated runs. Outputs are CSV (RFC quoting, \\n terminators) and TSV
plot data; nothing here renders images.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import os
import random
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path

import numpy as np

from . import analysis, flow_rank, graph_store, hsn, prsn, synth
from .errors import ConfigError, DataError
from .ranking import RankedList

_PERSON_SEED_OFFSET = {"popular": 101, "random": 202}


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

@dataclass
class Config:
    """Flat experiment configuration; file keys and field names coincide."""

    edges_path: str = ""
    shares_path: str = ""
    redirects_path: str = ""
    nodes_path: str = ""
    out_dir: str = "out"
    min_spreaders: int = 2
    sigma: float = 0.85
    pagerank_iterations: int = 100
    pagerank_epsilon: float = 1e-10
    hits_iterations: int = 50
    depth_cap: int = 3
    n_popular: int = 200
    n_random: int = 200
    n_selected: int = 30
    persons: int = 4
    person_handles: str = ""
    tie_breaker: str = "prsn"
    seed: int = 42
    threads: int = 0
    distance_direction: str = "undirected"
    distance_sources: int = 10
    distance_spreaders: int = 10
    separator_epochs: int = 1000
    synth_nodes: int = 2000
    synth_follows: int = 8
    synth_urls: int = 1000
    synth_celebrity_fraction: float = 0.0
    synth_celebrity_bias: float = 0.4
    synth_spreader_alpha: float = 1.3
    synth_cascade_p: float = 0.7

    def validate(self):
        checks = [
            (0.0 < self.sigma < 1.0, "sigma must be in (0, 1)"),
            (self.pagerank_iterations >= 1, "pagerank_iterations must be >= 1"),
            (self.pagerank_epsilon >= 0.0, "pagerank_epsilon must be >= 0"),
            (self.hits_iterations >= 1, "hits_iterations must be >= 1"),
            (self.depth_cap >= 1, "depth_cap must be >= 1"),
            (self.min_spreaders >= 1, "min_spreaders must be >= 1"),
            (self.n_popular >= 1, "n_popular must be >= 1"),
            (self.n_random >= 1, "n_random must be >= 1"),
            (1 <= self.n_selected <= min(self.n_popular, self.n_random),
             "n_selected must be >= 1 and no larger than either URL pool"),
            (self.persons >= 1 or bool(self.person_handles),
             "persons must be >= 1 (or provide person_handles)"),
            (self.tie_breaker in ("prsn", "hsn"), "tie_breaker must be prsn or hsn"),
            (self.distance_direction in analysis.DISTANCE_DIRECTIONS,
             f"distance_direction must be one of {analysis.DISTANCE_DIRECTIONS}"),
            (self.distance_sources >= 1, "distance_sources must be >= 1"),
            (self.distance_spreaders >= 1, "distance_spreaders must be >= 1"),
            (self.separator_epochs >= 1, "separator_epochs must be >= 1"),
            (self.threads >= 0, "threads must be >= 0"),
            (self.synth_nodes >= 2, "synth_nodes must be >= 2"),
            (self.synth_follows >= 1, "synth_follows must be >= 1"),
            (self.synth_urls >= 0, "synth_urls must be >= 0"),
            (0.0 <= self.synth_celebrity_fraction <= 1.0,
             "synth_celebrity_fraction must be in [0, 1]"),
            (0.0 <= self.synth_celebrity_bias <= 1.0,
             "synth_celebrity_bias must be in [0, 1]"),
            (self.synth_spreader_alpha > 0, "synth_spreader_alpha must be positive"),
            (0.0 <= self.synth_cascade_p <= 1.0, "synth_cascade_p must be in [0, 1]"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)

    @property
    def effective_threads(self):
        return self.threads if self.threads > 0 else (os.cpu_count() or 1)

    def synth_spec(self):
        return synth.SynthSpec(
            n_nodes=self.synth_nodes, follows_per_node=self.synth_follows,
            n_urls=self.synth_urls,
            celebrity_fraction=self.synth_celebrity_fraction,
            celebrity_bias=self.synth_celebrity_bias,
            spreader_alpha=self.synth_spreader_alpha,
            cascade_p=self.synth_cascade_p, seed=self.seed)


_FIELD_TYPES = {f.name: f.type for f in fields(Config)}


def _convert(key, raw):
    kind = _FIELD_TYPES.get(key)
    if kind is None:
        raise ConfigError(f"unknown config key {key!r}")
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"config key {key!r}: cannot parse {raw!r} as {kind}") from None


def parse_config_file(path):
    """Read a flat key=value file; `#` comments and blank lines are skipped."""
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{line_no}: expected key=value")
        key, _, raw = stripped.partition("=")
        key, raw = key.strip(), raw.strip()
        values[key] = _convert(key, raw)
    return values


def build_config(args):
    """Merge defaults < config file < command-line flags, then validate."""
    values = {}
    if args.config:
        values.update(parse_config_file(args.config))
    for pair in args.set or []:
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        key, _, raw = pair.partition("=")
        values[key.strip()] = _convert(key.strip(), raw.strip())
    if args.seed is not None:
        values["seed"] = args.seed
    if args.threads is not None:
        values["threads"] = args.threads
    if args.out is not None:
        values["out_dir"] = args.out
    config = Config(**values)
    config.validate()
    return config


# ---------------------------------------------------------------------------
# Small shared helpers
# ---------------------------------------------------------------------------

def _map_ordered(fn, items, threads):
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _write_csv(path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_tsv(path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(str(c) for c in row) + "\n")


def _require(path, hint):
    if not path.exists():
        raise DataError(f"missing {path.name}: {hint}")
    return path


def _graph_cache(out_dir):
    return out_dir / "graph.socrank"


def _share_cache(out_dir):
    return out_dir / "shares.socrank"


def bundled_positions_path(name):
    """Path to a bundled positions fixture: 'buzz_popular' or 'buzz_random'."""
    return resources.files("socrank.data") / f"{name}_positions.csv"


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------

def cmd_synth(config):
    spec = config.synth_spec()
    edges_path, shares_path = synth.write_corpus(spec, config.out_dir)
    print(f"wrote {edges_path} and {shares_path} "
          f"(n_nodes={spec.n_nodes}, n_urls={spec.n_urls}, seed={spec.seed})")


# ---------------------------------------------------------------------------
# ingest
# ---------------------------------------------------------------------------

def cmd_ingest(config):
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not config.edges_path or not config.shares_path:
        raise ConfigError("ingest requires edges_path and shares_path")
    for path in (config.edges_path, config.shares_path):
        if not Path(path).exists():
            raise DataError(f"input file not found: {path}")
    redirects = None
    if config.redirects_path:
        redirects = graph_store.load_redirects(config.redirects_path)
    graph = graph_store.load_edges(config.edges_path,
                                   config.nodes_path or None)
    index, stats = graph_store.load_shares_with_stats(
        config.shares_path, graph, redirects, config.min_spreaders)
    graph_store.save_snapshot(graph, _graph_cache(out_dir))
    graph_store.save_share_index(index, _share_cache(out_dir))
    rows = _summary_rows(graph, index, stats)
    _write_csv(out_dir / "summary.csv", ["row", "mean", "std", "sum"], rows)
    (out_dir / "summary.txt").write_text(_format_summary(rows), encoding="utf-8")
    print(_format_summary(rows), end="")


def _summary_rows(graph, index, stats):
    filtered_per_user = np.array([len(s) for s in index.shares_by_user], dtype=np.int64)

    def stat_row(name, counts):
        if len(counts) == 0:
            return [name, "0.00", "0.00", 0]
        return [name, f"{counts.mean():.2f}", f"{counts.std():.2f}", int(counts.sum())]

    return [
        ["Users", "-", "-", graph.n],
        stat_row("Inlinks", graph.in_degrees),
        stat_row("Outlinks", graph.out_degrees),
        stat_row("Messages", stats.messages_per_user),
        stat_row("All URLs", stats.urls_per_user),
        stat_row("*URLs", filtered_per_user),
    ]


def _format_summary(rows):
    lines = [f"{'':<10}{'mean':>12}{'std':>12}{'sum':>16}"]
    for name, mean, std, total in rows:
        lines.append(f"{name:<10}{mean:>12}{std:>12}{total:>16,}")
    return "\n".join(lines) + "\n"


def cmd_summary(config):
    out_dir = Path(config.out_dir)
    path = _require(out_dir / "summary.csv", "run `socrank ingest` first")
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        rows = [[name, mean, std, int(total)] for name, mean, std, total in reader]
    print(_format_summary(rows), end="")


# ---------------------------------------------------------------------------
# rank
# ---------------------------------------------------------------------------

def _load_caches(config):
    out_dir = Path(config.out_dir)
    graph = graph_store.load_snapshot(
        _require(_graph_cache(out_dir), "run `socrank ingest` first"))
    index = graph_store.load_share_index(
        _require(_share_cache(out_dir), "run `socrank ingest` first"))
    return graph, index


def _selected_sets(config, index):
    selection = analysis.select_url_sets(index, config.n_popular,
                                         config.n_random, config.seed)
    return selection, {
        "popular": selection.popular[:config.n_selected],
        "random": selection.random[:config.n_selected],
    }


def _persons_for_set(config, graph, set_name):
    if config.person_handles:
        handles = [h.strip() for h in config.person_handles.split(",") if h.strip()]
        try:
            return [graph.node_id(h) for h in handles]
        except KeyError as exc:
            raise DataError(f"person handle not in graph: {exc.args[0]!r}") from None
    rng = random.Random(config.seed * analysis.SEED_STRIDE
                        + _PERSON_SEED_OFFSET[set_name])
    return rng.sample(range(graph.n), min(config.persons, graph.n))


def cmd_rank(config):
    out_dir = Path(config.out_dir)
    graph, index = _load_caches(config)
    _, url_sets = _selected_sets(config, index)
    params = prsn.PageRankParams(config.sigma, config.pagerank_iterations,
                                 config.pagerank_epsilon)
    ranks = prsn.scaled_pagerank(graph, params)

    report = []
    person_rows = []
    for set_name, urls in url_sets.items():
        prsn_ranked = prsn.rank_urls(prsn.prsn_scores(ranks, index, urls))
        hsn_ranked = hsn.hsn_rank(hsn.hits(hsn.build_share_matrix(index, urls),
                                           config.hits_iterations))
        tie = prsn_ranked if config.tie_breaker == "prsn" else hsn_ranked
        persons = _persons_for_set(config, graph, set_name)
        mf = flow_rank.rank_for_users(graph, index, persons, urls,
                                      config.depth_cap, tie,
                                      threads=config.effective_threads)
        for k, person in enumerate(persons, start=1):
            person_rows.append([set_name, f"p{k}", graph.handles[person],
                                int(graph.out_degrees[person])])
        rows = []
        for u in sorted(urls, key=lambda u: (prsn_ranked.position_of(u), index.urls[u])):
            rows.append([index.urls[u], prsn_ranked.position_of(u),
                         hsn_ranked.position_of(u)]
                        + [r.url_positions[u] for r in mf])
        header = (["url", "prsn_pos", "hsn_pos"]
                  + [f"mf_pos_p{k}" for k in range(1, len(persons) + 1)])
        _write_csv(out_dir / f"rankings_{set_name}.csv", header, rows)
        report.append(_format_ranking_table(set_name, rows))
    _write_csv(out_dir / "persons.csv",
               ["set", "label", "handle", "outdegree"], person_rows)
    (out_dir / "rankings_report.txt").write_text("\n".join(report), encoding="utf-8")
    print(f"wrote rankings for {', '.join(url_sets)} to {out_dir.name}/")


def _format_ranking_table(set_name, rows):
    width = max([len(r[0]) for r in rows] + [4])
    lines = [f"== {set_name} URLs ==",
             f"{'url':<{width}}  {'PRSN':>4}  {'HSN':>4}  MF"]
    for row in rows:
        mf = "/".join(str(p) for p in row[3:])
        lines.append(f"{row[0]:<{width}}  {row[1]:>4}  {row[2]:>4}  {mf}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------

@dataclass
class RankingTable:
    """Parsed rankings CSV: per-algorithm positions over one URL set."""

    urls: list[str]
    prsn: RankedList
    hsn: RankedList
    mf: list[RankedList]


def read_rankings_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        field_names = reader.fieldnames or []
        mf_cols = sorted((c for c in field_names if c.startswith("mf_pos_p")),
                         key=lambda c: int(c.removeprefix("mf_pos_p")))
        if "url" not in field_names or "prsn_pos" not in field_names \
                or "hsn_pos" not in field_names:
            raise DataError(f"{path}: expected url,prsn_pos,hsn_pos[,mf_pos_p*] columns")
        urls, prsn_pos, hsn_pos = [], {}, {}
        mf_pos = [dict() for _ in mf_cols]
        try:
            for row in reader:
                url = row["url"]
                urls.append(url)
                prsn_pos[url] = int(row["prsn_pos"])
                hsn_pos[url] = int(row["hsn_pos"])
                for k, col in enumerate(mf_cols):
                    mf_pos[k][url] = int(row[col])
        except (TypeError, ValueError) as exc:
            raise DataError(f"{path}: malformed position value ({exc})") from None
    return RankingTable(urls=urls,
                        prsn=RankedList.from_positions(prsn_pos),
                        hsn=RankedList.from_positions(hsn_pos),
                        mf=[RankedList.from_positions(p) for p in mf_pos])


def cmd_analyze(config):
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tables = {}
    for set_name in ("popular", "random"):
        path = out_dir / f"rankings_{set_name}.csv"
        if path.exists():
            tables[set_name] = read_rankings_csv(path)
    if not tables:
        raise DataError("no rankings_*.csv in the output directory; "
                        "run `socrank rank` or drop in positions-only CSVs")

    rows = []
    for set_name, table in tables.items():
        stats = analysis.consistency(table.prsn, table.hsn)
        rows.append([set_name, "prsn", "hsn", stats.w, stats.sum_diff,
                     stats.avg_display])
    _write_csv(out_dir / "consistency.csv",
               ["set", "algo_a", "algo_b", "w", "sum_diff", "avg_diff"], rows)

    _write_pairwise(out_dir, tables)

    for set_name, table in tables.items():
        _write_tsv(out_dir / "plotdata" / f"prsn_hsn_{set_name}.tsv",
                   ["x", "y", "label"],
                   [[table.prsn.position_of(u), table.hsn.position_of(u), u]
                    for u in table.urls])
        if table.mf:
            _write_tsv(out_dir / "plotdata" / f"mf_vs_baselines_{set_name}.tsv",
                       ["person", "url", "mf_pos", "prsn_pos", "hsn_pos"],
                       [[f"p{k}", u, ranked.position_of(u),
                         table.prsn.position_of(u), table.hsn.position_of(u)]
                        for k, ranked in enumerate(table.mf, start=1)
                        for u in table.urls])

    if _graph_cache(out_dir).exists() and _share_cache(out_dir).exists():
        _analyze_graph_backed(config, out_dir)
    else:
        print("graph caches absent: positions-only mode "
              "(skipping affected sets, distances, separator)")
    print(f"wrote analysis outputs to {out_dir.name}/")


def _write_pairwise(out_dir, tables):
    """Pairwise per-person average rank differences in the combined layout:

    upper triangle = random set, lower triangle = popular set, right column =
    outdegrees of the random-set persons, bottom row = popular-set persons.
    """
    have = {name: t for name, t in tables.items() if t.mf}
    if len(have) < 2:
        return
    k = min(len(t.mf) for t in have.values())
    if k < 2:
        return
    matrices = {name: analysis.pairwise_consistency(t.mf[:k])
                for name, t in have.items()}
    outdeg = _person_outdegrees(out_dir, k)
    labels = [f"p{i}" for i in range(1, k + 1)]
    rows = []
    for i in range(k):
        row = [labels[i]]
        for j in range(k):
            if i == j:
                row.append("-")
            else:
                source = "random" if j > i else "popular"
                frac = matrices[source][i][j]
                row.append(analysis.format_avg(frac.numerator, frac.denominator))
        row.append(outdeg["random"][i])
        rows.append(row)
    rows.append(["outdegree_popular"] + outdeg["popular"] + [""])
    _write_csv(out_dir / "pairwise.csv",
               [""] + labels + ["outdegree_random"], rows)


def _person_outdegrees(out_dir, k):
    outdeg = {"popular": ["-"] * k, "random": ["-"] * k}
    path = out_dir / "persons.csv"
    if path.exists():
        with open(path, encoding="utf-8", newline="") as fh:
            for row in csv.DictReader(fh):
                idx = int(row["label"].removeprefix("p")) - 1
                if row["set"] in outdeg and idx < k:
                    outdeg[row["set"]][idx] = row["outdegree"]
    return outdeg


def _analyze_graph_backed(config, out_dir):
    graph, index = _load_caches(config)
    selection, _ = _selected_sets(config, index)
    pools = {"popular": selection.popular, "random": selection.random}
    threads = config.effective_threads

    affected_rows = []
    distance_rows = []
    points = []
    skipped = 0
    for set_name, urls in pools.items():
        stats = _map_ordered(lambda u: analysis.affected_set(graph, index, u),
                             urls, threads)
        samples = analysis.distance_samples_for_urls(
            graph, index, urls, n_sources=config.distance_sources,
            n_spreader_sample=config.distance_spreaders, seed=config.seed,
            direction=config.distance_direction, threads=threads)
        for st, sample in zip(stats, samples):
            url = index.urls[st.url]
            affected_rows.append([set_name, url, st.spreader_count,
                                  st.affected_size])
            avg = ("" if sample.avg_distance is None
                   else f"{sample.avg_distance:.6f}")
            distance_rows.append([set_name, url, avg, sample.sampled_sources,
                                  sample.sampled_spreaders,
                                  sample.reachable_pairs,
                                  sample.unreachable_pairs])
            if st.affected_size > 0 and sample.avg_distance is not None:
                points.append((st.affected_size, sample.avg_distance, set_name))
            else:
                skipped += 1
    _write_csv(out_dir / "affected.csv",
               ["set", "url", "spreader_count", "affected_size"], affected_rows)
    _write_csv(out_dir / "distances.csv",
               ["set", "url", "avg_distance", "sampled_sources",
                "sampled_spreaders", "reachable_pairs", "unreachable_pairs"],
               distance_rows)

    labels = {p[2] for p in points}
    if labels == {"popular", "random"}:
        fit = analysis.fit_linear_separator(points, epochs=config.separator_epochs,
                                            seed=config.seed)
        missed = set(fit.misclassified)
        _write_csv(out_dir / "separator.csv",
                   ["w_log_size", "w_distance", "bias", "points",
                    "misclassified", "skipped_points"],
                   [[repr(fit.weights[0]), repr(fit.weights[1]),
                     repr(fit.weights[2]), len(points), len(missed), skipped]])
        _write_tsv(out_dir / "plotdata" / "affected_distance.tsv",
                   ["x", "y", "label", "miss"],
                   [[x, f"{y:.6f}", label, int(i in missed)]
                    for i, (x, y, label) in enumerate(points)])


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    # spec exit-code table: usage errors are 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


_COMMANDS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "rank": cmd_rank,
    "analyze": cmd_analyze,
    "summary": cmd_summary,
}


def build_parser():
    parser = _Parser(prog="socrank",
                     description="Deterministic social URL-ranking experiments")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_text in [
        ("synth", "generate a synthetic follow graph and share log"),
        ("ingest", "load edge/share files, write binary caches and the data summary"),
        ("rank", "compute PRSN, HSN, and per-person max-flow rankings"),
        ("analyze", "consistency, pairwise, affected sets, distances, separator"),
        ("summary", "re-print the persisted data summary"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--seed", type=int, help="override the experiment seed")
        p.add_argument("--threads", type=int, help="worker pool size (0 = machine)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override any config key (repeatable)")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = build_config(args)
        _COMMANDS[args.command](config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except SystemExit:
        raise
    except Exception:
        traceback.print_exc()
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
