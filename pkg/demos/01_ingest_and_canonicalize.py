"""
Ingesting a follow graph and a share log
========================================

socrank's input model is three TSV files: follow edges (a follows b), share
records (user, epoch seconds, url), and an optional redirect alias map. This
walk-through builds a toy corpus in a temp directory, loads it, and shows
what canonicalization and the min-spreaders filter do to the URL universe.
"""

import tempfile
from pathlib import Path

from socrank import canonicalize_url, load_edges, load_shares

workdir = Path(tempfile.mkdtemp(prefix="socrank_demo_"))

(workdir / "edges.tsv").write_text(
    "alice\tbob\n"
    "bob\talice\n"
    "carol\talice\n"
    "carol\tbob\n"
    "dave\tcarol\n"
    "# comments and duplicate edges are tolerated\n"
    "alice\tbob\n"
)

(workdir / "shares.tsv").write_text(
    "alice\t1700000000\thttp://news.example.com/story\n"
    "bob\t1700000060\tHTTP://News.Example.com/story\n"   # same page, shouty
    "carol\t1700000120\thttp://sho.rt/abc\n"             # masked by a shortener
    "dave\t1700000180\thttp://lonely.example.com/page\n"
)

redirects = {"sho.rt/abc": "http://news.example.com/story"}

print("Canonicalization folds equivalent spellings together:")
for raw in ["HTTP://News.Example.com/story", "http://sho.rt/abc",
            "https://x.example.com:443/a#section"]:
    print(f"  {raw:45} -> {canonicalize_url(raw, redirects)}")

graph = load_edges(workdir / "edges.tsv")
print(f"\nLoaded {graph}")
print("  handles:", graph.handles)
print("  alice follows:", [graph.handles[v] for v in graph.out_neighbors(0)])
print("  alice's followers:", [graph.handles[v] for v in graph.in_neighbors(0)])

# min_spreaders=2 keeps only URLs shared by at least two distinct users
index = load_shares(workdir / "shares.tsv", graph, redirects, min_spreaders=2)
print(f"\nFiltered URL universe ({index.n_urls} of 2 candidate URLs kept):")
for uid, url in enumerate(index.urls):
    spreaders = [graph.handles[int(v)] for v in index.spreaders[uid]]
    print(f"  {url}  spread by {spreaders}")
print("\nThe redirect collapsed carol's short link into the same URL, so the")
print("story has three spreaders; dave's page had only one and was dropped.")
