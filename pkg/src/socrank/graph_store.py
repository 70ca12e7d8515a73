"""Follow-graph ingestion, URL canonicalization, share indexing, and snapshot caches.

The stored edge orientation is (a, b) = "a follows b" throughout the package:
``out_neighbors(a)`` are the accounts a follows, ``in_neighbors(a)`` are a's
followers (the ones who receive what a posts).
"""

from __future__ import annotations

import logging
import struct
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from urllib.parse import urlsplit, urlunsplit

import numpy as np

from .errors import (
    CanonicalizationError,
    DataError,
    MalformedLineError,
    SnapshotFormatError,
)

logger = logging.getLogger(__name__)

SNAPSHOT_MAGIC = b"SOCRANK1"
_GRAPH_SECTION = b"GRPH"
_SHARE_SECTION = b"SHRS"

MAX_REDIRECT_HOPS = 10

_DEFAULT_PORTS = {"http": 80, "https": 443, "ftp": 21}


# ---------------------------------------------------------------------------
# Graph snapshot
# ---------------------------------------------------------------------------

class GraphSnapshot:
    """Immutable directed follow graph with dense node ids 0..n-1.

    Adjacency is stored CSR-style in both directions; both target arrays are
    sorted ascending per node, contain no self-loops and no duplicates, and
    are exact transposes of each other. Original string handles are kept in a
    symbol table (`handles`), id assignment order is first appearance in the
    input, which makes ingestion fully deterministic.
    """

    __slots__ = ("n", "m", "out_offsets", "out_targets", "in_offsets",
                 "in_targets", "handles", "_handle_ids")

    def __init__(self, n, out_offsets, out_targets, in_offsets, in_targets, handles):
        self.n = int(n)
        self.m = int(len(out_targets))
        self.out_offsets = out_offsets
        self.out_targets = out_targets
        self.in_offsets = in_offsets
        self.in_targets = in_targets
        self.handles = tuple(handles)
        self._handle_ids = {h: i for i, h in enumerate(self.handles)}
        for arr in (out_offsets, out_targets, in_offsets, in_targets):
            arr.setflags(write=False)

    @classmethod
    def from_edges(cls, n, edges, handles):
        """Build a snapshot from a deduplicated, loop-free (m, 2) edge array."""
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        out_offsets, out_targets = _csr(n, edges[:, 0], edges[:, 1])
        in_offsets, in_targets = _csr(n, edges[:, 1], edges[:, 0])
        return cls(n, out_offsets, out_targets, in_offsets, in_targets, handles)

    def out_neighbors(self, v):
        return self.out_targets[self.out_offsets[v]:self.out_offsets[v + 1]]

    def in_neighbors(self, v):
        return self.in_targets[self.in_offsets[v]:self.in_offsets[v + 1]]

    @property
    def out_degrees(self):
        return np.diff(self.out_offsets)

    @property
    def in_degrees(self):
        return np.diff(self.in_offsets)

    def node_id(self, handle):
        return self._handle_ids[handle]

    def edge_list(self):
        """All edges as an (m, 2) array, grouped by source, targets ascending."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), self.out_degrees)
        return np.column_stack([src, self.out_targets.astype(np.int64)])

    def __repr__(self):
        return f"GraphSnapshot(n={self.n}, m={self.m})"


def _csr(n, src, dst):
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.add.at(offsets, src + 1, 1)
    np.cumsum(offsets, out=offsets)
    return offsets, dst.astype(np.int32)


def load_edges(path, nodes_path=None):
    """Load a `follower<TAB>followee` edge list into a GraphSnapshot.

    `#` lines and blank lines are skipped. Duplicate edges and self-loops are
    dropped with a counted warning; any other malformed line is an error that
    reports its line number. An empty file yields an empty graph. An optional
    node manifest (one handle per line) extends the node set beyond the
    handles seen in edges.
    """
    path = Path(path)
    handle_ids: dict[str, int] = {}
    handles: list[str] = []

    def intern(handle):
        node = handle_ids.get(handle)
        if node is None:
            node = len(handles)
            handle_ids[handle] = node
            handles.append(handle)
        return node

    edges = set()
    edge_order = []
    self_loops = 0
    duplicates = 0
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise MalformedLineError(path, line_no, "expected exactly two tab-separated handles")
            a, b = intern(parts[0]), intern(parts[1])
            if a == b:
                self_loops += 1
                continue
            if (a, b) in edges:
                duplicates += 1
                continue
            edges.add((a, b))
            edge_order.append((a, b))
    if nodes_path is not None:
        with open(nodes_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if line.strip() and not line.startswith("#"):
                    intern(line)
    if self_loops or duplicates:
        logger.warning("%s: dropped %d self-loops and %d duplicate edges",
                       path, self_loops, duplicates)
    n = len(handles)
    edge_arr = np.array(edge_order, dtype=np.int64).reshape(-1, 2)
    return GraphSnapshot.from_edges(n, edge_arr, handles)


# ---------------------------------------------------------------------------
# URL canonicalization
# ---------------------------------------------------------------------------

def canonicalize_url(raw, redirects=None):
    """Bring a URL into canonical form, resolving offline redirect aliases.

    Lowercases scheme and host, strips default ports, the fragment, and the
    trailing slash of an otherwise empty path. The alias->canonical map is
    applied transitively (cycle-safe, at most ``MAX_REDIRECT_HOPS`` hops);
    alias keys may omit the scheme. The result is idempotent:
    ``canonicalize_url(canonicalize_url(x)) == canonicalize_url(x)``.

    Raises CanonicalizationError for unparseable URLs, redirect cycles, and
    over-long redirect chains.
    """
    if raw is None or not raw.strip():
        raise CanonicalizationError("empty URL")
    current = raw.strip()
    visited = set()
    hops = 0
    while True:
        target = _redirect_target(current, redirects)
        if target is not None:
            visited.add(current)
            if target in visited:
                raise CanonicalizationError(f"redirect cycle at {target!r}")
            hops += 1
            if hops > MAX_REDIRECT_HOPS:
                raise CanonicalizationError(
                    f"redirect chain longer than {MAX_REDIRECT_HOPS} hops for {raw!r}")
            current = target
            continue
        normalized = _normalize_url(current)
        if normalized == current:
            return normalized
        current = normalized


def _redirect_target(url, redirects):
    if not redirects:
        return None
    target = redirects.get(url)
    if target is not None:
        return target
    # alias tables frequently omit the scheme ("bit.ly/x")
    for prefix in ("http://", "https://"):
        if url.startswith(prefix):
            target = redirects.get(url[len(prefix):])
            if target is not None:
                return target
    return None


def _normalize_url(url):
    try:
        parts = urlsplit(url)
        port = parts.port  # raises ValueError on a non-numeric port
    except ValueError as exc:
        raise CanonicalizationError(f"unparseable URL {url!r}: {exc}") from None
    scheme = parts.scheme.lower()
    host = parts.hostname
    if not scheme or not host:
        raise CanonicalizationError(f"not an absolute URL: {url!r}")
    if ":" in host:  # bare IPv6 address, re-bracket
        host = f"[{host}]"
    netloc = host
    if port is not None and port != _DEFAULT_PORTS.get(scheme):
        netloc = f"{host}:{port}"
    if parts.username:
        cred = parts.username
        if parts.password is not None:
            cred += f":{parts.password}"
        netloc = f"{cred}@{netloc}"
    path = parts.path
    if path == "/":
        path = ""
    return urlunsplit((scheme, netloc, path, parts.query, ""))


def load_redirects(path):
    """Load an `alias<TAB>canonical` map; later lines win on duplicate aliases."""
    path = Path(path)
    redirects = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise MalformedLineError(path, line_no, "expected alias<TAB>canonical")
            redirects[parts[0]] = parts[1]
    return redirects


# ---------------------------------------------------------------------------
# Share index
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShareRecord:
    """One parsed share line: a user posted a URL at a point in time."""
    user: int
    timestamp: int
    url: str


class ShareIndex:
    """Dense URL table plus both directions of the user<->URL share relation.

    ``spreaders[u]`` is the sorted array of node ids that shared URL u;
    ``shares_by_user[v]`` is the sorted array of url ids node v shared. The
    two are transposes of each other, and every spreader id is a valid node
    of the graph the index was built against. Earliest share times per
    (url, user) pair are retained but unused by the rankers.
    """

    __slots__ = ("urls", "spreaders", "shares_by_user", "share_times", "_url_ids")

    def __init__(self, urls, spreaders, shares_by_user, share_times=None):
        self.urls = tuple(urls)
        self.spreaders = tuple(np.asarray(s, dtype=np.int32) for s in spreaders)
        self.shares_by_user = tuple(np.asarray(s, dtype=np.int32) for s in shares_by_user)
        self.share_times = dict(share_times or {})
        self._url_ids = {u: i for i, u in enumerate(self.urls)}
        for arr in self.spreaders + self.shares_by_user:
            arr.setflags(write=False)

    @property
    def n_urls(self):
        return len(self.urls)

    @property
    def n_users(self):
        return len(self.shares_by_user)

    def url_id(self, url):
        return self._url_ids[url]

    def spreader_count(self, url_id):
        return len(self.spreaders[url_id])

    def __repr__(self):
        return f"ShareIndex(n_urls={self.n_urls}, n_users={self.n_users})"


@dataclass
class ShareLoadStats:
    """Parse-time counters used by the ingest data summary."""
    total_lines: int = 0
    dropped_unknown_user: int = 0
    dropped_bad_url: int = 0
    filtered_urls: int = 0
    messages_per_user: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    urls_per_user: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))


def load_shares(path, graph, redirects=None, min_spreaders=1):
    """Build a ShareIndex from a `user<TAB>epoch_seconds<TAB>url` file.

    URLs are canonicalized (uncanonicalizable ones are dropped with a counted
    warning), duplicate shares collapse to set membership, shares by handles
    absent from the graph are dropped with a counted warning, and URLs whose
    spreader set is smaller than ``min_spreaders`` are excluded
    (``min_spreaders=2`` is the filtered-universe rule).
    """
    index, _ = load_shares_with_stats(path, graph, redirects, min_spreaders)
    return index


def load_shares_with_stats(path, graph, redirects=None, min_spreaders=1):
    """`load_shares` plus the per-user parse counters the data summary needs."""
    if min_spreaders < 1:
        raise ValueError("min_spreaders must be >= 1")
    path = Path(path)
    stats = ShareLoadStats(
        messages_per_user=np.zeros(graph.n, dtype=np.int64),
        urls_per_user=np.zeros(graph.n, dtype=np.int64),
    )
    spreader_sets: dict[str, set[int]] = {}
    url_order: list[str] = []
    times: dict[tuple[str, int], int] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            stats.total_lines += 1
            parts = line.split("\t")
            if len(parts) != 3 or not parts[0] or not parts[2]:
                raise MalformedLineError(path, line_no, "expected user<TAB>epoch_seconds<TAB>url")
            try:
                timestamp = int(parts[1])
            except ValueError:
                raise MalformedLineError(path, line_no, f"unparseable timestamp {parts[1]!r}") from None
            user = graph._handle_ids.get(parts[0])
            if user is None:
                stats.dropped_unknown_user += 1
                continue
            stats.messages_per_user[user] += 1
            try:
                url = canonicalize_url(parts[2], redirects)
            except CanonicalizationError:
                stats.dropped_bad_url += 1
                continue
            stats.urls_per_user[user] += 1
            members = spreader_sets.get(url)
            if members is None:
                members = spreader_sets[url] = set()
                url_order.append(url)
            members.add(user)
            key = (url, user)
            if key not in times or timestamp < times[key]:
                times[key] = timestamp
    if stats.dropped_unknown_user or stats.dropped_bad_url:
        logger.warning("%s: dropped %d shares by unknown users and %d unparseable URLs",
                       path, stats.dropped_unknown_user, stats.dropped_bad_url)

    kept = [u for u in url_order if len(spreader_sets[u]) >= min_spreaders]
    stats.filtered_urls = len(url_order) - len(kept)
    spreaders = [np.array(sorted(spreader_sets[u]), dtype=np.int32) for u in kept]
    by_user: list[list[int]] = [[] for _ in range(graph.n)]
    for url_id, members in enumerate(spreaders):
        for v in members:
            by_user[v].append(url_id)
    share_times = {(uid, v): times[(url, v)]
                   for uid, url in enumerate(kept)
                   for v in spreader_sets[url]}
    index = ShareIndex(kept, spreaders, [np.array(s, dtype=np.int32) for s in by_user],
                       share_times)
    return index, stats


# ---------------------------------------------------------------------------
# BFS sampling
# ---------------------------------------------------------------------------

def bfs_sample(graph, seed, max_nodes):
    """Induced subgraph on the first `max_nodes` nodes of a BFS from `seed`.

    Traversal runs over outgoing (follow) edges, level by level, ties within
    a level broken by ascending node id. Node ids in the returned snapshot
    follow discovery order; handles are preserved. Note that this sampling
    skews toward high-degree nodes.
    """
    if not 0 <= seed < graph.n:
        raise ValueError(f"seed {seed} not in graph")
    if max_nodes < 1:
        raise ValueError("max_nodes must be >= 1")
    visited = {seed}
    sample = [seed]
    frontier = [seed]
    while frontier and len(sample) < max_nodes:
        next_level = set()
        for v in frontier:
            for w in graph.out_neighbors(v):
                if int(w) not in visited:
                    next_level.add(int(w))
        frontier = sorted(next_level)[:max_nodes - len(sample)]
        visited.update(frontier)
        sample.extend(frontier)
    local = {v: i for i, v in enumerate(sample)}
    edges = [(local[v], local[int(w)])
             for v in sample
             for w in graph.out_neighbors(v)
             if int(w) in local]
    handles = [graph.handles[v] for v in sample]
    return GraphSnapshot.from_edges(len(sample), np.array(edges, np.int64).reshape(-1, 2), handles)


# ---------------------------------------------------------------------------
# Binary caches
# ---------------------------------------------------------------------------

def save_snapshot(graph, path):
    """Write the graph cache: magic, section tag, little-endian arrays, symbols."""
    payload = bytearray()
    payload += SNAPSHOT_MAGIC + _GRAPH_SECTION
    payload += struct.pack("<QQ", graph.n, graph.m)
    payload += graph.out_offsets.astype("<u8").tobytes()
    payload += graph.out_targets.astype("<u4").tobytes()
    symbols = "\n".join(graph.handles).encode("utf-8")
    payload += struct.pack("<Q", len(symbols)) + symbols
    Path(path).write_bytes(bytes(payload))


def load_snapshot(path):
    """Read a graph cache written by save_snapshot; rejects wrong magic/section."""
    reader = _CacheReader(path, _GRAPH_SECTION)
    n, m = reader.unpack("<QQ")
    out_offsets = reader.array("<u8", n + 1).astype(np.int64)
    out_targets = reader.array("<u4", m).astype(np.int32)
    handles = reader.symbols(n)
    src = np.repeat(np.arange(n, dtype=np.int64), np.diff(out_offsets))
    in_offsets, in_targets = _csr(n, out_targets.astype(np.int64), src)
    return GraphSnapshot(n, out_offsets, out_targets, in_offsets, in_targets, handles)


def save_share_index(index, path):
    """Write the share-index cache (spreader CSR, share times, URL table)."""
    n_pairs = sum(len(s) for s in index.spreaders)
    payload = bytearray()
    payload += SNAPSHOT_MAGIC + _SHARE_SECTION
    payload += struct.pack("<QQQ", index.n_urls, index.n_users, n_pairs)
    offsets = np.zeros(index.n_urls + 1, dtype=np.int64)
    flat = np.zeros(n_pairs, dtype=np.int64)
    times = np.zeros(n_pairs, dtype=np.int64)
    pos = 0
    for uid, members in enumerate(index.spreaders):
        offsets[uid + 1] = offsets[uid] + len(members)
        for v in members:
            flat[pos] = v
            times[pos] = index.share_times.get((uid, int(v)), 0)
            pos += 1
    payload += offsets.astype("<u8").tobytes()
    payload += flat.astype("<u4").tobytes()
    payload += times.astype("<u8").tobytes()
    symbols = "\n".join(index.urls).encode("utf-8")
    payload += struct.pack("<Q", len(symbols)) + symbols
    Path(path).write_bytes(bytes(payload))


def load_share_index(path):
    """Read a share-index cache written by save_share_index."""
    reader = _CacheReader(path, _SHARE_SECTION)
    n_urls, n_users, n_pairs = reader.unpack("<QQQ")
    offsets = reader.array("<u8", n_urls + 1).astype(np.int64)
    flat = reader.array("<u4", n_pairs).astype(np.int64)
    times = reader.array("<u8", n_pairs).astype(np.int64)
    urls = reader.symbols(n_urls)
    spreaders = [flat[offsets[u]:offsets[u + 1]] for u in range(n_urls)]
    by_user: list[list[int]] = [[] for _ in range(n_users)]
    share_times = {}
    for uid in range(n_urls):
        for k in range(offsets[uid], offsets[uid + 1]):
            v = int(flat[k])
            by_user[v].append(uid)
            share_times[(uid, v)] = int(times[k])
    return ShareIndex(urls, spreaders,
                      [np.array(s, dtype=np.int32) for s in by_user], share_times)


class _CacheReader:
    def __init__(self, path, section):
        self._path = Path(path)
        self._buf = self._path.read_bytes()
        self._pos = 0
        magic = self._take(len(SNAPSHOT_MAGIC))
        if magic != SNAPSHOT_MAGIC:
            raise SnapshotFormatError(
                f"{path}: bad cache magic {magic!r}, expected {SNAPSHOT_MAGIC!r}")
        tag = self._take(len(section))
        if tag != section:
            raise SnapshotFormatError(f"{path}: wrong cache section {tag!r}")

    def _take(self, size):
        if self._pos + size > len(self._buf):
            raise SnapshotFormatError(f"{self._path}: truncated cache")
        chunk = self._buf[self._pos:self._pos + size]
        self._pos += size
        return chunk

    def unpack(self, fmt):
        return struct.unpack(fmt, self._take(struct.calcsize(fmt)))

    def array(self, dtype, count):
        dt = np.dtype(dtype)
        return np.frombuffer(self._take(dt.itemsize * int(count)), dtype=dt).copy()

    def symbols(self, count):
        (size,) = self.unpack("<Q")
        blob = self._take(size).decode("utf-8")
        symbols = blob.split("\n") if blob else []
        if len(symbols) != count:
            raise SnapshotFormatError(
                f"{self._path}: symbol table holds {len(symbols)} entries, expected {count}")
        return symbols
