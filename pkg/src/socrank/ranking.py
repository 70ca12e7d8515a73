"""Competition ranking of scored items, shared by every ranker.

Competition ranking: items sorted by descending score; exact ties share the
smallest applicable position and the next distinct score skips accordingly
(1, 2, 2, 4). Display order of a RankedList is ascending item id.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class RankedList:
    """1-based competition positions for a set of items (urls, in the pipeline)."""

    ids: tuple
    positions: tuple[int, ...]
    _by_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_by_id", dict(zip(self.ids, self.positions)))

    def position_of(self, item_id):
        return self._by_id[item_id]

    def as_dict(self):
        return dict(self._by_id)

    def __len__(self):
        return len(self.ids)

    @classmethod
    def from_positions(cls, positions):
        """Wrap externally supplied item -> position pairs (e.g. replayed tables)."""
        items = sorted(positions)
        return cls(tuple(items), tuple(int(positions[i]) for i in items))


def competition_rank(scores):
    """Rank a mapping item -> score by descending score.

    Exact score ties share the smaller position; rows of the result are
    ordered by ascending item id.
    """
    if not scores:
        raise ValueError("cannot rank an empty score table")
    return rank_by_key(scores, lambda item: (-scores[item],))


def rank_by_key(items, key):
    """Competition-rank items by an ascending sort key (tuples compare fine).

    Items with equal keys share a position. `items` is any iterable of ids;
    `key` maps an id to its sort key.
    """
    ids = list(items)
    keyed = sorted(ids, key=lambda i: (key(i), _display_key(i)))
    positions = {}
    prev_key = None
    prev_pos = 0
    for rank0, item in enumerate(keyed, start=1):
        k = key(item)
        if k != prev_key:
            prev_key, prev_pos = k, rank0
        positions[item] = prev_pos
    ordered = sorted(ids, key=_display_key)
    return RankedList(tuple(ordered), tuple(positions[i] for i in ordered))


def _display_key(item):
    # ints and strings both occur as ids; keep sorts type-stable
    return (0, item) if isinstance(item, int) else (1, str(item))
