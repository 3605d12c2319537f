"""Frequent itemset mining and border extraction.

Mining is depth-first over vertical tid-lists (Eclat). Tid-lists are Python
int bitsets, so intersection is ``&`` and support is ``int.bit_count``.
Itemsets are canonical sorted tuples and collections iterate in
lexicographic order, regardless of the exploration order used internally.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, TextIO

from .corpus import Itemset, TransactionDatabase
from .errors import CapacityError

DEFAULT_MAX_ITEMSETS = 50_000_000

POSITIVE = "positive"
NEGATIVE = "negative"


@dataclass(frozen=True)
class FrequentItemsetCollection:
    """FI(minsup): every non-empty itemset with support >= ``minsup_count``."""

    minsup_count: int
    itemsets: Mapping[Itemset, int]

    def __len__(self) -> int:
        return len(self.itemsets)

    def __iter__(self) -> Iterator[Itemset]:
        return iter(self.itemsets)

    def __contains__(self, itemset) -> bool:
        return tuple(sorted(itemset)) in self.itemsets

    def support(self, itemset: Iterable[int]) -> int:
        return self.itemsets[tuple(sorted(itemset))]

    def at_least(self, minsup_count: int) -> FrequentItemsetCollection:
        """Sub-collection at a higher threshold, without re-mining."""
        if minsup_count < self.minsup_count:
            raise ValueError(
                f"cannot lower the threshold from {self.minsup_count} to {minsup_count} by filtering"
            )
        kept = {x: s for x, s in self.itemsets.items() if s >= minsup_count}
        return FrequentItemsetCollection(minsup_count, kept)

    def mean_support(self) -> float:
        return sum(self.itemsets.values()) / len(self.itemsets)

    def mean_length(self) -> float:
        return sum(map(len, self.itemsets)) / len(self.itemsets)


@dataclass(frozen=True)
class BorderSet:
    kind: str
    itemsets: tuple[Itemset, ...]

    def __len__(self) -> int:
        return len(self.itemsets)

    def __iter__(self) -> Iterator[Itemset]:
        return iter(self.itemsets)

    def __contains__(self, itemset) -> bool:
        return tuple(sorted(itemset)) in set(self.itemsets)

    def mean_length(self) -> float:
        return sum(map(len, self.itemsets)) / len(self.itemsets)


def mine_frequent(
    db: TransactionDatabase,
    minsup_count: int,
    max_itemsets: int = DEFAULT_MAX_ITEMSETS,
) -> FrequentItemsetCollection:
    """Mine all frequent itemsets of ``db`` with their exact supports.

    Raises ValueError when ``minsup_count`` is outside ``[1, len(db)]`` and
    CapacityError as soon as more than ``max_itemsets`` itemsets are found.
    """
    if not 1 <= minsup_count <= len(db):
        raise ValueError(f"minsup_count must lie in [1, {len(db)}], got {minsup_count}")

    tids = db.tidsets
    # ascending support keeps the tid-lists of deep branches short
    roots = sorted(
        ((item, tids[item], n) for item, n in db.singleton_support.items() if n >= minsup_count),
        key=lambda r: (r[2], r[0]),
    )
    found: dict[Itemset, int] = {}

    def extend(prefix: Itemset, siblings: list[tuple[int, int, int]]) -> None:
        for pos, (item, bits, n) in enumerate(siblings):
            itemset = prefix + (item,)
            found[itemset] = n
            if len(found) > max_itemsets:
                raise CapacityError(minsup_count, max_itemsets)
            children = []
            for other, other_bits, _ in siblings[pos + 1:]:
                joint = bits & other_bits
                count = joint.bit_count()
                if count >= minsup_count:
                    children.append((other, joint, count))
            if children:
                extend(itemset, children)

    extend((), roots)
    canonical = sorted((tuple(sorted(x)), n) for x, n in found.items())
    return FrequentItemsetCollection(minsup_count, dict(canonical))


def positive_border(fi: FrequentItemsetCollection) -> BorderSet:
    """Maximal frequent itemsets.

    By downward closure, an itemset has a frequent strict superset iff it is
    an immediate subset of some frequent itemset one item longer.
    """
    covered = set()
    for x in fi.itemsets:
        if len(x) > 1:
            for i in range(len(x)):
                covered.add(x[:i] + x[i + 1:])
    return BorderSet(POSITIVE, tuple(x for x in fi.itemsets if x not in covered))


def negative_border(db: TransactionDatabase, fi: FrequentItemsetCollection) -> BorderSet:
    """Minimal infrequent itemsets over the alphabet of ``db``.

    Only non-empty subsets are required to be frequent, so every infrequent
    singleton is a member. Longer candidates are generated once each, as a
    frequent itemset extended by a frequent item greater than its last item.
    """
    frequent = fi.itemsets
    members = [(i,) for i in sorted(db.alphabet) if (i,) not in frequent]
    frequent_items = [x[0] for x in frequent if len(x) == 1]
    for x in frequent:
        last = x[-1]
        for item in frequent_items:
            if item <= last:
                continue
            candidate = x + (item,)
            if candidate in frequent:
                continue
            # dropping the last item gives x, already frequent
            if all(candidate[:i] + candidate[i + 1:] in frequent for i in range(len(x))):
                members.append(candidate)
    return BorderSet(NEGATIVE, tuple(sorted(members)))


def write_itemsets(fi: FrequentItemsetCollection, fp: TextIO) -> None:
    """Dump itemsets as ``<sorted ids> #SUP: <count>`` lines."""
    for x, n in fi.itemsets.items():
        fp.write(f"{' '.join(map(str, x))} #SUP: {n}\n")
