"""Transaction databases: parsing, storage and elemental statistics.

Files follow the FIMI/SPMF convention: one transaction per line, items as
whitespace-separated non-negative integers.
"""

from __future__ import annotations

import io
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, TextIO

from .errors import EmptyDatabaseError, ParseError

Itemset = tuple[int, ...]


@dataclass(frozen=True)
class TransactionDatabase:
    """Immutable in-memory transactional database.

    Transactions are kept in file order, so duplicated transactions stay
    distinguishable by position.
    """

    transactions: tuple[frozenset[int], ...]
    name: str = ""
    alphabet: frozenset[int] = field(init=False, repr=False, compare=False)
    singleton_support: Mapping[int, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        txs = tuple(frozenset(t) for t in self.transactions)
        for t in txs:
            for item in t:
                if not isinstance(item, int) or item < 0:
                    raise ValueError(f"item ids must be non-negative integers, got {item!r}")
        counts = Counter(item for t in txs for item in t)
        object.__setattr__(self, "transactions", txs)
        object.__setattr__(self, "alphabet", frozenset(counts))
        object.__setattr__(self, "singleton_support", MappingProxyType(dict(sorted(counts.items()))))

    @classmethod
    def from_iterable(cls, transactions: Iterable[Iterable[int]], name: str = "") -> TransactionDatabase:
        return cls(tuple(frozenset(t) for t in transactions), name)

    def __len__(self) -> int:
        return len(self.transactions)

    @property
    def items(self) -> list[int]:
        """Alphabet in ascending order."""
        return sorted(self.alphabet)

    @cached_property
    def tidsets(self) -> Mapping[int, int]:
        """Per-item transaction-id sets, encoded as Python int bitsets."""
        bits: dict[int, int] = {i: 0 for i in self.alphabet}
        for tid, t in enumerate(self.transactions):
            flag = 1 << tid
            for item in t:
                bits[item] |= flag
        return MappingProxyType(bits)

    def duplicated(self, times: int) -> TransactionDatabase:
        """Database with every transaction repeated ``times`` times."""
        return TransactionDatabase(self.transactions * times, self.name)


@dataclass(frozen=True)
class ElementalStats:
    ds: int
    as_: int
    ats: float
    mts: int
    f1: float
    mss: float


def _parse_token(tok: str, lineno: int) -> int:
    if not (tok.isascii() and tok.isdigit()):
        raise ParseError(f"invalid item token {tok!r}", lineno)
    return int(tok)


def parse_transactions(source: Iterable[str] | str, name: str = "") -> TransactionDatabase:
    """Parse a line-oriented transaction stream.

    Blank lines are skipped and repeated items within a line collapse to one.
    Raises ParseError (with the line number) on a non-integer token and
    EmptyDatabaseError when no transaction is found.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    transactions = []
    for lineno, line in enumerate(source, start=1):
        tokens = line.split()
        if not tokens:
            continue
        transactions.append(frozenset(_parse_token(tok, lineno) for tok in tokens))
    if not transactions:
        raise EmptyDatabaseError(f"no transactions in {name or 'input'}")
    return TransactionDatabase(tuple(transactions), name)


def read_transactions(path: str | Path) -> TransactionDatabase:
    path = Path(path)
    with open(path, encoding="ascii", newline=None) as fp:
        return parse_transactions(fp, name=path.stem)


def write_transactions(db: TransactionDatabase, fp: TextIO) -> None:
    for t in db.transactions:
        fp.write(" ".join(map(str, sorted(t))))
        fp.write("\n")


def elemental_stats(db: TransactionDatabase) -> ElementalStats:
    if len(db) == 0:
        raise EmptyDatabaseError("elemental statistics need at least one transaction")
    ds = len(db)
    sizes = [len(t) for t in db.transactions]
    as_ = len(db.alphabet)
    total = sum(sizes)
    return ElementalStats(
        ds=ds,
        as_=as_,
        ats=total / ds,
        mts=max(sizes),
        f1=100.0 * total / (ds * as_) if as_ else 0.0,
        mss=100.0 * max(db.singleton_support.values(), default=0) / ds,
    )


def support(db: TransactionDatabase, itemset: Iterable[int]) -> int:
    """Number of transactions containing every item of ``itemset``.

    The empty itemset is contained in every transaction.
    """
    items = set(itemset)
    if not items:
        return len(db)
    if not items <= db.alphabet:
        return 0
    tids = db.tidsets
    it = iter(items)
    acc = tids[next(it)]
    for item in it:
        acc &= tids[item]
        if not acc:
            return 0
    return acc.bit_count()
