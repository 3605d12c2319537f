"""
Frequent itemsets and their borders on a toy database
=====================================================

A four-row database small enough to check every number by eye.
"""

from fimchar import (
    SupportSchedule,
    TransactionDatabase,
    elemental_stats,
    mine_frequent,
    negative_border,
    positive_border,
    sweep,
    sweep_metrics,
)

# bread=1, milk=2, eggs=3, jam=4
db = TransactionDatabase.from_iterable([{1, 2, 3}, {1, 2}, {2, 4}, {1, 2, 3, 4}], name="toy")
print(elemental_stats(db))

# At two transactions every item is frequent, and so are 12, 13, 23, 24 and 123.
fi = mine_frequent(db, 2)
for itemset, count in fi.itemsets.items():
    print(itemset, count)

# The positive border keeps only the maximal ones; everything else in FI is
# a subset of one of them.
print("Bd+", positive_border(fi).itemsets)

# The negative border lists the smallest itemsets that miss the threshold.
print("Bd-", negative_border(db, fi).itemsets)

# Sweeping the threshold gives one measurement per level, then the areas
# under those curves.
curves = sweep(db, SupportSchedule((25, 50, 75)))
for m in curves.measurements:
    print(f"{m.level:>4g}%  minsup={m.minsup_count}  |FI|={m.fi_count}  |Bd+|={m.pb_count}  "
          f"mean support={m.gamma:.1f}%  mean length={m.lam:.2f}")
print(sweep_metrics(curves))
