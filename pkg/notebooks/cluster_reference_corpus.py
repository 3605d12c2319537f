"""
Grouping the 21 reference databases
===================================

The shipped metric table holds published values for 21 databases. Here
they are clustered, the clusters are explained with a small tree, and a
few benchmark choices are checked against them.
"""

import numpy as np

from fimchar import check_representative, fit_tree, kmeans, minimum_representative_benchmarks, robust_scale
from fimchar.analysis import DEFAULT_FEATURES, SCALE_FREE_FEATURES
from fimchar.reference import reference_benchmarks, reference_clusters, reference_table

table = reference_table()
print(table.shape, table.columns)

# Raw counts like AS span four orders of magnitude, so even after robust
# scaling a couple of very wide databases pull the centroids around.
# Leaving the count columns out gives the grouping below.
for label, features in (("default", DEFAULT_FEATURES), ("scale-free", SCALE_FREE_FEATURES)):
    scaled = robust_scale(table.select(features))
    model = kmeans(scaled, 4, restarts=500, seed=0)
    print(label, [sorted(c) for c in model.clusters()], f"inertia={model.inertia:.2f}")

published = reference_clusters()
for c, members in enumerate(published.clusters()):
    print(c, [table.name_of(i) for i in sorted(members)])

# Three thresholds are enough to separate the four groups.
tree = fit_tree(table.select(DEFAULT_FEATURES), [published.assignment[i] for i in table.ids])
print(tree.render())
print("training accuracy", tree.accuracy)

# Restricted to the two sweep axes, the same three splits fall on ASD
# near 2006 and on PBC near 1945 and 6417.
print(fit_tree(table.select(["asd", "pbc"]), [published.assignment[i] for i in table.ids]).render())

# A benchmark is representative when it touches every group.
for study in reference_benchmarks():
    v = check_representative(study, published)
    print(f"{study.name:>24}: {len(study.members):2d} datasets, missing groups {sorted(v.missing_clusters)}")

mrb = minimum_representative_benchmarks(published, limit=3)
print(f"{mrb.total} benchmarks of size {mrb.size}, e.g.")
for ex in mrb.examples:
    print("   ", [table.name_of(i) for i in ex])

# Where each database sits on the two axes used in the tree.
asd, pbc = table.column("asd"), table.column("pbc")
order = np.argsort(asd)
for i in order:
    print(f"{table.names[i]:>14}  ASD={asd[i]:8.2f}  PBC={pbc[i]:8.2f}  group {published.assignment[table.ids[i]]}")
