"""Rebuild tests/data/chess.dat from the UCI kr-vs-kp table.

The FIMI ``chess`` database is the UCI "King+Rook versus King+Pawn" table
with every (attribute, value) pair turned into one item. scikit-learn ships
that table as an offline OpenML fixture (data id 3), which is used here.
Item ids are assigned in attribute order, then in declared value order; all
metrics are invariant to the labelling.

Usage: python tools/build_chess_fixture.py [output-path]
"""

import gzip
import re
import sys
from pathlib import Path

import sklearn

SOURCE = Path(sklearn.__file__).parent / "datasets/tests/data/openml/id_3/data-v1-dl-3.arff.gz"


def main(out: Path) -> None:
    attributes, rows = [], []
    with gzip.open(SOURCE, "rt") as fp:
        for line in fp:
            line = line.strip()
            if not line or line.startswith("%"):
                continue
            if line.lower().startswith("@attribute"):
                values = re.search(r"\{(.*)\}", line).group(1)
                attributes.append([v.strip().strip("'") for v in values.split(",")])
            elif not line.startswith("@"):
                rows.append([v.strip().strip("'") for v in line.split(",")])

    item_id, next_id = {}, 1
    for j, values in enumerate(attributes):
        for v in values:
            item_id[j, v] = next_id
            next_id += 1

    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as fp:
        for row in rows:
            fp.write(" ".join(str(item_id[j, v]) for j, v in enumerate(row)) + "\n")
    print(f"wrote {len(rows)} transactions over {len(item_id)} declared items to {out}")


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parents[1] / "tests/data/chess.dat")
