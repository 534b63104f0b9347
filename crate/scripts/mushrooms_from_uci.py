#!/usr/bin/env python3
"""Rebuild the LIBSVM `mushrooms` binary-classification file from the raw UCI
agaricus-lepiota table.

Every nominal attribute is one-hot encoded over the values that occur in the
data, in attribute order. Attribute 11 (stalk-root) carries missing values and
is dropped, which yields 112 binary features. Labels: edible -> 1,
poisonous -> 2.

usage: mushrooms_from_uci.py agaricus-lepiota.data > mushrooms
"""
import sys

STALK_ROOT = 10  # zero-based attribute index after the class column


def main(path):
    rows = [line.strip().split(",") for line in open(path) if line.strip()]
    n_attr = len(rows[0]) - 1
    values = [sorted({r[1 + j] for r in rows}) for j in range(n_attr)]
    offsets, next_index = {}, 1
    for j in range(n_attr):
        if j == STALK_ROOT:
            continue
        for v in values[j]:
            offsets[(j, v)] = next_index
            next_index += 1
    out = sys.stdout
    for r in rows:
        label = "1" if r[0] == "e" else "2"
        idx = sorted(offsets[(j, r[1 + j])] for j in range(n_attr) if j != STALK_ROOT)
        out.write(label + " " + " ".join(f"{i}:1" for i in idx) + "\n")
    sys.stderr.write(f"{len(rows)} rows, {next_index - 1} features\n")


if __name__ == "__main__":
    main(sys.argv[1])
