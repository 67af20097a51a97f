#!/usr/bin/env python3
"""Convert a KEEL .dat classification file to libsvm text.

Numeric attributes are copied as-is; nominal attributes are one-hot encoded
(one 0/1 column per category, taken from the @attribute header or, for
headerless files, from the sorted set of observed values). The last attribute is
the class; `--positive` names the class mapped to +1, all others map to -1.
"""
import argparse
import re


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("src")
    ap.add_argument("dst")
    ap.add_argument("--positive", required=True)
    args = ap.parse_args()

    attrs = []  # (name, None | [categories])
    rows = []
    with open(args.src) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.lower().startswith("@attribute"):
                m = re.match(r"@attribute\s+(\S+)\s+(.*)", line, re.I)
                name, kind = m.group(1), m.group(2).strip()
                if kind.startswith("{"):
                    cats = [c.strip() for c in kind.strip("{}").split(",")]
                    attrs.append((name, cats))
                else:
                    attrs.append((name, None))
            elif line.startswith("@"):
                continue
            else:
                rows.append([v.strip() for v in line.split(",")])

    if not attrs:
        for c in range(len(rows[0])):
            col_vals = [r[c] for r in rows]
            try:
                [float(v) for v in col_vals]
                attrs.append((f"a{c}", None))
            except ValueError:
                attrs.append((f"a{c}", sorted(set(col_vals))))

    features = attrs[:-1]
    with open(args.dst, "w") as out:
        for r in rows:
            label = "+1" if r[-1] == args.positive else "-1"
            parts = [label]
            col = 1
            for (name, cats), v in zip(features, r[:-1]):
                if cats is None:
                    x = float(v)
                    if x != 0.0:
                        parts.append(f"{col}:{v}")
                    col += 1
                else:
                    k = cats.index(v)
                    parts.append(f"{col + k}:1")
                    col += len(cats)
            out.write(" ".join(parts) + "\n")


if __name__ == "__main__":
    main()
