#!/usr/bin/env python3
"""Independent scan of a plot-corpus DSL file.

Produces the expected values the C++ tests compare against: record counts,
terminal fragments, substitution warnings, and full plot-tree enumerations
for a few (root, depth) choices. Shares no code with the library.

    python3 tests/oracles/plotto_oracle.py data/plotto_excerpt.plotto > tests/data/plotto_oracle.json
"""
import json
import re
import sys

WORD = re.compile(r"[A-Za-z0-9\x80-\U0010ffff]+")
LABEL = re.compile(r"^ch\s+(\w+)\s+to\s+(\w+)$")


def is_symbol(tok):
    return tok in ("A", "B", "AUX") or re.fullmatch(r"[A-Z]{2,3}", tok) is not None


def scan(path):
    frags, order, edges = {}, [], []
    current = None
    for raw in open(path, encoding="utf-8"):
        line = raw.rstrip("\n").strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("FRAG "):
            head, text = line[5:].split(":", 1)
            current = head.strip()
            frags[current] = text.strip()
            order.append(current)
        elif line.startswith("->"):
            rest = line[2:].strip()
            target, _, label = rest.partition(" ")
            subs = []
            if label.strip():
                for part in label.split(","):
                    m = LABEL.match(part.strip())
                    assert m, part
                    subs.append((m.group(1), m.group(2)))
            edges.append((current, target, subs))
        else:
            frags[current] += " " + line
    return frags, order, edges


def symbols(text):
    return sorted({t for t in WORD.findall(text) if is_symbol(t)})


def enumerate_tree(frags, edges, root, depth):
    out_edges = {}
    for e in edges:
        out_edges.setdefault(e[0], []).append(e)

    def resolve(edge_maps):
        # innermost edge first, then each ancestor edge
        domain = set()
        for m in edge_maps:
            domain |= set(m)
        acc = {}
        for s in sorted(domain):
            v = s
            for m in reversed(edge_maps):
                v = m.get(v, v)
            if v != s:
                acc[s] = v
        return acc

    def node(fid, level, path, edge_maps):
        children = []
        if level + 1 < depth:
            for (_, to, subs) in out_edges.get(fid, []):
                if to in path:
                    continue
                m = {a: b for a, b in subs if a != b}
                children.append(node(to, level + 1, path + [to], edge_maps + [m]))
        return {"id": fid, "depth": level, "subs": resolve(edge_maps), "children": children}

    return node(root, 0, [root], [])


def main():
    path = sys.argv[1]
    frags, order, edges = scan(path)
    has_out = {e[0] for e in edges}
    terminal = sorted(f for f in frags if f not in has_out)
    warnings = []
    for (src, dst, subs) in edges:
        for (old, _new) in subs:
            if old not in symbols(frags[dst]):
                warnings.append({"from": src, "to": dst, "symbol": old})
    trees = []
    for root, depth in [("746", 2), ("746", 4), ("201", 6), ("501", 5), ("301", 6)]:
        if root in frags:
            trees.append({"root": root, "max_depth": depth, "tree": enumerate_tree(frags, edges, root, depth)})
    json.dump({"fragments": len(frags), "edges": len(edges), "terminal": terminal,
               "warnings": warnings, "trees": trees}, sys.stdout, indent=1, sort_keys=True)
    print()


if __name__ == "__main__":
    main()
