#!/usr/bin/env python3
"""Reference extended persistence for small graphs.

Builds the coned complex explicitly (cone vertex first, ascending sublevel
pass, then coned simplices in descending order) and reduces the full GF(2)
boundary matrix with Python sets. Prints the diagram as (dim, kind, birth,
death) rows so the values can be frozen into C++ fixtures.

usage: extended_persistence_ref.py "<values>" "<edges>"
   ex: extended_persistence_ref.py "1,3,2" "0-1,1-2"
"""
import sys


def extended_persistence(values, edges):
    n = len(values)
    simplices = []  # (block, key, dim, verts, value)
    # ascending block: order by (value, dim, index)
    asc = [(values[v], 0, v, (v,)) for v in range(n)]
    asc += [(max(values[u], values[w]), 1, i, (u, w)) for i, (u, w) in enumerate(edges)]
    asc.sort(key=lambda s: (s[0], s[1], s[2]))
    # descending block over coned simplices: order by (-value, dim, index)
    desc = [(values[v], 1, v, ('w', v)) for v in range(n)]
    desc += [(min(values[u], values[w]), 2, i, ('w', u, w)) for i, (u, w) in enumerate(edges)]
    desc.sort(key=lambda s: (-s[0], s[1], s[2]))

    order = [('cone', None, 0, ('w',), None)]
    order += [('asc',) + s for s in asc]
    order += [('desc',) + s for s in desc]
    # normalize simplex identities to frozensets of vertex labels
    ident = {}
    rows = []
    for pos, s in enumerate(order):
        if s[0] == 'cone':
            key = frozenset(['w'])
            rows.append(('cone', 0, None))
        else:
            block, value, dim, idx, verts = s
            key = frozenset(verts)
            rows.append((block, dim, value))
        ident[key] = pos

    def boundary(pos):
        s = order[pos]
        if s[0] == 'cone':
            return set()
        verts = list(s[4])
        if len(verts) == 1:
            return set()
        out = set()
        for drop in range(len(verts)):
            face = frozenset(verts[:drop] + verts[drop + 1:])
            out ^= {ident[face]}
        return out

    cols = [boundary(p) for p in range(len(order))]
    low_owner = {}
    pairs = []
    for j in range(len(cols)):
        col = set(cols[j])
        while col and max(col) in low_owner:
            col ^= cols[low_owner[max(col)]]
        cols[j] = col
        if col:
            low_owner[max(col)] = j
            pairs.append((max(col), j))

    out = []
    for creator, killer in pairs:
        cb, cdim, cval = rows[creator]
        kb, kdim, kval = rows[killer]
        if cb == 'asc' and kb == 'asc' and cdim == 0:
            out.append((0, 'Ordinary', cval, kval))
        elif cb == 'asc' and kb == 'desc' and cdim == 0:
            out.append((0, 'Essential0Extended', cval, kval))
        elif cb == 'asc' and kb == 'desc' and cdim == 1:
            out.append((1, 'Cycle1Extended', cval, kval))
    return sorted(out)


def main():
    values = [float(x) for x in sys.argv[1].split(',')]
    edges = []
    if len(sys.argv) > 2 and sys.argv[2]:
        for tok in sys.argv[2].split(','):
            u, w = tok.split('-')
            edges.append((int(u), int(w)))
    for row in extended_persistence(values, edges):
        print(*row)


if __name__ == '__main__':
    main()
