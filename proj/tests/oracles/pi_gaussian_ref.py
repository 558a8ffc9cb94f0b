#!/usr/bin/env python3
"""Direct evaluation of a persistence image for one (birth, persistence) point.

Grid rows index birth, columns index persistence; pixel centers sit at the
cell midpoints. Weight is persistence / pers_max.
"""
import math

def image(points, res, sigma, bmin, bmax, pmin, pmax):
    db = (bmax - bmin) / res
    dp = (pmax - pmin) / res
    out = []
    for i in range(res):
        cb = bmin + (i + 0.5) * db
        for j in range(res):
            cp = pmin + (j + 0.5) * dp
            acc = 0.0
            for b, p in points:
                w = p / pmax
                r2 = (cb - b) ** 2 + (cp - p) ** 2
                acc += w * math.exp(-r2 / (2 * sigma * sigma)) / (2 * math.pi * sigma * sigma)
            out.append(acc)
    return out

if __name__ == '__main__':
    for v in image([(1.0, 2.0)], 2, 1.0, 0.0, 2.0, 0.0, 4.0):
        print(repr(v))
