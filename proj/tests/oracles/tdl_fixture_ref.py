#!/usr/bin/env python3
"""Generates the N=3 TDL fixture (seed 42) and evaluates the loss directly
from its definition with 50-digit arithmetic."""
import numpy as np
import mpmath as mp

mp.mp.dps = 50

def tdl(Z, I, tau):
    N = len(Z)
    def sim(a, b):
        na = mp.sqrt(sum(mp.mpf(x) ** 2 for x in a))
        nb = mp.sqrt(sum(mp.mpf(x) ** 2 for x in b))
        return sum(mp.mpf(x) * mp.mpf(y) for x, y in zip(a, b)) / (na * nb)
    def dis(a, b):
        return mp.sqrt(sum((mp.mpf(x) - mp.mpf(y)) ** 2 for x, y in zip(a, b)))
    total = mp.mpf(0)
    for n in range(N):
        ln = mp.mpf(0)
        for m in range(N):
            if m == n:
                continue
            num = mp.exp(sim(Z[n], Z[m]) / tau)
            den = mp.mpf(0)
            for k in range(N):
                if k != n and dis(I[n], I[k]) >= dis(I[n], I[m]):
                    den += mp.exp(sim(Z[n], Z[k]) / tau)
            ln += -mp.log(num / den)
        total += ln / (N - 1)
    return total / N

if __name__ == '__main__':
    rng = np.random.default_rng(42)
    Z = rng.standard_normal((3, 4))
    I = rng.standard_normal((3, 5))
    print('Z =', [[repr(float(x)) for x in r] for r in Z])
    print('I =', [[repr(float(x)) for x in r] for r in I])
    print('tdl =', mp.nstr(tdl(Z.tolist(), I.tolist(), mp.mpf('0.1')), 20))
