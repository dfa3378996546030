"""Independent reference implementations used only by the tests.

These deliberately avoid the package's log-domain machinery: probabilities
come from scipy.stats.norm in the linear domain, GF(2) checks from plain
enumeration, and subset searches from itertools.
"""

import itertools
import math

import mpmath
import numpy as np
from scipy.stats import norm


def q_lin(x):
    return norm.sf(x)


def log_q_mp(x, dps=400):
    with mpmath.workdps(dps):
        return float(mpmath.log(mpmath.erfc(mpmath.mpf(x) / mpmath.sqrt(2)) / 2))


def h2(p):
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def all_outputs(n):
    """All 4^N vectors in {+-1 +-j}^N, in no particular order."""
    parts = [1.0, -1.0]
    return [np.array([complex(a, b) for a, b in zip(c[0::2], c[1::2])])
            for c in itertools.product(parts, repeat=2 * n)]


def likelihood(r, s, b_r, rho):
    """Pr(r | s) as a product of per-dimension linear-domain probabilities."""
    mean = math.sqrt(2 * rho) * s * np.asarray(b_r)
    pr = 1.0
    for rk, mk in zip(r, mean):
        pr *= q_lin(-rk.real * mk.real) * q_lin(-rk.imag * mk.imag)
    return pr


def exact_mi_lin(symbols, b_r, rho):
    k = len(symbols)
    total = 0.0
    for r in all_outputs(len(b_r)):
        p = np.array([likelihood(r, s, b_r, rho) for s in symbols])
        q = p.mean()
        mask = p > 0
        total += np.sum(p[mask] * np.log2(p[mask] / q)) / k
    return total


def best_min_distance(symbols, k):
    best = 0.0
    for idx in itertools.combinations(range(len(symbols)), k):
        s = np.asarray(symbols)[list(idx)]
        d = min(abs(a - b) for a, b in itertools.combinations(s, 2))
        best = max(best, d)
    return best


def gf2_codewords(h):
    """All n-bit words with H c = 0 (mod 2), by enumeration."""
    h = np.asarray(h) % 2
    n = h.shape[1]
    words = np.array(list(itertools.product([0, 1], repeat=n)), dtype=np.int64)
    return words[np.all((words @ h.T) % 2 == 0, axis=1)]
