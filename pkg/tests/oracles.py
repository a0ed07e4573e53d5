"""Brute-force reference computations, deliberately independent of kolmo.

Kernels here are plain ``{state: {target: weight}}`` dicts.
"""

import itertools
import random
from fractions import Fraction


def random_kernel_dict(rng: random.Random, states, max_support=5, stochastic=True):
    """Random exact kernel on ``states``; each row hits at most ``max_support`` states."""
    states = list(states)
    out = {}
    for s in states:
        k = rng.randint(1, min(max_support, len(states)))
        targets = rng.sample(states, k)
        raw = [rng.randint(1, 9) for _ in targets]
        total = sum(raw)
        if not stochastic:
            total += rng.randint(0, 5)
        out[s] = {t: Fraction(w, total) for t, w in zip(targets, raw)}
    return out


def path_enumeration(kernels, start):
    """Law of (x_0..x_n): sum over every tuple of the full state product."""
    states = sorted({t for k in kernels for row in k.values() for t in row} | set(kernels[0]))
    law = {}
    for path in itertools.product(states, repeat=len(kernels)):
        w = kernels[0].get(start, {}).get(path[0], 0)
        for k, (a, b) in zip(kernels[1:], zip(path, path[1:])):
            if not w:
                break
            w *= k.get(a, {}).get(b, 0)
        if w:
            law[path] = w
    return law


def matrix_compose(k1, k2):
    """``(k1 o k2)[s][u] = sum_t k1[s][t] k2[t][u]`` over dict matrices."""
    out = {}
    for s, row in k1.items():
        acc = {}
        for t, a in row.items():
            for u, b in k2.get(t, {}).items():
                acc[u] = acc.get(u, 0) + a * b
        out[s] = {u: w for u, w in acc.items() if w}
    return out


def rw_matrix(p, lo, hi):
    """Random-walk transition matrix restricted to rows lo..hi (targets unrestricted)."""
    return {i: {i + 1: p, i - 1: 1 - p} for i in range(lo, hi + 1)}


def matrix_power_row(p, n, start=0):
    """Row ``start`` of the n-step random-walk matrix by repeated dict products."""
    row = {start: Fraction(1)}
    for _ in range(n):
        nxt = {}
        for s, w in row.items():
            for t, v in ((s + 1, p), (s - 1, 1 - p)):
                if v:
                    nxt[t] = nxt.get(t, 0) + w * v
        row = nxt
    return row


def partial_sum_law(dists, start=0):
    """Law of partial sums of independent draws, by enumerating all combinations."""
    law = {}
    supports = [list(d.items()) for d in dists]
    for combo in itertools.product(*supports):
        w = Fraction(1)
        for _, p in combo:
            w *= p
        sums = []
        acc = start
        for x, _ in combo:
            acc += x
            sums.append(acc)
        law[tuple(sums)] = law.get(tuple(sums), 0) + w
    return {k: v for k, v in law.items() if v}


def random_int_dist(rng: random.Random, max_support=3, span=3):
    k = rng.randint(1, max_support)
    xs = rng.sample(range(-span, span + 1), k)
    raw = [rng.randint(1, 7) for _ in xs]
    total = sum(raw)
    return {x: Fraction(w, total) for x, w in zip(xs, raw)}
