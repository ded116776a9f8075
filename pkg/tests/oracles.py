"""Independent pure-Python reference implementations used by the tests."""

import math


def euclid(a, b):
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))


def neighbour_order(rows, i):
    """Other sample indices sorted by (distance to i, index)."""
    return sorted((j for j in range(len(rows)) if j != i), key=lambda j: (euclid(rows[i], rows[j]), j))


def brute_trustworthiness(orig, emb, k):
    orig, emb = [list(map(float, r)) for r in orig], [list(map(float, r)) for r in emb]
    n = len(orig)
    total = 0
    for i in range(n):
        in_rank = {j: pos + 1 for pos, j in enumerate(neighbour_order(orig, i))}
        for j in neighbour_order(emb, i)[:k]:
            total += max(0, in_rank[j] - k)
    return 1.0 - 2.0 / (n * k * (2 * n - 3 * k - 1)) * total
