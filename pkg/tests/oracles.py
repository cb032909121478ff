"""Exact reference computations that share no code with the package.

Everything here works in rational arithmetic so the results are exact.
"""
from __future__ import annotations

from fractions import Fraction
from itertools import product

HALF = Fraction(1, 2)


def brw_max_cdf_dp(n: int) -> dict[int, Fraction]:
    """``P(M_n <= x)`` on the integers for binary branching with +-1 steps.

    Decomposes at the first generation: the root moves once, then two
    independent copies of the remaining ``n - 1`` generations start from its
    position.  ``M_1`` is a single step.
    """
    if n < 1:
        raise ValueError("n >= 1")
    # law of M_1
    pmf = {-1: HALF, 1: HALF}
    for _ in range(n - 1):
        support = sorted(pmf)
        cdf, acc = {}, Fraction(0)
        for x in support:
            acc += pmf[x]
            cdf[x] = acc
        # max of two copies
        mx, prev = {}, Fraction(0)
        for x in support:
            mx[x] = cdf[x] ** 2 - prev
            prev = cdf[x] ** 2
        new = {}
        for x, p in mx.items():
            for s in (-1, 1):
                new[x + s] = new.get(x + s, Fraction(0)) + HALF * p
        pmf = {k: v for k, v in new.items() if v}
    out, acc = {}, Fraction(0)
    for x in sorted(pmf):
        acc += pmf[x]
        out[x] = acc
    return out


def brw_max_pmf_bruteforce(n: int) -> dict[int, Fraction]:
    """Enumerate every step assignment of the full binary tree (``n <= 3``)."""
    if not 1 <= n <= 3:
        raise ValueError("brute force is limited to n <= 3")
    # generation g has 2^g particles, each making one move
    moves_per_gen = [2 ** g for g in range(n)]
    total = sum(moves_per_gen)
    pmf: dict[int, Fraction] = {}
    weight = Fraction(1, 2 ** total)
    for steps in product((-1, 1), repeat=total):
        pos, k, layer = [0], 0, []
        for g, count in enumerate(moves_per_gen):
            parents = pos if g == 0 else [p for p in pos for _ in range(2)]
            layer = [parents[i] + steps[k + i] for i in range(count)]
            k += count
            pos = layer
        m = max(pos)
        pmf[m] = pmf.get(m, Fraction(0)) + weight
    return pmf


def _solve(a: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    n = len(b)
    m = [row[:] + [b[i]] for i, row in enumerate(a)]
    for c in range(n):
        piv = next(r for r in range(c, n) if m[r][c] != 0)
        m[c], m[piv] = m[piv], m[c]
        inv = 1 / m[c][c]
        m[c] = [v * inv for v in m[c]]
        for r in range(n):
            if r != c and m[r][c] != 0:
                f = m[r][c]
                m[r] = [x - f * y for x, y in zip(m[r], m[c])]
    return [m[r][n] for r in range(n)]


def cover_chain(moves: dict, start) -> dict:
    """Absorbing chain on ``(vertex, visited set)`` for a walk with transition
    probabilities ``moves[v] = {w: p}``; absorbed when every vertex is visited.
    """
    everything = frozenset(moves)
    states, frontier = {}, [(start, frozenset([start]))]
    while frontier:
        s = frontier.pop()
        if s in states:
            continue
        v, seen = s
        nxt = {}
        for w, p in moves[v].items():
            t = (w, seen | {w})
            nxt[t] = nxt.get(t, Fraction(0)) + p
        states[s] = nxt
        frontier.extend(t for t in nxt if t[1] != everything and t not in states)
    return {"states": states, "all": everything, "start": (start, frozenset([start]))}


def expected_cover_time(moves: dict, start) -> Fraction:
    ch = cover_chain(moves, start)
    transient = list(ch["states"])
    idx = {s: i for i, s in enumerate(transient)}
    n = len(transient)
    a = [[Fraction(0)] * n for _ in range(n)]
    b = [Fraction(1)] * n
    for s, nxt in ch["states"].items():
        i = idx[s]
        a[i][i] += 1
        for t, p in nxt.items():
            if t in idx:
                a[i][idx[t]] -= p
    return _solve(a, b)[idx[ch["start"]]]


def cover_time_pmf(moves: dict, start, kmax: int) -> dict[int, Fraction]:
    """``P(C = k)`` for ``k <= kmax`` by forward propagation."""
    ch = cover_chain(moves, start)
    dist = {ch["start"]: Fraction(1)}
    out = {}
    for k in range(1, kmax + 1):
        new, absorbed = {}, Fraction(0)
        for s, p in dist.items():
            for t, q in ch["states"][s].items():
                if t[1] == ch["all"]:
                    absorbed += p * q
                else:
                    new[t] = new.get(t, Fraction(0)) + p * q
        out[k] = absorbed
        dist = new
    return out


def binary_tree_depth1() -> dict:
    """Root 0 with children 1, 2."""
    return {0: {1: HALF, 2: HALF}, 1: {0: Fraction(1)}, 2: {0: Fraction(1)}}


def torus_moves(side: int) -> dict:
    """Simple random walk on the ``side x side`` torus; the four directions are
    equally likely, so on ``side = 2`` each neighbour is reached two ways."""
    q = Fraction(1, 4)
    moves = {}
    for x in range(side):
        for y in range(side):
            nb = {}
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                w = ((x + dx) % side, (y + dy) % side)
                nb[w] = nb.get(w, Fraction(0)) + q
            moves[(x, y)] = nb
    return moves


def return_time_moments_bruteforce(n: int) -> tuple[Fraction, Fraction]:
    """Mean and variance of the return time to ``oo`` on the extended binary
    tree of depth ``n`` from the full vertex chain (exact, small ``n`` only).

    Vertices: ``oo`` = -1, heap-ordered tree vertices 0..2^(n+1)-2.
    """
    size = 2 ** (n + 1) - 1

    def nbrs(v):
        if v == -1:
            return [0]
        out = [(v - 1) // 2] if v > 0 else [-1]
        c = 2 * v + 1
        if c < size:
            out += [c, c + 1]
        return out

    verts = list(range(size))
    idx = {v: i for i, v in enumerate(verts)}
    # first and second moments of the hitting time of oo from each vertex
    a = [[Fraction(0)] * size for _ in range(size)]
    for v in verts:
        a[idx[v]][idx[v]] += 1
        nb = nbrs(v)
        for w in nb:
            if w != -1:
                a[idx[v]][idx[w]] -= Fraction(1, len(nb))
    h1 = _solve(a, [Fraction(1)] * size)
    # E[T^2]_v = 1 + sum_w p (2 E[T]_w + E[T^2]_w)
    rhs = []
    for v in verts:
        nb = nbrs(v)
        rhs.append(1 + sum(Fraction(2, len(nb)) * h1[idx[w]] for w in nb if w != -1))
    h2 = _solve(a, rhs)
    mean = 1 + h1[idx[0]]
    second = 1 + 2 * h1[idx[0]] + h2[idx[0]]
    return mean, second - mean * mean
