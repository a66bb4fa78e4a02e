"""Explicit example families, permutation constructions, hereditary-class
recognizers and poset/antichain reports.

The two-orders model of a permutation carries the natural order and the order
induced by positions of values. The agreement graph of a permutation lives on
positions: i and j are adjacent iff the permutation preserves their relative
order, which makes vertex substitution commute with permutation substitution
at a fixed position.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .errors import BadParameter, Budget, TooLarge
from .logic import Interpretation, apply_interpretation, interpretation
from .structures import (
    GRAPH_LANGUAGE,
    Graph,
    Language,
    Structure,
    as_graph,
    as_structure,
    complement,
    embeds,
    graph_from_edges,
    induced_graph,
    make_structure,
)
from .substitution import is_cograph as _is_cograph
from .substitution import modular_decomposition


# ---------------------------------------------------------------------------
# Graph generators


def path_graph(n: int) -> Graph:
    if n < 0:
        raise BadParameter("path needs n >= 0")
    return graph_from_edges(n, [(i, i + 1) for i in range(1, n)])


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise BadParameter("cycle needs n >= 3")
    return graph_from_edges(n, [(i, i + 1) for i in range(1, n)] + [(1, n)])


def complete_graph(n: int) -> Graph:
    if n < 0:
        raise BadParameter("complete graph needs n >= 0")
    return graph_from_edges(n, [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)])


def empty_graph(n: int) -> Graph:
    if n < 0:
        raise BadParameter("empty graph needs n >= 0")
    return Graph(n, tuple(0 for _ in range(n)))


def path_with_cycles_graph(n: int) -> Graph:
    """Prime graph on n+4 vertices: the n-path with two pendant 4-cycles.

    Vertices 1..n are the path; a,b,c,d are n+1..n+4 with edges {a,b}, {c,d},
    {a,2}, {b,3}, {c,n-2}, {d,n-1}. Members of this family are pairwise
    incomparable in the induced-subgraph order.
    """
    if n < 6:
        raise BadParameter("the path-with-cycles family needs n >= 6")
    a, b, c, d = n + 1, n + 2, n + 3, n + 4
    edges = [(i, i + 1) for i in range(1, n)]
    edges += [(a, b), (c, d), (a, 2), (b, 3), (c, n - 2), (d, n - 1)]
    return graph_from_edges(n + 4, edges)


def glued_paths_graph(n: int) -> Graph:
    """Prime graph: disjoint blocks generate(6)..generate(n) of the
    path-with-cycles family, with the first path vertices joined in a clique.

    Blocks appear consecutively (block k occupies the next k+4 labels, path
    first, then its four extra vertices); each one embeds into the next.
    """
    if n < 6:
        raise BadParameter("the glued-paths family needs n >= 6")
    edges = []
    firsts = []
    offset = 0
    for k in range(6, n + 1):
        block = path_with_cycles_graph(k)
        firsts.append(offset + 1)
        edges += [(offset + u, offset + v) for u, v in block.edges()]
        offset += k + 4
    edges += [(u, v) for u, v in combinations(firsts, 2)]
    return graph_from_edges(offset, edges)


def cliqued_path_graph(n: int) -> Graph:
    """Prime graph on n+2 vertices: the n-path with all even vertices joined
    into a clique plus pendants a at vertex 4 and b at vertex n-3."""
    if n < 9 or n % 2 == 0:
        raise BadParameter("the cliqued-path family needs odd n >= 9")
    a, b = n + 1, n + 2
    edges = [(i, i + 1) for i in range(1, n)]
    edges += [(a, 4), (b, n - 3)]
    evens = [v for v in range(2, n + 1, 2)]
    edges += [(u, v) for u, v in combinations(evens, 2)]
    return graph_from_edges(n + 2, edges)


_GENERATORS = {
    "path": path_graph,
    "cycle": cycle_graph,
    "complete": complete_graph,
    "empty": empty_graph,
    "G_n": path_with_cycles_graph,
    "H_n": glued_paths_graph,
    "Gprime_n": cliqued_path_graph,
}


def generate(kind: str, n: int) -> Graph:
    """Named generator dispatch; see the individual constructors."""
    if kind not in _GENERATORS:
        raise BadParameter(f"unknown generator {kind!r}; choose from {sorted(_GENERATORS)}")
    return _GENERATORS[kind](n)


# ---------------------------------------------------------------------------
# Permutations


PERM_LANGUAGE = Language((("L1", 2), ("L2", 2)))


@dataclass(frozen=True)
class Permutation:
    """One-line notation; values is a bijection of 1..n."""

    values: tuple[int, ...]

    def __post_init__(self):
        n = len(self.values)
        if sorted(self.values) != list(range(1, n + 1)):
            raise BadParameter(f"{self.values} is not a permutation of 1..{n}")

    def __len__(self):
        return len(self.values)

    def __call__(self, i: int) -> int:
        return self.values[i - 1]

    def inverse(self) -> "Permutation":
        inv = [0] * len(self.values)
        for i, v in enumerate(self.values):
            inv[v - 1] = i + 1
        return Permutation(tuple(inv))


def two_orders_model(sigma: Permutation) -> Structure:
    """The two-linear-orders model: L1 is the natural order on 1..n, L2 holds
    on (i, j) iff i occurs before j in the one-line notation."""
    n = len(sigma)
    inv = sigma.inverse()
    l1 = [(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i < j]
    l2 = [(i, j) for i in range(1, n + 1) for j in range(1, n + 1)
          if i != j and inv(i) < inv(j)]
    return make_structure(PERM_LANGUAGE, n, {"L1": l1, "L2": l2})


def agreement_interpretation() -> Interpretation:
    return interpretation(
        GRAPH_LANGUAGE, PERM_LANGUAGE, {"E": "x1!=x2 & (L1(x1,x2) <-> L2(x1,x2))"}
    )


def agreement_graph(sigma: Permutation) -> Graph:
    """Order-agreement graph on positions: i ~ j iff sigma preserves the
    relative order of positions i and j.

    Computed through the interpretation; transposing pattern and values (the
    inverse permutation's model) aligns model vertices with positions.
    """
    M = apply_interpretation(agreement_interpretation(), two_orders_model(sigma.inverse()))
    return as_graph(M)


def perm_structures(sigma: Permutation) -> tuple[Structure, Graph]:
    """The two-orders model of sigma together with its agreement graph."""
    return two_orders_model(sigma), agreement_graph(sigma)


def gen_pi(n: int) -> Permutation:
    """The permutation in S_{n+4} whose agreement graph is the
    path-with-cycles graph on n+4 vertices (even n only)."""
    if n < 6 or n % 2 != 0:
        raise BadParameter("gen_pi needs even n >= 6")
    values = []
    for i in range(1, n + 5):
        if i == 1:
            values.append(n + 3)
        elif i == 2:
            values.append(n + 1)
        elif i == 3:
            values.append(n - 1)
        elif i == 4:
            values.append(n + 4)
        elif i <= n and i % 2 == 0:
            values.append(n - i + 3)
        elif 5 <= i <= n - 1 and i % 2 == 1:
            values.append(n - i + 7)
        elif i == n + 1:
            values.append(1)
        elif i == n + 2:
            values.append(6)
        elif i == n + 3:
            values.append(4)
        else:  # i == n + 4
            values.append(2)
    return Permutation(tuple(values))


def perm_substitute(sigma: Permutation, v: int, tau: Permutation) -> Permutation:
    """Substitute tau into position v of sigma; the agreement graph of the
    result is the agreement graph of sigma with tau's graph substituted at v."""
    n, m = len(sigma), len(tau)
    if not (1 <= v <= n):
        raise BadParameter(f"position {v} outside 1..{n}")
    if m == 0:
        raise BadParameter("cannot substitute the empty permutation")
    sv = sigma(v)
    values = []
    for i in range(1, n + m):
        if i < v:
            values.append(sigma(i) if sigma(i) < sv else sigma(i) + m - 1)
        elif i < v + m:
            values.append(sv + tau(i - v + 1) - 1)
        else:
            s = sigma(i - m + 1)
            values.append(s if s < sv else s + m - 1)
    return Permutation(tuple(values))


# ---------------------------------------------------------------------------
# Hereditary-class tests


PERFECT_SIZE_CAP = 14


def _has_odd_hole(G: Graph) -> bool:
    """An induced odd cycle of length >= 5; subset scan, fine for n <= 14."""
    for size in range(5, G.size + 1, 2):
        for U in combinations(G.vertices, size):
            H = induced_graph(G, U)
            if all(H.degree(v) == 2 for v in H.vertices) and _is_connected(H):
                return True
    return False


def _is_connected(G: Graph) -> bool:
    if G.size == 0:
        return True
    seen = 1
    frontier = 1
    while frontier:
        nxt = 0
        f = frontier
        while f:
            u = (f & -f).bit_length() - 1
            f ^= 1 << u
            nxt |= G.rows[u] & ~seen
        seen |= nxt
        frontier = nxt
    return seen == (1 << G.size) - 1


def is_perfect(G: Graph) -> bool:
    """No induced odd hole in G or its complement."""
    if G.size > PERFECT_SIZE_CAP:
        raise TooLarge(f"perfection test capped at {PERFECT_SIZE_CAP} vertices")
    return not _has_odd_hole(G) and not _has_odd_hole(complement(G))


def hereditary_tests(G: Graph) -> dict:
    return {"is_cograph": _is_cograph(G), "is_perfect": is_perfect(G)}


def is_cograph(G: Graph) -> bool:
    return _is_cograph(G)


# ---------------------------------------------------------------------------
# Poset reports


@dataclass(frozen=True)
class PosetReport:
    """Embeds-into comparability data over a finite list of structures."""

    comparability: tuple[tuple[bool, ...], ...]
    antichain: bool
    chain: bool
    covering_pairs: tuple[tuple[int, int], ...]


POSET_FAMILY_CAP = 200


def poset_report(members) -> PosetReport:
    """Full embeds-into matrix, antichain/chain verdicts and covering pairs.

    Indices refer to the input order; the matrix is reflexive and transitive.
    """
    ms = [as_structure(M) for M in members]
    if len(ms) > POSET_FAMILY_CAP:
        raise Budget(f"poset report capped at {POSET_FAMILY_CAP} members")
    k = len(ms)
    matrix = [[False] * k for _ in range(k)]
    for i in range(k):
        for j in range(k):
            matrix[i][j] = i == j or (ms[i].size <= ms[j].size and embeds(ms[i], ms[j]))
    antichain = all(not matrix[i][j] for i in range(k) for j in range(k) if i != j)
    chain = all(matrix[i][j] or matrix[j][i] for i in range(k) for j in range(k))
    covering = []
    for i in range(k):
        for j in range(k):
            if i == j or not matrix[i][j] or matrix[j][i]:
                continue
            if not any(
                matrix[i][t] and matrix[t][j] and not matrix[t][i] and not matrix[j][t]
                for t in range(k)
                if t not in (i, j)
            ):
                covering.append((i, j))
    return PosetReport(
        comparability=tuple(tuple(row) for row in matrix),
        antichain=antichain,
        chain=chain,
        covering_pairs=tuple(covering),
    )


# ---------------------------------------------------------------------------
# Size products


def product_tail(sizes, n: int) -> Fraction:
    """Exact partial product of (1 - 1/size(i)) over i < n.

    ``sizes`` is a callable on 0-based indices or a sequence.
    """
    get = sizes if callable(sizes) else (lambda i: sizes[i])
    out = Fraction(1)
    for i in range(n):
        s = get(i)
        if s < 2:
            raise BadParameter(f"size rule returned {s} < 2 at index {i}")
        out *= Fraction(s - 1, s)
    return out


def half_repetitions(size: int) -> int:
    """Smallest r with (1 - 1/size)^r <= 1/2."""
    if size < 2:
        raise BadParameter("size must be >= 2")
    base = Fraction(size - 1, size)
    power = base
    r = 1
    while power > Fraction(1, 2):
        power *= base
        r += 1
    return r
