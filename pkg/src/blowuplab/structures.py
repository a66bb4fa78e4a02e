"""Finite canonical relational structures and exact density computation.

Vertices are always 1..n. Structures are *canonical*: every relation tuple is
injective. Graphs are the one-symmetric-binary-relation special case and get a
bitset representation plus bit-exact graph6 I/O.

Isomorphism is decided through an exact canonical form (colour refinement
followed by individualization backtracking with automorphism pruning), capped
at 16 vertices; larger same-size pairs fall back to an embedding search.
All densities are exact ``Fraction`` values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import permutations

from .errors import (
    LanguageMismatch,
    NonInjectiveTuple,
    OutOfRangeVertex,
    TooLarge,
    UnknownPredicate,
)

CANONICAL_CAP = 16


@dataclass(frozen=True)
class Language:
    """An ordered collection of predicate symbols with arities >= 1."""

    predicates: tuple[tuple[str, int], ...]

    def __post_init__(self):
        names = [name for name, _ in self.predicates]
        if len(set(names)) != len(names):
            raise UnknownPredicate(f"duplicate predicate names in {names}")
        for name, arity in self.predicates:
            if arity < 1:
                raise UnknownPredicate(f"arity of {name} must be >= 1, got {arity}")

    def index(self, name: str) -> int:
        for i, (pname, _) in enumerate(self.predicates):
            if pname == name:
                return i
        raise UnknownPredicate(f"unknown predicate {name!r}")

    def arity(self, name: str) -> int:
        return self.predicates[self.index(name)][1]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.predicates)

    @property
    def max_arity(self) -> int:
        return max((k for _, k in self.predicates), default=1)


GRAPH_LANGUAGE = Language((("E", 2),))


@dataclass(frozen=True)
class Structure:
    """A canonical relational model; ``relations[i]`` belongs to predicate i."""

    language: Language
    size: int
    relations: tuple[frozenset[tuple[int, ...]], ...]

    def rel(self, name: str) -> frozenset[tuple[int, ...]]:
        return self.relations[self.language.index(name)]

    @property
    def vertices(self) -> range:
        return range(1, self.size + 1)

    def holds(self, name: str, tup: tuple[int, ...]) -> bool:
        return tup in self.rel(name)


def make_structure(language: Language, size: int, relations) -> Structure:
    """Build a structure from a mapping name -> iterable of tuples (trusted)."""
    rels = tuple(
        frozenset(tuple(t) for t in relations.get(name, ()))
        for name, _ in language.predicates
    )
    return Structure(language, size, rels)


def validate_structure(language: Language, size: int, relations) -> Structure:
    """Validate raw relation data and return the structure.

    Raises ``UnknownPredicate``, ``NonInjectiveTuple`` or ``OutOfRangeVertex``.
    """
    if size < 0:
        raise OutOfRangeVertex(f"size must be >= 0, got {size}")
    known = set(language.names)
    for name in relations:
        if name not in known:
            raise UnknownPredicate(f"unknown predicate {name!r}")
    checked = {}
    for name, arity in language.predicates:
        tuples = []
        for raw in relations.get(name, ()):
            tup = tuple(raw)
            if len(tup) != arity:
                raise NonInjectiveTuple(
                    f"{name}-tuple {tup} has length {len(tup)}, arity is {arity}"
                )
            for v in tup:
                if not (1 <= v <= size):
                    raise OutOfRangeVertex(f"vertex {v} outside 1..{size} in {name}{tup}")
            if len(set(tup)) != len(tup):
                raise NonInjectiveTuple(f"non-injective tuple {name}{tup}")
            tuples.append(tup)
        checked[name] = tuples
    return make_structure(language, size, checked)


def structure_to_json(M: Structure) -> dict:
    return {
        "language": [{"name": n, "arity": k} for n, k in M.language.predicates],
        "size": M.size,
        "relations": {
            name: sorted([list(t) for t in M.rel(name)])
            for name, _ in M.language.predicates
        },
    }


def structure_from_json(data: dict) -> Structure:
    language = Language(tuple((p["name"], p["arity"]) for p in data["language"]))
    return validate_structure(language, data["size"], data.get("relations", {}))


# ---------------------------------------------------------------------------
# Graphs


@dataclass(frozen=True)
class Graph:
    """A simple graph on 1..size with bitset adjacency rows (0-based bits)."""

    size: int
    rows: tuple[int, ...]

    def adjacent(self, u: int, v: int) -> bool:
        return bool(self.rows[u - 1] >> (v - 1) & 1)

    def neighbors_mask(self, u: int) -> int:
        return self.rows[u - 1]

    def degree(self, u: int) -> int:
        return bin(self.rows[u - 1]).count("1")

    @property
    def vertices(self) -> range:
        return range(1, self.size + 1)

    def edges(self) -> list[tuple[int, int]]:
        out = []
        for u in range(self.size):
            m = self.rows[u] >> (u + 1)
            v = u + 1
            while m:
                if m & 1:
                    out.append((u + 1, v + 1))
                m >>= 1
                v += 1
        return out

    def edge_count(self) -> int:
        return sum(self.degree(u) for u in self.vertices) // 2


def graph_from_edges(size: int, edges) -> Graph:
    rows = [0] * size
    for u, v in edges:
        if not (1 <= u <= size and 1 <= v <= size):
            raise OutOfRangeVertex(f"edge ({u},{v}) outside 1..{size}")
        if u == v:
            raise NonInjectiveTuple(f"loop at vertex {u}")
        rows[u - 1] |= 1 << (v - 1)
        rows[v - 1] |= 1 << (u - 1)
    return Graph(size, tuple(rows))


def graph_to_structure(G: Graph) -> Structure:
    pairs = []
    for u, v in G.edges():
        pairs.append((u, v))
        pairs.append((v, u))
    return make_structure(GRAPH_LANGUAGE, G.size, {"E": pairs})


def structure_to_graph(M: Structure) -> Graph:
    """Round-trip a structure over the graph language back to a ``Graph``."""
    if M.language != GRAPH_LANGUAGE:
        raise LanguageMismatch("not over the graph language")
    rel = M.rel("E")
    for u, v in rel:
        if (v, u) not in rel:
            raise NonInjectiveTuple(f"edge relation not symmetric at ({u},{v})")
    return graph_from_edges(M.size, [(u, v) for u, v in rel if u < v])


def as_structure(x) -> Structure:
    return graph_to_structure(x) if isinstance(x, Graph) else x


def as_graph(x) -> Graph:
    return x if isinstance(x, Graph) else structure_to_graph(x)


def complement(G: Graph) -> Graph:
    full = (1 << G.size) - 1
    rows = tuple((full ^ G.rows[u] ^ (1 << u)) for u in range(G.size))
    return Graph(G.size, rows)


def induced_graph(G: Graph, U) -> Graph:
    keep = sorted(set(U))
    for v in keep:
        if not (1 <= v <= G.size):
            raise OutOfRangeVertex(f"vertex {v} outside 1..{G.size}")
    pos = {v: i for i, v in enumerate(keep)}
    rows = [0] * len(keep)
    for v in keep:
        for w in keep:
            if v != w and G.adjacent(v, w):
                rows[pos[v]] |= 1 << pos[w]
    return Graph(len(keep), tuple(rows))


def induced(M: Structure, U) -> Structure:
    """Substructure induced by U, relabelled order-preservingly to 1..|U|."""
    keep = sorted(set(U))
    for v in keep:
        if not (1 <= v <= M.size):
            raise OutOfRangeVertex(f"vertex {v} outside 1..{M.size}")
    pos = {v: i + 1 for i, v in enumerate(keep)}
    kept = set(keep)
    rels = {}
    for name, _ in M.language.predicates:
        rels[name] = [
            tuple(pos[v] for v in tup)
            for tup in M.rel(name)
            if all(v in kept for v in tup)
        ]
    return make_structure(M.language, len(keep), rels)


# ---------------------------------------------------------------------------
# graph6 (bit-exact per the published format)


def encode_graph6(G: Graph) -> str:
    n = G.size
    if n > 258047:
        raise TooLarge(f"graph6 supports at most 258047 vertices, got {n}")
    if n <= 62:
        head = chr(63 + n)
    else:
        head = "~" + "".join(chr(63 + ((n >> s) & 63)) for s in (12, 6, 0))
    bits = []
    for j in range(1, n):
        for i in range(j):
            bits.append(1 if G.rows[i] >> j & 1 else 0)
    while len(bits) % 6:
        bits.append(0)
    body = "".join(
        chr(63 + (bits[i] << 5 | bits[i + 1] << 4 | bits[i + 2] << 3
                  | bits[i + 3] << 2 | bits[i + 4] << 1 | bits[i + 5]))
        for i in range(0, len(bits), 6)
    )
    return head + body


def decode_graph6(text: str) -> Graph:
    text = text.strip()
    if text.startswith(">>graph6<<"):
        text = text[10:]
    if not text:
        raise OutOfRangeVertex("empty graph6 string")
    if text[0] == "~":
        if text[1] == "~":
            raise TooLarge("graph6 strings beyond 258047 vertices not supported")
        n = 0
        for c in text[1:4]:
            n = n << 6 | (ord(c) - 63)
        body = text[4:]
    else:
        n = ord(text[0]) - 63
        body = text[1:]
    if n < 0:
        raise OutOfRangeVertex("bad graph6 size byte")
    bits = []
    for c in body:
        value = ord(c) - 63
        if not (0 <= value <= 63):
            raise OutOfRangeVertex(f"bad graph6 character {c!r}")
        bits.extend((value >> s) & 1 for s in (5, 4, 3, 2, 1, 0))
    need = n * (n - 1) // 2
    if len(bits) < need:
        raise OutOfRangeVertex("graph6 string too short")
    rows = [0] * n
    k = 0
    for j in range(1, n):
        for i in range(j):
            if bits[k]:
                rows[i] |= 1 << j
                rows[j] |= 1 << i
            k += 1
    return Graph(n, tuple(rows))


# ---------------------------------------------------------------------------
# Canonical form


def _incidence(M: Structure):
    inc = [[] for _ in range(M.size)]
    for p_idx, rel in enumerate(M.relations):
        for tup in rel:
            for pos, v in enumerate(tup):
                inc[v - 1].append((p_idx, pos, tup))
    return inc


def _refine(M: Structure, colors, inc):
    n = M.size
    while True:
        sigs = []
        for v in range(n):
            occ = sorted(
                (p_idx, pos, tuple(colors[w - 1] for w in tup))
                for p_idx, pos, tup in inc[v]
            )
            sigs.append((colors[v], tuple(occ)))
        order = {sig: i for i, sig in enumerate(sorted(set(sigs)))}
        new = [order[s] for s in sigs]
        if new == colors:
            return colors
        colors = new


def _encode_key(M: Structure, label):
    # label: 0-based list, label[v-1] = new 1-based name of vertex v
    return tuple(
        tuple(sorted(tuple(label[v - 1] for v in tup) for tup in rel))
        for rel in M.relations
    )


def _key_to_code(M: Structure, key) -> str:
    parts = [str(M.size)]
    for (name, _), tuples in zip(M.language.predicates, key):
        parts.append(name + "=" + " ".join(",".join(map(str, t)) for t in tuples))
    return "|".join(parts)


def _canonical_key(M: Structure):
    n = M.size
    if n == 0:
        return _encode_key(M, [])
    inc = _incidence(M)
    best: list = [None, None]  # key, labeling
    autos: list = []  # 0-based permutations, autos[i] = image of vertex i+1, minus 1

    def leaf(colors):
        order = sorted(range(n), key=lambda v: colors[v])
        label = [0] * n
        for new, v in enumerate(order):
            label[v] = new + 1
        key = _encode_key(M, label)
        if best[0] is None or key < best[0]:
            best[0], best[1] = key, label
        elif key == best[0]:
            # two labelings with equal codes compose to an automorphism
            inv = [0] * n
            for v in range(n):
                inv[label[v] - 1] = v
            autos.append(tuple(inv[best[1][v] - 1] for v in range(n)))

    def rec(colors, fixed):
        colors = _refine(M, colors, inc)
        cells = {}
        for v in range(n):
            cells.setdefault(colors[v], []).append(v)
        target = None
        for c in sorted(cells):
            if len(cells[c]) > 1:
                target = cells[c]
                break
        if target is None:
            leaf(colors)
            return
        tried = []
        for v in target:
            if _orbit_pruned(v, tried, autos, fixed, n):
                continue
            tried.append(v)
            child = [2 * c for c in colors]
            child[v] -= 1
            rec(child, fixed + [v])

    rec([0] * n, [])
    return best[0]


def _orbit_pruned(v, tried, autos, fixed, n):
    if not tried or not autos:
        return False
    usable = [g for g in autos if all(g[u] == u for u in fixed)]
    if not usable:
        return False
    # orbit of v under the usable generators, intersected with tried
    orbit = {v}
    frontier = [v]
    while frontier:
        x = frontier.pop()
        for g in usable:
            for y in (g[x], g.index(x)):
                if y not in orbit:
                    orbit.add(y)
                    frontier.append(y)
    return any(u in orbit for u in tried)


@lru_cache(maxsize=200000)
def _canonical_code_cached(M: Structure) -> str:
    if M.size <= 5:
        # tiny structures: exact minimum over all relabelings
        best = None
        for perm in permutations(range(1, M.size + 1)):
            key = _encode_key(M, list(perm))
            if best is None or key < best:
                best = key
        return _key_to_code(M, best)
    return _key_to_code(M, _canonical_key(M))


def canonical_form(M) -> str:
    """Canonical code; equal codes iff isomorphic. Exact up to 16 vertices."""
    M = as_structure(M)
    if M.size > CANONICAL_CAP:
        raise TooLarge(f"canonical form capped at {CANONICAL_CAP} vertices, got {M.size}")
    return _canonical_code_cached(M)


def _cheap_invariants(M: Structure):
    per_pred = []
    for (_, arity), rel in zip(M.language.predicates, M.relations):
        degs = sorted(
            tuple(sum(1 for t in rel if t[pos] == v) for pos in range(arity))
            for v in M.vertices
        )
        per_pred.append((len(rel), tuple(degs)))
    return (M.size, tuple(per_pred))


def are_isomorphic(M, N) -> bool:
    M, N = as_structure(M), as_structure(N)
    if M.language != N.language:
        raise LanguageMismatch("isomorphism needs a common language")
    if M.size != N.size:
        return False
    if M.size <= CANONICAL_CAP:
        return canonical_form(M) == canonical_form(N)
    if _cheap_invariants(M) != _cheap_invariants(N):
        return False
    # equal sizes: an embedding preserving relations and negations is an isomorphism
    return embeds(M, N)


# ---------------------------------------------------------------------------
# Embedding counting


def _pattern_order(M: Structure):
    """Vertex order maximizing connectivity to the already-ordered prefix."""
    n = M.size
    weight = [[0] * (n + 1) for _ in range(n + 1)]
    for rel in M.relations:
        for tup in rel:
            for a in tup:
                for b in tup:
                    if a != b:
                        weight[a][b] += 1
    order = []
    remaining = set(M.vertices)
    while remaining:
        if order:
            v = max(remaining, key=lambda x: (sum(weight[x][u] for u in order), -x))
        else:
            v = max(remaining, key=lambda x: (sum(weight[x][u] for u in remaining), -x))
        order.append(v)
        remaining.discard(v)
    return order


def _steps(M: Structure, order):
    """For each prefix step, the injective tuples to verify (must contain
    the newly placed vertex, all coordinates already placed)."""
    placed = set()
    steps = []
    for v in order:
        placed.add(v)
        checks = []
        for p_idx, rel in enumerate(M.relations):
            arity = M.language.predicates[p_idx][1]
            if arity > len(placed):
                continue
            for tup in permutations(sorted(placed), arity):
                if v in tup:
                    checks.append((p_idx, tup, tup in rel))
        steps.append((v, checks))
    return steps


def _count_embeddings_generic(M: Structure, N: Structure, count_all: bool) -> int:
    order = _pattern_order(M)
    steps = _steps(M, order)
    assign = {}
    used = [False] * (N.size + 1)
    total = 0

    def rec(depth):
        nonlocal total
        if depth == len(steps):
            total += 1
            return not count_all
        v, checks = steps[depth]
        for w in N.vertices:
            if used[w]:
                continue
            assign[v] = w
            ok = True
            for p_idx, tup, positive in checks:
                image = tuple(assign[x] for x in tup)
                if (image in N.relations[p_idx]) != positive:
                    ok = False
                    break
            if ok:
                used[w] = True
                if rec(depth + 1):
                    return True
                used[w] = False
        assign.pop(v, None)
        return False

    rec(0)
    return total


def _count_embeddings_graph(M: Graph, N: Graph, count_all: bool) -> int:
    order = _pattern_order(graph_to_structure(M)) if M.size else []
    adj_prefix = []
    for i, v in enumerate(order):
        adj_prefix.append([(j, M.adjacent(v, order[j])) for j in range(i)])
    total = 0
    image = [0] * len(order)
    used = [False] * (N.size + 1)

    def rec(i):
        nonlocal total
        if i == len(order):
            total += 1
            return not count_all
        for w in N.vertices:
            if used[w]:
                continue
            row = N.rows[w - 1]
            ok = True
            for j, adjacent in adj_prefix[i]:
                if bool(row >> (image[j] - 1) & 1) != adjacent:
                    ok = False
                    break
            if ok:
                image[i] = w
                used[w] = True
                if rec(i + 1):
                    return True
                used[w] = False
        return False

    rec(0)
    return total


def count_embeddings(M, N) -> int:
    """Number of injective maps M -> N preserving all relations and negations."""
    if isinstance(M, Graph) and isinstance(N, Graph):
        if M.size > N.size:
            return 0
        return _count_embeddings_graph(M, N, count_all=True)
    M, N = as_structure(M), as_structure(N)
    if M.language != N.language:
        raise LanguageMismatch("embedding counting needs a common language")
    if M.size > N.size:
        return 0
    if M.language == GRAPH_LANGUAGE:
        try:
            return _count_embeddings_graph(as_graph(M), as_graph(N), count_all=True)
        except NonInjectiveTuple:
            pass
    return _count_embeddings_generic(M, N, count_all=True)


def embeds(M, N) -> bool:
    """Whether M embeds into N as an induced substructure."""
    if isinstance(M, Graph) and isinstance(N, Graph):
        if M.size > N.size:
            return False
        return _count_embeddings_graph(M, N, count_all=False) > 0
    M, N = as_structure(M), as_structure(N)
    if M.language != N.language:
        raise LanguageMismatch("embedding test needs a common language")
    if M.size > N.size:
        return False
    if M.language == GRAPH_LANGUAGE:
        try:
            return _count_embeddings_graph(as_graph(M), as_graph(N), count_all=False) > 0
        except NonInjectiveTuple:
            pass
    return _count_embeddings_generic(M, N, count_all=False) > 0


def automorphism_count(M) -> int:
    return count_embeddings(M, M)


def falling_factorial(n: int, k: int) -> int:
    out = 1
    for i in range(k):
        out *= n - i
    return out


@dataclass(frozen=True)
class DensityReport:
    embeddings: int
    tind: Fraction
    p: Fraction
    aut: int


def densities(M, N) -> DensityReport:
    """Exact labeled density tind and unlabeled density p of M in N."""
    Ms, Ns = as_structure(M), as_structure(N)
    if Ms.language != Ns.language:
        raise LanguageMismatch("density needs a common language")
    emb = count_embeddings(M, N)
    aut = automorphism_count(M)
    if Ms.size <= Ns.size:
        tind = Fraction(emb, falling_factorial(Ns.size, Ms.size))
    else:
        tind = Fraction(0)
    p = Fraction(math.factorial(Ms.size), aut) * tind
    return DensityReport(embeddings=emb, tind=tind, p=p, aut=aut)


# ---------------------------------------------------------------------------
# Inventories of small graphs


@lru_cache(maxsize=None)
def all_graphs(n: int) -> tuple[Graph, ...]:
    """All graphs on exactly n vertices, one canonical representative each."""
    if n < 0:
        raise OutOfRangeVertex("negative vertex count")
    if n == 0:
        return (Graph(0, ()),)
    seen = {}
    for G in all_graphs(n - 1):
        for mask in range(1 << (n - 1)):
            rows = list(G.rows) + [0]
            for i in range(n - 1):
                if mask >> i & 1:
                    rows[i] |= 1 << (n - 1)
                    rows[n - 1] |= 1 << i
            H = Graph(n, tuple(rows))
            code = canonical_form(H)
            if code not in seen:
                seen[code] = H
    return tuple(seen[c] for c in sorted(seen))


def all_graphs_upto(n: int) -> tuple[Graph, ...]:
    out = []
    for k in range(n + 1):
        out.extend(all_graphs(k))
    return tuple(out)
