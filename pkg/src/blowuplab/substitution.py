"""Substitution calculus: generalized modules, primality, modular
decomposition, substitution-closure enumeration and membership, and minimal
obstructions.

Substituting a vertex v of F1 by a copy of F2 replaces v by the block; every
outside tuple meeting the block in exactly one coordinate sees the block
exactly as it saw v. The conservative substitution keeps the minimum possible
relation sets and is the unique substitution when all arities are <= 2.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from itertools import combinations, permutations

from .errors import (
    Budget,
    EmptyGraph,
    LanguageMismatch,
    NotPrimeClosed,
    OutOfRangeVertex,
    TooLarge,
    TooManyFreeTuples,
)
from .structures import (
    GRAPH_LANGUAGE,
    Graph,
    Language,
    Structure,
    all_graphs_upto,
    as_graph,
    as_structure,
    canonical_form,
    graph_to_structure,
    induced,
    induced_graph,
    make_structure,
)

FREE_TUPLE_CAP = 20
DEFAULT_BUDGET = 10**6


def enumeration_budget(budget=None) -> int:
    if budget is not None:
        return budget
    env = os.environ.get("BLOWUPLAB_BUDGET")
    return int(env) if env else DEFAULT_BUDGET


class Family:
    """A set of structures up to isomorphism, keyed by canonical code."""

    def __init__(self, language: Language, members=()):
        self.language = language
        self._members: dict[str, Structure] = {}
        for M in members:
            self.add(M)

    def add(self, M) -> bool:
        M = as_structure(M)
        if M.language != self.language:
            raise LanguageMismatch("family members must share the language")
        code = canonical_form(M)
        if code in self._members:
            return False
        self._members[code] = M
        return True

    def __contains__(self, M) -> bool:
        return canonical_form(as_structure(M)) in self._members

    def contains_code(self, code: str) -> bool:
        return code in self._members

    def __len__(self) -> int:
        return len(self._members)

    def __iter__(self):
        for code in sorted(self._members):
            yield self._members[code]

    def codes(self) -> frozenset[str]:
        return frozenset(self._members)

    def members(self) -> tuple[Structure, ...]:
        return tuple(self)

    def __eq__(self, other):
        return isinstance(other, Family) and self.codes() == other.codes()

    def __repr__(self):
        sizes = sorted(M.size for M in self)
        return f"Family({len(self)} members, sizes {sizes})"


# ---------------------------------------------------------------------------
# Substitution


def _substitution_labels(n1: int, v: int, n2: int):
    """Deterministic relabeling: the F2 block occupies positions v..v+n2-1,
    outside vertices keep their relative order."""
    outer = {}
    for w in range(1, n1 + 1):
        if w < v:
            outer[w] = w
        elif w > v:
            outer[w] = w + n2 - 1
    block = {u: v + u - 1 for u in range(1, n2 + 1)}
    return outer, block


def substitute_conservative(F1, v: int, F2) -> Structure:
    """The substitution of v in F1 by F2 with smallest possible relations."""
    F1, F2 = as_structure(F1), as_structure(F2)
    if F1.language != F2.language:
        raise LanguageMismatch("substitution needs a common language")
    if not (1 <= v <= F1.size):
        raise OutOfRangeVertex(f"vertex {v} outside 1..{F1.size}")
    outer, block = _substitution_labels(F1.size, v, F2.size)
    rels = {}
    for name, _ in F1.language.predicates:
        out = set()
        for tup in F2.rel(name):
            out.add(tuple(block[u] for u in tup))
        for tup in F1.rel(name):
            if v in tup:
                for u in range(1, F2.size + 1):
                    out.add(tuple(block[u] if w == v else outer[w] for w in tup))
            else:
                out.add(tuple(outer[w] for w in tup))
        rels[name] = out
    return make_structure(F1.language, F1.size + F2.size - 1, rels)


def substitute_graphs(F1: Graph, v: int, F2: Graph) -> Graph:
    return as_graph(substitute_conservative(F1, v, F2))


def _free_tuples(language: Language, n1: int, v: int, n2: int):
    """Injective tuples meeting the block in >= 2 coordinates and the outside
    in >= 1; these are unconstrained by the substitution conditions."""
    n = n1 + n2 - 1
    block_lo, block_hi = v, v + n2 - 1
    free = []
    for name, arity in language.predicates:
        if arity < 3:
            continue
        for tup in permutations(range(1, n + 1), arity):
            inside = sum(1 for w in tup if block_lo <= w <= block_hi)
            if inside >= 2 and inside < arity:
                free.append((name, tup))
    return free


def substitutions_all(F1, v: int, F2) -> Family:
    """All substitutions of v in F1 by F2, up to isomorphism."""
    F1, F2 = as_structure(F1), as_structure(F2)
    base = substitute_conservative(F1, v, F2)
    free = _free_tuples(F1.language, F1.size, v, F2.size)
    if len(free) > FREE_TUPLE_CAP:
        raise TooManyFreeTuples(f"{len(free)} free tuples exceed the cap of {FREE_TUPLE_CAP}")
    family = Family(F1.language)
    base_rels = {name: set(base.rel(name)) for name, _ in base.language.predicates}
    for mask in range(1 << len(free)):
        rels = {name: set(tuples) for name, tuples in base_rels.items()}
        for i, (name, tup) in enumerate(free):
            if mask >> i & 1:
                rels[name].add(tup)
        family.add(make_structure(base.language, base.size, rels))
    return family


# ---------------------------------------------------------------------------
# Modules and primality


MODULE_SIZE_CAP = 12


def find_modules(M) -> list[frozenset[int]]:
    """All vertex sets U, 2 <= |U| < n, seen homogeneously from outside.

    U qualifies iff for every predicate and every injective tuple with exactly
    one coordinate in U, membership is unchanged as that coordinate ranges
    over U. Brute force over subsets; capped at 12 vertices.
    """
    M = as_structure(M)
    n = M.size
    if n > MODULE_SIZE_CAP:
        raise TooLarge(f"find_modules is capped at {MODULE_SIZE_CAP} vertices, got {n}")
    out = []
    for size in range(2, n):
        for U in combinations(range(1, n + 1), size):
            if _is_module(M, frozenset(U)):
                out.append(frozenset(U))
    return out


def _is_module(M: Structure, U: frozenset[int]) -> bool:
    for (name, arity), rel in zip(M.language.predicates, M.relations):
        outside = [w for w in M.vertices if w not in U]
        if arity == 2:
            members = sorted(U)
            anchor = members[0]
            for w in outside:
                for tup in ((anchor, w), (w, anchor)):
                    want = tup in rel
                    for u in members[1:]:
                        probe = (u, tup[1]) if tup[0] == anchor else (tup[0], u)
                        if (probe in rel) != want:
                            return False
            continue
        for tup in permutations(M.vertices, arity):
            positions = [i for i, w in enumerate(tup) if w in U]
            if len(positions) != 1:
                continue
            i = positions[0]
            want = tup in rel
            for u in U:
                probe = tup[:i] + (u,) + tup[i + 1:]
                if (probe in rel) != want:
                    return False
    return True


def is_prime(M) -> bool:
    """Whether M is not a substitution of two strictly smaller structures."""
    M = as_structure(M)
    if M.size <= 2:
        return True
    if M.language == GRAPH_LANGUAGE:
        from .errors import NonInjectiveTuple

        try:
            G = as_graph(M)
        except NonInjectiveTuple:
            G = None  # asymmetric edge relation: not actually a graph
        if G is not None:
            tree = modular_decomposition(G)
            return tree.kind == "PRIME" and all(c.kind == "LEAF" for c in tree.children)
    return not find_modules(M)


# ---------------------------------------------------------------------------
# Modular decomposition of graphs


@dataclass(frozen=True)
class DecompositionTree:
    """Rooted strong-module tree; internal nodes carry their quotient graph."""

    kind: str  # LEAF | SERIES | PARALLEL | PRIME
    vertices: tuple[int, ...]
    children: tuple["DecompositionTree", ...]
    quotient: Graph | None

    def leaves(self) -> tuple[int, ...]:
        return self.vertices

    def all_nodes(self):
        yield self
        for child in self.children:
            yield from child.all_nodes()

    def kinds(self) -> set[str]:
        return {node.kind for node in self.all_nodes()}

    def to_json(self) -> dict:
        from .structures import encode_graph6

        out = {"kind": self.kind, "vertices": list(self.vertices)}
        if self.children:
            out["children"] = [c.to_json() for c in self.children]
        if self.quotient is not None:
            out["quotient"] = encode_graph6(self.quotient)
        return out


def _components_masks(n: int, rows) -> list[int]:
    seen = 0
    comps = []
    for s in range(n):
        if seen >> s & 1:
            continue
        comp = 1 << s
        frontier = 1 << s
        while frontier:
            nxt = 0
            f = frontier
            while f:
                u = (f & -f).bit_length() - 1
                f ^= 1 << u
                nxt |= rows[u] & ~comp
            comp |= nxt
            frontier = nxt
        comps.append(comp)
        seen |= comp
    return comps


def _smallest_module(G: Graph, a: int, b: int) -> int:
    """Bitmask of the smallest module containing 0-based vertices a and b."""
    S = (1 << a) | (1 << b)
    while True:
        splitter = None
        for z in range(G.size):
            if S >> z & 1:
                continue
            inter = G.rows[z] & S
            if inter != 0 and inter != S:
                splitter = z
                break
        if splitter is None:
            return S
        S |= 1 << splitter


def modular_decomposition(G: Graph) -> DecompositionTree:
    """The unique strong-module decomposition tree of G."""
    if G.size == 0:
        raise EmptyGraph("modular decomposition needs at least one vertex")
    return _decompose(G, tuple(range(1, G.size + 1)))


def _decompose(G: Graph, labels: tuple[int, ...]) -> DecompositionTree:
    n = G.size
    if n == 1:
        return DecompositionTree("LEAF", labels, (), None)
    comps = _components_masks(n, G.rows)
    if len(comps) > 1:
        return _node("PARALLEL", G, labels, comps)
    from .structures import complement

    cocomps = _components_masks(n, complement(G).rows)
    if len(cocomps) > 1:
        return _node("SERIES", G, labels, cocomps)
    # connected and co-connected: children are the maximal proper strong
    # modules; each is the union of all proper smallest modules through a vertex
    parts = []
    assigned = 0
    for a in range(n):
        if assigned >> a & 1:
            continue
        full = (1 << n) - 1
        part = 1 << a
        for b in range(n):
            if b == a:
                continue
            S = _smallest_module(G, a, b)
            if S != full:
                part |= S
        parts.append(part)
        assigned |= part
    return _node("PRIME", G, labels, parts)


def _node(kind: str, G: Graph, labels, masks) -> DecompositionTree:
    masks = sorted(masks, key=lambda m: (m & -m))
    children = []
    for mask in masks:
        vs = [i + 1 for i in range(G.size) if mask >> i & 1]
        sub = induced_graph(G, vs)
        children.append(_decompose(sub, tuple(labels[v - 1] for v in vs)))
    reps = [ (mask & -mask).bit_length() for mask in masks ]  # 1-based rep of each part
    quotient = induced_graph(G, reps)
    return DecompositionTree(kind, tuple(l for c in children for l in c.vertices), tuple(children), quotient)


def is_cograph(G: Graph) -> bool:
    if G.size == 0:
        return True
    return "PRIME" not in modular_decomposition(G).kinds()


# ---------------------------------------------------------------------------
# Prime substructures and closures


def prime_substructures(M, include_small: bool = True) -> Family:
    """All prime induced substructures of M up to isomorphism."""
    M = as_structure(M)
    if M.size > MODULE_SIZE_CAP:
        raise TooLarge(f"prime_substructures is capped at {MODULE_SIZE_CAP} vertices")
    family = Family(M.language)
    low = 0 if include_small else 3
    for size in range(low, M.size + 1):
        for U in combinations(M.vertices, size):
            sub = induced(M, U)
            if size > 2 and not is_prime(sub):
                continue
            family.add(sub)
    return family


def closure_enumerate(P: Family, n_max: int, budget: int | None = None) -> Family:
    """Members of the substitution closure of P with at most n_max vertices.

    Fixpoint iteration; when K_0 is in P, substitution by K_0 realizes vertex
    deletion, so the result is also closed under substructures.
    """
    cap = enumeration_budget(budget)
    binary = P.language.max_arity <= 2
    closed = Family(P.language)
    worklist = [M for M in P if M.size <= n_max]
    for M in worklist:
        closed.add(M)
    while worklist:
        F_new = worklist.pop()
        snapshot = closed.members()
        for other in snapshot:
            for F1, F2 in ((F_new, other), (other, F_new)):
                if F1.size + F2.size - 1 > n_max or F1.size == 0:
                    continue
                for v in F1.vertices:
                    if binary:
                        results = [substitute_conservative(F1, v, F2)]
                    else:
                        results = substitutions_all(F1, v, F2)
                    for R in results:
                        if closed.add(R):
                            worklist.append(R)
                            if len(closed) > cap:
                                raise Budget(f"closure exceeded {cap} members")
    return closed


def check_prime_closed(P: Family) -> None:
    """Raise ``NotPrimeClosed`` unless P is a prime family closed under prime
    substructures."""
    codes = P.codes()
    for M in P:
        if not is_prime(M):
            raise NotPrimeClosed(f"family member of size {M.size} is not prime")
        for sub in prime_substructures(M, include_small=True):
            if canonical_form(sub) not in codes:
                raise NotPrimeClosed(
                    f"prime substructure of size {sub.size} missing from the family"
                )


def closure_member(M, P: Family) -> bool:
    """Whether M lies in the substitution closure of the prime family P.

    Criterion: every prime induced substructure of M belongs to P. Only valid
    for binary languages, where conservative substitution is the unique one.
    """
    M = as_structure(M)
    if P.language.max_arity > 2:
        raise NotPrimeClosed("membership criterion requires a binary language")
    if M.language != P.language:
        raise LanguageMismatch("structure and family languages differ")
    check_prime_closed(P)
    codes = P.codes()
    return all(
        canonical_form(sub) in codes
        for sub in prime_substructures(M, include_small=True)
    )


def minimal_obstructions(member, n_max: int, universe=None, budget: int | None = None) -> Family:
    """Minimal non-members of a hereditary predicate, up to n_max vertices.

    ``member`` is a predicate on graphs; ``universe(n)`` yields one
    representative per isomorphism class (defaults to all graphs).
    The predicate's family is substitution-closed up to n_max iff every
    returned obstruction is prime.
    """
    cap = enumeration_budget(budget)
    if universe is None:
        universe = lambda n: all_graphs_upto(n)
    out = Family(GRAPH_LANGUAGE)
    scanned = 0
    for G in universe(n_max):
        scanned += 1
        if scanned > cap:
            raise Budget(f"obstruction scan exceeded {cap} graphs")
        if member(G):
            continue
        H = as_graph(G)
        proper_ok = True
        for size in range(H.size):
            for U in combinations(H.vertices, size):
                if not member(induced_graph(H, U)):
                    proper_ok = False
                    break
            if not proper_ok:
                break
        if proper_ok:
            out.add(graph_to_structure(H))
    return out


# ---------------------------------------------------------------------------
# Antichain reports (finite form of almost-finiteness)


def sequence_embedding_indices(members) -> list[tuple[int, int]]:
    """Pairs (i, j), i < j, with member i embedding into member j."""
    from .structures import embeds

    ms = [as_structure(M) for M in members]
    out = []
    for i in range(len(ms)):
        for j in range(i + 1, len(ms)):
            if embeds(ms[i], ms[j]):
                out.append((i, j))
    return out


def is_antichain(members) -> bool:
    """No member embeds into another (pairwise incomparable members)."""
    from .structures import embeds

    ms = [as_structure(M) for M in members]
    for i in range(len(ms)):
        for j in range(len(ms)):
            if i != j and embeds(ms[i], ms[j]):
                return False
    return True
