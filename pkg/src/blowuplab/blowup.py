"""Recursive blow-up limits over Cantor spaces: finite blow-ups, exact and
interval motif densities, cylinder masks, seeded sampling, positivity
profiles and persistence probes, plus step-graphon densities.

A blow-up spec fixes one structure per level; a vertex of the limit is an
infinite string choosing one child per level, and a tuple is related exactly
when all its vertices share a prefix, split apart at the next level, and
their letters there form a relation tuple of that level's structure.

Determinism contract for sampling: all randomness comes from a single
splitmix64 stream seeded with ``seed``. Blow-up sources process levels in
increasing order; within a level, vertices 1..n in increasing order draw one
coordinate each iff the vertex still has an unresolved pair, selecting
uniformly among the node's surviving children by multiply-shift
(``(u * k) >> 64``). Step graphons draw blocks for vertices 1..n (one 64-bit
output each, inverted through the exact cumulative block measures), then one
output per vertex pair in lexicographic order, an edge iff
``u * den < num << 64`` for the block pair's weight ``num/den``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations

from .errors import (
    BadParameter,
    Budget,
    DegenerateSource,
    EmptyMask,
    LanguageMismatch,
    MotifTooLarge,
    OutOfRangeVertex,
    TooLarge,
    UnsupportedMode,
)
from .structures import (
    GRAPH_LANGUAGE,
    Graph,
    Language,
    Structure,
    all_graphs_upto,
    as_structure,
    canonical_form,
    count_embeddings,
    falling_factorial,
    graph_to_structure,
    induced,
    make_structure,
)
from .substitution import Family

MOTIF_CAP = 6
STEP_MOTIF_CAP = 7
MASK_DEPTH_CAP = 32
FINITE_BLOWUP_CAP = 10**5


def mell(level: int) -> int:
    """Ruler sequence: the largest m with 2^m dividing level+1.

    Every value m reappears within every window of 2^(m+1) consecutive
    levels, so each base structure is rescheduled infinitely often.
    """
    if level < 0:
        raise BadParameter("level must be >= 0")
    x = level + 1
    return (x & -x).bit_length() - 1


# ---------------------------------------------------------------------------
# Specs


class Tail:
    def level(self, j: int) -> Structure:
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantTail(Tail):
    structure: Structure

    def level(self, j: int) -> Structure:
        return self.structure


@dataclass(frozen=True)
class PeriodicTail(Tail):
    base: tuple[Structure, ...]
    offset: int = 0

    def level(self, j: int) -> Structure:
        return self.base[(j + self.offset) % len(self.base)]


@dataclass(frozen=True)
class RepeatingTail(Tail):
    """Base list G_0..G_{t-1} rescheduled by the ruler sequence; indices past
    the end repeat the last entry."""

    base: tuple[Structure, ...]
    offset: int = 0

    def level(self, j: int) -> Structure:
        m = mell(j + self.offset)
        return self.base[min(m, len(self.base) - 1)]


@dataclass(frozen=True)
class BlowupSpec:
    """Explicit prefix levels followed by a tail rule; every level >= 2."""

    tail: Tail
    prefix: tuple[Structure, ...] = ()

    def __post_init__(self):
        language = self.language
        for i, s in enumerate(self.prefix):
            _check_level(s, language, f"prefix[{i}]")

    @property
    def language(self) -> Language:
        probe = self.prefix[0] if self.prefix else self.tail.level(0)
        return probe.language

    def level_structure(self, level: int) -> Structure:
        if level < 0:
            raise BadParameter("level must be >= 0")
        if level < len(self.prefix):
            return self.prefix[level]
        return self.tail.level(level - len(self.prefix))


def _check_level(s: Structure, language: Language, where: str) -> None:
    if s.size < 2:
        raise BadParameter(f"{where} has {s.size} vertices; levels need >= 2")
    if s.language != language:
        raise LanguageMismatch(f"{where} is over a different language")


def _normalize_levels(items) -> tuple[Structure, ...]:
    out = tuple(as_structure(x) for x in items)
    for i, s in enumerate(out):
        _check_level(s, out[0].language, f"level {i}")
    return out


def constant_spec(G) -> BlowupSpec:
    (s,) = _normalize_levels([G])
    return BlowupSpec(ConstantTail(s))


def periodic_spec(base) -> BlowupSpec:
    levels = _normalize_levels(base)
    if not levels:
        raise BadParameter("periodic spec needs a nonempty base")
    return BlowupSpec(PeriodicTail(levels))


def repeating_spec(base) -> BlowupSpec:
    levels = _normalize_levels(base)
    if not levels:
        raise BadParameter("repeating spec needs a nonempty base")
    return BlowupSpec(RepeatingTail(levels))


def explicit_spec(prefix, tail_spec: BlowupSpec) -> BlowupSpec:
    """Prepend explicit levels in front of an existing spec."""
    levels = _normalize_levels(prefix) if prefix else ()
    if levels and levels[0].language != tail_spec.language:
        raise LanguageMismatch("prefix and tail languages differ")
    return BlowupSpec(tail_spec.tail, levels + tuple(tail_spec.prefix))


def level_structure(spec: BlowupSpec, level: int) -> Structure:
    return spec.level_structure(level)


def shift(spec: BlowupSpec, t: int) -> BlowupSpec:
    """Drop the first t levels."""
    if t < 0:
        raise BadParameter("shift must be >= 0")
    if t <= len(spec.prefix):
        remaining = spec.prefix[t:]
        return BlowupSpec(spec.tail, remaining)
    extra = t - len(spec.prefix)
    tail = spec.tail
    if isinstance(tail, ConstantTail):
        return BlowupSpec(tail, ())
    if isinstance(tail, PeriodicTail):
        return BlowupSpec(
            PeriodicTail(tail.base, (tail.offset + extra) % len(tail.base)), ()
        )
    if isinstance(tail, RepeatingTail):
        return BlowupSpec(RepeatingTail(tail.base, tail.offset + extra), ())
    raise UnsupportedMode(f"cannot shift tail {tail!r}")


# ---------------------------------------------------------------------------
# Cylinder masks


@dataclass(frozen=True)
class MaskNode:
    """Explicit prefix-tree mask: surviving children, recursive restrictions.

    A child without an entry keeps its full subtree.
    """

    keep: tuple[int, ...]
    children: tuple[tuple[int, "MaskNode"], ...] = ()

    def child(self, v: int) -> "MaskNode | None":
        for u, node in self.children:
            if u == v:
                return node
        return None

    def depth(self) -> int:
        return 1 + max((node.depth() for _, node in self.children), default=0)


@dataclass(frozen=True)
class ProductMask:
    """One survivor set per level, shared by all nodes at that level."""

    levels: tuple[tuple[int, ...], ...]

    def depth(self) -> int:
        return len(self.levels)


def mask_from_json(data) -> "MaskNode | ProductMask":
    if isinstance(data, dict) and "levels" in data:
        return ProductMask(tuple(tuple(level) for level in data["levels"]))
    if isinstance(data, dict):
        children = tuple(
            (int(v), mask_from_json(sub)) for v, sub in sorted(data.get("children", {}).items(), key=lambda kv: int(kv[0]))
        )
        return MaskNode(tuple(data["keep"]), children)
    raise BadParameter("mask JSON must be an object with 'keep' or 'levels'")


def mask_to_json(mask) -> dict:
    if isinstance(mask, ProductMask):
        return {"levels": [list(level) for level in mask.levels]}
    out = {"keep": list(mask.keep)}
    if mask.children:
        out["children"] = {str(v): mask_to_json(node) for v, node in mask.children}
    return out


@dataclass(frozen=True)
class PrunedSpec:
    spec: BlowupSpec
    mask: "MaskNode | ProductMask"

    @property
    def language(self) -> Language:
        return self.spec.language


def prune_spec(spec: BlowupSpec, mask) -> PrunedSpec:
    """Restrict a spec to the cylinder set described by a mask."""
    if mask.depth() > MASK_DEPTH_CAP:
        raise TooLarge(f"mask depth capped at {MASK_DEPTH_CAP}")
    _validate_mask(spec, mask)
    return PrunedSpec(spec, mask)


def _validate_mask(spec: BlowupSpec, mask) -> None:
    if isinstance(mask, ProductMask):
        for level, keep in enumerate(mask.levels):
            size = spec.level_structure(level).size
            if not keep:
                raise EmptyMask(f"level {level} mask keeps nothing")
            for v in keep:
                if not (1 <= v <= size):
                    raise OutOfRangeVertex(f"mask vertex {v} outside level {level}")
        return

    def walk(node: MaskNode, level: int) -> None:
        size = spec.level_structure(level).size
        if not node.keep:
            raise EmptyMask(f"a node at level {level} keeps nothing")
        keep = set(node.keep)
        for v in node.keep:
            if not (1 <= v <= size):
                raise OutOfRangeVertex(f"mask vertex {v} outside level {level}")
        for v, child in node.children:
            if v not in keep:
                raise EmptyMask(f"child {v} at level {level} is restricted but not kept")
            walk(child, level + 1)

    walk(mask, 0)


def mask_measure(pruned: PrunedSpec) -> Fraction:
    """Measure of the surviving cylinder set."""
    spec, mask = pruned.spec, pruned.mask
    if isinstance(mask, ProductMask):
        out = Fraction(1)
        for level, keep in enumerate(mask.levels):
            out *= Fraction(len(set(keep)), spec.level_structure(level).size)
        return out

    def walk(node: MaskNode, level: int) -> Fraction:
        size = spec.level_structure(level).size
        total = Fraction(0)
        for v in set(node.keep):
            child = node.child(v)
            below = walk(child, level + 1) if child is not None else Fraction(1)
            total += Fraction(1, size) * below
        return total

    return walk(mask, 0)


# ---------------------------------------------------------------------------
# Source nodes (uniform view over plain and pruned specs)


class _Node:
    """A position in the (possibly pruned) prefix tree."""

    __slots__ = ("spec", "mask", "path", "mask_node")

    def __init__(self, spec: BlowupSpec, mask, path, mask_node):
        self.spec = spec
        self.mask = mask
        self.path = path
        self.mask_node = mask_node  # MaskNode while inside an explicit mask

    @property
    def level(self) -> int:
        return len(self.path)

    def level_structure(self) -> Structure:
        return self.spec.level_structure(self.level)

    def survivors(self) -> tuple[int, ...]:
        size = self.level_structure().size
        if isinstance(self.mask, ProductMask) and self.level < len(self.mask.levels):
            return tuple(sorted(set(self.mask.levels[self.level])))
        if isinstance(self.mask_node, MaskNode):
            return tuple(sorted(set(self.mask_node.keep)))
        return tuple(range(1, size + 1))

    def child(self, v: int) -> "_Node":
        nxt = self.mask_node.child(v) if isinstance(self.mask_node, MaskNode) else None
        return _Node(self.spec, self.mask, self.path + (v,), nxt)

    def key(self):
        # nodes outside any explicit mask are interchangeable per level
        if isinstance(self.mask, ProductMask):
            return ("p", self.level)
        if isinstance(self.mask_node, MaskNode):
            return ("m", self.path)
        return ("t", self.level)

    def children_equivalent(self) -> bool:
        if isinstance(self.mask_node, MaskNode):
            return not self.mask_node.children
        return True


def _source_node(source) -> _Node:
    if isinstance(source, PrunedSpec):
        node = source.mask if isinstance(source.mask, MaskNode) else None
        return _Node(source.spec, source.mask, (), node)
    if isinstance(source, BlowupSpec):
        return _Node(source, None, (), None)
    raise UnsupportedMode(f"not a blow-up source: {source!r}")


# ---------------------------------------------------------------------------
# Finite blow-ups


def finite_blowup(spec: BlowupSpec, depth: int) -> Structure:
    """The conservative blow-up along the first ``depth`` levels."""
    if depth < 0:
        raise BadParameter("depth must be >= 0")
    levels = [spec.level_structure(i) for i in range(depth)]
    total = 1
    for s in levels:
        total *= s.size
    if total > FINITE_BLOWUP_CAP:
        raise TooLarge(f"{total} vertices exceed the cap of {FINITE_BLOWUP_CAP}")
    language = spec.language
    if depth == 0:
        return make_structure(language, 1, {})

    # vertex = string, numbered lexicographically from 1
    strides = [1] * depth
    for i in range(depth - 2, -1, -1):
        strides[i] = strides[i + 1] * levels[i + 1].size

    def vertex_id(string) -> int:
        return 1 + sum((c - 1) * strides[i] for i, c in enumerate(string))

    rels = {name: [] for name, _ in language.predicates}
    from itertools import product as iproduct

    prefix_pools = [
        list(iproduct(*[range(1, levels[j].size + 1) for j in range(i)]))
        for i in range(depth)
    ]
    tail_sizes = [
        [levels[j].size for j in range(i + 1, depth)] for i in range(depth)
    ]
    for i in range(depth):
        tails = list(iproduct(*[range(1, s + 1) for s in tail_sizes[i]]))
        for name, arity in language.predicates:
            for alpha in levels[i].rel(name):
                for sigma in prefix_pools[i]:
                    for tau in iproduct(tails, repeat=arity):
                        rels[name].append(
                            tuple(
                                vertex_id(sigma + (alpha[j],) + tau[j])
                                for j in range(arity)
                            )
                        )
    return make_structure(language, total, rels)


# ---------------------------------------------------------------------------
# Partition machinery for density recursions


@dataclass(frozen=True)
class _Split:
    cells: tuple[tuple[int, ...], ...]
    quotient: Structure
    parts: tuple[Structure, ...]  # induced substructures, one per cell


def _set_partitions(items):
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def _valid_splits(H: Structure) -> tuple[_Split, ...]:
    """Partitions of V(H) whose mixed tuples are absent and whose cross-cell
    tuples are homogeneous, with the induced quotient structure."""
    out = []
    verts = list(H.vertices)
    for cells in _set_partitions(verts):
        cells = [tuple(sorted(c)) for c in cells]
        cells.sort(key=lambda c: c[0])
        cell_of = {}
        for idx, cell in enumerate(cells):
            for v in cell:
                cell_of[v] = idx
        ok = True
        quotient_rels: dict[str, dict] = {name: {} for name, _ in H.language.predicates}
        for (name, arity), rel in zip(H.language.predicates, H.relations):
            if not ok:
                break
            for tup in permutations(verts, arity):
                image = tuple(cell_of[v] for v in tup)
                distinct = len(set(image))
                if distinct == len(image):
                    seen = quotient_rels[name].get(image)
                    holds = tup in rel
                    if seen is None:
                        quotient_rels[name][image] = holds
                    elif seen != holds:
                        ok = False
                        break
                elif distinct > 1 and tup in rel:
                    ok = False  # mixed tuple cannot occur in any blow-up
                    break
        if not ok:
            continue
        quotient = make_structure(
            H.language,
            len(cells),
            {
                name: [tuple(c + 1 for c in image) for image, holds in table.items() if holds]
                for name, table in quotient_rels.items()
            },
        )
        parts = tuple(induced(H, cell) for cell in cells)
        out.append(_Split(tuple(cells), quotient, parts))
    return tuple(out)


class _MotifTable:
    """Canonical representatives of all induced substructures of a motif,
    with their valid splits; shared by the exact and interval evaluators."""

    def __init__(self, H: Structure):
        self.reps: dict[str, Structure] = {}
        self.splits: dict[str, tuple[_Split, ...]] = {}
        self._add_all(H)

    def code(self, H: Structure) -> str:
        code = canonical_form(H)
        if code not in self.reps:
            self._add_all(H)
        return code

    def _add_all(self, H: Structure) -> None:
        from itertools import combinations

        for size in range(H.size + 1):
            for U in combinations(H.vertices, size):
                sub = induced(H, U)
                code = canonical_form(sub)
                if code not in self.reps:
                    self.reps[code] = sub
                    self.splits[code] = _valid_splits(sub)

    def by_size(self):
        return sorted(self.reps.items(), key=lambda kv: (self.reps[kv[0]].size, kv[0]))


@dataclass(frozen=True)
class DensityInterval:
    lower: Fraction
    upper: Fraction
    depth: int

    def width(self) -> Fraction:
        return self.upper - self.lower


def tind_blowup(H, source, mode: str = "exact", eps=None, max_depth: int = 512):
    """Labeled density of the motif H in a blow-up limit.

    ``mode='exact'`` (constant/periodic tails only) solves the per-period
    linear fixed point in exact rationals. ``mode='interval'`` truncates the
    recursion once the unresolved mass drops below ``eps`` and returns a
    ``DensityInterval`` bracketing the true value.
    """
    H = as_structure(H)
    if H.size > MOTIF_CAP:
        raise MotifTooLarge(f"motif capped at {MOTIF_CAP} vertices, got {H.size}")
    spec = source.spec if isinstance(source, PrunedSpec) else source
    if H.language != spec.language:
        raise LanguageMismatch("motif and spec languages differ")
    if mode == "exact":
        if isinstance(source, PrunedSpec):
            raise UnsupportedMode("exact mode works on unpruned specs only")
        if not isinstance(source.tail, (ConstantTail, PeriodicTail)):
            raise UnsupportedMode("exact mode needs a constant or periodic tail")
        return _tind_exact(H, source)
    if mode == "interval":
        eps = Fraction(eps if eps is not None else Fraction(1, 10**9))
        if eps <= 0:
            raise BadParameter("eps must be positive")
        return _tind_interval(H, source, eps, max_depth)
    raise UnsupportedMode(f"unknown mode {mode!r}")


def _tind_exact(H: Structure, spec: BlowupSpec) -> Fraction:
    table = _MotifTable(H)
    tail = spec.tail
    period = 1 if isinstance(tail, ConstantTail) else len(tail.base)
    t = len(spec.prefix)

    # values[code][j]: density of the motif in the spec shifted to position j;
    # positions 0..t-1 are the prefix, t..t+period-1 the tail residues
    values: dict[str, list[Fraction]] = {}
    positions = t + period

    for code, rep in table.by_size():
        if rep.size <= 1:
            values[code] = [Fraction(1)] * positions
            continue
        h = rep.size
        # affine coefficients per position: theta_pos = a*theta_next + b
        coeffs = []
        for pos in range(positions):
            G = spec.level_structure(pos) if pos < t else tail.level(pos - t)
            a = Fraction(1, G.size ** (h - 1))
            b = Fraction(0)
            for split in table.splits[code]:
                if len(split.cells) == 1:
                    continue
                emb = count_embeddings(split.quotient, G)
                if emb == 0:
                    continue
                term = Fraction(emb, G.size ** h)
                nxt = _next_position(pos, t, period)
                for part in split.parts:
                    term *= values[table.code(part)][nxt]
                b += term
            coeffs.append((a, b))
        # tail residues form a cycle; solve theta_t = A*theta_t + B
        A = Fraction(1)
        B = Fraction(0)
        for r in range(period):
            a, b = coeffs[t + r]
            B += A * b
            A *= a
        vals = [Fraction(0)] * positions
        vals[t] = B / (1 - A)
        for r in range(period - 1, 0, -1):
            a, b = coeffs[t + r]
            vals[t + r] = a * vals[_next_position(t + r, t, period)] + b
        # re-derive residue t downstream consistency, then unroll the prefix
        for pos in range(t - 1, -1, -1):
            a, b = coeffs[pos]
            vals[pos] = a * vals[pos + 1] + b
        values[code] = vals

    return values[table.code(H)][0]


def _next_position(pos: int, t: int, period: int) -> int:
    if pos < t:
        return pos + 1
    r = pos - t
    return t + (r + 1) % period


def _list_embeddings(Q: Structure, G: Structure):
    """All embeddings of Q into G as tuples (image of 1, ..., image of |Q|)."""
    out = []
    n = Q.size
    verts = list(G.vertices)

    def rec(img):
        i = len(img)
        if i == n:
            out.append(tuple(img))
            return
        v = i + 1
        for w in verts:
            if w in img:
                continue
            ok = True
            for (name, arity), rel in zip(Q.language.predicates, Q.relations):
                for tup in permutations(range(1, v + 1), arity):
                    if v not in tup:
                        continue
                    mapped = tuple(img[x - 1] if x <= i else w for x in tup)
                    if (mapped in G.rel(name)) != (tup in rel):
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                rec(img + [w])

    rec([])
    return out


def _interval_depth(node: _Node, h: int, eps: Fraction, max_depth: int) -> int:
    """Depth with unresolved collision mass at most eps."""
    bound = Fraction(h * (h - 1), 2)
    if bound == 0:
        return 0
    depth = 0
    frontier = [node]
    while bound > eps:
        if depth >= max_depth:
            raise Budget(f"interval depth exceeded {max_depth}")
        worst = None
        nxt = []
        seen = set()
        for nd in frontier:
            surv = nd.survivors()
            size = len(surv)
            if worst is None or size < worst:
                worst = size
            if nd.children_equivalent():
                child = nd.child(surv[0])
                if child.key() not in seen:
                    seen.add(child.key())
                    nxt.append(child)
            else:
                for v in surv:
                    child = nd.child(v)
                    if child.key() not in seen:
                        seen.add(child.key())
                        nxt.append(child)
        bound /= worst
        frontier = nxt
        depth += 1
    return depth


def _tind_interval(H: Structure, source, eps: Fraction, max_depth: int) -> DensityInterval:
    root = _source_node(source)
    table = _MotifTable(H)
    depth = _interval_depth(root, H.size, eps, max_depth)
    memo: dict = {}

    def rec(code: str, node: _Node):
        rep = table.reps[code]
        if rep.size <= 1:
            return (Fraction(1), Fraction(1))
        if node.level >= depth:
            return (Fraction(0), Fraction(1))
        key = (code, node.key())
        if key in memo:
            return memo[key]
        surv = node.survivors()
        G_full = node.level_structure()
        G = induced(G_full, surv)
        denom = len(surv) ** rep.size
        lo = Fraction(0)
        hi = Fraction(0)
        for split in table.splits[code]:
            part_codes = [table.code(p) for p in split.parts]
            if node.children_equivalent():
                emb = count_embeddings(split.quotient, G)
                if emb == 0:
                    continue
                child = node.child(surv[0])
                plo = phi = Fraction(1)
                for pc in part_codes:
                    clo, chi = rec(pc, child)
                    plo *= clo
                    phi *= chi
                lo += Fraction(emb, denom) * plo
                hi += Fraction(emb, denom) * phi
            else:
                for image in _list_embeddings(split.quotient, G):
                    plo = phi = Fraction(1)
                    for pc, cell_img in zip(part_codes, image):
                        clo, chi = rec(pc, node.child(surv[cell_img - 1]))
                        plo *= clo
                        phi *= chi
                        if phi == 0:
                            break
                    lo += Fraction(1, denom) * plo
                    hi += Fraction(1, denom) * phi
        memo[key] = (lo, hi)
        return memo[key]

    lo, hi = rec(table.code(H), root)
    return DensityInterval(lo, hi, depth)


# ---------------------------------------------------------------------------
# Step graphons


@dataclass(frozen=True)
class StepGraphon:
    """Block-constant symmetric kernel with rational data."""

    measures: tuple[Fraction, ...]
    weights: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        k = len(self.measures)
        if k == 0:
            raise BadParameter("a step graphon needs at least one block")
        if sum(self.measures) != 1:
            raise BadParameter("block measures must sum to 1")
        for m in self.measures:
            if m <= 0:
                raise BadParameter("block measures must be positive")
        if len(self.weights) != k or any(len(row) != k for row in self.weights):
            raise BadParameter("weight matrix must be k x k")
        for i in range(k):
            for j in range(k):
                w = self.weights[i][j]
                if w != self.weights[j][i]:
                    raise BadParameter("weights must be symmetric")
                if not (0 <= w <= 1):
                    raise BadParameter("weights must lie in [0, 1]")

    @property
    def blocks(self) -> int:
        return len(self.measures)


def step_graphon(measures, weights) -> StepGraphon:
    return StepGraphon(
        tuple(Fraction(m) for m in measures),
        tuple(tuple(Fraction(w) for w in row) for row in weights),
    )


def tind_step(H, W: StepGraphon) -> Fraction:
    """Exact labeled density of a graph motif in a step graphon."""
    from itertools import product as iproduct

    G = as_structure(H)
    if G.language != GRAPH_LANGUAGE:
        raise LanguageMismatch("step-graphon motifs are graphs")
    if G.size > STEP_MOTIF_CAP:
        raise MotifTooLarge(f"motif capped at {STEP_MOTIF_CAP} vertices")
    n = G.size
    edges = [(u, v) for u in range(1, n + 1) for v in range(u + 1, n + 1)
             if (u, v) in G.rel("E")]
    non_edges = [(u, v) for u in range(1, n + 1) for v in range(u + 1, n + 1)
                 if (u, v) not in G.rel("E")]
    total = Fraction(0)
    for assign in iproduct(range(W.blocks), repeat=n):
        term = Fraction(1)
        for b in assign:
            term *= W.measures[b]
        if term == 0:
            continue
        for u, v in edges:
            term *= W.weights[assign[u - 1]][assign[v - 1]]
            if term == 0:
                break
        if term == 0:
            continue
        for u, v in non_edges:
            term *= 1 - W.weights[assign[u - 1]][assign[v - 1]]
            if term == 0:
                break
        total += term
    return total


# ---------------------------------------------------------------------------
# Sampling


class SplitMix64:
    """The standard splitmix64 stream; pinned for cross-run golden vectors."""

    MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        self.state = seed & self.MASK

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & self.MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self.MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self.MASK
        return z ^ (z >> 31)

    def uniform_index(self, k: int) -> int:
        """Uniform draw from 0..k-1 by multiply-shift on one output."""
        if k <= 0:
            raise DegenerateSource("cannot draw from an empty range")
        return (self.next() * k) >> 64


def sample_model(source, n: int, seed: int) -> Structure:
    """Draw an n-vertex model from a blow-up source or step graphon.

    Deterministic per (source, n, seed); see the module docstring for the
    exact draw order.
    """
    if n < 0:
        raise BadParameter("n must be >= 0")
    rng = SplitMix64(seed)
    if isinstance(source, StepGraphon):
        return _sample_step(source, n, rng)
    root = _source_node(source)
    language = root.spec.language

    strings = [[] for _ in range(n)]
    nodes = [root] * n
    unresolved = {(i, j) for i in range(n) for j in range(i + 1, n)}
    while unresolved:
        active = sorted({i for pair in unresolved for i in pair})
        for i in active:
            surv = nodes[i].survivors()
            if not surv:
                raise DegenerateSource("node with no surviving children")
            choice = surv[rng.uniform_index(len(surv))]
            strings[i].append(choice)
            nodes[i] = nodes[i].child(choice)
        depth = len(strings[active[0]])
        unresolved = {
            (i, j) for i, j in unresolved
            if strings[i][depth - 1] == strings[j][depth - 1]
        }

    rels = {name: [] for name, _ in language.predicates}
    for name, arity in language.predicates:
        if n < arity:
            continue
        for tup in permutations(range(n), arity):
            level = _first_divergence(strings, tup)
            if level is None:
                continue
            letters = tuple(strings[i][level] for i in tup)
            if len(set(letters)) != arity:
                continue
            if letters in root.spec.level_structure(level).rel(name):
                rels[name].append(tuple(i + 1 for i in tup))
    return make_structure(language, n, rels)


def _first_divergence(strings, tup):
    """First level where no two of the tuple's strings agree; None only for
    tuples that never fully separate simultaneously."""
    depth = min(len(strings[i]) for i in tup)
    for level in range(depth):
        letters = [strings[i][level] for i in tup]
        if len(set(letters)) == len(letters):
            return level
        if len(set(letters)) > 1:
            return None  # mixed split: some coincide, some differ
    return None


def _sample_step(W: StepGraphon, n: int, rng: SplitMix64) -> Structure:
    denom = 1
    for m in W.measures:
        denom = denom * m.denominator // __import__("math").gcd(denom, m.denominator)
    cumulative = []
    running = 0
    for m in W.measures:
        running += m.numerator * (denom // m.denominator)
        cumulative.append(running)
    blocks = []
    for _ in range(n):
        u = rng.next()
        target = u * denom
        for b, cum in enumerate(cumulative):
            if target < cum << 64:
                blocks.append(b)
                break
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            u = rng.next()
            w = W.weights[blocks[i]][blocks[j]]
            if u * w.denominator < w.numerator << 64:
                edges.append((i + 1, j + 1))
    pairs = [(a, b) for a, b in edges] + [(b, a) for a, b in edges]
    return make_structure(GRAPH_LANGUAGE, n, {"E": pairs})


# ---------------------------------------------------------------------------
# Positivity profiles and persistence probes


@dataclass
class ProfileReport:
    """Motifs with a resolved positivity witness; complete relative to depth."""

    family: Family
    k_max: int
    depth: int

    def codes(self) -> frozenset[str]:
        return self.family.codes()


def positive_profile(source, k_max: int, depth: int | None = None, candidates=None) -> ProfileReport:
    """All motifs of size <= k_max with a witness resolved within the depth.

    Sound: every returned motif has positive density in the source. Complete
    only relative to the depth bound, which the report carries.
    """
    if k_max > 5:
        raise MotifTooLarge("profiles are capped at k_max = 5")
    root = _source_node(source)
    language = root.spec.language
    if depth is None:
        depth = 8 * k_max
    if candidates is None:
        if language != GRAPH_LANGUAGE:
            raise UnsupportedMode("default candidates exist for graphs only; pass candidates=")
        candidates = [graph_to_structure(G) for G in all_graphs_upto(k_max)]
    found = Family(language)
    memo: dict = {}
    for H in candidates:
        H = as_structure(H)
        if H.size > k_max:
            continue
        if _has_witness(canonical_form(H), _MotifTable(H), root, depth, memo):
            found.add(H)
    return ProfileReport(found, k_max, depth)


def _has_witness(code: str, table: _MotifTable, node: _Node, depth: int, memo: dict) -> bool:
    rep = table.reps[code]
    if rep.size <= 1:
        return True
    if node.level >= depth:
        return False
    key = (code, node.key())
    if key in memo:
        return memo[key]
    memo[key] = False  # cycle guard; a witness must terminate
    surv = node.survivors()
    G = induced(node.level_structure(), surv)
    result = False
    for split in table.splits[code]:
        part_codes = [table.code(p) for p in split.parts]
        if node.children_equivalent():
            if count_embeddings(split.quotient, G) == 0:
                continue
            child = node.child(surv[0])
            if all(_has_witness(pc, table, child, depth, memo) for pc in part_codes):
                result = True
                break
        else:
            for image in _list_embeddings(split.quotient, G):
                if all(
                    _has_witness(pc, table, node.child(surv[img - 1]), depth, memo)
                    for pc, img in zip(part_codes, image)
                ):
                    result = True
                    break
            if result:
                break
    memo[key] = result
    return result


@dataclass
class ProbeReport:
    persistent: bool
    k_max: int
    trials: int
    depth: int
    witness_mask: dict | None = None
    witness_code: str | None = None

    @property
    def verdict(self) -> str:
        return f"PERSISTENT_UP_TO({self.k_max})" if self.persistent else "SEPARATED"


PROBE_MASK_DEPTH = 4
PROBE_NODE_CAP = 100_000


def _random_mask(spec: BlowupSpec, rng: SplitMix64, max_depth: int) -> MaskNode:
    depth = 1 + rng.uniform_index(max_depth)
    counter = [0]

    def build(level: int) -> MaskNode:
        counter[0] += 1
        if counter[0] > PROBE_NODE_CAP:
            raise Budget("random mask too large")
        size = spec.level_structure(level).size
        if size > 62:
            raise Budget("random masks support level sizes up to 62")
        bits = 1 + rng.uniform_index((1 << size) - 1)
        keep = tuple(v + 1 for v in range(size) if bits >> v & 1)
        if level + 1 >= depth:
            return MaskNode(keep, ())
        children = tuple((v, build(level + 1)) for v in keep)
        return MaskNode(keep, children)

    return build(0)


def persistence_probe(spec: BlowupSpec, k_max: int, trials: int, seed: int,
                      depth: int | None = None) -> ProbeReport:
    """Compare the positivity profile against profiles under random cylinder
    masks; report a separating (mask, motif) witness if any profile shrinks."""
    if depth is None:
        depth = 8 * k_max
    base = positive_profile(spec, k_max, depth)
    rng = SplitMix64(seed)
    for _ in range(trials):
        mask = _random_mask(spec, rng, PROBE_MASK_DEPTH)
        pruned = prune_spec(spec, mask)
        masked = positive_profile(pruned, k_max, depth)
        if masked.codes() != base.codes():
            missing = sorted(base.codes() - masked.codes())
            extra = sorted(masked.codes() - base.codes())
            code = (missing or extra)[0]
            return ProbeReport(False, k_max, trials, depth,
                               mask_to_json(mask), code)
    return ProbeReport(True, k_max, trials, depth)
