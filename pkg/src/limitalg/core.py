"""Finite-dimensional digraph algebras and their block combinatorics.

An algebra here is the span of matrix units e_ij over a reflexive transitive
relation on {1..n}. The diagonal masa is the span of the e_ii. Everything
downstream (maps, witnesses, censuses) is phrased in terms of the derived
block data computed once at construction time:

* blocks: classes of the mutual-edge relation, i.e. minimal central supports
  of A intersect A*. Ordered by least element.
* cstar_classes: connected components of the symmetrised edge relation, i.e.
  the simple summands of the generated C*-algebra.
* reduced: the digraph induced on blocks. The original edge set is exactly
  the full blow-up of the reduced one, which several routines rely on.

Indices are 1-based throughout; all containers are immutable after build.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import NotInjective, NotOrthogonal, NotReflexive, NotTransitive

Edge = tuple[int, int]


@dataclass(frozen=True)
class Digraph:
    """A relation on {1..n}; reflexivity/transitivity checked by the builder."""

    n: int
    edges: frozenset

    def has(self, i: int, j: int) -> bool:
        return (i, j) in self.edges

    def sorted_edges(self) -> list:
        return sorted(self.edges)


def _check_relation(n: int, edges: frozenset) -> None:
    if n < 1:
        raise ValueError("n must be positive")
    for (i, j) in edges:
        if not (1 <= i <= n and 1 <= j <= n):
            raise ValueError(f"edge ({i},{j}) out of range 1..{n}")
    for i in range(1, n + 1):
        if (i, i) not in edges:
            raise NotReflexive(i)
    # witness search in deterministic order
    succ = {i: sorted(j for (a, j) in edges if a == i) for i in range(1, n + 1)}
    for i in range(1, n + 1):
        for j in succ[i]:
            for k in succ[j]:
                if (i, k) not in edges:
                    raise NotTransitive(i, j, k)


class DigraphAlgebra:
    """Validated digraph algebra with its block structure precomputed.

    Do not call directly; use build_digraph_algebra or one of the model
    builders below. Instances compare and hash by (n, edges).
    """

    __slots__ = ("graph", "blocks", "cstar_classes", "reduced", "_block_of",
                 "_class_of", "_block_of_block")

    def __init__(self, graph: Digraph):
        self.graph = graph
        n, edges = graph.n, graph.edges

        # blocks: mutual-edge classes, ordered by least element
        seen = [False] * (n + 1)
        blocks = []
        for i in range(1, n + 1):
            if seen[i]:
                continue
            cls = [j for j in range(i, n + 1)
                   if (i, j) in edges and (j, i) in edges]
            for j in cls:
                seen[j] = True
            blocks.append(tuple(cls))
        self.blocks = tuple(blocks)

        block_of = {}
        for r, blk in enumerate(self.blocks):
            for i in blk:
                block_of[i] = r
        self._block_of = block_of

        # cstar classes: undirected components
        adj = {i: set() for i in range(1, n + 1)}
        for (i, j) in edges:
            adj[i].add(j)
            adj[j].add(i)
        seen2 = set()
        classes = []
        for i in range(1, n + 1):
            if i in seen2:
                continue
            comp = set()
            stack = [i]
            while stack:
                v = stack.pop()
                if v in comp:
                    continue
                comp.add(v)
                stack.extend(adj[v] - comp)
            seen2 |= comp
            classes.append(tuple(sorted(comp)))
        self.cstar_classes = tuple(classes)

        class_of = {}
        for c, cls in enumerate(self.cstar_classes):
            for i in cls:
                class_of[i] = c
        self._class_of = class_of

        # reduced digraph on block indices (0-based internally)
        redges = frozenset((block_of[i], block_of[j]) for (i, j) in edges)
        self.reduced = Digraph(len(self.blocks), redges)
        self._block_of_block = tuple(class_of[blk[0]] for blk in self.blocks)

    # passthrough conveniences
    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def edges(self) -> frozenset:
        return self.graph.edges

    def block_index(self, i: int) -> int:
        return self._block_of[i]

    def class_index(self, i: int) -> int:
        return self._class_of[i]

    def class_of_block(self, r: int) -> int:
        return self._block_of_block[r]

    def block_sizes(self) -> tuple:
        return tuple(len(b) for b in self.blocks)

    def class_blocks(self, c: int) -> tuple:
        """Block indices contained in cstar class c, ascending."""
        return tuple(r for r in range(len(self.blocks))
                     if self._block_of_block[r] == c)

    def has_edge(self, i: int, j: int) -> bool:
        return (i, j) in self.graph.edges

    def unit(self, i: int, j: int) -> np.ndarray:
        m = np.zeros((self.n, self.n), dtype=complex)
        m[i - 1, j - 1] = 1.0
        return m

    def block_projection_matrix(self, r: int) -> np.ndarray:
        m = np.zeros((self.n, self.n), dtype=complex)
        for i in self.blocks[r]:
            m[i - 1, i - 1] = 1.0
        return m

    def support_mask(self) -> np.ndarray:
        """Boolean n x n mask with True exactly on edge positions."""
        mask = np.zeros((self.n, self.n), dtype=bool)
        for (i, j) in self.graph.edges:
            mask[i - 1, j - 1] = True
        return mask

    def __eq__(self, other) -> bool:
        return (isinstance(other, DigraphAlgebra)
                and self.n == other.n and self.edges == other.edges)

    def __hash__(self) -> int:
        return hash((self.n, self.edges))

    def __repr__(self) -> str:
        return (f"DigraphAlgebra(n={self.n}, blocks={len(self.blocks)}, "
                f"classes={len(self.cstar_classes)})")


def build_digraph_algebra(n: int, edges: Iterable) -> DigraphAlgebra:
    """Validate a relation and return the algebra with derived structure.

    Raises NotReflexive(i) or NotTransitive(i,j,k) with the least violating
    witness in scan order.
    """
    eset = frozenset((int(i), int(j)) for (i, j) in edges)
    _check_relation(n, eset)
    return DigraphAlgebra(Digraph(n, eset))


# model builders

def tr_algebra(r: int, size: int = 1) -> DigraphAlgebra:
    """Upper-triangular band algebra T_r tensor M_size.

    Band t occupies indices (t-1)*size+1 .. t*size; edges run from lower
    bands to higher bands, full within each band pair.
    """
    n = r * size
    band = lambda i: (i - 1) // size
    edges = [(i, j) for i in range(1, n + 1) for j in range(1, n + 1)
             if band(i) <= band(j)]
    return build_digraph_algebra(n, edges)


def full_matrix_algebra(k: int) -> DigraphAlgebra:
    return tr_algebra(1, k)


def diagonal_algebra(k: int) -> DigraphAlgebra:
    return build_digraph_algebra(k, [(i, i) for i in range(1, k + 1)])


def tensor_model(a: DigraphAlgebra, m: int) -> DigraphAlgebra:
    """A tensor M_m with index (i, c) stored at (i-1)*m + c."""
    edges = [((i - 1) * m + c, (j - 1) * m + d)
             for (i, j) in a.edges
             for c in range(1, m + 1) for d in range(1, m + 1)]
    return build_digraph_algebra(a.n * m, edges)


def direct_sum_algebra(*parts: DigraphAlgebra) -> DigraphAlgebra:
    edges = []
    offset = 0
    for p in parts:
        edges.extend((i + offset, j + offset) for (i, j) in p.edges)
        offset += p.n
    return build_digraph_algebra(offset, edges)


@dataclass(frozen=True)
class StandardProjection:
    """0/1 diagonal projection: the sum of e_ii over the support set."""

    algebra: DigraphAlgebra
    support: frozenset

    def __post_init__(self):
        for i in self.support:
            if not (1 <= i <= self.algebra.n):
                raise ValueError(f"support index {i} out of range")

    @property
    def rank(self) -> int:
        return len(self.support)

    def matrix(self) -> np.ndarray:
        m = np.zeros((self.algebra.n, self.algebra.n), dtype=complex)
        for i in self.support:
            m[i - 1, i - 1] = 1.0
        return m


def projection(algebra: DigraphAlgebra, support: Iterable) -> StandardProjection:
    return StandardProjection(algebra, frozenset(int(i) for i in support))


class StandardPartialIsometry:
    """Partial injection form: sum over pairs i -> j of phase_i * e_ji.

    The masa is normalized by construction. Membership in the algebra itself
    is a separate predicate (is_normalizing). Total instances are monomial
    unitaries and support exact composition, adjoint, and Ad arithmetic,
    which the witness machinery depends on: with phases drawn from the
    fourth roots of unity every operation stays exact in floating point.
    """

    __slots__ = ("algebra", "_map", "_phase")

    def __init__(self, algebra: DigraphAlgebra,
                 pairs: Mapping[int, int] | Iterable,
                 phases: Optional[Mapping[int, complex]] = None):
        if not isinstance(pairs, Mapping):
            pairs = dict(pairs)
        pmap = {}
        inverse = {}
        for i, j in pairs.items():
            i, j = int(i), int(j)
            if not (1 <= i <= algebra.n and 1 <= j <= algebra.n):
                raise ValueError(f"pair {i}->{j} out of range")
            if i in pmap:
                raise NotInjective(i, i, pmap[i])
            if j in inverse:
                raise NotInjective(inverse[j], i, j)
            pmap[i] = j
            inverse[j] = i
        self.algebra = algebra
        self._map = dict(sorted(pmap.items()))
        if phases is None:
            self._phase = {i: 1.0 + 0.0j for i in self._map}
        else:
            ph = {}
            for i in self._map:
                lam = complex(phases.get(i, 1.0)) if isinstance(phases, Mapping) else complex(phases[i])
                if abs(abs(lam) - 1.0) > 1e-12:
                    raise ValueError(f"phase at {i} is not unimodular")
                ph[i] = lam
            self._phase = ph

    # mapping access
    @property
    def pairs(self) -> tuple:
        return tuple(self._map.items())

    @property
    def phases(self) -> dict:
        return dict(self._phase)

    def domain(self) -> frozenset:
        return frozenset(self._map)

    def image(self) -> frozenset:
        return frozenset(self._map.values())

    def __call__(self, i: int) -> int:
        return self._map[i]

    def phase(self, i: int) -> complex:
        return self._phase[i]

    @property
    def is_unitary(self) -> bool:
        return len(self._map) == self.algebra.n

    def matrix(self) -> np.ndarray:
        m = np.zeros((self.algebra.n, self.algebra.n), dtype=complex)
        for i, j in self._map.items():
            m[j - 1, i - 1] = self._phase[i]
        return m

    def adjoint(self) -> "StandardPartialIsometry":
        pairs = {j: i for i, j in self._map.items()}
        phases = {j: np.conj(self._phase[i]) for i, j in self._map.items()}
        return StandardPartialIsometry(self.algebra, pairs, phases)

    def __matmul__(self, other: "StandardPartialIsometry") -> "StandardPartialIsometry":
        """Operator product self * other (apply other first)."""
        if other.algebra.n != self.algebra.n:
            raise ValueError("size mismatch in partial isometry product")
        pairs = {}
        phases = {}
        for i, j in other._map.items():
            if j in self._map:
                pairs[i] = self._map[j]
                phases[i] = other._phase[i] * self._phase[j]
        return StandardPartialIsometry(self.algebra, pairs, phases)

    def ad_unit(self, p: int, q: int) -> tuple:
        """U e_pq U* for total U: returns (p', q', coefficient)."""
        lam = self._phase[p] * np.conj(self._phase[q])
        return self._map[p], self._map[q], lam

    def is_block_preserving(self) -> bool:
        bi = self.algebra.block_index
        return all(bi(i) == bi(j) for i, j in self._map.items())

    def __eq__(self, other) -> bool:
        if not isinstance(other, StandardPartialIsometry):
            return NotImplemented
        return (self.algebra == other.algebra and self._map == other._map
                and all(abs(self._phase[i] - other._phase[i]) <= 1e-12
                        for i in self._map))

    def __repr__(self) -> str:
        trivial = all(abs(v - 1.0) <= 1e-12 for v in self._phase.values())
        tag = "" if trivial else ", phased"
        return f"StandardPartialIsometry({len(self._map)} pairs{tag})"


def identity_unitary(algebra: DigraphAlgebra) -> StandardPartialIsometry:
    return StandardPartialIsometry(algebra, {i: i for i in range(1, algebra.n + 1)})


def is_normalizing(v: StandardPartialIsometry, a: DigraphAlgebra) -> bool:
    """Whether v lies in the algebra (pair i -> j needs edge (j, i))."""
    return all((j, i) in a.edges for i, j in v.pairs)


class PermutationUnitary:
    """Block-preserving permutation, a unitary in A intersect A*.

    perm is stored as a tuple with perm[i-1] = sigma(i).
    """

    __slots__ = ("algebra", "perm")

    def __init__(self, algebra: DigraphAlgebra, perm: Sequence):
        perm = tuple(int(x) for x in perm)
        if sorted(perm) != list(range(1, algebra.n + 1)):
            raise ValueError("perm is not a permutation of 1..n")
        for i in range(1, algebra.n + 1):
            if algebra.block_index(i) != algebra.block_index(perm[i - 1]):
                raise ValueError(
                    f"perm moves {i} across blocks to {perm[i - 1]}")
        self.algebra = algebra
        self.perm = perm

    def __call__(self, i: int) -> int:
        return self.perm[i - 1]

    def matrix(self) -> np.ndarray:
        m = np.zeros((self.algebra.n, self.algebra.n), dtype=complex)
        for i in range(1, self.algebra.n + 1):
            m[self.perm[i - 1] - 1, i - 1] = 1.0
        return m

    def as_partial_isometry(self) -> StandardPartialIsometry:
        return StandardPartialIsometry(
            self.algebra, {i: self.perm[i - 1]
                           for i in range(1, self.algebra.n + 1)})

    def __eq__(self, other) -> bool:
        return (isinstance(other, PermutationUnitary)
                and self.algebra == other.algebra and self.perm == other.perm)

    def __repr__(self) -> str:
        return f"PermutationUnitary{self.perm}"


@dataclass(frozen=True)
class RankMatrix:
    """Nonnegative integer matrix indexed by (block r, projection j)."""

    entries: tuple  # rows = blocks, cols = projections

    @property
    def shape(self) -> tuple:
        rows = len(self.entries)
        return (rows, len(self.entries[0]) if rows else 0)

    def column(self, j: int) -> tuple:
        return tuple(row[j] for row in self.entries)

    def as_lists(self) -> list:
        return [list(row) for row in self.entries]


def rank_profile(projections: Sequence[StandardProjection],
                 a: DigraphAlgebra) -> RankMatrix:
    """Entry (r, j) counts the support of P_j inside block r.

    Projections must have pairwise disjoint supports.
    """
    for j1 in range(len(projections)):
        for j2 in range(j1 + 1, len(projections)):
            common = projections[j1].support & projections[j2].support
            if common:
                raise NotOrthogonal(
                    f"projections {j1} and {j2} overlap",
                    j=j1, j2=j2, indices=sorted(common))
    rows = []
    for blk in a.blocks:
        bset = set(blk)
        rows.append(tuple(len(bset & p.support) for p in projections))
    return RankMatrix(tuple(rows))


def _rational_row_reduce(rows: list) -> int:
    """Rank over Q of a list of Fraction vectors; destructive on the copy."""
    rows = [list(r) for r in rows]
    rank = 0
    cols = len(rows[0]) if rows else 0
    pivot_col = 0
    while rank < len(rows) and pivot_col < cols:
        pivot = None
        for rr in range(rank, len(rows)):
            if rows[rr][pivot_col] != 0:
                pivot = rr
                break
        if pivot is None:
            pivot_col += 1
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        pv = rows[rank][pivot_col]
        rows[rank] = [x / pv for x in rows[rank]]
        for rr in range(len(rows)):
            if rr != rank and rows[rr][pivot_col] != 0:
                f = rows[rr][pivot_col]
                rows[rr] = [x - f * y for x, y in zip(rows[rr], rows[rank])]
        rank += 1
        pivot_col += 1
    return rank


def cycle_flagged_classes(a: DigraphAlgebra) -> tuple:
    """Indices of cstar classes whose reduced digraph carries undirected
    cycles not spanned by transitivity triangles.

    On such classes phase data of witnesses is not forced by triangle
    relations alone; reports surface the flag as metadata. The triangular
    algebras are never flagged, the 4-cycle digraph is.
    """
    red = a.reduced
    flagged = []
    for c, _cls in enumerate(a.cstar_classes):
        verts = a.class_blocks(c)
        vset = set(verts)
        und = sorted({(min(r, s), max(r, s)) for (r, s) in red.edges
                      if r != s and r in vset and s in vset})
        if not und:
            continue
        cycle_dim = len(und) - len(verts) + 1
        if cycle_dim <= 0:
            continue
        pos = {e: k for k, e in enumerate(und)}
        tri_rows = []
        for (x, y, z) in itertools.combinations(sorted(verts), 3):
            e1, e2, e3 = (x, y), (y, z), (x, z)
            if e1 in pos and e2 in pos and e3 in pos:
                row = [Fraction(0)] * len(und)
                row[pos[e1]] += 1
                row[pos[e2]] += 1
                row[pos[e3]] -= 1
                tri_rows.append(row)
        tri_rank = _rational_row_reduce(tri_rows) if tri_rows else 0
        if tri_rank < cycle_dim:
            flagged.append(c)
    return tuple(flagged)
