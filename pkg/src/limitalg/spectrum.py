"""Finite-depth path spaces and cylinder relations of a direct system.

Everything is combinatorial: connectors act on diagonal indices through
their summand embeddings, weights never enter. Depth-d objects are honest
truncations; a pair's membership is decided by the tail condition over the
levels that exist, so pairs can disappear at larger depth while projections
of deeper relations always contain shallower ones.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DepthUnavailable
from .intertwine import DirectSystem


@dataclass(frozen=True)
class BratteliPath:
    """Compatible diagonal indices, one per stage."""

    indices: tuple

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))

    def __len__(self) -> int:
        return len(self.indices)

    def as_payload(self) -> list:
        return list(self.indices)


def _check_depth(sys: DirectSystem, depth: int) -> None:
    if depth < 1:
        raise ValueError("depth must be at least 1")
    if depth > sys.available_stages() and not sys.periodic:
        raise DepthUnavailable(depth, sys.available_stages())


def _successor_table(conn) -> dict:
    succ = {}
    for s in conn.summands:
        for i in s.domain():
            succ.setdefault(i, set()).add(s(i))
    return {i: sorted(v) for i, v in succ.items()}


def _path_tuples(sys: DirectSystem, depth: int) -> list:
    paths = [(i,) for i in range(1, sys.stage_algebra(0).n + 1)]
    for l in range(depth - 1):
        succ = _successor_table(sys.connector(l))
        nxt = []
        for p in paths:
            for j in succ.get(p[-1], ()):
                nxt.append(p + (j,))
        paths = nxt
    return paths


def path_space(sys: DirectSystem, depth: int) -> list:
    """All depth-d paths, lexicographically ordered."""
    _check_depth(sys, depth)
    return [BratteliPath(p) for p in _path_tuples(sys, depth)]


class CylinderRelation:
    """Depth-truncated relation on paths with minimal witnesses.

    pairs is a tuple of (x, y, level, unit): the matrix unit (i, j) at the
    1-based witness level k satisfies (x_k, y_k) = (i, j), and from level k
    down to the bottom both coordinates always pass through one common
    connector summand. level is the least such k.
    """

    __slots__ = ("depth", "pairs", "_set")

    def __init__(self, depth: int, pairs: tuple):
        self.depth = depth
        self.pairs = tuple(pairs)
        self._set = frozenset((x, y) for (x, y, _, _) in self.pairs)

    def contains(self, x, y) -> bool:
        return (tuple(x), tuple(y)) in self._set

    def pair_set(self) -> frozenset:
        return self._set

    def statistics(self) -> "RelationStatistics":
        outs = {}
        ins = {}
        hist = {}
        sym = 0
        for (x, y, lvl, _) in self.pairs:
            outs[x] = outs.get(x, 0) + 1
            ins[y] = ins.get(y, 0) + 1
            hist[lvl] = hist.get(lvl, 0) + 1
            if (y, x) in self._set:
                sym += 1
        anti_out = {}
        for (x, y, _, _) in self.pairs:
            if (y, x) not in self._set:
                anti_out[x] = anti_out.get(x, 0) + 1
        return RelationStatistics(
            path_count=len({x for (x, _, _, _) in self.pairs}
                           | {y for (_, y, _, _) in self.pairs}),
            pair_count=len(self.pairs),
            out_degrees=tuple(sorted(outs.values())),
            in_degrees=tuple(sorted(ins.values())),
            witness_levels=tuple(sorted(hist.items())),
            symmetric_count=sym,
            antisymmetric_count=len(self.pairs) - sym,
            antisym_out_degrees=tuple(sorted(anti_out.values())))

    def as_payload(self) -> dict:
        return {"depth": self.depth,
                "pairs": [{"x": list(x), "y": list(y), "level": lvl,
                           "unit": list(unit)}
                          for (x, y, lvl, unit) in self.pairs]}


@dataclass(frozen=True)
class RelationStatistics:
    path_count: int
    pair_count: int
    out_degrees: tuple
    in_degrees: tuple
    witness_levels: tuple
    symmetric_count: int
    antisymmetric_count: int
    antisym_out_degrees: tuple

    def as_payload(self) -> dict:
        return {"path_count": self.path_count,
                "pair_count": self.pair_count,
                "out_degrees": list(self.out_degrees),
                "in_degrees": list(self.in_degrees),
                "witness_levels": [list(p) for p in self.witness_levels],
                "symmetric_count": self.symmetric_count,
                "antisymmetric_count": self.antisymmetric_count,
                "antisym_out_degrees": list(self.antisym_out_degrees)}


def cylinder_relation(sys: DirectSystem, depth: int) -> CylinderRelation:
    """All related depth-d path pairs with their minimal witness levels."""
    _check_depth(sys, depth)
    paths = _path_tuples(sys, depth)
    conns = [sys.connector(l) for l in range(depth - 1)]
    tables = []
    for conn in conns:
        tables.append([s.iota for s in conn.summands])

    def joint_step(l, a, b, a2, b2) -> bool:
        for iota in tables[l]:
            if iota.get(a) == a2 and iota.get(b) == b2:
                return True
        return False

    stages = [sys.stage_algebra(k) for k in range(depth)]
    pairs = []
    for x in paths:
        for y in paths:
            witness = None
            for k in range(depth):
                if not stages[k].has_edge(x[k], y[k]):
                    continue
                if all(joint_step(l, x[l], y[l], x[l + 1], y[l + 1])
                       for l in range(k, depth - 1)):
                    witness = (k + 1, (x[k], y[k]))
                    break
            if witness is not None:
                pairs.append((x, y, witness[0], witness[1]))
    return CylinderRelation(depth, tuple(pairs))


@dataclass(frozen=True)
class DepthComparison:
    verdict: str  # "distinguished" or "compatible"
    depth: int
    mismatched: tuple
    lhs: RelationStatistics
    rhs: RelationStatistics

    def as_payload(self) -> dict:
        return {"verdict": self.verdict, "depth": self.depth,
                "mismatched_statistics": list(self.mismatched),
                "lhs": self.lhs.as_payload(), "rhs": self.rhs.as_payload()}


def relation_isomorphic_at_depth(sys1: DirectSystem, sys2: DirectSystem,
                                 depth: int) -> DepthComparison:
    """Compare isomorphism-invariant statistics of two depth-d relations.

    A mismatch certifies non-isomorphism at this depth; agreement only says
    the systems are compatible at depth d, never that they are isomorphic.
    """
    s1 = cylinder_relation(sys1, depth).statistics()
    s2 = cylinder_relation(sys2, depth).statistics()
    # every path is reflexively related, but compare true path-space sizes
    # anyway so the verdict never rides on that
    n1 = len(_path_tuples(sys1, depth))
    n2 = len(_path_tuples(sys2, depth))
    mismatched = []
    if n1 != n2:
        mismatched.append("path_count")
    for name in ("pair_count", "out_degrees", "in_degrees", "witness_levels",
                 "symmetric_count", "antisymmetric_count",
                 "antisym_out_degrees"):
        if getattr(s1, name) != getattr(s2, name):
            mismatched.append(name)
    verdict = "distinguished" if mismatched else "compatible"
    return DepthComparison(verdict, depth, tuple(mismatched), s1, s2)
