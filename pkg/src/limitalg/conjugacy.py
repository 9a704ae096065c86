"""Inner-conjugacy witnesses for standard regular maps.

Everything here is exact: witnesses are monomial unitaries (permutation
times diagonal phases) and the verifications are combinatorial identities,
not numeric residuals.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .core import (DigraphAlgebra, PermutationUnitary,
                   StandardPartialIsometry, StandardProjection, projection,
                   rank_profile)
from .errors import (NotInnerEquivalent, NotRegular, ProfileMismatch,
                     SourceTargetMismatch, TriangleNotCommuting)
from .homs import (StandardRegularMap, Unitary, compose, conjugate_standard,
                   map_distance, numeric_compose, same_action, strictify,
                   to_numeric)


def _coerce_projections(family: Sequence, a: DigraphAlgebra) -> list:
    out = []
    for p in family:
        if isinstance(p, StandardProjection):
            if p.algebra != a:
                raise SourceTargetMismatch("projection over the wrong algebra")
            out.append(p)
        else:
            out.append(projection(a, p))
    return out


def permutation_intertwiner(p_family: Sequence, q_family: Sequence,
                            a: DigraphAlgebra) -> PermutationUnitary:
    """Block-preserving permutation U with U* P_j U = Q_j for all j.

    Families are pairwise-orthogonal standard projections with equal rank
    profiles; otherwise ProfileMismatch(r, j) reports the first differing
    profile entry (block row r, projection column j, both 0-based).

    Within each block the smallest unmatched index of support(Q_j) goes to
    the smallest of support(P_j), and per-block leftovers pair off
    smallest-to-smallest, so the output is deterministic.
    """
    ps = _coerce_projections(p_family, a)
    qs = _coerce_projections(q_family, a)
    if len(ps) != len(qs):
        raise ProfileMismatch(-1, -1)
    dp = rank_profile(ps, a)
    dq = rank_profile(qs, a)
    for r in range(len(a.blocks)):
        for j in range(len(ps)):
            if dp.entries[r][j] != dq.entries[r][j]:
                raise ProfileMismatch(r, j)
    sigma = {}
    for r, blk in enumerate(a.blocks):
        bset = set(blk)
        for j in range(len(ps)):
            src = sorted(bset & qs[j].support)
            dst = sorted(bset & ps[j].support)
            for x, y in zip(src, dst):
                sigma[x] = y
        left_src = sorted(i for i in blk if i not in sigma)
        left_dst = sorted(set(blk) - set(sigma.values()))
        for x, y in zip(left_src, left_dst):
            sigma[x] = y
    return PermutationUnitary(a, tuple(sigma[i] for i in range(1, a.n + 1)))


@dataclass(frozen=True)
class ClassKey:
    """Canonical inner-conjugacy invariant of a standard regular map.

    index_maps is the sorted multiset of maximal-summand index maps (as
    block-pair tuples); ranks is the diagonal rank profile. Keys are equal
    exactly when the maps are inner equivalent by a standard unitary.
    """

    index_maps: tuple
    ranks: tuple

    def as_payload(self) -> dict:
        return {"index_maps": [[list(p) for p in im] for im in self.index_maps],
                "rank_profile": [list(r) for r in self.ranks]}


def conjugacy_class(phi: StandardRegularMap) -> ClassKey:
    return ClassKey(phi.class_multiset(), phi.rank_matrix().entries)


def standard_witness(phi1: StandardRegularMap, phi2: StandardRegularMap,
                     u: Optional[PermutationUnitary] = None
                     ) -> StandardPartialIsometry:
    """Monomial unitary V with Ad(V) phi1 = phi2, exactly.

    phi1 and phi2 must have equal maximal class multisets (the computable
    criterion); otherwise NotInnerEquivalent. When permutation evidence u is
    supplied, its index action is used as the transport and only the
    diagonal phase correction is computed on top of it.
    """
    if phi1.source != phi2.source or phi1.target != phi2.target:
        raise SourceTargetMismatch("witness needs matching source and target")
    a2 = phi1.target
    parts1 = phi1.canonical_summands()
    parts2 = phi2.canonical_summands()
    key1 = [p.index_map().sort_key() for p in parts1]
    key2 = [p.index_map().sort_key() for p in parts2]
    if sorted(key1) != sorted(key2):
        raise NotInnerEquivalent(
            reason="class multisets differ",
            lhs=[list(map(list, k)) for k in sorted(key1)],
            rhs=[list(map(list, k)) for k in sorted(key2)])

    if u is not None:
        base = u.as_partial_isometry() if isinstance(u, PermutationUnitary) else u
        moved = conjugate_standard(phi1, base)
        corr = _diagonal_correction(moved, phi2, a2)
        return corr @ base

    # group matched summands by index map; canonical order fixes the pairing
    by_key1 = {}
    by_key2 = {}
    for p in parts1:
        by_key1.setdefault(p.index_map().sort_key(), []).append(p)
    for q in parts2:
        by_key2.setdefault(q.index_map().sort_key(), []).append(q)
    pairs = {}
    phases = {}
    for key, group1 in sorted(by_key1.items()):
        group2 = by_key2[key]
        for p, q in zip(group1, group2):
            for x in sorted(p.domain()):
                s, t = p(x), q(x)
                pairs[s] = t
                phases[s] = q.weight(x) / p.weight(x)
    # complete blockwise, smallest to smallest, phase one
    for blk in a2.blocks:
        left_src = sorted(i for i in blk if i not in pairs)
        left_dst = sorted(set(blk) - {pairs[i] for i in blk if i in pairs})
        for x, y in zip(left_src, left_dst):
            pairs[x] = y
            phases[x] = 1.0 + 0.0j
    v = StandardPartialIsometry(a2, pairs, phases)
    if not same_action(conjugate_standard(phi1, v), phi2):
        raise AssertionError("witness construction failed to verify")
    return v


def _diagonal_correction(moved: StandardRegularMap, target_map: StandardRegularMap,
                         a2: DigraphAlgebra) -> StandardPartialIsometry:
    """Diagonal d with Ad(d) moved = target_map, when the index data agree."""
    parts_m = moved.canonical_summands()
    parts_t = target_map.canonical_summands()
    phases = {t: 1.0 + 0.0j for t in range(1, a2.n + 1)}
    if len(parts_m) != len(parts_t):
        raise NotInnerEquivalent(reason="evidence does not align the summands")
    for p, q in zip(parts_m, parts_t):
        if p._iota != q._iota:
            raise NotInnerEquivalent(reason="evidence does not align the summands")
        for x in p.domain():
            phases[p(x)] = q.weight(x) / p.weight(x)
    d = StandardPartialIsometry(
        a2, {t: t for t in range(1, a2.n + 1)}, phases)
    if not same_action(conjugate_standard(moved, d), target_map):
        raise NotInnerEquivalent(reason="evidence admits no phase correction")
    return d


def restandardize_triangle(theta: StandardRegularMap,
                           phi1: StandardRegularMap,
                           phi2) -> tuple:
    """Unitary U over the top algebra with Ad(U) phi2 standard and the
    triangle Ad(U) phi2 after phi1 = theta preserved exactly.

    phi2 may be a StandardRegularMap (weights allowed) or a NumericStarMap;
    a numeric phi2 is first standardized through the regularity decision.
    Returns (U, phi2_std). When theta and phi1 are strict, so is phi2_std.
    """
    from .homs import NumericStarMap
    n3 = theta.target.n
    if isinstance(phi2, NumericStarMap):
        return _restandardize_numeric(theta, phi1, phi2)
    if phi2.source != phi1.target or phi2.target != theta.target:
        raise SourceTargetMismatch("triangle algebras do not line up")
    if not same_action(compose(phi2, phi1), theta):
        resid = map_distance(compose(phi2, phi1), theta)
        raise TriangleNotCommuting(resid)
    strict2, d = strictify(phi2)
    g = compose(strict2, phi1)
    v0 = standard_witness(g, theta)
    b = conjugate_standard(strict2, v0)
    factors = [v0, d]
    if not b.is_strict and theta.is_strict and phi1.is_strict:
        b, strip = strictify(b)
        factors.insert(0, strip)
    out = Unitary(n3, factors)
    if not same_action(compose(b, phi1), theta):
        raise AssertionError("restandardization failed to verify")
    return out, b


def _restandardize_numeric(theta, phi1, phi2):
    from .detect import is_regular
    from .homs import DEFAULT_TOL
    if phi2.source != phi1.target or phi2.target != theta.target:
        raise SourceTargetMismatch("triangle algebras do not line up")
    tol = max(phi2.tolerance, DEFAULT_TOL)
    theta_n = to_numeric(theta)
    resid = map_distance(numeric_compose(phi2, to_numeric(phi1)), theta_n)
    if resid > tol:
        raise TriangleNotCommuting(resid)
    cert = is_regular(phi2)
    if not cert.regular:
        raise NotRegular(reason="numeric map is not regular",
                         residual_rank=cert.residual_rank)
    b0 = cert.standard_form
    u_num = cert.unitary
    g = compose(b0, phi1)
    v0 = standard_witness(g, theta)
    b = conjugate_standard(b0, v0)
    factors = [v0] + list(u_num.factors)
    if not b.is_strict and theta.is_strict and phi1.is_strict:
        b, strip = strictify(b)
        factors.insert(0, strip)
    out = Unitary(theta.target.n, factors)
    if not same_action(compose(b, phi1), theta):
        raise AssertionError("restandardization failed to verify")
    return out, b
