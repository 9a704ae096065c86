"""Summand detection and the regularity decision.

The workhorse is the test product: a closed-walk word in matrix units,
interleaved with target block projections chosen by a candidate block map.
For a regular map the product is a diagonal projection whose rank counts the
summands matching the candidate, so presence and multiplicity drop out of
singular values, which sit near {0, 1} with a gap controlled by the word
length.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import DigraphAlgebra
from .errors import (CapacityExceeded, CensusMismatch, Disconnected,
                     InconsistentRanks, NotRegular, SourceTargetMismatch,
                     TooFarApart)
from .homs import (DEFAULT_TOL, IndexMap, MultiplicityOneMap, NumericStarMap,
                   StandardRegularMap, Unitary, assemble_regular,
                   conjugate_numeric, map_distance, operator_norm, to_numeric,
                   validate_multiplicity_one)

_CENSUS_CAP = 10 ** 6


@dataclass(frozen=True)
class TestWord:
    """Closed-walk word over one connected component.

    tokens are (a, b, star): the operator is e_ab for star False and e_ab*
    for star True, with (a, b) always an algebra edge. Reading the word left
    to right traces the walk; the product of the token operators is the
    diagonal unit at product_projection.
    """

    tokens: tuple
    product_projection: int
    length: int
    threshold: float
    component: tuple

    def as_payload(self) -> dict:
        return {
            "tokens": [{"unit": [a, b], "star": star}
                       for (a, b, star) in self.tokens],
            "product_projection": self.product_projection,
            "length": self.length,
            "threshold": self.threshold,
            "component": list(self.component),
        }


def test_word(a: DigraphAlgebra, component) -> TestWord:
    """Deterministic test word for a connected index set.

    component is a cstar class index or an iterable of diagonal indices.
    The walk is depth-first from the least index with ascending children on
    a spanning tree of the undirected edge support; each tree edge
    contributes a token and its adjoint, so n = 2(size - 1), and a singleton
    contributes its diagonal unit with n = 1.
    """
    if isinstance(component, (int, np.integer)):
        verts = sorted(a.cstar_classes[int(component)])
    else:
        verts = sorted(int(i) for i in component)
    if not verts:
        raise ValueError("empty component")
    vset = set(verts)
    und = {i: set() for i in verts}
    for (i, j) in a.edges:
        if i != j and i in vset and j in vset:
            und[i].add(j)
            und[j].add(i)
    root = verts[0]
    seen = {root}
    steps = []

    def visit(u):
        for c in sorted(und[u]):
            if c not in seen:
                seen.add(c)
                steps.append((u, c))
                visit(c)
                steps.append((c, u))

    visit(root)
    if seen != vset:
        raise Disconnected(
            f"indices {sorted(vset - seen)} are not reachable from {root}",
            component=verts)
    if not steps:
        tokens = ((root, root, False),)
    else:
        tokens = tuple(
            (u, v, False) if a.has_edge(u, v) else (v, u, True)
            for (u, v) in steps)
    n = len(tokens)
    return TestWord(tokens, root, n, 1.0 / (n + 1), tuple(verts))


def threshold_constant(a: DigraphAlgebra) -> float:
    """min over components of 1/(n+1) for the deterministic words."""
    return min(test_word(a, c).threshold
               for c in range(len(a.cstar_classes)))


def _token_matrix(phi: NumericStarMap, token) -> np.ndarray:
    a, b, star = token
    m = phi.unit_image(a, b)
    return m.conj().T if star else m


def _right_index(token) -> int:
    a, b, star = token
    return a if star else b


def _product_for_blocks(phi: NumericStarMap, word: TestWord,
                        block_map: dict) -> np.ndarray:
    """The interleaved product for a candidate block map of one class."""
    tgt = phi.target
    bi = phi.source.block_index
    proj = {}
    out = None
    for tok in word.tokens:
        m = _token_matrix(phi, tok)
        out = m if out is None else out @ m
        t = block_map[bi(_right_index(tok))]
        if t not in proj:
            proj[t] = tgt.block_projection_matrix(t)
        out = out @ proj[t]
    return out


def _norm_and_rank(m: np.ndarray) -> tuple:
    if m.size == 0:
        return 0.0, 0
    sv = np.linalg.svd(m, compute_uv=False)
    norm = float(sv[0]) if len(sv) else 0.0
    return norm, int(np.count_nonzero(sv > 0.5))


@dataclass(frozen=True)
class TestProductResult:
    norm: float
    present: bool
    per_class: tuple  # (class index, norm, rank) per covered class

    def as_payload(self) -> dict:
        return {"norm": self.norm, "present": self.present,
                "per_class": [{"component": c, "norm": v, "rank": r}
                              for (c, v, r) in self.per_class]}


def test_product(phi: NumericStarMap, alpha: MultiplicityOneMap
                 ) -> TestProductResult:
    """Detect copies of alpha inside phi, component by component.

    Runs the word of every class alpha covers against alpha's block map.
    present means every covered class shows norm at least 1/2; the rank
    column counts matching summands (exact for regular phi).
    """
    if alpha.source != phi.source or alpha.target != phi.target:
        raise SourceTargetMismatch(
            "test product needs alpha over the same algebras")
    pi = alpha.index_map()
    bmap = dict(pi.pairs)
    rows = []
    for c in alpha.covered_classes():
        word = test_word(phi.source, c)
        m = _product_for_blocks(phi, word, bmap)
        norm, rank = _norm_and_rank(m)
        rows.append((c, norm, rank))
    if not rows:
        raise ValueError("alpha covers no class")
    worst = min(r[1] for r in rows)
    return TestProductResult(worst, worst >= 0.5, tuple(rows))


@dataclass
class SummandCensus:
    """Multiplicities of detected multiplicity-one classes plus leftovers.

    classes maps IndexMap -> multiplicity (> 0 only). residual_rank is the
    part of the image rank the detected classes do not explain; it is 0
    exactly when the map is regular.
    """

    classes: dict
    residual_rank: int
    total_rank: int

    def multiset(self) -> tuple:
        out = []
        for im in sorted(self.classes, key=lambda m: m.sort_key()):
            out.extend([im.sort_key()] * self.classes[im])
        return tuple(out)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SummandCensus):
            return NotImplemented
        return (self.classes == other.classes
                and self.residual_rank == other.residual_rank)

    def as_payload(self) -> dict:
        rows = [{"index_map": im.as_lists(), "multiplicity": mult}
                for im, mult in sorted(self.classes.items(),
                                       key=lambda kv: kv[0].sort_key())]
        return {"classes": rows, "residual_rank": self.residual_rank,
                "total_rank": self.total_rank}


def _class_candidates(src: DigraphAlgebra, tgt: DigraphAlgebra, c: int):
    """Edge-preserving, size-feasible block maps of class c, backtracking."""
    rs = src.class_blocks(c)
    src_sizes = src.block_sizes()
    tgt_sizes = tgt.block_sizes()
    red1, red2 = src.reduced.edges, tgt.reduced.edges
    out = []

    def extend(k, partial):
        if len(out) > _CENSUS_CAP:
            raise CapacityExceeded(
                f"more than {_CENSUS_CAP} block-map candidates for class {c}")
        if k == len(rs):
            out.append(dict(partial))
            return
        r = rs[k]
        for t in range(len(tgt.blocks)):
            if src_sizes[r] > tgt_sizes[t]:
                continue
            ok = True
            for rr, tt in partial.items():
                if (rr, r) in red1 and (tt, t) not in red2:
                    ok = False
                    break
                if (r, rr) in red1 and (t, tt) not in red2:
                    ok = False
                    break
            if ok:
                partial[r] = t
                extend(k + 1, partial)
                del partial[r]

    extend(0, {})
    return out


def summand_census(phi: NumericStarMap) -> SummandCensus:
    """Detect all multiplicity-one classes and check the rank accounting.

    For each source class, every feasible block map is scored by its test
    product; detected multiplicities must then satisfy the integer equations
    rank(E_r phi(e_jj) E_r) >= explained part, blockwise. A negative
    leftover anywhere raises InconsistentRanks.
    """
    src, tgt = phi.source, phi.target
    ranks = phi.rank_matrix().entries
    found = {}
    for c in range(len(src.cstar_classes)):
        word = test_word(src, c)
        for bmap in _class_candidates(src, tgt, c):
            m = _product_for_blocks(phi, word, bmap)
            _, rank = _norm_and_rank(m)
            if rank > 0:
                found[IndexMap(tuple(bmap.items()))] = rank
    explained = [[0] * src.n for _ in tgt.blocks]
    for im, mult in found.items():
        bmap = dict(im.pairs)
        for j in range(1, src.n + 1):
            r = src.block_index(j)
            if r in bmap:
                explained[bmap[r]][j - 1] += mult
    residual = 0
    for r in range(len(tgt.blocks)):
        for j in range(1, src.n + 1):
            left = ranks[r][j - 1] - explained[r][j - 1]
            if left < 0:
                raise InconsistentRanks(r, j, left)
            residual += left
    total = sum(sum(row) for row in ranks)
    return SummandCensus(found, residual, total)


def _canonical_from_census(census: SummandCensus, src: DigraphAlgebra,
                           tgt: DigraphAlgebra) -> StandardRegularMap:
    """Standard regular map realizing the census, smallest free slots first."""
    free = {t: sorted(tgt.blocks[t]) for t in range(len(tgt.blocks))}
    entries = sorted(census.classes.items(),
                     key=lambda kv: (src.class_of_block(kv[0].pairs[0][0]),
                                     kv[0].sort_key()))
    pieces = []
    for im, mult in entries:
        bmap = dict(im.pairs)
        for _ in range(mult):
            iota = {}
            for r in sorted(bmap):
                blk = src.blocks[r]
                slots = free[bmap[r]][:len(blk)]
                if len(slots) < len(blk):
                    raise AssertionError(
                        "rank accounting admitted an infeasible census")
                del free[bmap[r]][:len(blk)]
                for i, s in zip(blk, slots):
                    iota[i] = s
            pieces.append(validate_multiplicity_one(iota, src, tgt))
    return assemble_regular(pieces, source=src, target=tgt)


def _intertwine_generators(src: DigraphAlgebra) -> list:
    """*-closed spanning generators: diagonals plus tree pairs per class."""
    gens = [(i, i) for i in range(1, src.n + 1)]
    for cls in src.cstar_classes:
        vset = set(cls)
        und = {i: set() for i in cls}
        for (i, j) in src.edges:
            if i != j and i in vset and j in vset:
                und[i].add(j)
                und[j].add(i)
        seen = {cls[0]}
        queue = [cls[0]]
        while queue:
            p = queue.pop(0)
            for c in sorted(und[p]):
                if c not in seen:
                    seen.add(c)
                    gens.append((p, c))
                    gens.append((c, p))
                    queue.append(c)
    return gens


def _block_diag_intertwiner(phi: NumericStarMap, psi_n: NumericStarMap
                            ) -> Optional[np.ndarray]:
    """Invertible block-diagonal X with X phi(u) = psi(u) X, or None.

    The solution space is computed from the generator constraints by SVD;
    an invertible element is then sought as a random combination (the set of
    invertible solutions is Zariski-open, so a handful of seeded draws
    suffices whenever one exists).
    """
    tgt = phi.target
    n = tgt.n
    params = []
    for t, blk in enumerate(tgt.blocks):
        for a in blk:
            for b in blk:
                params.append((a - 1, b - 1))
    gens = _intertwine_generators(phi.source)
    rows = len(gens) * n * n
    k = np.zeros((rows, len(params)), dtype=complex)
    for g, (i, j) in enumerate(gens):
        m1 = phi.envelope_image(i, j)
        m2 = psi_n.envelope_image(i, j)
        base = g * n * n
        for p, (a, b) in enumerate(params):
            # vec of e_ab @ m1 - m2 @ e_ab, row-major
            block = np.zeros((n, n), dtype=complex)
            block[a, :] += m1[b, :]
            block[:, b] -= m2[:, a]
            k[base:base + n * n, p] = block.reshape(-1)
    if len(params) == 0:
        return np.zeros((0, 0), dtype=complex)
    _, sv, vh = np.linalg.svd(k, full_matrices=True)
    smax = sv[0] if len(sv) else 0.0
    cut = max(1e-9 * smax, 1e-12)
    rank = int(np.count_nonzero(sv > cut))
    if rank == len(params):
        return None
    null = vh.conj()[rank:]

    def realize(vec):
        x = np.zeros((n, n), dtype=complex)
        for p, (a, b) in enumerate(params):
            x[a, b] = vec[p]
        return x

    def invertible(x):
        for blk in tgt.blocks:
            idx = [b - 1 for b in blk]
            sub = x[np.ix_(idx, idx)]
            s = np.linalg.svd(sub, compute_uv=False)
            if s[0] == 0 or s[-1] < 1e-8 * max(1.0, s[0]):
                return False
        return True

    rng = np.random.default_rng(20260818)
    for vec in null:
        x = realize(vec)
        if invertible(x):
            return x
    for _ in range(24):
        coeff = rng.normal(size=len(null)) + 1j * rng.normal(size=len(null))
        x = realize(coeff @ null)
        if invertible(x):
            return x
    return None


def _polar_blockwise(x: np.ndarray, tgt: DigraphAlgebra) -> np.ndarray:
    u = np.zeros_like(x)
    for blk in tgt.blocks:
        idx = [b - 1 for b in blk]
        w, _, vh = np.linalg.svd(x[np.ix_(idx, idx)])
        u[np.ix_(idx, idx)] = w @ vh
    return u


@dataclass
class RegularityCertificate:
    regular: bool
    census: Optional[SummandCensus]
    residual_rank: Optional[int]
    standard_form: Optional[StandardRegularMap]
    unitary: Optional[Unitary]
    residual: Optional[float]
    tolerance: float
    reason: str = ""

    def as_payload(self) -> dict:
        out = {"regular": self.regular, "tolerance": self.tolerance}
        if self.census is not None:
            out["census"] = self.census.as_payload()
        if self.residual_rank is not None:
            out["residual_rank"] = self.residual_rank
        if self.residual is not None:
            out["residual"] = self.residual
        if self.reason:
            out["reason"] = self.reason
        return out


def is_regular(phi: NumericStarMap,
               tol: Optional[float] = None) -> RegularityCertificate:
    """Decide regularity and produce a unitary onto a standard form.

    The census fixes the only possible class multiset; when its residual is
    zero, a block-diagonal intertwiner against the canonical standard form
    is solved for, polar-corrected to a unitary, and the conjugated map is
    compared with the standard form. The verdict always carries evidence.
    """
    tol = max(phi.tolerance, DEFAULT_TOL) if tol is None else float(tol)
    try:
        census = summand_census(phi)
    except InconsistentRanks as exc:
        return RegularityCertificate(False, None, None, None, None, None,
                                     tol, reason=str(exc))
    if census.residual_rank != 0:
        return RegularityCertificate(False, census, census.residual_rank,
                                     None, None, None, tol,
                                     reason="unexplained image rank")
    psi = _canonical_from_census(census, phi.source, phi.target)
    psi_n = to_numeric(psi)
    x = _block_diag_intertwiner(phi, psi_n)
    if x is None:
        return RegularityCertificate(
            False, census, 0, None, None, None, tol,
            reason="no invertible block-diagonal intertwiner")
    u = _polar_blockwise(x, phi.target)
    residual = map_distance(conjugate_numeric(u, phi), psi_n)
    ok = residual <= tol
    return RegularityCertificate(
        ok, census, 0, psi if ok else None,
        Unitary(phi.target.n, [u]) if ok else None, residual, tol,
        reason="" if ok else "conjugation residual exceeds tolerance")


def close_conjugacy(phi1: NumericStarMap, phi2: NumericStarMap) -> Unitary:
    """Unitary U with Ad(U) phi1 = phi2 within tolerance, for close maps.

    The distance gate is the word-length constant of the source: below it,
    equal censuses are guaranteed and the witness is assembled blockwise by
    standardizing both maps against the same canonical form.
    """
    if phi1.source != phi2.source or phi1.target != phi2.target:
        raise SourceTargetMismatch("close_conjugacy needs matching algebras")
    c = threshold_constant(phi1.source)
    d = map_distance(phi1, phi2)
    if d >= c:
        raise TooFarApart(d, c)
    cert1 = is_regular(phi1)
    if not cert1.regular:
        raise NotRegular(reason="first map is not regular")
    cert2 = is_regular(phi2)
    if not cert2.regular:
        raise NotRegular(reason="second map is not regular")
    if cert1.census != cert2.census:
        raise CensusMismatch(
            lhs=cert1.census.as_payload(), rhs=cert2.census.as_payload())
    u1 = cert1.unitary
    u2 = cert2.unitary
    return Unitary(phi1.target.n, [u2.adjoint(), u1]).compact()
