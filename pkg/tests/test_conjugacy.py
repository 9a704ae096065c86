"""Conjugacy witnesses: permutation intertwiners, standard unitaries,
triangle restandardization, canonical class keys."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import limitalg as la
from limitalg.errors import NotInnerEquivalent, ProfileMismatch

from conftest import (random_algebra, random_block_permutation,
                      random_monomial_unitary, random_standard_map)


def random_projection_family(rng, a, max_projections=4):
    """Pairwise-orthogonal standard projections with random supports."""
    free = list(range(1, a.n + 1))
    rng.shuffle(free)
    count = int(rng.integers(1, max_projections + 1))
    fams = []
    for _ in range(count):
        if not free:
            break
        take = int(rng.integers(1, len(free) + 1))
        fams.append(frozenset(free[:take]))
        free = free[take:]
        if rng.random() < 0.4:
            break
    return [la.projection(a, s) for s in fams] or [la.projection(a, {1})]


def transported_family(a, family, perm):
    """Image family Q_j = U* P_j U for the block permutation perm."""
    inv = {perm[i - 1]: i for i in range(1, a.n + 1)}
    return [la.projection(a, {inv[i] for i in p.support}) for p in family]


def test_permutation_intertwiner_exact_identity():
    rng = np.random.default_rng(5)
    for _ in range(50):
        a = random_algebra(rng, n_max=8)
        ps = random_projection_family(rng, a)
        perm = random_block_permutation(rng, a)
        qs = transported_family(a, ps, perm)
        u = la.permutation_intertwiner(ps, qs, a)
        um = u.matrix()
        for p, q in zip(ps, qs):
            lhs = um.conj().T @ p.matrix() @ um
            assert np.array_equal(lhs, q.matrix())
        # block preservation is structural in PermutationUnitary
        for i in range(1, a.n + 1):
            assert a.block_index(u(i)) == a.block_index(i)


def test_permutation_intertwiner_profile_mismatch():
    a = la.tr_algebra(2, 2)
    ps = [la.projection(a, {1, 2})]
    qs = [la.projection(a, {1, 3})]
    with pytest.raises(ProfileMismatch) as err:
        la.permutation_intertwiner(ps, qs, a)
    assert err.value.data["r"] in (0, 1)


def test_standard_witness_round_trip_exact():
    rng = np.random.default_rng(9)
    for _ in range(40):
        phi = random_standard_map(rng, n_max=4)
        v0 = random_monomial_unitary(rng, phi.target)
        psi = la.conjugate_standard(phi, v0)
        v = la.standard_witness(phi, psi)
        assert la.same_action(la.conjugate_standard(phi, v), psi)


def test_standard_witness_rejects_different_multisets():
    a = la.tr_algebra(2)
    b = la.tr_algebra(2, 2)
    phi = la.assemble_regular([la.validate_multiplicity_one({1: 1, 2: 3}, a, b),
                               la.validate_multiplicity_one({1: 2, 2: 4}, a, b)])
    # id (+) id versus a single refinement-free copy with padding: build a
    # genuinely different multiset on the same algebras
    flip = la.assemble_regular([la.validate_multiplicity_one({1: 1, 2: 3}, a, b)])
    with pytest.raises(NotInnerEquivalent):
        la.standard_witness(phi, flip)


def test_standard_witness_with_permutation_evidence():
    rng = np.random.default_rng(21)
    phi = random_standard_map(rng, copies=2, n_max=3)
    perm = random_block_permutation(rng, phi.target)
    u = la.PermutationUnitary(phi.target, perm)
    psi = la.conjugate_standard(phi, u.as_partial_isometry())
    v = la.standard_witness(phi, psi, u=u)
    assert la.same_action(la.conjugate_standard(phi, v), psi)


def test_conjugacy_class_invariance():
    rng = np.random.default_rng(31)
    for _ in range(25):
        phi = random_standard_map(rng, n_max=4)
        key = la.conjugacy_class(phi)
        u = random_monomial_unitary(rng, phi.target, exact=False)
        assert la.conjugacy_class(la.conjugate_standard(phi, u)) == key


def _all_block_perms(a):
    per_block = [list(itertools.permutations(blk)) for blk in a.blocks]
    for combo in itertools.product(*per_block):
        perm = [0] * a.n
        for blk, images in zip(a.blocks, combo):
            for src, dst in zip(blk, images):
                perm[src - 1] = dst
        yield tuple(perm)


def _perm_transport_exists(phi, psi):
    """Brute-force: some block permutation of the target aligns multisets."""
    for perm in _all_block_perms(phi.target):
        u = la.PermutationUnitary(phi.target, perm)
        moved = la.conjugate_standard(phi, u.as_partial_isometry())
        if moved.class_multiset() == psi.class_multiset():
            return True
    return False


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**9))
def test_class_key_equality_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    src = random_algebra(rng, n_max=2)
    phi = random_standard_map(rng, source=src, copies=2)
    if rng.random() < 0.5:
        psi = la.conjugate_standard(
            phi, random_monomial_unitary(rng, phi.target))
    else:
        psi = random_standard_map(rng, source=src, copies=2)
    if phi.target.n > 6 or psi.target != phi.target:
        return
    same_key = la.conjugacy_class(phi) == la.conjugacy_class(psi)
    assert same_key == _perm_transport_exists(phi, psi)
    if same_key:
        v = la.standard_witness(phi, psi)
        assert la.same_action(la.conjugate_standard(phi, v), psi)


def weighted_without_breaking(rng, phi2_strict, phi1):
    """Reweight phi2_strict so the weights cancel along phi1.

    Each summand gets phases constant on every phi1-summand image, so the
    composition with phi1 is unchanged while phi2 itself stops being strict.
    """
    mid = phi2_strict.source
    covers = [frozenset(b(i) for i in b.domain()) for b in phi1.summands]
    pieces = []
    for a in phi2_strict.summands:
        phases = {m: 1.0 + 0j for m in a.domain()}
        for cov in covers:
            z = np.exp(2j * np.pi * rng.random())
            for m in cov:
                phases[m] = z
        pieces.append(la.validate_multiplicity_one(
            {m: a(m) for m in a.domain()}, mid, phi2_strict.target,
            phases=phases))
    return la.assemble_regular(pieces)


def test_restandardize_triangle_standard_branch():
    rng = np.random.default_rng(17)
    for _ in range(30):
        src = random_algebra(rng, n_max=3)
        phi1 = random_standard_map(rng, source=src, copies=2)
        phi1, _ = la.strictify(phi1)
        phi2_strict = random_standard_map(rng, source=phi1.target, copies=2)
        phi2_strict, _ = la.strictify(phi2_strict)
        theta = la.compose(phi2_strict, phi1)
        crooked = weighted_without_breaking(rng, phi2_strict, phi1)
        assert la.same_action(la.compose(crooked, phi1), theta)
        u, fixed = la.restandardize_triangle(theta, phi1, crooked)
        assert fixed.is_strict
        assert la.same_action(la.compose(fixed, phi1), theta)
        # the witness actually conjugates crooked onto fixed
        moved = la.conjugate_numeric(u.matrix(), la.to_numeric(crooked))
        assert la.map_distance(moved, la.to_numeric(fixed)) <= 1e-9


def test_restandardize_triangle_numeric_branch():
    rng = np.random.default_rng(23)
    for _ in range(10):
        phi1 = la.refinement_map(2, 1, 2)
        phi2_strict = la.refinement_map(2, 2, 2)
        theta = la.compose(phi2_strict, phi1)
        crooked = la.to_numeric(
            weighted_without_breaking(rng, phi2_strict, phi1))
        u, fixed = la.restandardize_triangle(theta, phi1, crooked)
        assert fixed.is_strict
        assert la.same_action(la.compose(fixed, phi1), theta)
        moved = la.conjugate_numeric(u.matrix(), crooked)
        assert la.map_distance(moved, la.to_numeric(fixed)) <= 1e-9


def test_standard_witness_idempotent_identity():
    phi = la.refinement_map(2, 1, 3)
    v = la.standard_witness(phi, phi)
    ident = la.identity_unitary(phi.target)
    assert v == ident
