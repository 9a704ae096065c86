"""Finite-depth path spaces and cylinder relations."""

import numpy as np
import pytest

import limitalg as la
from limitalg.errors import DepthUnavailable

from conftest import uhf_system


def identity_endo(a):
    return la.assemble_regular(
        [la.validate_multiplicity_one({i: i for i in range(1, a.n + 1)}, a, a)])


def refinement_tower(stages):
    algs = [la.tr_algebra(2, 2 ** k) for k in range(stages)]
    conns = [la.refinement_map(2, 2 ** k, 2) for k in range(stages - 1)]
    return la.DirectSystem(tuple(algs), tuple(conns))


def test_path_space_counts_and_order():
    sys2 = uhf_system(2, 3)
    assert len(la.path_space(sys2, 1)) == 2
    assert len(la.path_space(sys2, 2)) == 4
    paths = la.path_space(sys2, 3)
    assert len(paths) == 8
    tuples = [p.indices for p in paths]
    assert tuples == sorted(tuples)
    assert all(len(p) == 3 for p in paths)


def test_depth2_counts_distinguish_2_and_3():
    sys2 = uhf_system(2, 2)
    sys3 = uhf_system(3, 2)
    assert len(la.path_space(sys2, 2)) == 4
    assert len(la.path_space(sys3, 2)) == 9
    cmp = la.relation_isomorphic_at_depth(sys2, sys3, 2)
    assert cmp.verdict == "distinguished"
    assert "path_count" in cmp.mismatched
    assert "pair_count" in cmp.mismatched


def test_self_comparison_compatible():
    sys2 = uhf_system(2, 2)
    cmp = la.relation_isomorphic_at_depth(sys2, sys2, 2)
    assert cmp.verdict == "compatible"
    assert cmp.mismatched == ()


def test_t2_single_stage_relation():
    sys = la.DirectSystem((la.tr_algebra(2),), ())
    rel = la.cylinder_relation(sys, 1)
    assert rel.pair_set() == {((1,), (1,)), ((1,), (2,)), ((2,), (2,))}
    st = rel.statistics()
    assert st.path_count == 2
    assert st.pair_count == 3
    assert st.symmetric_count == 2
    assert st.antisymmetric_count == 1
    assert st.witness_levels == ((1, 3),)


def test_full_matrix_tower_saturates():
    sys2 = uhf_system(2, 2)
    rel = la.cylinder_relation(sys2, 2)
    st = rel.statistics()
    assert st.pair_count == 16
    assert st.symmetric_count == 16
    # common-summand pairs witness at level 1, crossed ones at level 2
    assert st.witness_levels == ((1, 8), (2, 8))


def test_refinement_tower_depth2_golden():
    sys = refinement_tower(2)
    rel = la.cylinder_relation(sys, 2)
    st = rel.statistics()
    assert st.path_count == 4
    assert st.pair_count == 12
    assert st.witness_levels == ((1, 6), (2, 6))
    assert st.symmetric_count == 8
    assert st.antisymmetric_count == 4
    assert st.out_degrees == (2, 2, 4, 4)
    assert st.in_degrees == (2, 2, 4, 4)
    assert rel.contains((1, 1), (2, 3))
    assert not rel.contains((2, 3), (1, 1))


def test_every_path_reflexively_related():
    for sys in (refinement_tower(3), uhf_system(2, 3), uhf_system(3, 2)):
        d = sys.available_stages()
        paths = la.path_space(sys, d)
        rel = la.cylinder_relation(sys, d)
        levels = {(x, y): lvl for (x, y, lvl, _) in rel.pairs}
        for p in paths:
            t = p.indices
            assert levels.get((t, t)) == 1
        assert rel.statistics().path_count == len(paths)


def test_relation_projection_consistency():
    # deeper relations project onto shallower ones when the connectors cover
    # every class, and early-witness pairs always truncate to related pairs
    for sys in (refinement_tower(3), uhf_system(2, 3)):
        for d in (1, 2):
            shallow = la.cylinder_relation(sys, d).pair_set()
            deep = la.cylinder_relation(sys, d + 1)
            truncated = {(x[:d], y[:d]) for (x, y) in deep.pair_set()}
            assert shallow <= truncated
            for (x, y, lvl, _) in deep.pairs:
                if lvl <= d:
                    assert (x[:d], y[:d]) in shallow


def test_phase_weights_do_not_change_relation():
    rng = np.random.default_rng(20260818)
    base = refinement_tower(3)
    plain = la.cylinder_relation(base, 3)
    for _ in range(20):
        conns = []
        for c in base.connectors:
            pieces = []
            for s in c.summands:
                phases = {i: np.exp(2j * np.pi * rng.random())
                          for i in s.domain()}
                pieces.append(la.validate_multiplicity_one(
                    s.iota, c.source, c.target, phases=phases))
            conns.append(la.assemble_regular(pieces))
        phased = la.DirectSystem(base.stages, tuple(conns))
        rel = la.cylinder_relation(phased, 3)
        assert rel.pair_set() == plain.pair_set()
        assert rel.statistics() == plain.statistics()


def test_depth_checks():
    sys = refinement_tower(2)
    with pytest.raises(ValueError):
        la.path_space(sys, 0)
    with pytest.raises(DepthUnavailable):
        la.path_space(sys, 3)
    with pytest.raises(DepthUnavailable):
        la.cylinder_relation(sys, 5)


def test_periodic_system_unbounded_depth():
    t2 = la.tr_algebra(2)
    sys = la.DirectSystem((t2, t2), (identity_endo(t2),), periodic=True)
    paths = la.path_space(sys, 10)
    assert [p.indices for p in paths] == [tuple([1] * 10), tuple([2] * 10)]
    rel = la.cylinder_relation(sys, 10)
    st = rel.statistics()
    assert st.pair_count == 3
    assert st.witness_levels == ((1, 3),)
