import numpy as np
import pytest
from hypothesis import given, strategies as st

from orbatlas.category import NonComposable, build_bk, check_category_laws, compose_bk
from orbatlas.completion import (
    compose_gk,
    gk_identity,
    gk_source,
    gk_target,
    invert_gk,
    verify_groupoid,
)

from conftest import atlas, gk, point

FIX = ["football", "manifold-cover", "gerbe-trivial", "gerbe-nontrivial", "product"]


def composable_pair(G, data):
    a = data.draw(st.integers(0, G.n_mor - 1))
    outs = G.table.outs(int(G.tgt[a]))
    b = int(outs[data.draw(st.integers(0, len(outs) - 1))])
    return a, b


@pytest.mark.parametrize("name", ["football", "gerbe-nontrivial", "product"])
@given(data=st.data())
def test_vectorised_composition_matches_key_level_solve(name, data):
    G = gk(name)
    K = G.atlas
    a, b = composable_pair(G, data)
    ka, kb = G.mor_keys[a], G.mor_keys[b]
    assert G.mor_keys[int(G.table.lookup([a], [b])[0])] == compose_gk(K, ka, kb)


@given(data=st.data())
def test_key_level_groupoid_laws_on_football(data):
    G = gk("football")
    K = G.atlas
    a, b = composable_pair(G, data)
    outs = G.table.outs(int(G.tgt[b]))
    c = int(outs[data.draw(st.integers(0, len(outs) - 1))])
    ka, kb, kc = (G.mor_keys[m] for m in (a, b, c))
    assert compose_gk(K, compose_gk(K, ka, kb), kc) == compose_gk(K, ka, compose_gk(K, kb, kc))
    inv = invert_gk(K, ka)
    assert gk_source(K, inv) == gk_target(K, ka) and gk_target(K, inv) == gk_source(K, ka)
    assert compose_gk(K, ka, inv) == gk_identity(K, gk_source(K, ka))
    assert compose_gk(K, gk_identity(K, gk_source(K, ka)), ka) == ka


def test_non_composable_pair_is_refused():
    G = gk("football")
    K = G.atlas
    a = 0
    b = next(m for m in range(G.n_mor) if G.src[m] != G.tgt[a])
    with pytest.raises(NonComposable):
        compose_gk(K, G.mor_keys[a], G.mor_keys[b])


@pytest.mark.parametrize("name", FIX)
def test_completion_laws(name):
    rep = verify_groupoid(gk(name))
    assert rep.passed, rep.text()
    for check in ("closure", "unit", "inverse", "associativity", "unique_lift", "condition_star", "stabilizer"):
        assert check in rep.checks


@pytest.mark.parametrize("name", FIX)
def test_bk_laws_and_composition_rule(name):
    K = atlas(name)
    B = build_bk(K)
    assert check_category_laws(B).passed
    rng = np.random.default_rng(0)
    for a in rng.integers(0, B.n_mor, 200):
        outs = B.table.outs(int(B.tgt[a]))
        b = int(outs[rng.integers(0, len(outs))])
        assert B.mor_keys[int(B.table.lookup([a], [b])[0])] == compose_bk(K, B.mor_keys[a], B.mor_keys[b])


def test_bk_hom_sets_count():
    # |Mor_B((I,x),(J,y))| = number of gamma in Gamma_I with gamma^-1 rho(y) = x
    K = atlas("football")
    B = build_bk(K)
    for I, J in K.pairs():
        assert sum(1 for k in B.mor_keys if k[0] == I and k[1] == J) == len(K.charts[J].points) * K.group_order(I)


@pytest.mark.parametrize("group,sub", [("Z2", "id"), ("Z2xZ2", "Z2"), ("S3", "Z3")])
def test_point_orbifold_quotient(group, sub):
    po = point(group, sub, 2)
    res = po.check_quotient_isomorphism()
    assert res["passed"], res
    assert po.check_fs_invariance()["passed"]
    # objects of G_S are the cosets Gamma_I / S
    G = po.build_gs()
    assert G.n_obj == sum(po.groups.order(I) // len(po.S) for I in po.indices)


def test_point_orbifold_stabilizers_are_s():
    po = point("S3", "Z3", 2)
    G = po.build_gs()
    for o in range(G.n_obj):
        loops = int(np.count_nonzero((G.src == o) & (G.tgt == o)))
        assert loops == len(po.S)
