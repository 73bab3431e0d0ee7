import copy

import pytest
from hypothesis import given, strategies as st

from orbatlas.atlas import (
    AtlasError,
    add_trivial_chart,
    index_label,
    one_chart_atlas,
    product_atlas,
    validate_atlas,
)
from orbatlas.finspace import circle_model, sierpinski
from orbatlas.fixtures import FIXTURES, build_fixture, fixture_atlas, sierpinski_atlas

from conftest import atlas, gk


@pytest.mark.parametrize("name", FIXTURES)
def test_every_fixture_validates(name):
    rep = validate_atlas(fixture_atlas(name))
    assert rep.passed, rep.text()


@pytest.mark.parametrize("params", [{"n": "2"}, {"cover": "annulus"}, {"cover": "annulus", "n": "3"}, {"fifth": "no"}])
def test_parametrised_fixtures_validate(params):
    names = ["football"] if "n" in params and len(params) == 1 else ["gerbe-trivial", "gerbe-nontrivial"]
    for name in names:
        assert validate_atlas(fixture_atlas(name, params)).passed


def test_unknown_fixture():
    with pytest.raises(AtlasError):
        build_fixture("teardrop")


def test_football_isotropy_sits_at_the_poles():
    G = gk("football")
    K = G.atlas
    loops = {}
    for m in range(G.n_mor):
        if G.src[m] == G.tgt[m]:
            loops[int(G.src[m])] = loops.get(int(G.src[m]), 0) + 1
    big = {K.base.points[int(G.obj_psi[o])]: n for o, n in loops.items() if n > 1}
    assert big == {"N": 2, "S": 3}


def test_football_w12_is_a_free_z2_z3_circle_band():
    K = atlas("football")
    ch = K.charts[frozenset({"1", "2"})]
    for g in K.groups.elements(["1", "2"]):
        if not K.groups.is_identity(g):
            assert all(ch.act(g, x) != x for x in ch.points)
    assert len(ch.domain.components()) == 1


def test_point_orbifold_chart_sizes_are_group_order_over_s():
    K = fixture_atlas("point-orbifold", {"group": "Z2xZ2", "sub": "Z2"})
    for I in K.indices:
        assert len(K.charts[I].points) == K.group_order(I) // 2


@pytest.mark.parametrize("nontrivial,components", [(True, 1), (False, 2)])
def test_annulus_gerbe_band_connectivity(nontrivial, components):
    name = "gerbe-nontrivial" if nontrivial else "gerbe-trivial"
    K = fixture_atlas(name, {"cover": "annulus"})
    assert len(K.charts[frozenset({"1", "2"})].domain.components()) == components


def test_one_chart_and_product():
    M = one_chart_atlas(circle_model(2))
    assert validate_atlas(M).passed
    P = product_atlas(atlas("football"), sierpinski_atlas())
    assert P.generalized and validate_atlas(P).passed
    assert len(P.base) == len(atlas("football").base) * len(sierpinski())


def test_add_trivial_chart_keeps_validity():
    K = atlas("football")
    U = K.base.up("a0.i1")
    K3 = add_trivial_chart(K, U, "3")
    assert validate_atlas(K3).passed
    assert K3.charts[frozenset({"1", "2"})].points == K.charts[frozenset({"1", "2"})].points


def test_missing_group_and_chart_are_index_set_failures():
    K = copy.copy(atlas("football"))
    K.charts = {I: c for I, c in K.charts.items() if I != frozenset({"1", "2"})}
    rep = validate_atlas(K)
    assert "index_set" in rep.failed_axioms()
    assert any("no chart" in w for w in rep.failures["index_set"])


@given(st.data())
def test_any_single_rho_change_is_detected(data):
    K = atlas("football")
    I, J = frozenset("1"), frozenset({"1", "2"})
    r = dict(K.coverings[(I, J)])
    y = data.draw(st.sampled_from(sorted(r)))
    x = data.draw(st.sampled_from([p for p in K.charts[I].points if p != r[y]]))
    r[y] = x
    K2 = copy.copy(K)
    K2.coverings = dict(K.coverings)
    K2.coverings[(I, J)] = r
    rep = validate_atlas(K2)
    assert not rep.passed
    assert rep.counts["equivariance"] or rep.counts["covering_map"] or rep.counts["compatibility"]


def test_index_label():
    assert index_label(frozenset({"2", "1"})) == "{1,2}"
