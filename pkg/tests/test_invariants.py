from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from orbatlas.atlas import add_trivial_chart, validate_atlas
from orbatlas.invariants import (
    IncompatibleSection,
    PreconditionError,
    SectionData,
    euler_number,
    football_sections,
    gerbe_class,
    inclusion_map,
    misroute,
    orbifold_weighting,
    orbifold_weighting_by_base,
    parity_violations,
    pushforward_check,
    section_from_base,
    section_violations,
    subatlas_check,
    total_weight,
)

from conftest import atlas, gk, resolved


def test_total_weight():
    assert total_weight([(Fraction(1, 2), 1), (Fraction(1, 3), 1)]) == Fraction(5, 6)
    assert total_weight([(Fraction(1, 2), 1), (Fraction(1, 2), -1)]) == 0
    with pytest.raises(ValueError):
        total_weight([(Fraction(1, 2), 0)])


@pytest.mark.parametrize("name", ["football", "manifold-cover", "gerbe-nontrivial", "product"])
def test_orbifold_weighting_is_inverse_isotropy_order(name):
    G = gk(name)
    w = orbifold_weighting(G)
    for p, v in w.value.items():
        o = next(iter(p))
        k = G.obj_index[o]
        loops = sum(1 for m in range(G.n_mor) if G.src[m] == k and G.tgt[m] == k)
        assert v == Fraction(1, loops)


@pytest.mark.parametrize("name,params", [("football", {}), ("manifold-cover", {}), ("gerbe-trivial", {"cover": "annulus"}), ("gerbe-nontrivial", {"cover": "annulus"})], ids=str)
def test_pushforward(name, params):
    r = resolved(name, **params)
    rep = pushforward_check(r["weighting"], orbifold_weighting(gk(name, **params)))
    assert rep.passed, rep.text()


BASE = [y for y in atlas("football").base.points]


@given(st.dictionaries(st.sampled_from(BASE), st.sampled_from([1, -1]), max_size=6))
def test_euler_total_of_pulled_back_section_is_signed_orbifold_weight(zeros):
    red = resolved("football")["reduction"]
    H = resolved("football")["VH"]
    sec = section_from_base(red, zeros)
    res = euler_number(atlas("football"), red, sec, H)
    lam = orbifold_weighting_by_base(gk("football"))
    assert res.total == sum((s * lam[y] for y, s in zeros.items()), Fraction(0))


def test_football_sections_agree():
    red = resolved("football")["reduction"]
    totals = {s.name: euler_number(atlas("football"), red, s).total for s in football_sections(red)}
    assert len(totals) == 2 and set(totals.values()) == {Fraction(5, 6)}


def test_incompatible_section_is_rejected():
    red = resolved("football")["reduction"]
    sec = section_from_base(red, {"N": 1, "S": 1})
    I = next(I for I in red.atlas.indices if len(I) == 2)
    x = next(iter(red.V(I)))
    nu = {J: dict(v) for J, v in sec.nu.items()}
    nu[I][x] = "0" if nu[I][x] != "0" else "1"
    bad = SectionData(nu, dict(sec.signs), "broken")
    assert section_violations(red, bad)
    with pytest.raises(IncompatibleSection):
        euler_number(atlas("football"), red, bad)


def test_unsigned_zero_is_reported():
    red = resolved("football")["reduction"]
    sec = section_from_base(red, {"N": 1})
    sec.signs = {}
    assert any(v[0] == "unsigned zero" for v in section_violations(red, sec))


@pytest.mark.parametrize("name,cls", [("gerbe-trivial", 0), ("gerbe-nontrivial", 1)])
def test_gerbe_class_on_tetrahedron(name, cls):
    res = gerbe_class(atlas(name))
    assert res.cls == cls
    assert res.trivial == (cls == 0)
    assert res.parity == [] and res.rechoice_failures == []
    assert res.rechoices == 2 ** 9


def test_gerbe_without_fifth_chart():
    res = gerbe_class(atlas("gerbe-nontrivial", fifth="no"))
    assert res.cls == 1 and not res.trivial


def test_flipping_one_triple_breaks_parity():
    res = gerbe_class(atlas("gerbe-trivial"), rechoose=False)
    alpha = dict(res.cocycle.alpha)
    J = next(iter(alpha))
    alpha[J] ^= 1
    assert parity_violations(atlas("gerbe-trivial"), alpha)


def test_gerbe_precondition():
    with pytest.raises(PreconditionError):
        gerbe_class(atlas("football"))


def test_subatlas_checks():
    K = atlas("football")
    iota = inclusion_map(K, K)
    assert subatlas_check(iota).passed
    K3 = add_trivial_chart(K, K.base.up("a0.i1"), "3")
    assert validate_atlas(K3).passed
    iota = inclusion_map(K, K3)
    assert subatlas_check(iota).passed
    bad, (a, b) = misroute(iota)
    rep = subatlas_check(bad)
    assert not rep.passed
    assert rep.checks["ends"]["failures"] or rep.checks["functorial"]["failures"]
    assert any(rep.checks[c]["witnesses"] for c in ("ends", "functorial"))
