from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from orbatlas.completion import invert_gk
from orbatlas.resolve import (
    NoReductionFound,
    build_resolution,
    compute_weighting,
    cover_reduction,
    hausdorff_close,
    resolution_report,
    wnb_check,
)

from conftest import atlas, gk, resolved

RESOLVABLE = [
    ("football", {}),
    ("football", {"n": 2}),
    ("manifold-cover", {}),
    ("point-orbifold", {}),
    ("gerbe-trivial", {"cover": "annulus"}),
    ("gerbe-nontrivial", {"cover": "annulus"}),
    ("product", {}),
]


def reduction_ok(K, Q):
    """The reduction axioms, checked directly on the base poset."""
    Y = K.base
    for I in K.indices:
        q = Q[I]
        if any(p not in q for y in q for p in Y.up(y)):
            return False
        if not Y.closure(q) <= K.footprint(I):
            return False
    if set().union(*Q.values()) != set(Y.points):
        return False
    for I in K.indices:
        for J in K.indices:
            if not (I <= J or J <= I) and Y.closure(Q[I]) & Y.closure(Q[J]):
                return False
    return True


@pytest.mark.parametrize("name,params", RESOLVABLE, ids=lambda v: str(v))
def test_reduction_axioms(name, params):
    red = resolved(name, **params)["reduction"]
    assert reduction_ok(red.atlas, red.Q)


@given(st.integers(0, 10_000))
def test_every_seed_gives_a_reduction(seed):
    K = atlas("football", n=2)
    red = cover_reduction(K, seed=seed)
    assert reduction_ok(K, red.Q)


def test_tetrahedral_gerbe_has_no_reduction():
    with pytest.raises(NoReductionFound) as e:
        cover_reduction(atlas("gerbe-trivial"))
    assert e.value.constraint


def test_search_cap(monkeypatch):
    monkeypatch.setenv("ORBATLAS_MAX_SEARCH", "1")
    with pytest.raises(NoReductionFound, match="exceeded"):
        cover_reduction(atlas("football"))


def formula_morphisms(K, red):
    """Mor(V): for I in J, z over Q_I n Q_J and gamma trivial on some K in I with z over Q_K; plus inverses."""
    G = K.groups
    out = set()
    for I, J in K.pairs():
        ch = K.charts[J]
        for z in ch.points:
            y = ch.psi[z]
            if y not in red.Q[I] or y not in red.Q[J]:
                continue
            for g in G.elements(I):
                d = dict(g)
                if any(y in red.Q[L] and all(G.factors[i].identity == d[i] for i in L) for L in K.indices if L <= I):
                    out.add((I, J, z, g))
    return out | {invert_gk(K, m) for m in out}


@pytest.mark.parametrize("name,params", RESOLVABLE[:4], ids=lambda v: str(v))
def test_resolution_morphisms_match_formula(name, params):
    r = resolved(name, **params)
    assert set(r["V"].mor_keys) == formula_morphisms(atlas(name, **params), r["reduction"])


@pytest.mark.parametrize("name,params", RESOLVABLE, ids=lambda v: str(v))
def test_resolution_report_and_wnb(name, params):
    r = resolved(name, **params)
    rep = resolution_report(r["V"], r["VH"])
    assert rep.passed, rep.text()
    wrep = wnb_check(r["VH"], r["weighting"])
    assert wrep.passed, wrep.text()
    assert r["weighting"].defects == []


def test_vh_adds_only_frontier_morphisms_on_football():
    r = resolved("football")
    H = r["VH"]
    assert H.n_mor > r["V"].n_mor
    assert H.added.sum() == H.n_mor - r["V"].n_mor


def test_manifold_cover_weight_is_one():
    w = resolved("manifold-cover")["weighting"]
    assert w.values() == {Fraction(1)}
    assert not w.branch_locus


def test_wnb_catches_a_wrong_weight():
    r = resolved("football")
    K = atlas("football")
    H = hausdorff_close(build_resolution(K, r["reduction"], gk("football")), K, r["reduction"])
    w = compute_weighting(H, K)
    p = next(iter(w.value))
    w.value[p] = w.value[p] + 1
    assert not wnb_check(H, w).checks["weighting"]["failures"] == 0


def test_fibers_are_free_orbits_at_every_point():
    w = resolved("football")["weighting"]
    assert set(w.fibers) == set(w.space.points)
    assert all(w.fibers[p] for p in w.space.points)
