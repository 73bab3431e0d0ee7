from itertools import product

import pytest
from hypothesis import given, strategies as st

from orbatlas.groups import (
    FiniteGroup,
    GroupError,
    ProductGroups,
    cyclic_group,
    direct_product,
    embedding_is_homomorphism,
    symmetric_group_3,
    trivial_group,
)

GROUPS = [cyclic_group(2), cyclic_group(3), cyclic_group(4), symmetric_group_3(), direct_product(cyclic_group(2), cyclic_group(2)), trivial_group()]


@pytest.mark.parametrize("G", GROUPS, ids=lambda g: g.name)
def test_group_laws(G):
    assert G.law_violations() == []
    for a in G.elements:
        assert G.mul(a, G.inv(a)) == G.identity


def test_s3_is_not_abelian_and_cyclic_groups_are():
    assert not symmetric_group_3().is_abelian()
    assert all(cyclic_group(n).is_abelian() for n in range(1, 6))
    assert len(symmetric_group_3()) == 6


def test_broken_table_is_reported():
    # 0 and 1 with 1*1 = 1: identity law holds, but 1 has no inverse
    G = FiniteGroup(["0", "1"], [["0", "1"], ["1", "1"]])
    assert any("inverse" in v for v in G.law_violations())
    with pytest.raises(GroupError):
        FiniteGroup(["0", "1"], [["0", "2"], ["1", "0"]])


def test_subgroup():
    S3 = symmetric_group_3()
    A3 = S3.subgroup(["012", "120", "201"])
    assert len(A3) == 3 and A3.law_violations() == []
    with pytest.raises(GroupError):
        S3.subgroup(["012", "102", "120"])


def test_embedding_homomorphism():
    Z2 = cyclic_group(2)
    V = direct_product(cyclic_group(2), cyclic_group(2))
    assert embedding_is_homomorphism(Z2, V, {"0": V.identity, "1": "1,1"})


PG = ProductGroups({"1": cyclic_group(2), "2": cyclic_group(3), "3": symmetric_group_3()})


@given(st.sets(st.sampled_from(["1", "2", "3"]), min_size=1), st.data())
def test_product_groups_componentwise(index, data):
    els = PG.elements(index)
    assert len(els) == PG.order(index)
    a = data.draw(st.sampled_from(els))
    b = data.draw(st.sampled_from(els))
    c = data.draw(st.sampled_from(els))
    assert PG.mul(PG.mul(a, b), c) == PG.mul(a, PG.mul(b, c))
    assert PG.is_identity(PG.mul(a, PG.inv(a)))
    for (i, x), (j, y), (k, z) in zip(a, b, PG.mul(a, b)):
        assert i == j == k and PG[i].mul(x, y) == z


def test_extend_and_trim():
    g = (("2", "1"),)
    ext = PG.extend(g, ["1", "2", "3"])
    assert dict(ext) == {"1": "0", "2": "1", "3": "012"}
    assert PG.trim(ext) == g
    with pytest.raises(GroupError):
        PG.extend((("3", "120"),), ["1"])


def test_product_group_table():
    G = PG.product_group(["1", "2"])
    assert len(G) == 6 and G.is_abelian() and G.law_violations() == []
    assert all(G.mul(a, b) == PG.mul(a, b) for a, b in product(G.elements, repeat=2))
