import pytest

from orbatlas.atlas import AtlasError, validate_atlas
from orbatlas.completion import complete_atlas
from orbatlas.derive import (
    EmbeddingError,
    compose_maps,
    derive_atlas,
    embeddings_from_atlas,
    endpoint,
    find_isomorphism,
    induced_functor,
    partial_composites,
    reorder_atlas,
    weighting_stability,
)

from conftest import atlas, gk, point

NAMES = ["football", "manifold-cover", "gerbe-trivial", "gerbe-nontrivial"]


def word(a, b):
    return f"{b}o{a}"


def test_partial_composites_example():
    alphas = [f"a{k}" for k in range(1, 7)]
    # places 1, 3, 6 of a chain of length 6, counted from the source
    assert partial_composites(alphas, [1, 3, 6], word) == ("a6oa5oa4", "a3oa2")
    assert partial_composites(alphas, [0, 1], word) == ("a1",)


def test_endpoint_of_singleton():
    alphas = [("x", "y"), ("y", "z")]
    src, tgt = (lambda m: m[0]), (lambda m: m[1])
    assert endpoint(alphas, 0, src, tgt) == "x"
    assert endpoint(alphas, 1, src, tgt) == "y"
    assert endpoint(alphas, 2, src, tgt) == "z"


def derived(name, order=None):
    G = gk(name)
    return derive_atlas(G, embeddings_from_atlas(G), order)


@pytest.mark.parametrize("name", NAMES)
def test_derived_atlas_is_valid_and_functor_holds(name):
    K = derived(name)
    assert validate_atlas(K).passed
    F = induced_functor(K)
    assert F.report.passed, F.report.text()
    assert not weighting_stability(gk(name), K)


@pytest.mark.parametrize("name", NAMES)
def test_reorder_is_an_isomorphism(name):
    K = derived(name)
    a, b = K.derived["order"][:2]
    K2, S = reorder_atlas(K, a, b)
    assert K2.reorder_report.passed, K2.reorder_report.text()
    K3, S2 = reorder_atlas(K2, b, a, verify=False)
    both = compose_maps(S, S2)
    assert all(v == x for I in both for x, v in both[I].items())
    for I in K.indices:
        if not {a, b} <= I:
            assert all(x == y for x, y in S[I].items())


def test_reorder_on_pair_inverts_the_link():
    K = derived("football")
    a, b = K.derived["order"][:2]
    _, S = reorder_atlas(K, a, b, verify=False)
    I = frozenset([a, b])
    ops_G = K.derived["G"]
    for x, t in K.derived["tuples"][I].items():
        (alpha,) = t
        assert S[I][x] == str(int(ops_G.inverse[alpha]))


def test_reorder_needs_adjacent_labels():
    K = derived("gerbe-trivial")
    o = K.derived["order"]
    with pytest.raises(AtlasError):
        reorder_atlas(K, o[0], o[2])
    with pytest.raises(AtlasError):
        reorder_atlas(atlas("football"), "1", "2")


def test_football_derived_is_isomorphic_to_original():
    assert find_isomorphism(atlas("football"), derived("football")) is not None


@pytest.mark.parametrize("group,sub", [("Z2", "id"), ("Z2xZ2", "Z2"), ("S3", "Z3")])
def test_point_orbifold_round_trip(group, sub):
    K = point(group, sub, 2).atlas
    G = complete_atlas(K)
    D = derive_atlas(G, embeddings_from_atlas(G))
    assert validate_atlas(D).passed
    assert find_isomorphism(K, D) is not None
    assert not weighting_stability(G, D)


def test_product_atlas_has_no_basic_charts():
    with pytest.raises(EmbeddingError):
        embeddings_from_atlas(gk("product"))


def test_order_must_be_a_permutation():
    G = gk("football")
    with pytest.raises(EmbeddingError):
        derive_atlas(G, embeddings_from_atlas(G), ["1"])
