from itertools import chain, combinations

import pytest
from hypothesis import given, strategies as st

from orbatlas.finspace import (
    FiniteSpace,
    SpaceError,
    barycentric_subdivision,
    circle_model,
    quotient_space,
    sierpinski,
)

from conftest import posets


def all_subsets(points):
    return [frozenset(c) for c in chain.from_iterable(combinations(points, r) for r in range(len(points) + 1))]


def brute_leq(space, x, y):
    # reachability along the stored down-sets, recomputed from covers
    seen, stack = {y}, [y]
    covers = space.covers()
    while stack:
        q = stack.pop()
        for lo, hi in covers:
            if hi == q and lo not in seen:
                seen.add(lo)
                stack.append(lo)
    return x in seen


def brute_open(space, s):
    return all(q in s for p in s for q in space.points if space.leq(p, q))


@given(posets(), st.data())
def test_closure_matches_down_set_oracle(X, data):
    A = data.draw(st.sets(st.sampled_from(X.points)))
    expected = frozenset(x for x in X.points if any(brute_leq(X, x, a) for a in A))
    assert X.closure(A) == expected
    assert X.closure(X.closure(A)) == X.closure(A)


@given(posets(max_points=6))
def test_open_sets_are_up_sets_and_closed_under_union_and_intersection(X):
    opens = [s for s in all_subsets(X.points) if X.is_open(s)]
    assert all(brute_open(X, s) for s in opens)
    for a in opens:
        assert X.is_closed(frozenset(X.points) - a)
        for b in opens:
            assert X.is_open(a | b) and X.is_open(a & b)


@given(posets(max_points=6), st.data())
def test_interior_and_shrink_are_largest(X, data):
    U = data.draw(st.sets(st.sampled_from(X.points)))
    opens = [s for s in all_subsets(X.points) if X.is_open(s)]
    interior = max((s for s in opens if s <= U), key=len)
    assert X.interior(U) == interior
    fits = [s for s in opens if X.closure(s) <= U]
    best = frozenset().union(*fits)
    assert X.shrink(U) == best
    assert X.is_open(best) and X.closure(best) <= U


@given(posets(), st.data())
def test_frontier_of_open_set(X, data):
    A = X.up_closure(data.draw(st.sets(st.sampled_from(X.points))))
    assert X.frontier(A) == X.closure(A) - X.interior(A)


@given(posets(max_points=6))
def test_minimal_open_neighbourhood(X):
    opens = [s for s in all_subsets(X.points) if X.is_open(s)]
    for p in X.points:
        U = X.minimal_open_nbhd(p)
        assert X.is_open(U) and p in U
        assert all(U <= s for s in opens if p in s)


@given(posets())
def test_components_partition_the_space(X):
    comps = X.components()
    assert sorted(p for c in comps for p in c) == sorted(X.points)
    for c in comps:
        assert X.closure(c) == c and X.up_closure(c) == c


@given(posets(max_points=5))
def test_barycentric_subdivision_carrier_is_order_preserving_onto(X):
    sd, carrier = barycentric_subdivision(X)
    assert set(carrier.values()) == set(X.points)
    for lo, hi in sd.covers():
        assert X.leq(carrier[lo], carrier[hi])
    # one point per nonempty chain
    chains = [c for c in all_subsets(X.points) if c and all(X.leq(a, b) or X.leq(b, a) for a in c for b in c)]
    assert len(sd) == len(chains)


def test_circle_model_shape():
    C = circle_model(3)
    assert len(C) == 6
    assert len(C.covers()) == 6
    assert len(C.components()) == 1
    for i in range(3):
        assert C.minimal_open_nbhd(f"a{i}") == {f"a{i}"}
        assert len(C.minimal_open_nbhd(f"b{i}")) == 3


def test_sierpinski():
    S = sierpinski()
    assert S.is_open({"b"}) and not S.is_open({"a"})
    assert S.closure({"b"}) == {"a", "b"}
    assert S.shrink({"b"}) == frozenset()


def test_cycles_and_unknown_points_are_rejected():
    with pytest.raises(SpaceError):
        FiniteSpace(["x", "y"], [("x", "y"), ("y", "x")])
    with pytest.raises(SpaceError):
        FiniteSpace(["x"], [("x", "z")])
    with pytest.raises(SpaceError):
        FiniteSpace(["x", "x"])


def test_quotient_collapses_cycles():
    C = circle_model(2)
    # identify a0 with a1: still a poset
    Q, proj = quotient_space(C, [{"a0", "a1"}, {"b0"}, {"b1"}])
    assert len(Q) == 3
    assert proj.is_order_preserving()
    # identify a0 with b1 and a1 with b0: the preorder has a cycle, which merges everything
    Q, _ = quotient_space(C, [{"a0", "b1"}, {"a1", "b0"}])
    assert len(Q) == 1


def test_product_order():
    P = sierpinski().product(sierpinski())
    assert len(P) == 4
    assert P.leq(("a", "a"), ("b", "b"))
    assert not P.leq(("a", "b"), ("b", "a"))
