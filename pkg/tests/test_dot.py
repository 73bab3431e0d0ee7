from orbatlas.dot import groupoid_dot, space_dot

from conftest import atlas, gk


def test_space_dot_lists_every_cover():
    X = atlas("football").base
    text = space_dot(X, "Y")
    assert text.startswith('digraph "Y" {')
    assert text.count("->") == len(X.covers())
    assert "truncated" not in text


def test_truncation_is_announced():
    G = gk("football")
    text = groupoid_dot(G, max_edges=3)
    assert text.count("->") == 3
    assert "truncated: 3 of" in text


def test_identities_are_optional():
    G = gk("football")
    assert groupoid_dot(G, identities=True).count("->") == G.n_mor
    assert groupoid_dot(G).count("->") == G.n_mor - G.n_obj
