import json
from fractions import Fraction

import pytest

from orbatlas.atlas import validate_atlas
from orbatlas.derive import derive_atlas, embeddings_from_atlas
from orbatlas.document import (
    MUTATIONS,
    DocumentError,
    atlas_to_doc,
    canonical,
    doc_to_atlas,
    dumps,
    load,
    loads,
    mutate,
    mutation_outcomes,
    to_jsonable,
)
from orbatlas.fixtures import FIXTURES

from conftest import atlas, gk


@pytest.mark.parametrize("name", FIXTURES)
def test_round_trip_is_bit_exact(name):
    text = dumps(atlas(name))
    again = loads(text)
    assert dumps(again) == text
    assert validate_atlas(again).passed


def test_canonical_form():
    assert canonical({"b": 1, "a": [Fraction(1, 3)]}) == '{\n "a": [\n  [\n   1,\n   3\n  ]\n ],\n "b": 1\n}\n'
    assert to_jsonable(Fraction(5, 6)) == [5, 6]
    assert to_jsonable(frozenset({"y", "x"})) == ["x", "y"]


def test_derived_atlas_records_provenance():
    G = gk("football")
    D = derive_atlas(G, embeddings_from_atlas(G))
    doc = atlas_to_doc(D)
    assert doc["provenance"]["order"] == list(D.derived["order"])
    assert validate_atlas(doc_to_atlas(json.loads(canonical(doc)))).passed


@pytest.mark.parametrize(
    "edit",
    [
        lambda d: d.pop("charts"),
        lambda d: d.update(format="something-else"),
        lambda d: d.update(extra=1),
        lambda d: d["base"]["covers"].append(["a"]),
        lambda d: d["charts"][0].update(orientation={"x": 2}),
    ],
)
def test_schema_errors(edit):
    doc = atlas_to_doc(atlas("football"))
    edit(doc)
    with pytest.raises(DocumentError):
        doc_to_atlas(doc)


def test_group_law_errors_are_document_errors():
    doc = atlas_to_doc(atlas("football"))
    g = next(iter(doc["groups"].values()))
    g["table"][0][0] = g["elements"][-1]  # identity row no longer fixes e
    with pytest.raises(DocumentError):
        doc_to_atlas(doc)


def test_cyclic_base_is_a_document_error():
    doc = atlas_to_doc(atlas("football"))
    a, b = doc["base"]["covers"][0]
    doc["base"]["covers"].append([b, a])
    with pytest.raises(DocumentError):
        doc_to_atlas(doc)


def test_bad_json_and_missing_file(tmp_path):
    with pytest.raises(DocumentError):
        loads("{not json")
    with pytest.raises(DocumentError):
        load(tmp_path / "nope.json")


def test_every_mutation_is_caught_with_a_witness():
    rows = mutation_outcomes(atlas_to_doc(atlas("football")))
    assert len(rows) == len(MUTATIONS) == 10
    for r in rows:
        assert r["caught"], r
        assert r["witness"]


def test_mutate_copies():
    doc = atlas_to_doc(atlas("football"))
    before = canonical(doc)
    mutate(doc, "broken-cocycle")
    assert canonical(doc) == before
    with pytest.raises(KeyError):
        mutate(doc, "no-such")
