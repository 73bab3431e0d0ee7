"""Atlas documents: canonical JSON in and out, plus the football mutation catalogue."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable

import jsonschema
import numpy as np

from .atlas import Atlas, Chart, index_key, index_label, validate_atlas
from .finspace import FiniteSpace, SpaceError
from .groups import FiniteGroup, GroupError, ProductGroups

FORMAT = "orbatlas-atlas/1"


class DocumentError(ValueError):
    """Unreadable or structurally invalid document (exit status 2)."""


_space = {
    "type": "object",
    "required": ["points", "covers"],
    "properties": {
        "points": {"type": "array", "items": {"type": "string"}},
        "covers": {"type": "array", "items": {"type": "array", "items": {"type": "string"}, "minItems": 2, "maxItems": 2}},
    },
    "additionalProperties": False,
}
_strmap = {"type": "object", "additionalProperties": {"type": "string"}}

SCHEMA = {
    "type": "object",
    "required": ["format", "base", "groups", "footprints", "charts", "coverings"],
    "properties": {
        "format": {"const": FORMAT},
        "name": {"type": "string"},
        "base": _space,
        "groups": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["elements", "table"],
                "properties": {
                    "name": {"type": "string"},
                    "elements": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                    "identity": {"type": "string"},
                    "table": {"type": "array", "items": {"type": "array", "items": {"type": "string"}}},
                },
                "additionalProperties": False,
            },
        },
        "footprints": {"type": "object", "additionalProperties": {"type": "array", "items": {"type": "string"}}},
        "charts": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["index", "domain", "actions", "psi"],
                "properties": {
                    "index": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                    "domain": _space,
                    "actions": {"type": "object", "additionalProperties": {"type": "object", "additionalProperties": _strmap}},
                    "psi": _strmap,
                    "orientation": {"type": ["object", "null"], "additionalProperties": {"enum": [1, -1]}},
                },
                "additionalProperties": False,
            },
        },
        "coverings": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["sub", "sup", "map"],
                "properties": {
                    "sub": {"type": "array", "items": {"type": "string"}},
                    "sup": {"type": "array", "items": {"type": "string"}},
                    "map": _strmap,
                },
                "additionalProperties": False,
            },
        },
        "options": {
            "type": "object",
            "properties": {
                "generalized": {"type": "boolean"},
                "indices": {"type": "array", "items": {"type": "array", "items": {"type": "string"}}},
            },
        },
        "provenance": {"type": "object"},
    },
    "additionalProperties": False,
}


def to_jsonable(obj: Any) -> Any:
    """Fractions become [num, den]; sets become sorted lists; numpy scalars become Python ones."""
    if isinstance(obj, Fraction):
        return [obj.numerator, obj.denominator]
    if isinstance(obj, dict):
        return {str(k) if not isinstance(k, str) else k: to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (frozenset, set)):
        return sorted((to_jsonable(v) for v in obj), key=lambda v: json.dumps(v, sort_keys=True))
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def canonical(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=1, ensure_ascii=False) + "\n"


def _space_doc(X: FiniteSpace) -> dict:
    return {"points": list(X.points), "covers": sorted([list(c) for c in X.covers()])}


def atlas_to_doc(atlas: Atlas) -> dict:
    G = atlas.groups
    groups = {}
    for i in atlas.basic:
        g = G.factors[i]
        groups[i] = {
            "name": g.name,
            "elements": list(g.elements),
            "identity": g.identity,
            "table": [[g.mul(a, b) for b in g.elements] for a in g.elements],
        }
    charts = []
    for I in atlas.indices:
        ch = atlas.charts[I]
        charts.append({
            "index": sorted(I),
            "domain": _space_doc(ch.domain),
            "actions": {i: {g: dict(m) for g, m in per.items()} for i, per in ch.actions.items()},
            "psi": dict(ch.psi),
            "orientation": dict(ch.orientation) if ch.orientation is not None else None,
        })
    coverings = [
        {"sub": sorted(I), "sup": sorted(J), "map": dict(r)}
        for (I, J), r in sorted(atlas.coverings.items(), key=lambda kv: (index_key(kv[0][1]), index_key(kv[0][0])))
    ]
    doc = {
        "format": FORMAT,
        "name": atlas.name,
        "base": _space_doc(atlas.base),
        "groups": groups,
        "footprints": {i: sorted(f) for i, f in atlas.basic_footprints.items()},
        "charts": charts,
        "coverings": coverings,
        "options": {"generalized": atlas.generalized, "indices": [sorted(I) for I in atlas.indices]},
    }
    d = getattr(atlas, "derived", None)
    if d is not None:
        doc["provenance"] = {"derived_from": d["groupoid"], "order": list(d["order"])}
    return doc


def doc_to_atlas(doc: dict) -> Atlas:
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as e:
        where = "/".join(map(str, e.absolute_path)) or "<root>"
        raise DocumentError(f"schema: {e.message} at {where}") from None
    try:
        base = FiniteSpace(doc["base"]["points"], [tuple(c) for c in doc["base"]["covers"]])
        factors = {}
        for i, g in doc["groups"].items():
            if len(g["table"]) != len(g["elements"]) or any(len(r) != len(g["elements"]) for r in g["table"]):
                raise DocumentError(f"group {i}: table is not square over its elements")
            factors[i] = FiniteGroup(g["elements"], g["table"], g.get("identity"), g.get("name", i))
            bad = factors[i].law_violations()
            if bad:
                raise DocumentError(f"group {i}: {bad[0]}")
        charts = {}
        for c in doc["charts"]:
            I = frozenset(c["index"])
            if I in charts:
                raise DocumentError(f"chart {index_label(I)} appears twice")
            dom = FiniteSpace(c["domain"]["points"], [tuple(x) for x in c["domain"]["covers"]])
            charts[I] = Chart(I, dom, c["actions"], c["psi"], c.get("orientation"))
        coverings = {(frozenset(c["sub"]), frozenset(c["sup"])): c["map"] for c in doc["coverings"]}
    except (SpaceError, GroupError) as e:
        raise DocumentError(str(e)) from None
    missing = [p for f in doc["footprints"].values() for p in f if p not in base]
    if missing:
        raise DocumentError(f"footprints name unknown base points {missing[:3]}")
    opts = doc.get("options", {})
    indices = [frozenset(i) for i in opts["indices"]] if "indices" in opts else None
    atlas = Atlas(base, ProductGroups(factors), doc["footprints"], charts, coverings, indices, opts.get("generalized", False), doc.get("name", ""))
    return atlas


def dumps(atlas: Atlas) -> str:
    return canonical(atlas_to_doc(atlas))


def loads(text: str) -> Atlas:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise DocumentError(f"malformed JSON: {e}") from None
    return doc_to_atlas(doc)


def load(path) -> Atlas:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise DocumentError(f"cannot read {path}: {e.strerror}") from None
    return loads(text)


# ---------------------------------------------------------------- mutations


@dataclass
class Mutation:
    key: str
    description: str
    apply: Callable[[dict], None]
    axiom: str


def _chart(doc: dict, *index: str) -> dict:
    return next(c for c in doc["charts"] if c["index"] == sorted(index))


def _covering(doc: dict, sub: list, sup: list) -> dict:
    return next(c for c in doc["coverings"] if c["sub"] == sorted(sub) and c["sup"] == sorted(sup))


def _first_point(doc, *index):
    return _chart(doc, *index)["domain"]["points"][0]


def _m_cocycle(doc):
    # rho_{12,12} becomes the (valid, central) action of the nontrivial element of Gamma_1
    c = _chart(doc, "1", "2")
    _covering(doc, ["1", "2"], ["1", "2"])["map"] = dict(c["actions"]["1"]["1"])


def _m_nonfree(doc):
    c = _chart(doc, "1", "2")
    pts = c["domain"]["points"]
    c["actions"]["2"] = {g: {x: x for x in pts} for g in c["actions"]["2"]}


def _m_rho_equivariance(doc):
    cov = _covering(doc, ["1"], ["1", "2"])["map"]
    y = sorted(cov)[0]
    cov[y] = _chart(doc, "1")["actions"]["1"]["1"][cov[y]]


def _m_misroute(doc):
    cov = _covering(doc, ["2"], ["1", "2"])["map"]
    psi2 = _chart(doc, "2")["psi"]
    y = sorted(cov)[0]
    cov[y] = next(x for x in _chart(doc, "2")["domain"]["points"] if psi2[x] != psi2[cov[y]])


def _m_psi(doc):
    c = _chart(doc, "1")
    x = c["domain"]["points"][-1]
    c["psi"][x] = "N" if c["psi"][x] != "N" else doc["base"]["points"][-1]


def _m_cover(doc):
    doc["footprints"]["2"] = [y for y in doc["footprints"]["2"] if y != "S"]


def _m_action_bijective(doc):
    c = _chart(doc, "2")
    act = c["actions"]["2"]["1"]
    pts = c["domain"]["points"]
    act[pts[0]] = act[pts[1]]


def _m_rho_missing(doc):
    cov = _covering(doc, ["1"], ["1", "2"])["map"]
    del cov[sorted(cov)[0]]


def _m_stabilizer(doc):
    # Z2 acts trivially on W_1, so every point of W_12 has a smaller stabilizer than its image
    c = _chart(doc, "1")
    pts = c["domain"]["points"]
    c["actions"]["1"]["1"] = {x: x for x in pts}


def _m_index_set(doc):
    doc["charts"] = [c for c in doc["charts"] if c["index"] != ["1", "2"]]
    doc["options"]["indices"] = [i for i in doc["options"]["indices"] if i != ["1", "2"]]


MUTATIONS: list[Mutation] = [
    Mutation("broken-cocycle", "rho_{12,12} replaced by the action of 1:1, so rho_JJ is not the identity", _m_cocycle, "cocycle"),
    Mutation("non-free", "Gamma_2 acts trivially on W_12, so Gamma_{12 minus 1} is not free", _m_nonfree, "freeness"),
    Mutation("non-equivariant-rho", "rho_{1,12} composed with 1:1 at a single point", _m_rho_equivariance, "equivariance"),
    Mutation("misrouted", "rho_{2,12} sends one point into another fiber of psi_2", _m_misroute, "compatibility"),
    Mutation("psi-moved", "psi_1 sends one point to another base point", _m_psi, "footprint"),
    Mutation("footprint-hole", "the south pole is removed from the footprint of chart 2", _m_cover, "cover"),
    Mutation("action-not-bijective", "2:1 on W_2 sends two points to one image", _m_action_bijective, "chart_action"),
    Mutation("rho-partial", "rho_{1,12} is undefined at one point", _m_rho_missing, "covering_map"),
    Mutation("trivial-pole-action", "1:1 acts as the identity on W_1", _m_stabilizer, "stabilizer"),
    Mutation("chart-missing", "the chart W_12 is dropped although F_12 is nonempty", _m_index_set, "index_set"),
]


def mutate(doc: dict, key: str) -> dict:
    m = next((m for m in MUTATIONS if m.key == key), None)
    if m is None:
        raise KeyError(f"unknown mutation {key!r}")
    out = copy.deepcopy(doc)
    m.apply(out)
    return out


def mutation_outcomes(doc: dict) -> list[dict]:
    """Each mutation: which axioms fail and the first witness of the expected one."""
    rows = []
    for m in MUTATIONS:
        rep = validate_atlas(doc_to_atlas(mutate(doc, m.key)))
        failed = rep.failed_axioms()
        wit = rep.failures[m.axiom][:1]
        rows.append({"mutation": m.key, "description": m.description, "expected": m.axiom, "failed": failed, "caught": m.axiom in failed and bool(wit), "witness": wit[0] if wit else None})
    return rows
