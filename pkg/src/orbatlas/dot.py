"""Graphviz DOT text for finite spaces and groupoid models."""

from __future__ import annotations

import numpy as np

from .category import GroupoidModel
from .finspace import FiniteSpace

MAX_EDGES = 5000


def _q(s) -> str:
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


def _name(obj) -> str:
    if isinstance(obj, tuple) and len(obj) == 2 and isinstance(obj[0], frozenset):
        return "{" + ",".join(sorted(obj[0])) + "}:" + str(obj[1])
    return str(obj)


def _finish(title: str, nodes: list[str], edges: list[str], total: int) -> str:
    lines = [f"digraph {_q(title)} {{", "  node [shape=box, fontsize=10];"]
    if total > len(edges):
        lines.append(f"  // truncated: {len(edges)} of {total} edges shown")
        lines.append(f'  label={_q(f"truncated: {len(edges)} of {total} edges shown")};')
    lines.extend(nodes)
    lines.extend(edges)
    lines.append("}")
    return "\n".join(lines) + "\n"


def space_dot(X: FiniteSpace, title: str = "space", max_edges: int = MAX_EDGES) -> str:
    """Hasse diagram, arrows pointing up (from a point to one that covers it)."""
    covers = X.covers()
    nodes = [f"  {_q(p)};" for p in X.points]
    edges = [f"  {_q(a)} -> {_q(b)};" for a, b in covers[:max_edges]]
    return _finish(title, nodes, edges, len(covers))


def groupoid_dot(G: GroupoidModel, title: str | None = None, max_edges: int = MAX_EDGES, identities: bool = False, mask: np.ndarray | None = None) -> str:
    """Objects as nodes and morphisms as edges labelled by their group element.

    Identity morphisms are left out unless ``identities``; ``mask`` limits the
    drawn morphisms (for instance to the zero subcategory).
    """
    keep = np.ones(G.n_mor, dtype=bool) if mask is None else np.asarray(mask, dtype=bool).copy()
    if not identities:
        keep[G.identity] = False
    ids = np.flatnonzero(keep)
    used = set(G.src[ids].tolist()) | set(G.tgt[ids].tolist())
    if mask is None:
        used = set(range(G.n_obj))
    nodes = [f"  {_q(_name(G.objects[o]))};" for o in sorted(used)]
    edges = []
    for m in ids[:max_edges]:
        key = G.mor_keys[m]
        label = ",".join(f"{i}:{g}" for i, g in key[3]) if isinstance(key, tuple) and len(key) == 4 else str(m)
        edges.append(f"  {_q(_name(G.objects[G.src[m]]))} -> {_q(_name(G.objects[G.tgt[m]]))} [label={_q(label)}];")
    return _finish(title or G.name, nodes, edges, len(ids))
