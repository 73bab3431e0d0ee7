"""Atlases built from a finite groupoid with chosen basic charts, the functor
F_K back to the groupoid, and the reordering isomorphism."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product

import numpy as np

from .atlas import Atlas, AtlasError, Chart, index_key, index_label
from .category import GroupoidModel, LawReport, build_bk
from .finspace import FiniteSpace
from .groups import FiniteGroup, ProductGroups


class EmbeddingError(ValueError):
    pass


@dataclass
class BasicChartEmbedding:
    """A basic chart (W_i, Gamma_i) inside a groupoid.

    ``sigma[x]`` is an object id of the groupoid and ``tilde[(y, g)]`` a
    morphism id from sigma(g^-1 y) to sigma(y).
    """

    label: str
    group: FiniteGroup
    domain: FiniteSpace
    action: dict
    sigma: dict
    tilde: dict

    def act(self, g, x):
        return self.action[g][x]


def embeddings_from_atlas(G: GroupoidModel, labels=None) -> list[BasicChartEmbedding]:
    """Basic charts of the atlas underlying a completion, embedded as themselves."""
    atlas = G.atlas
    lay = G.layout
    out = []
    for i in labels or atlas.basic:
        I = frozenset([i])
        if I not in atlas.charts:
            raise EmbeddingError(f"atlas {atlas.name} has no basic chart {i}")
        ch = atlas.charts[I]
        grp = atlas.groups.factors[i]
        sigma = {x: G.obj_index[(I, x)] for x in ch.points}
        tilde = {}
        for y in ch.points:
            for g in grp.elements:
                tilde[(y, g)] = lay.key_of((I, I, y, ((i, g),)))
        out.append(BasicChartEmbedding(i, grp, ch.domain, ch.actions[i], sigma, tilde))
    return out


def embedding_violations(G: GroupoidModel, emb: BasicChartEmbedding, f) -> list[str]:
    out = []
    grp = emb.group
    pts = list(emb.domain.points)
    if len({emb.sigma[x] for x in pts}) != len(pts):
        out.append(f"sigma_{emb.label} is not injective")
    for y in pts:
        for g in grp.elements:
            m = emb.tilde[(y, g)]
            src, tgt = emb.sigma[emb.act(grp.inv(g), y)], emb.sigma[y]
            if G.src[m] != src or G.tgt[m] != tgt:
                out.append(f"tilde_{emb.label}({y},{g}) has the wrong ends")
    objs = {emb.sigma[x] for x in pts}
    full = {int(m) for m in np.flatnonzero(np.isin(G.src, list(objs)) & np.isin(G.tgt, list(objs)))}
    img = set(emb.tilde.values())
    if img != full or len(img) != len(emb.tilde):
        out.append(f"tilde_{emb.label} is not a bijection onto the full subcategory on sigma(W_{emb.label})")
    tab = G.table
    for y in pts:
        for g in grp.elements:
            for h in grp.elements:
                # tilde(h) at g y after tilde(g) at y is tilde(hg) at y
                gy = emb.act(g, y)
                a = emb.tilde[(gy, g)]
                b = emb.tilde[(emb.act(h, gy), h)]
                c = tab.lookup(np.array([a]), np.array([b]))[0]
                if c != emb.tilde[(emb.act(grp.mul(h, g), y), grp.mul(h, g))]:
                    out.append(f"tilde_{emb.label} is not multiplicative at {y}")
                    break
    for x in pts:
        if f(emb.sigma[x]) is None:
            out.append(f"no base point for sigma({x})")
    return out[:10]


def morphism_space(G: GroupoidModel) -> FiniteSpace:
    """The order on morphism ids.  Completions use W_{I u J} x Gamma; otherwise discrete."""
    lay = getattr(G, "layout", None)
    if lay is None:
        return FiniteSpace(list(range(G.n_mor)))
    ix = lay.ix
    rel = []
    for k, (mi, mj) in enumerate(lay.blocks):
        u = mi | mj
        dom = ix.atlas.charts[ix.index_of(u)].domain
        pos = ix.point_pos[u]
        codes = ix.elements(mi & mj)
        for a, b in dom.covers():
            za, zb = np.full(len(codes), pos[a]), np.full(len(codes), pos[b])
            lo = lay.ids(k, za, codes)
            hi = lay.ids(k, zb, codes)
            rel.extend(zip(lo.tolist(), hi.tolist()))
    return FiniteSpace(list(range(G.n_mor)), rel)


class _Ops:
    def __init__(self, G: GroupoidModel):
        self.G = G
        self.tab = G.table
        self.cache: dict = {}

    def then(self, a: int, b: int) -> int:
        """a followed by b."""
        key = (a, b)
        c = self.cache.get(key)
        if c is None:
            c = int(self.tab.lookup(np.array([a]), np.array([b]))[0])
            if c < 0:
                raise AtlasError(f"morphisms {a} and {b} do not compose")
            self.cache[key] = c
        return c

    def inv(self, a: int) -> int:
        return int(self.G.inverse[a])


def _tuple_id(t: tuple) -> str:
    return "/".join(map(str, t))


def derive_atlas(G: GroupoidModel, embeddings: list[BasicChartEmbedding], order: list[str] | None = None, base: FiniteSpace | None = None, f=None, name: str = "") -> Atlas:
    """The atlas of composable tuples.

    For I = {i_0 < ... < i_k} a point of W_I is (alpha_{i_k}, ..., alpha_{i_1})
    with alpha_{i_l} a morphism from sigma(W_{i_{l-1}}) to sigma(W_{i_l}).
    Without ``base`` and ``f`` the base is the atlas base of a completion, or
    else the realization of G.
    """
    if base is None:
        if getattr(G, "atlas", None) is not None:
            base = G.atlas.base
            ypts = base.points
            f = lambda o: ypts[int(G.obj_psi[o])]  # noqa: E731
        else:
            base, proj = G.realize()
            f = lambda o: proj(G.objects[o])  # noqa: E731
    embs = {e.label: e for e in embeddings}
    order = list(order or sorted(embs))
    if sorted(order) != sorted(embs):
        raise EmbeddingError("order must list every basic chart once")
    for e in embeddings:
        bad = embedding_violations(G, e, f)
        if bad:
            raise EmbeddingError(bad[0])
    rank = {lab: k for k, lab in enumerate(order)}
    ops = _Ops(G)
    mspace = morphism_space(G)
    sig_inv = {lab: {o: x for x, o in e.sigma.items()} for lab, e in embs.items()}
    feet = {lab: frozenset(f(o) for o in e.sigma.values()) for lab, e in embs.items()}
    covered = frozenset().union(*feet.values())
    if covered != frozenset(base.points):
        raise EmbeddingError(f"footprints miss {sorted(map(str, set(base.points) - covered))[:3]}")
    for lab in order:
        if not base.is_open(feet[lab]):
            raise EmbeddingError(f"footprint of {lab} is not open")

    def hom(a: str, b: str) -> list[int]:
        sa = set(embs[a].sigma.values())
        sb = set(embs[b].sigma.values())
        return [int(m) for m in np.flatnonzero(np.isin(G.src, list(sa)) & np.isin(G.tgt, list(sb)))]

    groups = ProductGroups({lab: embs[lab].group for lab in order})
    tuples: dict = {}
    charts, coverings = {}, {}
    labels = order
    for r in range(1, len(labels) + 1):
        for combo in combinations(labels, r):
            I = frozenset(combo)
            F = frozenset(base.points)
            for i in combo:
                F &= feet[i]
            if not F:
                continue
            if r == 1:
                e = embs[combo[0]]
                charts[I] = Chart(I, e.domain, {e.label: e.action}, {x: f(e.sigma[x]) for x in e.domain.points})
                continue
            # fiber product, built one link at a time
            links = [hom(combo[k - 1], combo[k]) for k in range(1, r)]
            rows = [(m,) for m in links[0]]
            for k in range(1, r - 1):
                nxt = {}
                for m in links[k]:
                    nxt.setdefault(int(G.src[m]), []).append(m)
                rows = [row + (m,) for row in rows for m in nxt.get(int(G.tgt[row[-1]]), [])]
            # stored as (alpha_{i_k}, ..., alpha_{i_1})
            tup = {_tuple_id(row[::-1]): row[::-1] for row in rows}
            tuples[I] = tup
            pts = list(tup)
            rel = []
            by_first: dict = {}
            for p, t in tup.items():
                by_first.setdefault(t[-1], []).append(p)
            for p, t in tup.items():
                for lo_first in mspace.down(t[-1]):
                    for q in by_first.get(lo_first, []):
                        if q != p and all(mspace.leq(a, b) for a, b in zip(tup[q], t)):
                            rel.append((q, p))
            dom = FiniteSpace(pts, rel)
            acts = {}
            for pos, lab in enumerate(combo):
                e = embs[lab]
                acts[lab] = {g: {p: _tuple_id(_insert(ops, embs, combo, tup[p], pos, g, sig_inv)) for p in pts} for g in e.group.elements}
            charts[I] = Chart(I, dom, acts, {p: f(int(G.tgt[tup[p][0]])) for p in pts})
    for J in charts:
        cj = sorted(J, key=lambda i: rank[i])
        for I in charts:
            if not I <= J:
                continue
            ci = sorted(I, key=lambda i: rank[i])
            coverings[(I, J)] = {p: _project(ops, embs, sig_inv, cj, ci, tuples.get(J, {}).get(p), p, G) for p in charts[J].points}
    atlas = Atlas(base, groups, {lab: feet[lab] for lab in order}, charts, coverings, name=name or f"derived({G.name})")
    atlas.derived = {"groupoid": G.name, "order": order, "tuples": tuples, "embeddings": embs, "f": f, "G": G}
    return atlas


def _insert(ops: _Ops, embs: dict, combo: tuple, t: tuple, pos: int, g, sig_inv: dict) -> tuple:
    """gamma in Gamma_{i_pos} acting on (alpha_{i_k}, ..., alpha_{i_1})."""
    k = len(combo) - 1
    alphas = list(t[::-1])  # alphas[l-1] = alpha_{i_l}
    lab = combo[pos]
    e = embs[lab]
    G = ops.G
    if pos >= 1:
        a = alphas[pos - 1]
        x = sig_inv[lab][int(G.tgt[a])]
        sg = e.tilde[(e.act(g, x), g)]
    else:
        a = alphas[0]
        x = sig_inv[lab][int(G.src[a])]
        sg = e.tilde[(e.act(g, x), g)]
    if pos >= 1:
        alphas[pos - 1] = ops.then(alphas[pos - 1], sg)
    if pos < k:
        alphas[pos] = ops.then(ops.inv(sg), alphas[pos])
    return tuple(alphas[::-1])


def partial_composites(alphas: list, positions: list[int], then) -> tuple:
    """rho on a tuple: ``alphas[l-1]`` is alpha_{j_l}, ``positions`` the places of H in J.

    Returns the stored form (newest first) of the composites between
    consecutive places of H; ``then(a, b)`` is a followed by b.
    """
    out = []
    for a, b in zip(positions, positions[1:]):
        m = alphas[a]
        for l in range(a + 1, b):
            m = then(m, alphas[l])
        out.append(m)
    return tuple(out[::-1])


def endpoint(alphas: list, q: int, src, tgt):
    """The object at place q of the chain: t(alpha_{j_q}), or s(alpha_{j_1}) when q = 0."""
    return tgt(alphas[q - 1]) if q >= 1 else src(alphas[0])


def _project(ops: _Ops, embs, sig_inv, cj: list, ci: list, t, p, G):
    if len(cj) == 1:
        return p
    alphas = list(t[::-1])  # alphas[l-1] = alpha_{j_l}
    pos = [cj.index(i) for i in ci]
    if len(ci) == 1:
        obj = endpoint(alphas, pos[0], lambda m: int(G.src[m]), lambda m: int(G.tgt[m]))
        return sig_inv[ci[0]][obj]
    return _tuple_id(partial_composites(alphas, pos, ops.then))


# ---------------------------------------------------------------- F_K


@dataclass
class InducedFunctor:
    atlas: Atlas
    G: GroupoidModel
    bk: GroupoidModel
    obj_map: np.ndarray
    mor_map: np.ndarray
    report: LawReport = field(default_factory=LawReport)


def _last_object(atlas: Atlas, I, x) -> int:
    d = atlas.derived
    G = d["G"]
    if len(I) == 1:
        (lab,) = tuple(I)
        return d["embeddings"][lab].sigma[x]
    return int(G.tgt[d["tuples"][I][x][0]])


def induced_functor(derived: Atlas, G: GroupoidModel | None = None) -> InducedFunctor:
    """F_K: B_K -> G and its checks.

    A morphism (I, J, y, gamma) goes to the partial composite of the tuple y
    from the chart max(I) to max(J), preceded by tilde(gamma_{max I}).
    """
    d = getattr(derived, "derived", None)
    if d is None:
        raise AtlasError("atlas was not produced by derive_atlas")
    G = G or d["G"]
    order = d["order"]
    rank = {lab: k for k, lab in enumerate(order)}
    embs = d["embeddings"]
    ops = _Ops(G)
    bk = build_bk(derived)
    obj_map = np.array([_last_object(derived, I, x) for I, x in bk.objects], dtype=np.int64)
    mor_map = np.zeros(bk.n_mor, dtype=np.int64)
    sig_inv = {lab: {o: x for x, o in e.sigma.items()} for lab, e in embs.items()}
    for n, (I, J, y, gamma) in enumerate(bk.mor_keys):
        cj = sorted(J, key=lambda i: rank[i])
        top_i = max(I, key=lambda i: rank[i])
        p = cj.index(top_i)
        alphas = [] if len(cj) == 1 else list(d["tuples"][J][y][::-1])
        g = dict(gamma)[top_i]
        e = embs[top_i]
        # target of alpha_{j_p} in W_{top_i}
        if p >= 1:
            x = sig_inv[top_i][int(G.tgt[alphas[p - 1]])]
        elif len(cj) > 1:
            x = sig_inv[top_i][int(G.src[alphas[0]])]
        else:
            x = y
        m = e.tilde[(x, g)]
        for l in range(p, len(cj) - 1):
            m = ops.then(m, alphas[l])
        mor_map[n] = m
    F = InducedFunctor(derived, G, bk, obj_map, mor_map)
    _check_functor(F)
    return F


def _check_functor(F: InducedFunctor) -> None:
    bk, G, rep = F.bk, F.G, F.report
    om, mm = F.obj_map, F.mor_map
    bad = np.flatnonzero((G.src[mm] != om[bk.src]) | (G.tgt[mm] != om[bk.tgt]))
    rep.record("ends", len(bad), [f"ends of {bk.mor_keys[k]!r}" for k in bad[:5]], bk.n_mor)
    bad = np.flatnonzero(mm[bk.identity] != G.identity[om])
    rep.record("identities", len(bad), [f"identity at {bk.objects[k]!r}" for k in bad[:5]], bk.n_obj)
    tab = bk.table
    a_list, b_list = [], []
    for y in range(bk.n_obj):
        ins, outs = tab.ins(y), tab.outs(y)
        if len(ins) and len(outs):
            a_list.append(np.repeat(ins, len(outs)))
            b_list.append(np.tile(outs, len(ins)))
    if a_list:
        a, b = np.concatenate(a_list), np.concatenate(b_list)
        ab = tab.lookup(a, b)
        ok = G.tgt[mm[a]] == G.src[mm[b]]
        img = np.full(len(a), -1, dtype=np.int64)
        img[ok] = G.table.lookup(mm[a][ok], mm[b][ok])
        bad = np.flatnonzero(img != mm[ab])
        rep.record("functorial", len(bad), [f"{bk.mor_keys[a[k]]!r} then {bk.mor_keys[b[k]]!r}" for k in bad[:5]], len(a))
    else:
        rep.record("functorial", 0, [], 0)
    # realizations
    bcls = bk.equivalence_classes()
    gcls = G.equivalence_classes()
    gof = np.zeros(G.n_obj, dtype=np.int64)
    for k, c in enumerate(gcls):
        gof[c] = k
    images = [set(gof[om[c]].tolist()) for c in bcls]
    wit = []
    if any(len(s) != 1 for s in images):
        wit.append("a realization point of B_K maps to several points of G")
    hit = [next(iter(s)) for s in images if len(s) == 1]
    if len(set(hit)) != len(hit):
        wit.append("two realization points of B_K have the same image")
    if set(hit) != set(range(len(gcls))):
        wit.append(f"{len(gcls) - len(set(hit))} realization points of G are missed")
    rep.record("realization_bijective", len(wit), wit, len(bcls))
    # stabilizers
    loops_b = bk.src == bk.tgt
    loops_g = G.src == G.tgt
    by_obj_g: dict = {}
    for m in np.flatnonzero(loops_g):
        by_obj_g.setdefault(int(G.src[m]), set()).add(int(m))
    by_obj_b: dict = {}
    for m in np.flatnonzero(loops_b):
        by_obj_b.setdefault(int(bk.src[m]), []).append(int(m))
    wit = []
    for o in range(bk.n_obj):
        imgs = [int(mm[m]) for m in by_obj_b.get(o, [])]
        if len(set(imgs)) != len(imgs) or set(imgs) != by_obj_g.get(int(om[o]), set()):
            wit.append(f"stabilizer at {bk.objects[o]!r} does not map onto the stabilizer in G")
    rep.record("stabilizers", len(wit), wit, bk.n_obj)


# ---------------------------------------------------------------- reordering


def reorder_atlas(derived: Atlas, a: str, b: str, verify: bool = True) -> tuple[Atlas, dict]:
    """Swap the adjacent basic charts a < b; returns the new atlas and S = {I: {x: S_I(x)}}.

    With ``verify`` the new atlas carries ``reorder_report``: S is an atlas
    isomorphism (bijective, order-preserving both ways, equivariant, commutes
    with psi and rho) and extends to an isomorphism of the completions.
    """
    d = getattr(derived, "derived", None)
    if d is None:
        raise AtlasError("atlas was not produced by derive_atlas")
    order = list(d["order"])
    ia, ib = order.index(a), order.index(b)
    if ib != ia + 1:
        raise AtlasError(f"{a} and {b} are not adjacent in the order {order}")
    new_order = order[:ia] + [b, a] + order[ib + 1:]
    G = d["G"]
    embs = list(d["embeddings"].values())
    new = derive_atlas(G, embs, new_order, derived.base, d["f"], name=f"{derived.name}[{b}<{a}]")
    ops = _Ops(G)
    S = {}
    for I in derived.indices:
        if not {a, b} <= I:
            S[I] = {x: x for x in derived.charts[I].points}
            continue
        combo = [i for i in order if i in I]
        p = combo.index(a)
        S[I] = {}
        for x, t in d["tuples"][I].items():
            al = list(t[::-1])  # al[l-1] = alpha_{i_l}
            # alpha_b is al[p], the link from a to b
            ab = al[p]
            out = list(al)
            if p >= 1:
                out[p - 1] = ops.then(al[p - 1], ab)
            out[p] = ops.inv(ab)
            if p + 1 < len(al):
                out[p + 1] = ops.then(ab, al[p + 1])
            S[I][x] = _tuple_id(tuple(out[::-1]))
    if verify:
        from .completion import complete_atlas

        rep = LawReport()
        bad = isomorphism_violations(derived, new, S)
        rep.record("atlas_isomorphism", len(bad), bad, len(derived.indices))
        for name, c in completion_isomorphism_check(complete_atlas(derived), complete_atlas(new), S).checks.items():
            rep.record(f"completion_{name}", c["failures"], c["witnesses"], c["tested"])
        new.reorder_report = rep
    return new, S


def isomorphism_violations(K: Atlas, K2: Atlas, S: dict, base_map: dict | None = None) -> list[str]:
    """Checks that S = {I: point map} is an isomorphism of atlases K -> K2."""
    out = []
    bm = base_map or {y: y for y in K.base.points}
    if set(K.indices) != set(K2.indices):
        return ["index sets differ"]
    G = K.groups
    for I in K.indices:
        c1, c2 = K.charts[I], K2.charts[I]
        s = S[I]
        if sorted(map(str, s.values())) != sorted(map(str, c2.points)) or len(set(s.values())) != len(c1.points):
            out.append(f"S_{index_label(I)} is not a bijection")
            continue
        for p, q in c1.domain.covers():
            if not c2.domain.leq(s[p], s[q]):
                out.append(f"S_{index_label(I)} does not preserve {p} < {q}")
                break
        for p, q in c2.domain.covers():
            inv = {v: k for k, v in s.items()}
            if not c1.domain.leq(inv[p], inv[q]):
                out.append(f"S_{index_label(I)}^-1 does not preserve {p} < {q}")
                break
        if any(c2.psi[s[x]] != bm[c1.psi[x]] for x in c1.points):
            out.append(f"S_{index_label(I)} does not commute with the footprint maps")
        for g in G.elements(I):
            if any(s[c1.act(g, x)] != c2.act(g, s[x]) for x in c1.points):
                out.append(f"S_{index_label(I)} is not equivariant at {g}")
                break
    for (I, J), r in K.coverings.items():
        r2 = K2.coverings[(I, J)]
        if any(S[I][r[x]] != r2[S[J][x]] for x in K.charts[J].points):
            out.append(f"S does not intertwine rho_{index_label(I)},{index_label(J)}")
    return out[:10]


def completion_isomorphism_check(gk: GroupoidModel, gk2: GroupoidModel, S: dict) -> LawReport:
    """(I, J, z, gamma) -> (I, J, S(z), gamma) is an isomorphism of completions."""
    rep = LawReport()
    om = np.array([gk2.obj_index[(I, S[I][x])] for I, x in gk.objects], dtype=np.int64)
    mm = np.array([gk2.mor_index[(I, J, S[I | J][z], g)] for I, J, z, g in gk.mor_keys], dtype=np.int64)
    ok = len(set(om.tolist())) == gk2.n_obj == gk.n_obj and len(set(mm.tolist())) == gk2.n_mor == gk.n_mor
    rep.record("bijective", 0 if ok else 1, [] if ok else ["object or morphism map is not bijective"], 1)
    bad = np.flatnonzero((gk2.src[mm] != om[gk.src]) | (gk2.tgt[mm] != om[gk.tgt]))
    rep.record("ends", len(bad), [f"ends of {gk.mor_keys[k]!r}" for k in bad[:5]], gk.n_mor)
    tab = gk.table
    a_list, b_list = [], []
    for y in range(gk.n_obj):
        ins, outs = tab.ins(y), tab.outs(y)
        if len(ins) and len(outs):
            a_list.append(np.repeat(ins, len(outs)))
            b_list.append(np.tile(outs, len(ins)))
    a, b = np.concatenate(a_list), np.concatenate(b_list)
    ab = tab.lookup(a, b)
    img = gk2.table.lookup(mm[a], mm[b])
    bad = np.flatnonzero(img != mm[ab])
    rep.record("functorial", len(bad), [f"{gk.mor_keys[a[k]]!r} then {gk.mor_keys[b[k]]!r}" for k in bad[:5]], len(a))
    return rep


def compose_maps(S1: dict, S2: dict) -> dict:
    return {I: {x: S2[I][y] for x, y in m.items()} for I, m in S1.items()}


def find_isomorphism(K: Atlas, K2: Atlas, base_map: dict | None = None, limit: int = 100_000) -> dict | None:
    """Exhaustive search for an atlas isomorphism K -> K2 on tiny atlases.

    Each S_I is equivariant, so it is fixed by the images of one point per
    Gamma_I-orbit; charts are visited by increasing size and checked against
    the coverings into smaller charts as soon as both ends are fixed.
    """
    bm = base_map or {y: y for y in K.base.points}
    if set(K.indices) != set(K2.indices):
        return None
    G = K.groups
    order = sorted(K.indices, key=lambda I: (len(I), index_key(I)))
    cands = {}
    for I in order:
        c1, c2 = K.charts[I], K2.charts[I]
        els = G.elements(I)
        orbits, seen = [], set()
        for x in c1.points:
            if x in seen:
                continue
            orb = {c1.act(g, x) for g in els}
            seen |= orb
            orbits.append(x)
        stab = {x: {g for g in els if c1.act(g, x) == x} for x in c1.points}
        stab2 = {y: {g for g in els if c2.act(g, y) == y} for y in c2.points}
        options = []
        for reps in product(*[[y for y in c2.points if stab2[y] == stab[x] and c2.psi[y] == bm[c1.psi[x]]] for x in orbits]):
            s = {}
            good = True
            for x, y in zip(orbits, reps):
                for g in els:
                    u, v = c1.act(g, x), c2.act(g, y)
                    if s.get(u, v) != v:
                        good = False
                        break
                    s[u] = v
                if not good:
                    break
            if good and len(s) == len(c1.points) and len(set(s.values())) == len(c2.points):
                options.append(s)
            if len(options) > limit:
                break
        cands[I] = options
    chosen: dict = {}

    def go(k: int) -> bool:
        if k == len(order):
            return not isomorphism_violations(K, K2, chosen, bm)
        J = order[k]
        for s in cands[J]:
            if all(chosen[I][K.coverings[(I, J)][x]] == K2.coverings[(I, J)][s[x]] for I in chosen if I < J for x in K.charts[J].points):
                chosen[J] = s
                if go(k + 1):
                    return True
                del chosen[J]
        return False

    return dict(chosen) if go(0) else None


def weighting_stability(G: GroupoidModel, derived: Atlas) -> list[str]:
    """Lambda_G of G against Lambda_G of the derived atlas's completion, point by point of Y."""
    from .completion import complete_atlas
    from .invariants import orbifold_weighting_by_base

    a = orbifold_weighting_by_base(G)
    b = orbifold_weighting_by_base(complete_atlas(derived))
    return [f"over {y}: {a.get(y)} vs {b.get(y)}" for y in sorted(set(a) | set(b), key=str) if a.get(y) != b.get(y)]
