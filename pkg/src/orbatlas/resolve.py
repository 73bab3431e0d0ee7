"""Cover reductions, the resolution groupoid V_K, its Hausdorff closure V^H,
the weighting Lambda_V and the wnb axioms.

All sets of morphisms are boolean masks over the morphisms of the completion
G_K, so V_K and V^H are submodels of G_K restricted to the reduced domains.
"""

from __future__ import annotations

import os
import random
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .atlas import Atlas, index_key, index_label
from .category import GroupoidModel, LawReport, check_category_laws
from .completion import complete_atlas
from .finspace import FiniteSpace, SpaceMap

DEFAULT_MAX_SEARCH = 200_000


class NoReductionFound(RuntimeError):
    def __init__(self, message: str, constraint: str = ""):
        super().__init__(message)
        self.constraint = constraint


class ResolutionError(RuntimeError):
    pass


@dataclass
class Reduction:
    """Open sets Q_I of the base, one per index (possibly empty)."""

    atlas: Atlas
    Q: dict
    log: dict = field(default_factory=dict)

    def V(self, I) -> frozenset:
        ch = self.atlas.charts[frozenset(I)]
        q = self.Q[frozenset(I)]
        return frozenset(x for x in ch.points if ch.psi[x] in q)

    def V_tilde(self, I, J) -> frozenset:
        """V_J over Q_I, for I a subset of J."""
        I, J = frozenset(I), frozenset(J)
        ch = self.atlas.charts[J]
        q = self.Q[I] & self.Q[J]
        return frozenset(x for x in ch.points if ch.psi[x] in q)

    def violations(self) -> list[str]:
        return reduction_violations(self.atlas, self.Q)

    def to_dict(self) -> dict:
        return {index_label(I): sorted(map(str, self.Q[I])) for I in self.atlas.indices}


def reduction_violations(atlas: Atlas, Q: dict) -> list[str]:
    Y = atlas.base
    out = []
    for I in atlas.indices:
        q = Q.get(I, frozenset())
        if not Y.is_open(q):
            out.append(f"Q_{index_label(I)} is not open")
        bad = Y.closure(q) - atlas.footprint(I)
        if bad:
            out.append(f"closure of Q_{index_label(I)} leaves F_{index_label(I)} at {sorted(map(str, bad))[:3]}")
    covered = frozenset().union(*(Q.get(I, frozenset()) for I in atlas.indices))
    missing = set(Y.points) - covered
    if missing:
        out.append(f"points not covered: {sorted(map(str, missing))[:5]}")
    idx = atlas.indices
    for a in range(len(idx)):
        for b in range(a + 1, len(idx)):
            I, J = idx[a], idx[b]
            if I <= J or J <= I:
                continue
            meet = Y.closure(Q.get(I, ())) & Y.closure(Q.get(J, ()))
            if meet:
                out.append(f"closures of Q_{index_label(I)} and Q_{index_label(J)} meet at {sorted(map(str, meet))[:3]}")
    return out


def _max_search() -> int:
    raw = os.environ.get("ORBATLAS_MAX_SEARCH")
    return int(raw) if raw else DEFAULT_MAX_SEARCH


def cover_reduction(atlas: Atlas, seed: int | None = None, max_nodes: int | None = None) -> Reduction:
    """Backtracking search for a cover reduction.

    Indices are visited by decreasing size.  Q_I is seeded with F_I minus the
    closures of the chosen Q_J for incomparable J, and the candidates are the
    iterated shrinks of the seed, largest first, then the empty set.
    """
    Y = atlas.base
    limit = max_nodes if max_nodes is not None else _max_search()
    order = sorted(atlas.indices, key=lambda I: (-len(I), index_key(I)))
    if seed is not None:
        rng = random.Random(seed)
        groups: dict = {}
        for I in order:
            groups.setdefault(len(I), []).append(I)
        order = []
        for size in sorted(groups, reverse=True):
            g = groups[size]
            rng.shuffle(g)
            order.extend(g)
    room = {I: Y.shrink(atlas.footprint(I)) for I in order}
    # points still coverable by the indices from position k on
    reach = [frozenset()] * (len(order) + 1)
    for k in range(len(order) - 1, -1, -1):
        reach[k] = reach[k + 1] | room[order[k]]
    unreachable = set(Y.points) - reach[0]
    if unreachable:
        p = sorted(map(str, unreachable))[0]
        raise NoReductionFound("no shrunken footprint covers some point", f"point {p} lies in no shrink(F_I)")

    state = {"nodes": 0, "worst": None}
    chosen: dict = {}

    def note(msg: str, size: int) -> None:
        if state["worst"] is None or size < state["worst"][1]:
            state["worst"] = (msg, size)

    def candidates(I):
        seed_set = set(atlas.footprint(I))
        for J, q in chosen.items():
            if not (I <= J or J <= I):
                seed_set -= Y.closure(q)
        cur = frozenset(seed_set)
        seen = []
        while True:
            nxt = Y.shrink(cur)
            if nxt in seen or nxt == cur and seen:
                break
            seen.append(nxt)
            if not nxt:
                break
            cur = nxt
        for c in seen:
            if c:
                yield c
        yield frozenset()

    def search(k: int, covered: frozenset) -> bool:
        state["nodes"] += 1
        if state["nodes"] > limit:
            raise NoReductionFound(f"search exceeded {limit} nodes", state["worst"][0] if state["worst"] else "")
        if k == len(order):
            missing = set(Y.points) - covered
            if missing:
                note(f"points {sorted(map(str, missing))[:3]} uncovered", len(missing))
                return False
            return True
        I = order[k]
        for cand in candidates(I):
            cl = Y.closure(cand)
            clash = [J for J, q in chosen.items() if not (I <= J or J <= I) and cl & Y.closure(q)]
            if clash:
                note(f"closure of Q_{index_label(I)} meets Q_{index_label(clash[0])}", 1)
                continue
            cov = covered | cand
            left = set(Y.points) - cov - reach[k + 1]
            if left:
                note(f"points {sorted(map(str, left))[:3]} cannot be covered after Q_{index_label(I)}", len(left))
                continue
            chosen[I] = cand
            if search(k + 1, cov):
                return True
            del chosen[I]
        return False

    if not search(0, frozenset()):
        msg = state["worst"][0] if state["worst"] else "no candidate"
        raise NoReductionFound("search space exhausted", msg)
    Q = {I: chosen.get(I, frozenset()) for I in atlas.indices}
    red = Reduction(atlas, Q, {"nodes": state["nodes"], "order": [index_label(I) for I in order]})
    bad = red.violations()
    if bad:
        raise NoReductionFound("search returned an invalid reduction", bad[0])
    return red


# ---------------------------------------------------------------- V_K and V^H


def _in_q(red: Reduction) -> dict:
    ix = red.atlas.indexed
    out = {}
    for I in red.atlas.indices:
        arr = np.zeros(len(red.atlas.base.points), dtype=bool)
        for y in red.Q[I]:
            arr[ix.ypos[y]] = True
        out[ix.mask(I)] = arr
    return out


def _object_mask(gk: GroupoidModel, inq: dict) -> np.ndarray:
    ix = gk.atlas.indexed
    return np.concatenate([inq[m][ix.psi[m]] for m in ix.index_masks])


def _forward_mask(gk: GroupoidModel, inq: dict, frontier: bool) -> np.ndarray:
    """Morphisms I -> J with I a subset of J, from the defining formula.

    With ``frontier`` set, the extra morphisms over the frontiers of the
    V~_FJ inside V_J are returned instead.
    """
    ix = gk.atlas.indexed
    lay = gk.layout
    mask = np.zeros(gk.n_mor, dtype=bool)
    for k, (mi, mj) in enumerate(lay.blocks):
        if mi | mj != mj:
            continue
        lo, hi = lay.offsets[k], lay.offsets[k + 1]
        z, g = lay.z[lo:hi], lay.g[lo:hi]
        y = ix.psi[mj][z]
        base = inq[mj][y] & inq[mi][y]
        keep = np.zeros(hi - lo, dtype=bool)
        if not frontier:
            for mk in ix.index_masks:
                if mk & mi == mk:
                    keep |= inq[mk][y] & (ix.project(mk)[g] == ix.identity)
        else:
            dom = gk.atlas.charts[ix.index_of(mj)].domain
            pts = ix.points[mj]
            vj = inq[mj][ix.psi[mj]]
            for mf in ix.index_masks:
                if mf & mi != mf or mf == mi:
                    continue
                vf = vj & inq[mf][ix.psi[mj]]
                a = [pts[t] for t in np.flatnonzero(vf)]
                cl = dom.closure(a)
                fr = np.array([(p in cl) for p in pts], dtype=bool) & vj & ~vf
                keep |= fr[z] & (ix.project(mf)[g] == ix.identity)
        mask[lo:hi] = base & keep
    return mask


def _with_inverses(gk: GroupoidModel, mask: np.ndarray) -> np.ndarray:
    out = mask.copy()
    out[gk.inverse[np.flatnonzero(mask)]] = True
    return out


def build_resolution(atlas: Atlas, red: Reduction, gk: GroupoidModel | None = None) -> GroupoidModel:
    gk = gk if gk is not None else complete_atlas(atlas)
    inq = _in_q(red)
    objs = _object_mask(gk, inq)
    mor = _with_inverses(gk, _forward_mask(gk, inq, frontier=False))
    V = gk.restrict(objs, mor, "groupoid", f"V({atlas.name})")
    V.parent = gk
    V.parent_mask = mor
    V.parent_objects = objs
    V.reduction = red
    V.atlas = atlas
    return V


def hausdorff_close(V: GroupoidModel, atlas: Atlas, red: Reduction) -> GroupoidModel:
    gk = V.parent
    inq = _in_q(red)
    extra = _with_inverses(gk, _forward_mask(gk, inq, frontier=True))
    mor = V.parent_mask | extra
    H = gk.restrict(V.parent_objects, mor, "groupoid", f"VH({atlas.name})")
    H.parent = gk
    H.parent_mask = mor
    H.parent_objects = V.parent_objects
    H.added = extra & ~V.parent_mask
    H.reduction = red
    H.atlas = atlas
    H.base_model = V
    return H


def closure_in_morphisms(V: GroupoidModel) -> np.ndarray:
    """Topological closure of Mor(V) inside the morphisms of G_K between V-objects.

    A block W_{I u J} x Gamma_{I n J} carries the product topology, so the
    closure is taken slice by slice over each group element.
    """
    gk = V.parent
    ix = gk.atlas.indexed
    lay = gk.layout
    objs = V.parent_objects
    out = np.zeros(gk.n_mor, dtype=bool)
    for k, (mi, mj) in enumerate(lay.blocks):
        lo, hi = lay.offsets[k], lay.offsets[k + 1]
        sel = V.parent_mask[lo:hi]
        if not sel.any():
            continue
        u = mi | mj
        dom = gk.atlas.charts[ix.index_of(u)].domain
        pts = ix.points[u]
        pos = ix.point_pos[u]
        z, g = lay.z[lo:hi], lay.g[lo:hi]
        for code in np.unique(g[sel]):
            hit = sel & (g == code)
            cl = dom.closure(pts[t] for t in z[hit])
            zc = np.array([pos[p] for p in cl], dtype=np.int64)
            ids = lay.ids(k, zc, np.full(len(zc), code))
            out[ids] = True
    out &= objs[gk.src] & objs[gk.tgt]
    return out


def resolution_report(V: GroupoidModel, H: GroupoidModel | None = None) -> LawReport:
    """Group laws, nonsingularity, and for V^H agreement with the morphism closure."""
    rep = LawReport()
    check_category_laws(V, rep)
    _nonsingular(V, rep)
    if H is not None:
        sub = LawReport()
        check_category_laws(H, sub)
        for name, c in sub.checks.items():
            rep.checks[f"closed_{name}"] = c
        _nonsingular(H, rep, "closed_nonsingular")
        expect = closure_in_morphisms(V)
        diff = np.flatnonzero(expect != H.parent_mask)
        keys = H.parent.mor_keys
        wit = [f"{'missing' if expect[m] else 'extra'} morphism {keys[m]!r}" for m in diff[:5]]
        rep.record("frontier_closure", len(diff), wit, H.parent.n_mor)
        gk = H.parent
        same = gk.obj_psi[gk.src[H.added]] == gk.obj_psi[gk.tgt[H.added]]
        rep.record("added_over_same_point", int((~same).sum()), [], int(H.added.sum()))
    return rep


def _nonsingular(model: GroupoidModel, rep: LawReport, name: str = "nonsingular") -> None:
    pairs = model.src * model.n_obj + model.tgt
    u, c = np.unique(pairs, return_counts=True)
    bad = u[c > 1]
    wit = [f"{c[u == p][0]} morphisms from {model.objects[p // model.n_obj]!r} to {model.objects[p % model.n_obj]!r}" for p in bad[:5]]
    rep.record(name, len(bad), wit, len(u))


# ---------------------------------------------------------------- weighting


def _point_name(block) -> str:
    I, x = min(block, key=lambda o: (len(o[0]), index_key(o[0]), str(o[1])))
    return f"{index_label(I)}:{x}"


@dataclass
class Weighting:
    space: FiniteSpace
    value: dict
    branches: dict
    base_point: dict
    names: dict
    branch_locus: frozenset = frozenset()
    defects: list = field(default_factory=list)
    fibers: dict = field(default_factory=dict)

    def values(self) -> set:
        return set(self.value.values())

    def to_dict(self) -> dict:
        rows = []
        for p in sorted(self.space.points, key=lambda q: self.names[q]):
            v = self.value[p]
            rows.append({
                "point": self.names[p],
                "base": str(self.base_point[p]),
                "value": [v.numerator, v.denominator],
                "branches": [{"chart": c, "weight": [w.numerator, w.denominator]} for c, w in self.branches[p]],
            })
        return {
            "points": rows,
            "branch_locus": sorted(self.names[p] for p in self.branch_locus),
            "defects": self.defects,
        }


def realization_map(H: GroupoidModel):
    """|V| -> |V^H|, together with both realizations."""
    V = H.base_model
    rv, pv = V.realize()
    rh, ph = H.realize()
    assign = {b: ph(next(iter(b))) for b in rv.points}
    return rv, pv, rh, ph, SpaceMap(rv, rh, assign)


def compute_weighting(H: GroupoidModel, atlas: Atlas | None = None) -> Weighting:
    atlas = atlas or H.atlas
    ix = atlas.indexed
    space, proj = H.realize()
    rv, pv, _, _, up = realization_map(H)
    order = {I: atlas.group_order(I) for I in atlas.indices}
    value, branches, base, names, fibers = {}, {}, {}, {}, {}
    defects = []
    images = {I: set() for I in atlas.indices}
    for p in space.points:
        for I, x in p:
            images[I].add(p)
    closures = {I: space.closure(images[I]) for I in atlas.indices}
    for p in space.points:
        names[p] = _point_name(p)
        ys = {atlas.charts[I].psi[x] for I, x in p}
        if len(ys) != 1:
            defects.append(f"{names[p]} lies over several base points")
        base[p] = next(iter(ys))
        by_chart: dict = {}
        for I, x in p:
            by_chart.setdefault(I, []).append(x)
        vals = {I: Fraction(len(xs), order[I]) for I, xs in by_chart.items()}
        if len(set(vals.values())) != 1:
            defects.append(f"{names[p]}: n/|Gamma_J| differs between charts {sorted(index_label(I) for I in vals)}")
        J0 = min(vals, key=lambda I: (len(I), index_key(I)))
        value[p] = vals[J0]
        branches[p] = [(index_label(I), Fraction(1, order[I])) for I in sorted(by_chart, key=index_key) for _ in by_chart[I]]
        fibers[p] = {}
        for J, xs in by_chart.items():
            cands = [I for I in atlas.indices if I <= J and p in closures[I]]
            mins = [I for I in cands if not any(K < I for K in cands)]
            if len(mins) != 1:
                defects.append(f"{names[p]}: I_y in chart {index_label(J)} is not unique ({[index_label(I) for I in mins]})")
                continue
            Iy = mins[0]
            fibers[p][index_label(J)] = index_label(Iy)
            mj = ix.mask(J)
            rest = mj & ~ix.mask(Iy)
            codes = ix.elements(rest)
            x0 = ix.point_pos[mj][xs[0]]
            orbit = ix.act[mj][codes, x0]
            got = {ix.point_pos[mj][x] for x in xs}
            if len(set(orbit.tolist())) != len(codes) or set(orbit.tolist()) != got:
                defects.append(f"{names[p]}: fiber in chart {index_label(J)} is not a free Gamma_{index_label(J - Iy)}-orbit")
    counts: dict = {}
    for b in rv.points:
        counts[up(b)] = counts.get(up(b), 0) + 1
    locus = frozenset(p for p, c in counts.items() if c > 1)
    if any(v <= 0 for v in value.values()):
        defects.append("nonpositive weight")
    return Weighting(space, value, branches, base, names, locus, defects, fibers)


def weights_by_base(w: Weighting) -> dict:
    """Base point -> sorted list of the weights of the points over it."""
    out: dict = {}
    for p, v in w.value.items():
        out.setdefault(w.base_point[p], []).append(v)
    return {y: sorted(vs) for y, vs in out.items()}


def wnb_check(H: GroupoidModel, w: Weighting) -> LawReport:
    """Covering, Local Regularity and Weighting at every point of |V^H|.

    At p the neighbourhood is N = up(p).  The local branches come from the
    smallest chart J with psi(p) in Q_J: they are the order components of the
    V_J-objects lying over N, each weighted 1/|Gamma_J|.
    """
    atlas = H.atlas
    red = H.reduction
    rv, pv, rh, ph, up = realization_map(H)
    rep = LawReport()
    cov_bad, reg_bad, wt_bad = [], [], []
    tested = 0
    objs_by_chart: dict = {}
    for o in H.objects:
        objs_by_chart.setdefault(o[0], []).append(o)
    for p in rh.points:
        tested += 1
        N = rh.up(p)
        y = w.base_point[p]
        Js = [J for J in atlas.indices if y in red.Q[J]]
        J = min(Js, key=len)
        if any(not J <= K for K in Js):
            cov_bad.append(f"{w.names[p]}: charts over the point are not nested")
            continue
        weight = Fraction(1, atlas.group_order(J))
        dom = H.object_space
        over = [o for o in objs_by_chart.get(J, []) if ph(o) in N]
        comps = dom.components(over)
        pre_n = {b for b in rv.points if up(b) in N}
        union = set()
        sums: dict = {q: Fraction(0) for q in N}
        for U in comps:
            union |= {pv(o) for o in U}
            img = {}
            for o in U:
                img.setdefault(ph(o), []).append(o)
            if any(len(v) > 1 for v in img.values()):
                reg_bad.append(f"{w.names[p]}: a branch in chart {index_label(J)} is not injective")
                continue
            for a in U:
                for b in U:
                    if dom.leq(a, b) != rh.leq(ph(a), ph(b)):
                        reg_bad.append(f"{w.names[p]}: branch order differs at {a!r}, {b!r}")
                        break
            imset = frozenset(img)
            if rh.closure(imset) & N != imset:
                reg_bad.append(f"{w.names[p]}: branch image is not closed in N")
            for q in imset:
                sums[q] += weight
        if union != pre_n:
            cov_bad.append(f"{w.names[p]}: {len(pre_n - union)} points of |V| over N are not covered by branches")
        for q in N:
            if sums[q] != w.value[q]:
                wt_bad.append(f"{w.names[p]}: weight at {w.names[q]} is {w.value[q]}, branches give {sums[q]}")
    rep.record("covering", len(cov_bad), cov_bad, tested)
    rep.record("local_regularity", len(reg_bad), reg_bad, tested)
    rep.record("weighting", len(wt_bad), wt_bad, tested)
    rep.record("weighting_defects", len(w.defects), w.defects, tested)
    return rep


def resolve(atlas: Atlas, seed: int | None = None, gk: GroupoidModel | None = None) -> dict:
    """Full resolution pipeline; returns the intermediate objects."""
    red = cover_reduction(atlas, seed=seed)
    V = build_resolution(atlas, red, gk)
    H = hausdorff_close(V, atlas, red)
    w = compute_weighting(H, atlas)
    return {"reduction": red, "V": V, "VH": H, "weighting": w}
