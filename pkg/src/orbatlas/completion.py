"""The groupoid completion G_K of B_K and the point-orbifold example.

Morphisms from W_I to W_J are pairs (z, gamma) with z in W_{I u J} and gamma in
Gamma_{I n J}, keyed as (I, J, z, gamma).
"""

from __future__ import annotations

import numpy as np

from .atlas import Atlas, Chart, index_label
from .category import (
    GroupoidModel,
    InvalidAtlas,
    LawReport,
    MorphismLayout,
    NonComposable,
    build_bk,
    check_category_laws,
)
from .finspace import FiniteSpace
from .groups import FiniteGroup, GroupError, ProductGroups, project_tuple


def complete_atlas(atlas: Atlas) -> GroupoidModel:
    ix = atlas.indexed
    present = set(ix.index_masks)
    blocks = [(mi, mj) for mi in ix.index_masks for mj in ix.index_masks if (mi | mj) in present]
    lay = MorphismLayout(ix, blocks)
    src, tgt = lay.ends()
    solve_log = {"solves": 0, "failures": []}

    def compose_ids(a, b):
        out = np.full(len(a), -1, dtype=np.int64)
        key = lay.block[a] * len(blocks) + lay.block[b]
        for u in np.unique(key):
            sel = np.flatnonzero(key == u)
            k1, k2 = divmod(int(u), len(blocks))
            mi, mj = blocks[k1]
            mk = blocks[k2][1]
            res, bad = _solve_block(ix, lay, mi, mj, mk, lay.z[a[sel]], lay.g[a[sel]], lay.z[b[sel]], lay.g[b[sel]])
            solve_log["solves"] += len(sel)
            if bad is not None and len(bad):
                for j in bad[:5]:
                    solve_log["failures"].append((lay_key(lay, a[sel][j]), lay_key(lay, b[sel][j])))
            out[sel] = res
        return out

    inverse = _inverse_ids(lay)
    model = GroupoidModel(lay.objects(), lay.object_space(), lay.keys(), src, tgt, lay.identities(), compose_ids, inverse, "groupoid", f"G({atlas.name})")
    model.atlas = atlas
    model.layout = lay
    model.solve_log = solve_log
    model.obj_psi = np.concatenate([ix.psi[m] for m in ix.index_masks]) if ix.index_masks else np.zeros(0, int)
    return model


def lay_key(lay: MorphismLayout, m: int) -> tuple:
    k = int(lay.block[m])
    mi, mj = lay.blocks[k]
    ix = lay.ix
    return (index_label(ix.index_of(mi)), index_label(ix.index_of(mj)), ix.points[mi | mj][lay.z[m]], ix.decode(int(lay.g[m]), mi & mj))


def _solve_block(ix, lay, mi, mj, mk, z, gamma, w, delta):
    """Vectorized (v, alpha) solve for pairs I->J, J->K; returns (ids, indices of failed solves)."""
    U = mi | mj | mk
    n = len(z)
    if U not in ix.points:
        return np.full(n, -1, dtype=np.int64), np.arange(n)
    t = mi & mj & mk
    g_in = ix.project(t)[gamma]
    g_rest = ix.mul[gamma, ix.inv[g_in]]
    d_in = ix.project(t)[delta]
    uij, ujk, uik = mi | mj, mj | mk, mi | mk
    b_pt = ix.act[ujk][ix.inv[g_rest], w]
    rjk = ix.rho[(ujk, U)]
    if uij == U:
        pre = np.arange(len(ix.points[U]))[:, None]
    else:
        pre = ix.preimages(uij, U)
    count = np.zeros(n, dtype=np.int64)
    v_sol = np.full(n, -1, dtype=np.int64)
    a_sol = np.full(n, ix.identity, dtype=np.int64)
    g_rest_inv = ix.inv[g_rest]
    for alpha in ix.elements((mi & mk) & ~mj):
        a_pt = ix.act[uij][ix.mul[ix.mul[g_rest_inv, alpha], delta], z]
        cand = pre[a_pt]
        ok = (cand >= 0) & (rjk[np.maximum(cand, 0)] == b_pt[:, None])
        hits = ok.sum(axis=1)
        count += hits
        rows = np.flatnonzero(hits > 0)
        if len(rows):
            cols = ok[rows].argmax(axis=1)
            v_sol[rows] = cand[rows, cols]
            a_sol[rows] = alpha
    good = count == 1
    out = np.full(n, -1, dtype=np.int64)
    if good.any():
        zp = ix.rho[(uik, U)][v_sol[good]]
        lab = ix.mul[a_sol[good], ix.mul[d_in[good], g_in[good]]]
        out[good] = lay.ids(lay.block_pos[(mi, mk)], zp, lab)
    bad = np.flatnonzero(~good)
    return out, (bad if len(bad) else None)


def _inverse_ids(lay: MorphismLayout) -> np.ndarray:
    ix = lay.ix
    out = np.zeros(lay.n_mor, dtype=np.int64)
    for k, (mi, mj) in enumerate(lay.blocks):
        lo, hi = lay.offsets[k], lay.offsets[k + 1]
        z, g = lay.z[lo:hi], lay.g[lo:hi]
        gi = ix.inv[g]
        out[lo:hi] = lay.ids(lay.block_pos[(mj, mi)], ix.act[mi | mj][gi, z], gi)
    return out


# ---------------------------------------------------------------- key-level operations


def _preimage(atlas: Atlas, sub: frozenset, sup: frozenset, x) -> list:
    cache = atlas.__dict__.setdefault("_preimage_cache", {})
    key = (sub, sup)
    if key not in cache:
        inv: dict = {}
        for v, u in atlas.rho(sub, sup).items():
            inv.setdefault(u, []).append(v)
        cache[key] = inv
    return cache[key].get(x, [])


def gk_source(atlas: Atlas, m: tuple) -> tuple:
    I, J, z, gamma = m
    I, J = frozenset(I), frozenset(J)
    x = atlas.rho(I, I | J)[z]
    return (I, atlas.charts[I].act(atlas.groups.inv(gamma), x))


def gk_target(atlas: Atlas, m: tuple) -> tuple:
    I, J, z, _ = m
    J = frozenset(J)
    return (J, atlas.rho(J, frozenset(I) | J)[z])


def invert_gk(atlas: Atlas, m: tuple) -> tuple:
    """(z, gamma): W_I -> W_J  becomes  (gamma^-1 z, gamma^-1): W_J -> W_I."""
    I, J, z, gamma = m
    I, J = frozenset(I), frozenset(J)
    gi = atlas.groups.inv(gamma)
    return (J, I, atlas.charts[I | J].act(gi, z), gi)


def compose_gk(atlas: Atlas, m1: tuple, m2: tuple, trace: list | None = None) -> tuple:
    """Composite of (z, gamma): I -> J and (w, delta): J -> K by the unique (v, alpha) lift.

    With ``trace`` given, appends the intermediate data of the solve.
    """
    I, J, z, gamma = m1
    J2, K, w, delta = m2
    I, J, J2, K = map(frozenset, (I, J, J2, K))
    if J != J2 or gk_target(atlas, m1) != gk_source(atlas, m2):
        raise NonComposable("target of the first morphism is not the source of the second")
    G = atlas.groups
    U = I | J | K
    if not atlas.is_index(U):
        raise InvalidAtlas(f"{index_label(U)} is not an index although the morphisms compose")
    t = I & J & K
    g_core = project_tuple(gamma, t)
    g_in = G.extend(g_core, I & J)
    g_rest = G.mul(gamma, G.inv(g_in))
    d_in = project_tuple(delta, t)
    b_pt = atlas.charts[J | K].act(G.inv(g_rest), w)
    rjk = atlas.rho(J | K, U)
    sols = []
    for alpha in G.elements((I & K) - J):
        a_pt = atlas.charts[I | J].act(G.mul_all(G.inv(g_rest), alpha, delta), z)
        for v in _preimage(atlas, I | J, U, a_pt):
            if rjk[v] == b_pt:
                sols.append((v, alpha))
    if len(sols) != 1:
        raise InvalidAtlas(f"the lift for {m1!r} then {m2!r} has {len(sols)} solutions instead of one")
    v, alpha = sols[0]
    zp = atlas.rho(I | K, U)[v]
    lab = G.extend(G.mul_all(alpha, d_in, g_core), I & K)
    if trace is not None:
        trace.append({"gamma_IJK": g_in, "gamma_IJ_minus_K": g_rest, "alpha": alpha, "v": v, "result": (I, K, zp, lab)})
    out = (I, K, zp, lab)
    if gk_source(atlas, out) != gk_source(atlas, m1) or gk_target(atlas, out) != gk_target(atlas, m2):
        raise InvalidAtlas(f"composite {out!r} has the wrong ends")
    return out


def gk_identity(atlas: Atlas, obj: tuple) -> tuple:
    I, x = obj
    I = frozenset(I)
    return (I, I, x, atlas.groups.identity(I))


# ---------------------------------------------------------------- verification


def verify_groupoid(model: GroupoidModel, report: LawReport | None = None) -> LawReport:
    """Exhaustive law checks, plus the atlas-level checks when the model comes from an atlas."""
    rep = check_category_laws(model, report)
    atlas = getattr(model, "atlas", None)
    if atlas is None:
        return rep
    log = getattr(model, "solve_log", None)
    if log is not None:
        rep.record("unique_lift", len(log["failures"]), [f"{a!r} then {b!r}" for a, b in log["failures"]], log["solves"])
    _check_star(model, rep)
    _check_stabilizers(model, rep)
    _check_orientation(model, rep)
    return rep


def _pair_counts(model: GroupoidModel) -> dict:
    pairs = model.src * model.n_obj + model.tgt
    u, c = np.unique(pairs, return_counts=True)
    return dict(zip(u.tolist(), c.tolist()))


def _check_star(model: GroupoidModel, rep: LawReport) -> None:
    """Mor(x, y) is nonempty iff x and y have the same footprint image."""
    psi = model.obj_psi
    counts = _pair_counts(model)
    fails, wit = 0, []
    for p in counts:
        a, b = divmod(p, model.n_obj)
        if psi[a] != psi[b]:
            fails += 1
            if len(wit) < 5:
                wit.append(f"morphism between {model.objects[a]!r} and {model.objects[b]!r} over different points")
    by_fiber: dict = {}
    for k, y in enumerate(psi.tolist()):
        by_fiber.setdefault(y, []).append(k)
    tested = 0
    for objs in by_fiber.values():
        for a in objs:
            for b in objs:
                tested += 1
                if a * model.n_obj + b not in counts:
                    fails += 1
                    if len(wit) < 5:
                        wit.append(f"no morphism from {model.objects[a]!r} to {model.objects[b]!r}")
    rep.record("condition_star", fails, wit, tested)


def _check_stabilizers(model: GroupoidModel, rep: LawReport) -> None:
    """Mor(x, x) is the stabilizer of x as a group, and every nonempty Mor(x, y) has that size."""
    lay = model.layout
    ix = lay.ix
    fails, wit, tested = 0, [], 0
    loops = np.flatnonzero(model.src == model.tgt)
    by_obj: dict = {}
    for m in loops.tolist():
        by_obj.setdefault(int(model.src[m]), []).append(m)
    stab_size = np.zeros(model.n_obj, dtype=np.int64)
    for mask in ix.index_masks:
        off = lay.obj_off[mask]
        els = ix.elements(mask)
        act = ix.act[mask]
        for x in range(len(ix.points[mask])):
            o = off + x
            stab = set(els[act[els, x] == x].tolist())
            stab_size[o] = len(stab)
            ms = by_obj.get(o, [])
            labels = [int(lay.g[m]) for m in ms]
            tested += 1
            ok = len(ms) == len(stab) and set(labels) == stab and all(lay.block[m] == lay.block_pos[(mask, mask)] for m in ms)
            if ok and ms:
                arr = np.array(ms)
                A = np.repeat(arr, len(arr))
                B = np.tile(arr, len(arr))
                C = model.table.lookup(A, B)
                ok = bool(np.all(lay.g[C] == ix.mul[lay.g[B], lay.g[A]]))
            if not ok:
                fails += 1
                if len(wit) < 5:
                    wit.append(f"automorphisms of {model.objects[o]!r} do not match its stabilizer of order {len(stab)}")
    for p, c in _pair_counts(model).items():
        a, _ = divmod(p, model.n_obj)
        tested += 1
        if c != stab_size[a]:
            fails += 1
            if len(wit) < 5:
                wit.append(f"{c} morphisms leave {model.objects[a]!r} towards one object, stabilizer has order {stab_size[a]}")
    rep.record("stabilizer", fails, wit, tested)


def _check_orientation(model: GroupoidModel, rep: LawReport) -> None:
    atlas = model.atlas
    if any(atlas.charts[I].orientation is None for I in atlas.indices):
        return
    sign = np.array([atlas.charts[I].orientation[x] for I, x in model.objects])
    bad = np.flatnonzero(sign[model.src] != sign[model.tgt])
    rep.record("orientation", len(bad), [f"{model.mor_keys[m]!r} reverses sign" for m in bad[:5]], model.n_mor)


# ---------------------------------------------------------------- point orbifold


class PointOrbifold:
    """Charts W_I = Gamma_I / S over a single point, with S acting diagonally on the right."""

    def __init__(self, factors: list[FiniteGroup], S: FiniteGroup, embeddings: list[dict], name: str = "point"):
        if len(embeddings) != len(factors):
            raise GroupError("one embedding of S per factor is required")
        for k, (grp, emb) in enumerate(zip(factors, embeddings)):
            img = [emb[s] for s in S.elements]
            if len(set(img)) != len(img):
                raise GroupError(f"embedding of S into factor {k + 1} is not injective")
            if any(emb[S.mul(a, b)] != grp.mul(emb[a], emb[b]) for a in S.elements for b in S.elements):
                raise GroupError(f"embedding of S into factor {k + 1} is not a homomorphism")
        self.labels = [str(k + 1) for k in range(len(factors))]
        self.factors = dict(zip(self.labels, factors))
        self.S = S
        self.emb = dict(zip(self.labels, embeddings))
        self.groups = ProductGroups(self.factors)
        self.name = name
        self.indices = [frozenset(c) for r in range(1, len(self.labels) + 1) for c in _subsets(self.labels, r)]
        self.atlas = self._build_atlas()

    def diag(self, s, index) -> tuple:
        return tuple((i, self.emb[i][s]) for i in sorted(index))

    def coset(self, gamma: tuple) -> str:
        """Canonical name of gamma S: the smallest representative, written as a string."""
        index = [i for i, _ in gamma]
        reps = []
        for s in self.S.elements:
            g = self.groups.mul(gamma, self.diag(s, index))
            reps.append(";".join(f"{i}={e}" for i, e in g))
        return min(reps)

    def _build_atlas(self) -> Atlas:
        G = self.groups
        Y = FiniteSpace(["pt"])
        charts, coverings = {}, {}
        cosets = {}
        for I in self.indices:
            names = {}
            for g in G.elements(I):
                names[g] = self.coset(g)
            cosets[I] = names
            pts = sorted(set(names.values()))
            rep = {}
            for g, c in names.items():
                rep.setdefault(c, g)
            acts = {}
            for i in sorted(I):
                acts[i] = {}
                for e in self.factors[i].elements:
                    acts[i][e] = {c: names[G.mul(((i, e),), rep[c])] for c in pts}
            charts[I] = Chart(I, FiniteSpace(pts), acts, {c: "pt" for c in pts})
            charts[I]._rep = rep
        for J in self.indices:
            for I in self.indices:
                if I <= J:
                    rep = charts[J]._rep
                    coverings[(I, J)] = {c: cosets[I][project_tuple(rep[c], I)] for c in charts[J].points}
        self._cosets = cosets
        feet = {i: {"pt"} for i in self.labels}
        return Atlas(Y, G, feet, charts, coverings, name=self.name)

    # G_id: objects (I, gamma_I), one morphism per ordered pair of objects

    def gid_objects(self) -> list:
        return [(I, g) for I in self.indices for g in self.groups.elements(I)]

    def build_bs(self) -> GroupoidModel:
        return build_bk(self.atlas)

    def build_gs(self) -> GroupoidModel:
        return complete_atlas(self.atlas)

    def functor_fs(self, m: tuple) -> tuple:
        """(gamma_I, gamma_J) with I <= J  ->  (I, J, gamma_J S, gamma_J|_I gamma_I^-1)."""
        (I, gi), (J, gj) = m
        if not I <= J:
            raise ValueError("F_S is defined on morphisms of B_id (I contained in J)")
        G = self.groups
        return (I, J, self._cosets[J][gj], G.mul(project_tuple(gj, I), G.inv(gi)))

    def functor_fs_right(self, m: tuple, s) -> tuple:
        """Right multiplication by s in S on both ends."""
        (I, gi), (J, gj) = m
        G = self.groups
        return ((I, G.mul(gi, self.diag(s, I))), (J, G.mul(gj, self.diag(s, J))))

    def check_fs_invariance(self) -> dict:
        """F_S o F_s = F_S on every morphism of B_id and every s in S."""
        objs = self.gid_objects()
        fails, tested, wit = 0, 0, []
        for x in objs:
            for y in objs:
                if not x[0] <= y[0]:
                    continue
                base = self.functor_fs((x, y))
                for s in self.S.elements:
                    tested += 1
                    if self.functor_fs(self.functor_fs_right((x, y), s)) != base:
                        fails += 1
                        if len(wit) < 5:
                            wit.append(f"s={s} at {(x, y)!r}")
        return {"passed": fails == 0, "failures": fails, "tested": tested, "witnesses": wit}

    def phi(self, x: tuple, y: tuple) -> tuple:
        """The class of (gamma_I, gamma_J) in G_id/S  ->  (I, J, g S, gamma_J|_{InJ} gamma_I|_{InJ}^-1)."""
        (I, gi), (J, gj) = x, y
        G = self.groups
        di, dj = dict(gi), dict(gj)
        g = tuple((k, dj[k] if k in J else di[k]) for k in sorted(I | J))
        common = I & J
        lab = G.mul(tuple((k, dj[k]) for k in sorted(common)), G.inv(tuple((k, di[k]) for k in sorted(common))))
        return (I, J, self._cosets[I | J][g], G.extend(lab, common))

    def check_quotient_isomorphism(self, gs: GroupoidModel | None = None) -> dict:
        """Exhaustively verify that phi induces an isomorphism G_id/S -> G_S."""
        gs = gs or self.build_gs()
        G = self.groups
        objs = self.gid_objects()
        n = len(objs)
        opos = {o: k for k, o in enumerate(objs)}
        # right S-action on G_id objects, canonical representatives and the s with y = c(y) s
        ract = {s: np.array([opos[(I, G.mul(g, self.diag(s, I)))] for I, g in objs]) for s in self.S.elements}
        canon = np.array([min(int(ract[s][k]) for s in self.S.elements) for k in range(n)])
        shift = np.zeros(n, dtype=np.int64)
        s_list = list(self.S.elements)
        s_pos = {s: k for k, s in enumerate(s_list)}
        for k in range(n):
            for s in s_list:
                if ract[s][canon[k]] == k:
                    shift[k] = s_pos[s]
                    break
        ract_arr = np.stack([ract[s] for s in s_list])
        result = {"checks": {}}

        def record(name, fails, tested, wit):
            result["checks"][name] = {"failures": int(fails), "tested": int(tested), "witnesses": wit[:5]}

        # objects: orbit of (I, gamma_I)  ->  gamma_I S
        obj_fail, wit = 0, []
        img_obj = {}
        for k in range(n):
            I, g = objs[k]
            target = (I, self._cosets[I][g])
            if int(canon[k]) in img_obj and img_obj[int(canon[k])] != target:
                obj_fail += 1
                wit.append(f"object orbit of {objs[k]!r} has two images")
            img_obj.setdefault(int(canon[k]), target)
        if sorted(img_obj.values(), key=repr) != sorted(gs.objects, key=repr):
            obj_fail += 1
            wit.append("object map is not a bijection onto the objects of G_S")
        record("objects", obj_fail, n, wit)

        # morphisms: class of (x, y) represented with x canonical
        canon_objs = np.flatnonzero(canon == np.arange(n))
        idx = gs.mor_index
        psi_of = {}
        fails, wit = 0, []
        for x in canon_objs.tolist():
            for y in range(n):
                key = self.phi(objs[x], objs[y])
                for s in s_list:
                    xs, ys = int(ract[s][x]), int(ract[s][y])
                    if self.phi(objs[xs], objs[ys]) != key:
                        fails += 1
                        if len(wit) < 5:
                            wit.append(f"phi is not constant on the S-orbit of {(objs[x], objs[y])!r}")
                if key not in idx:
                    fails += 1
                    if len(wit) < 5:
                        wit.append(f"phi{(objs[x], objs[y])!r} = {key!r} is not a morphism of G_S")
                    continue
                m = idx[key]
                if m in psi_of:
                    fails += 1
                    if len(wit) < 5:
                        wit.append(f"phi is not injective at {key!r}")
                psi_of[m] = (x, y)
                if gs.objects[gs.src[m]] != img_obj[x] or gs.objects[gs.tgt[m]] != img_obj[int(canon[y])]:
                    fails += 1
                    if len(wit) < 5:
                        wit.append(f"phi does not respect source and target at {(objs[x], objs[y])!r}")
        if len(psi_of) != gs.n_mor:
            fails += 1
            wit.append(f"phi hits {len(psi_of)} of {gs.n_mor} morphisms")
        record("morphisms", fails, n * n, wit)
        if fails or obj_fail:
            result["passed"] = False
            return result

        # functoriality over every composable pair of G_S
        back_x = np.zeros(gs.n_mor, dtype=np.int64)
        back_y = np.zeros(gs.n_mor, dtype=np.int64)
        for m, (x, y) in psi_of.items():
            back_x[m], back_y[m] = x, y
        tab = gs.table
        fails, tested, wit = 0, 0, []
        for mid in range(gs.n_obj):
            A, B = tab.ins(mid), tab.outs(mid)
            if len(A) == 0 or len(B) == 0:
                continue
            AA = np.repeat(A, len(B))
            BB = np.tile(B, len(A))
            C = tab.lookup(AA, BB)
            # (x, y) then (x2, z) with y = x2 . s  gives  (x, z . s)
            y = back_y[AA]
            z = back_y[BB]
            zs = ract_arr[shift[y], z]
            ok = (C >= 0) & (back_x[C] == back_x[AA]) & (back_y[np.maximum(C, 0)] == zs)
            tested += len(C)
            if not ok.all():
                bad = np.flatnonzero(~ok)
                fails += len(bad)
                for j in bad[:3]:
                    wit.append(f"phi fails to preserve the composite of {gs.mor_keys[AA[j]]!r} and {gs.mor_keys[BB[j]]!r}")
        record("functoriality", fails, tested, wit)

        # F_S on B_id factors through the quotient: F_S(x, y) = phi(x, y) whenever I <= J
        fails, tested, wit = 0, 0, []
        for x in range(n):
            for y in range(n):
                if objs[x][0] <= objs[y][0]:
                    tested += 1
                    if self.functor_fs((objs[x], objs[y])) != self.phi(objs[x], objs[y]):
                        fails += 1
                        if len(wit) < 5:
                            wit.append(f"F_S and phi differ at {(objs[x], objs[y])!r}")
        record("fs_factors_through_quotient", fails, tested, wit)
        result["passed"] = all(c["failures"] == 0 for c in result["checks"].values())
        return result


def _subsets(labels, r):
    from itertools import combinations

    return combinations(labels, r)


def point_orbifold(factors: list[FiniteGroup], S: FiniteGroup, embeddings: list[dict], name: str = "point") -> PointOrbifold:
    return PointOrbifold(factors, S, embeddings, name)
