"""Finite categories and groupoids on integer ids, and the category B_K of an atlas.

Composition is always written in categorical order: ``compose(a, b)`` means
``a`` first, then ``b``; it requires ``target(a) == source(b)``.
"""

from __future__ import annotations

from functools import cached_property
from typing import Callable

import numpy as np

from .finspace import FiniteSpace, SpaceMap, quotient_space

PAIR_CHUNK = 2_000_000


class NonComposable(ValueError):
    pass


class InvalidAtlas(ValueError):
    pass


class GroupoidModel:
    """Objects and morphisms stored as arrays.

    ``compose_ids(a, b)`` takes equal-length id arrays of composable pairs and
    returns the composite ids, or -1 where the composite is not a morphism of
    this model.
    """

    def __init__(
        self,
        objects: list,
        object_space: FiniteSpace,
        mor_keys: list,
        src: np.ndarray,
        tgt: np.ndarray,
        identity: np.ndarray,
        compose_ids: Callable,
        inverse: np.ndarray | None = None,
        kind: str = "category",
        name: str = "",
    ):
        self.objects = objects
        self.object_space = object_space
        self.obj_index = {o: k for k, o in enumerate(objects)}
        self.mor_keys = mor_keys
        self.src = np.asarray(src, dtype=np.int64)
        self.tgt = np.asarray(tgt, dtype=np.int64)
        self.identity = np.asarray(identity, dtype=np.int64)
        self.compose_ids = compose_ids
        self.inverse = inverse
        self.kind = kind
        self.name = name

    def __repr__(self) -> str:
        return f"GroupoidModel({self.name or self.kind}, {len(self.objects)} objects, {len(self.mor_keys)} morphisms)"

    @property
    def n_obj(self) -> int:
        return len(self.objects)

    @property
    def n_mor(self) -> int:
        return len(self.mor_keys)

    @cached_property
    def mor_index(self) -> dict:
        return {k: n for n, k in enumerate(self.mor_keys)}

    def source(self, key):
        return self.objects[self.src[self.mor_index[key]]]

    def target(self, key):
        return self.objects[self.tgt[self.mor_index[key]]]

    def compose(self, m1, m2):
        a, b = self.mor_index[m1], self.mor_index[m2]
        if self.tgt[a] != self.src[b]:
            raise NonComposable(f"target of {m1!r} is not the source of {m2!r}")
        c = int(self.compose_ids(np.array([a]), np.array([b]))[0])
        if c < 0:
            raise InvalidAtlas(f"composite of {m1!r} and {m2!r} is not a morphism")
        return self.mor_keys[c]

    def invert(self, key):
        if self.inverse is None:
            raise ValueError("model has no inverses")
        return self.mor_keys[int(self.inverse[self.mor_index[key]])]

    @cached_property
    def table(self) -> "CompositionTable":
        return CompositionTable(self)

    def hom(self, x, y) -> list:
        a, b = self.obj_index[x], self.obj_index[y]
        ids = np.flatnonzero((self.src == a) & (self.tgt == b))
        return [self.mor_keys[i] for i in ids]

    def equivalence_classes(self) -> list[list[int]]:
        parent = list(range(self.n_obj))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        pairs = np.unique(np.stack([self.src, self.tgt], axis=1), axis=0) if self.n_mor else np.zeros((0, 2), int)
        for a, b in pairs:
            ra, rb = find(int(a)), find(int(b))
            if ra != rb:
                parent[ra] = rb
        groups: dict = {}
        for k in range(self.n_obj):
            groups.setdefault(find(k), []).append(k)
        return list(groups.values())

    def realize(self) -> tuple[FiniteSpace, SpaceMap]:
        """Quotient of the object space by 'some morphism exists'."""
        blocks = [[self.objects[k] for k in cls] for cls in self.equivalence_classes()]
        return quotient_space(self.object_space, blocks)

    def restrict(self, keep_objects: np.ndarray, keep_morphisms: np.ndarray, kind: str | None = None, name: str = "") -> "GroupoidModel":
        """Submodel on the given objects and morphisms, composing through this model's table."""
        keep_objects = np.asarray(keep_objects, dtype=bool)
        keep_morphisms = np.asarray(keep_morphisms, dtype=bool)
        obj_ids = np.flatnonzero(keep_objects)
        mor_ids = np.flatnonzero(keep_morphisms)
        if not np.all(keep_objects[self.src[mor_ids]] & keep_objects[self.tgt[mor_ids]]):
            raise ValueError("kept morphisms must join kept objects")
        onew = np.full(self.n_obj, -1, dtype=np.int64)
        onew[obj_ids] = np.arange(len(obj_ids))
        mnew = np.full(self.n_mor, -1, dtype=np.int64)
        mnew[mor_ids] = np.arange(len(mor_ids))
        objects = [self.objects[k] for k in obj_ids]
        space = self.object_space.subspace(objects)
        parent = self

        def compose_ids(a, b):
            c = parent.table.lookup(mor_ids[a], mor_ids[b])
            out = np.full(len(c), -1, dtype=np.int64)
            ok = c >= 0
            out[ok] = mnew[c[ok]]
            return out

        ident = mnew[self.identity[obj_ids]]
        inverse = None
        if self.inverse is not None:
            inv = mnew[self.inverse[mor_ids]]
            inverse = inv
        return GroupoidModel(
            objects,
            space,
            [self.mor_keys[k] for k in mor_ids],
            onew[self.src[mor_ids]],
            onew[self.tgt[mor_ids]],
            ident,
            compose_ids,
            inverse,
            kind or self.kind,
            name,
        )


class CompositionTable:
    """All composites of composable pairs, stored per middle object."""

    def __init__(self, model: GroupoidModel):
        self.model = model
        n = model.n_obj
        order_in = np.argsort(model.tgt, kind="stable")
        order_out = np.argsort(model.src, kind="stable")
        self.n_in = np.bincount(model.tgt, minlength=n)
        self.n_out = np.bincount(model.src, minlength=n)
        start_in = np.concatenate([[0], np.cumsum(self.n_in)[:-1]]).astype(np.int64)
        start_out = np.concatenate([[0], np.cumsum(self.n_out)[:-1]]).astype(np.int64)
        self.in_lists = order_in
        self.out_lists = order_out
        self.start_in = start_in
        self.start_out = start_out
        self.pos_in = np.empty(model.n_mor, dtype=np.int64)
        self.pos_in[order_in] = np.arange(model.n_mor) - start_in[model.tgt[order_in]]
        self.pos_out = np.empty(model.n_mor, dtype=np.int64)
        self.pos_out[order_out] = np.arange(model.n_mor) - start_out[model.src[order_out]]
        sizes = self.n_in * self.n_out
        self.offset = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64)
        self.values = np.full(int(sizes.sum()), -1, dtype=np.int64)
        self.n_pairs = int(sizes.sum())
        batch_a, batch_b, batch_slot, count = [], [], [], 0
        for y in range(n):
            if sizes[y] == 0:
                continue
            ins = order_in[start_in[y]:start_in[y] + self.n_in[y]]
            outs = order_out[start_out[y]:start_out[y] + self.n_out[y]]
            batch_a.append(np.repeat(ins, len(outs)))
            batch_b.append(np.tile(outs, len(ins)))
            batch_slot.append(self.offset[y] + np.arange(sizes[y]))
            count += sizes[y]
            if count >= PAIR_CHUNK:
                self._fill(batch_a, batch_b, batch_slot)
                batch_a, batch_b, batch_slot, count = [], [], [], 0
        if batch_a:
            self._fill(batch_a, batch_b, batch_slot)

    def _fill(self, a, b, slot):
        a, b, slot = np.concatenate(a), np.concatenate(b), np.concatenate(slot)
        self.values[slot] = self.model.compose_ids(a, b)

    def lookup(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        y = self.model.tgt[a]
        if np.any(self.model.src[b] != y):
            raise NonComposable("lookup of a non-composable pair")
        return self.values[self.offset[y] + self.pos_in[a] * self.n_out[y] + self.pos_out[b]]

    def ins(self, y: int) -> np.ndarray:
        return self.in_lists[self.start_in[y]:self.start_in[y] + self.n_in[y]]

    def outs(self, y: int) -> np.ndarray:
        return self.out_lists[self.start_out[y]:self.start_out[y] + self.n_out[y]]


class LawReport:
    def __init__(self):
        self.checks: dict[str, dict] = {}

    def record(self, name: str, failures: int, witnesses: list, tested: int) -> None:
        self.checks[name] = {"failures": int(failures), "tested": int(tested), "witnesses": witnesses[:10]}

    @property
    def passed(self) -> bool:
        return all(c["failures"] == 0 for c in self.checks.values())

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": self.checks}

    def text(self) -> str:
        lines = []
        for k, c in self.checks.items():
            status = "ok  " if c["failures"] == 0 else "FAIL"
            lines.append(f"{status} {k}: {c['failures']} failures in {c['tested']} cases")
            lines.extend(f"  - {w}" for w in c["witnesses"])
        return "\n".join(lines)


def check_category_laws(model: GroupoidModel, report: LawReport | None = None, table: CompositionTable | None = None) -> LawReport:
    """Closure, unit and associativity laws, plus inverse laws for groupoids; exhaustive."""
    rep = report or LawReport()
    tab = table or model.table
    keys = model.mor_keys
    vals = tab.values
    bad = np.flatnonzero(vals < 0)
    wit = []
    for slot in bad[:5]:
        y = int(np.searchsorted(tab.offset, slot, side="right") - 1)
        while tab.n_in[y] * tab.n_out[y] == 0 or slot >= tab.offset[y] + tab.n_in[y] * tab.n_out[y]:
            y += 1
        r = slot - tab.offset[y]
        a = tab.ins(y)[r // tab.n_out[y]]
        b = tab.outs(y)[r % tab.n_out[y]]
        wit.append(f"{keys[a]!r} then {keys[b]!r} has no composite")
    rep.record("closure", len(bad), wit, tab.n_pairs)

    ident = model.identity
    ids_ok = (model.src[ident] == np.arange(model.n_obj)) & (model.tgt[ident] == np.arange(model.n_obj))
    all_m = np.arange(model.n_mor)
    left = tab.lookup(ident[model.src], all_m)
    right = tab.lookup(all_m, ident[model.tgt])
    fails = np.flatnonzero((left != all_m) | (right != all_m))
    wit = [f"unit law fails at {keys[m]!r}" for m in fails[:5]]
    wit += [f"identity of {model.objects[k]!r} has wrong ends" for k in np.flatnonzero(~ids_ok)[:5]]
    rep.record("unit", len(fails) + int((~ids_ok).sum()), wit, model.n_mor)

    if model.kind == "groupoid":
        if model.inverse is None:
            rep.record("inverse", 1, ["groupoid without inverse map"], 0)
        else:
            inv = model.inverse
            okinv = inv >= 0
            f1 = np.zeros(model.n_mor, dtype=bool)
            f1[~okinv] = True
            m = all_m[okinv]
            ends = (model.src[inv[m]] == model.tgt[m]) & (model.tgt[inv[m]] == model.src[m])
            f1[m[~ends]] = True
            m2 = m[ends]
            f1[m2] |= tab.lookup(m2, inv[m2]) != ident[model.src[m2]]
            f1[m2] |= tab.lookup(inv[m2], m2) != ident[model.tgt[m2]]
            fails = np.flatnonzero(f1)
            rep.record("inverse", len(fails), [f"inverse law fails at {keys[k]!r}" for k in fails[:5]], model.n_mor)

    rep.record(*_associativity(model, tab))
    return rep


def _associativity(model: GroupoidModel, tab: CompositionTable):
    keys = model.mor_keys
    vals = tab.values
    fails = 0
    tested = 0
    wit = []
    for b in range(model.n_mor):
        y, y2 = model.src[b], model.tgt[b]
        A = tab.ins(y)
        C = tab.outs(y2)
        if len(A) == 0 or len(C) == 0:
            continue
        ab = vals[tab.offset[y] + tab.pos_in[A] * tab.n_out[y] + tab.pos_out[b]]
        bc = vals[tab.offset[y2] + tab.pos_in[b] * tab.n_out[y2] + tab.pos_out[C]]
        if np.any(ab < 0) or np.any(bc < 0):
            continue  # already reported as closure failures
        left = vals[tab.offset[y2] + tab.pos_in[ab][:, None] * tab.n_out[y2] + tab.pos_out[C][None, :]]
        right = vals[tab.offset[y] + tab.pos_in[A][:, None] * tab.n_out[y] + tab.pos_out[bc][None, :]]
        diff = left != right
        tested += diff.size
        if diff.any():
            n = int(diff.sum())
            fails += n
            if len(wit) < 5:
                i, j = np.argwhere(diff)[0]
                wit.append(f"({keys[A[i]]!r}, {keys[b]!r}, {keys[C[j]]!r}) associates to {keys[left[i, j]]!r} and {keys[right[i, j]]!r}")
    return "associativity", fails, wit, tested


# ---------------------------------------------------------------- atlas layouts


class MorphismLayout:
    """Morphisms (I, J, z, gamma) with z in W_{I u J} and gamma in Gamma_{I n J}, block by block."""

    def __init__(self, ix, blocks: list[tuple[int, int]]):
        self.ix = ix
        self.blocks = blocks
        self.block_pos = {b: k for k, b in enumerate(blocks)}
        self.obj_off = {}
        off = 0
        for m in ix.index_masks:
            self.obj_off[m] = off
            off += len(ix.points[m])
        self.n_obj = off
        self.offsets = []
        self.nz = []
        self.ng = []
        off = 0
        for mi, mj in blocks:
            self.offsets.append(off)
            nz = len(ix.points[mi | mj])
            ng = len(ix.elements(mi & mj))
            self.nz.append(nz)
            self.ng.append(ng)
            off += nz * ng
        self.n_mor = off
        self.offsets = np.array(self.offsets + [off], dtype=np.int64)
        blk = np.zeros(off, dtype=np.int64)
        z = np.zeros(off, dtype=np.int64)
        g = np.zeros(off, dtype=np.int64)
        for k, (mi, mj) in enumerate(blocks):
            lo, hi = self.offsets[k], self.offsets[k + 1]
            blk[lo:hi] = k
            r = np.arange(hi - lo)
            z[lo:hi] = r // self.ng[k]
            g[lo:hi] = ix.elements(mi & mj)[r % self.ng[k]]
        self.block = blk
        self.z = z
        self.g = g
        self.bi = np.array([b[0] for b in blocks], dtype=np.int64)
        self.bj = np.array([b[1] for b in blocks], dtype=np.int64)

    def ids(self, k: int, z: np.ndarray, g: np.ndarray) -> np.ndarray:
        mi, mj = self.blocks[k]
        return self.offsets[k] + z * self.ng[k] + self.ix.element_pos(mi & mj)[g]

    def objects(self) -> list:
        ix = self.ix
        out = []
        for m in ix.index_masks:
            I = ix.index_of(m)
            out.extend((I, x) for x in ix.points[m])
        return out

    def object_space(self) -> FiniteSpace:
        ix = self.ix
        pts, rel = [], []
        for m in ix.index_masks:
            I = ix.index_of(m)
            dom = ix.atlas.charts[I].domain
            pts.extend((I, x) for x in dom.points)
            rel.extend(((I, a), (I, b)) for a, b in dom.covers())
        return FiniteSpace(pts, rel)

    def keys(self) -> list:
        ix = self.ix
        out = []
        for k, (mi, mj) in enumerate(self.blocks):
            I, J = ix.index_of(mi), ix.index_of(mj)
            pts = ix.points[mi | mj]
            gs = [ix.decode(int(c), mi & mj) for c in ix.elements(mi & mj)]
            out.extend((I, J, z, gam) for z in pts for gam in gs)
        return out

    def ends(self) -> tuple[np.ndarray, np.ndarray]:
        ix = self.ix
        src = np.zeros(self.n_mor, dtype=np.int64)
        tgt = np.zeros(self.n_mor, dtype=np.int64)
        for k, (mi, mj) in enumerate(self.blocks):
            lo, hi = self.offsets[k], self.offsets[k + 1]
            u = mi | mj
            z, g = self.z[lo:hi], self.g[lo:hi]
            ri = ix.rho[(mi, u)][z]
            src[lo:hi] = self.obj_off[mi] + ix.act[mi][ix.inv[g], ri]
            tgt[lo:hi] = self.obj_off[mj] + ix.rho[(mj, u)][z]
        return src, tgt

    def identities(self) -> np.ndarray:
        ix = self.ix
        out = np.zeros(self.n_obj, dtype=np.int64)
        for m in ix.index_masks:
            k = self.block_pos[(m, m)]
            n = len(ix.points[m])
            out[self.obj_off[m]:self.obj_off[m] + n] = self.ids(k, np.arange(n), np.full(n, ix.identity))
        return out

    def key_of(self, key) -> int:
        I, J, z, gamma = key
        ix = self.ix
        mi, mj = ix.mask(I), ix.mask(J)
        k = self.block_pos[(mi, mj)]
        zi = ix.point_pos[mi | mj][z]
        return int(self.ids(k, np.array([zi]), np.array([ix.encode(gamma)]))[0])


def build_bk(atlas) -> GroupoidModel:
    """The category B_K: morphisms (I, J, y, gamma) for I <= J, y in W_J, gamma in Gamma_I."""
    ix = atlas.indexed
    blocks = [(ix.mask(I), ix.mask(J)) for I, J in atlas.pairs()]
    lay = MorphismLayout(ix, blocks)
    src, tgt = lay.ends()

    def compose_ids(a, b):
        out = np.empty(len(a), dtype=np.int64)
        ka, kb = lay.block[a], lay.block[b]
        key = ka * len(blocks) + kb
        for u in np.unique(key):
            sel = np.flatnonzero(key == u)
            k1, k2 = divmod(int(u), len(blocks))
            mi, mj = blocks[k1]
            mj2, mk = blocks[k2]
            gamma, delta, z = lay.g[a[sel]], lay.g[b[sel]], lay.z[b[sel]]
            lab = ix.mul[ix.project(mi)[delta], gamma]
            out[sel] = lay.ids(lay.block_pos[(mi, mk)], z, lab)
        return out

    return GroupoidModel(lay.objects(), lay.object_space(), lay.keys(), src, tgt, lay.identities(), compose_ids, None, "category", f"B({atlas.name})")


def compose_bk(atlas, m1: tuple, m2: tuple) -> tuple:
    """(I,J,y,gamma) then (J,K,z,delta) -> (I,K,z, delta|_I gamma)."""
    I, J, y, gamma = m1
    J2, K, z, delta = m2
    I, J, J2, K = map(frozenset, (I, J, J2, K))
    if J != J2:
        raise NonComposable(f"chart {sorted(J)} is not {sorted(J2)}")
    if bk_source(atlas, m2) != (J, y):
        raise NonComposable("target of the first morphism is not the source of the second")
    G = atlas.groups
    lab = G.extend(G.mul(tuple((i, g) for i, g in delta if i in I), gamma), I)
    return (I, K, z, lab)


def bk_source(atlas, m: tuple) -> tuple:
    I, J, y, gamma = m
    ch = atlas.charts[frozenset(I)]
    return (frozenset(I), ch.act(atlas.groups.inv(gamma), atlas.rho(I, J)[y]))


def bk_target(atlas, m: tuple) -> tuple:
    return (frozenset(m[1]), m[2])
