"""Integer encoding of an atlas for the vectorized groupoid algorithms.

Every group tuple is encoded as an element of the full product Gamma_A over all
basic indices, with identity components outside its support.  Index sets are
bitmasks over the sorted basic labels.  Chart points are numbered in chart order.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

MAX_GROUP_ORDER = 4096


class IndexedAtlas:
    def __init__(self, atlas):
        self.atlas = atlas
        self.labels = atlas.basic
        self.bit = {lab: 1 << k for k, lab in enumerate(self.labels)}
        groups = [atlas.groups[lab] for lab in self.labels]
        self.radix = [len(g) for g in groups]
        self.strides = []
        s = 1
        for r in self.radix:
            self.strides.append(s)
            s *= r
        self.order = s
        if s > MAX_GROUP_ORDER:
            raise ValueError(f"product of all basic groups has order {s}, above {MAX_GROUP_ORDER}")
        self.factor_elems = [list(g.elements) for g in groups]
        self.factor_pos = [{e: k for k, e in enumerate(g.elements)} for g in groups]
        codes = np.arange(s)
        comps = np.stack([(codes // st) % r for st, r in zip(self.strides, self.radix)]) if groups else np.zeros((0, 1), int)
        self._comps = comps
        mul = np.zeros((s, s), dtype=np.int64)
        inv = np.zeros(s, dtype=np.int64)
        ident = 0
        for k, g in enumerate(groups):
            pos = self.factor_pos[k]
            tab = np.array([[pos[g.mul(a, b)] for b in g.elements] for a in g.elements], dtype=np.int64)
            itab = np.array([pos[g.inv(a)] for a in g.elements], dtype=np.int64)
            mul += tab[comps[k][:, None], comps[k][None, :]] * self.strides[k]
            inv += itab[comps[k]] * self.strides[k]
            ident += pos[g.identity] * self.strides[k]
        self.mul = mul
        self.inv = inv
        self.identity = ident
        self._ident_comp = [self.factor_pos[k][g.identity] for k, g in enumerate(groups)]

        self.index_masks = [self.mask(I) for I in atlas.indices]
        self.mask_index = {self.mask(I): I for I in atlas.indices}
        self.points = {}
        self.point_pos = {}
        self.act = {}
        self.psi = {}
        ypos = {y: k for k, y in enumerate(atlas.base.points)}
        self.ypos = ypos
        for I in atlas.indices:
            ch = atlas.charts[I]
            m = self.mask(I)
            pts = list(ch.points)
            pos = {x: k for k, x in enumerate(pts)}
            self.points[m] = pts
            self.point_pos[m] = pos
            self.psi[m] = np.array([ypos[ch.psi[x]] for x in pts], dtype=np.int64)
            table = np.empty((s, len(pts)), dtype=np.int64)
            # factor tables, then compose in label order
            ftabs = {}
            for k, lab in enumerate(self.labels):
                if lab in I:
                    ftabs[k] = np.array([[pos[ch.actions[lab][e][x]] for x in pts] for e in self.factor_elems[k]], dtype=np.int64)
            cur = np.tile(np.arange(len(pts)), (s, 1))
            for k, ft in ftabs.items():
                cur = ft[comps[k]][np.arange(s)[:, None], cur] if len(pts) else cur
            table[:] = cur
            self.act[m] = table
        self.rho = {}
        for (I, J), r in atlas.coverings.items():
            mi, mj = self.mask(I), self.mask(J)
            if mi not in self.points or mj not in self.points:
                continue
            pos = self.point_pos[mi]
            self.rho[(mi, mj)] = np.array([pos[r[x]] for x in self.points[mj]], dtype=np.int64)

    def mask(self, index) -> int:
        m = 0
        for lab in index:
            m |= self.bit[lab]
        return m

    def index_of(self, mask: int) -> frozenset:
        return frozenset(lab for lab in self.labels if self.bit[lab] & mask)

    @lru_cache(maxsize=None)
    def project(self, mask: int) -> np.ndarray:
        """Code -> code with components outside ``mask`` set to the identity."""
        out = np.zeros(self.order, dtype=np.int64)
        for k in range(len(self.labels)):
            comp = self._comps[k] if (mask >> k) & 1 else np.full(self.order, self._ident_comp[k])
            out += comp * self.strides[k]
        return out

    @lru_cache(maxsize=None)
    def elements(self, mask: int) -> np.ndarray:
        """Codes supported in ``mask``, increasing."""
        proj = self.project(mask)
        return np.flatnonzero(proj == np.arange(self.order))

    @lru_cache(maxsize=None)
    def element_pos(self, mask: int) -> np.ndarray:
        out = np.full(self.order, -1, dtype=np.int64)
        el = self.elements(mask)
        out[el] = np.arange(len(el))
        return out

    def encode(self, gamma) -> int:
        code = self.identity
        d = dict(gamma)
        for k, lab in enumerate(self.labels):
            if lab in d:
                code += (self.factor_pos[k][d[lab]] - self._ident_comp[k]) * self.strides[k]
        return int(code)

    def decode(self, code: int, mask: int) -> tuple:
        out = []
        for k, lab in enumerate(self.labels):
            if (mask >> k) & 1:
                out.append((lab, self.factor_elems[k][(code // self.strides[k]) % self.radix[k]]))
        return tuple(out)

    def mul3(self, a, b, c):
        return self.mul[self.mul[a, b], c]

    @lru_cache(maxsize=None)
    def preimages(self, sub: int, sup: int) -> np.ndarray:
        """Padded table: row x lists the points of W_sup over x in W_sub (-1 padding)."""
        r = self.rho[(sub, sup)]
        n = len(self.points[sub])
        counts = np.bincount(r, minlength=n)
        width = int(counts.max()) if len(r) else 0
        out = np.full((n, max(width, 1)), -1, dtype=np.int64)
        order = np.argsort(r, kind="stable")
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        slot = np.arange(len(r)) - starts[r[order]]
        out[r[order], slot] = order
        return out
