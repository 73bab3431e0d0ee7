"""Weightings, pushforward, Euler numbers of sections, the Z/2 gerbe class and subatlas checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import NamedTuple

import numpy as np

from .atlas import Atlas, index_key, index_label
from .category import GroupoidModel, LawReport, build_bk
from .resolve import Reduction, Weighting, _point_name, hausdorff_close, build_resolution

ZERO = "0"


class PreconditionError(ValueError):
    pass


class IncompatibleSection(ValueError):
    def __init__(self, message: str, witness: tuple = ()):
        super().__init__(message)
        self.witness = witness


# ---------------------------------------------------------------- Lambda_G


def orbifold_weighting(G: GroupoidModel) -> Weighting:
    """Lambda_G = 1/|stabilizer| on the realization of a groupoid."""
    space, proj = G.realize()
    loops = np.bincount(G.src[G.src == G.tgt], minlength=G.n_obj)
    psi = getattr(G, "obj_psi", None)
    atlas = getattr(G, "atlas", None)
    value, base, names, branches = {}, {}, {}, {}
    defects = []
    pos = {o: k for k, o in enumerate(G.objects)}
    for p in space.points:
        ks = [pos[o] for o in p]
        orders = {int(loops[k]) for k in ks}
        names[p] = _point_name(p) if _is_chart_object(next(iter(p))) else str(min(map(str, p)))
        if len(orders) != 1:
            defects.append(f"stabilizer orders {sorted(orders)} differ over {names[p]}")
        value[p] = Fraction(1, min(orders))
        branches[p] = []
        if psi is not None and atlas is not None:
            base[p] = atlas.base.points[int(psi[ks[0]])]
        else:
            base[p] = names[p]
    if defects:
        raise ValueError(defects[0])
    return Weighting(space, value, branches, base, names, frozenset(), defects)


def _is_chart_object(o) -> bool:
    return isinstance(o, tuple) and len(o) == 2 and isinstance(o[0], frozenset)


def orbifold_weighting_by_base(G: GroupoidModel) -> dict:
    w = orbifold_weighting(G)
    out = {}
    for p, v in w.value.items():
        y = w.base_point[p]
        if y in out and out[y] != v:
            raise ValueError(f"two realization points over {y} with different weights")
        out[y] = v
    return out


def pushforward_check(w_v: Weighting, w_g: Weighting) -> LawReport:
    """Sum of Lambda_V over the points of |V^H| lying over q equals Lambda_G(q)."""
    rep = LawReport()
    push: dict = {}
    for p, v in w_v.value.items():
        y = w_v.base_point[p]
        push[y] = push.get(y, Fraction(0)) + v
    target = {}
    for p, v in w_g.value.items():
        target[w_g.base_point[p]] = v
    bad = []
    for y in sorted(set(push) | set(target), key=str):
        a, b = push.get(y, Fraction(0)), target.get(y, Fraction(0))
        if a != b:
            bad.append(f"over {y}: pushforward {a}, orbifold weight {b}")
    rep.record("pushforward", len(bad), bad, len(target))
    rep.residuals = {str(y): push.get(y, Fraction(0)) - target.get(y, Fraction(0)) for y in set(push) | set(target)}
    rep.pushforward = push
    return rep


def total_weight(points) -> Fraction:
    """Signed total of (weight, sign) pairs."""
    total = Fraction(0)
    for item in points:
        if len(item) != 2 or item[1] not in (1, -1):
            raise ValueError(f"missing or invalid sign in {item!r}")
        total += Fraction(item[0]) * item[1]
    return total


# ---------------------------------------------------------------- sections and Euler numbers


@dataclass
class SectionData:
    """nu[I][x] for x in V_I, with ``ZERO`` marking zeros; signs[(I, x)] on zero objects."""

    nu: dict
    signs: dict = field(default_factory=dict)
    name: str = ""

    def is_zero(self, I, x) -> bool:
        return self.nu[frozenset(I)][x] == ZERO


def section_violations(red: Reduction, sec: SectionData) -> list[tuple]:
    """Witnesses (kind, I, J, point) of incompatibility or non-invariance."""
    atlas = red.atlas
    G = atlas.groups
    out = []
    V = {I: red.V(I) for I in atlas.indices}
    for I in atlas.indices:
        nu = sec.nu.get(I, {})
        missing = [x for x in V[I] if x not in nu]
        if missing:
            out.append(("undefined", index_label(I), "", str(sorted(map(str, missing))[0])))
            continue
        ch = atlas.charts[I]
        for g in G.elements(I):
            for x in V[I]:
                if nu[ch.act(g, x)] != nu[x]:
                    out.append(("not invariant", index_label(I), str(g), str(x)))
                    break
    for I, J in atlas.pairs():
        if I == J or not V[I]:
            continue
        r = atlas.rho(I, J)
        for x in red.V_tilde(I, J):
            if sec.nu[J][x] != sec.nu[I][r[x]]:
                out.append(("incompatible", index_label(I), index_label(J), str(x)))
    for I in atlas.indices:
        for x in V[I]:
            if sec.nu[I][x] == ZERO and (I, x) not in sec.signs:
                out.append(("unsigned zero", index_label(I), "", str(x)))
    return out


def section_from_base(red: Reduction, zeros: dict, name: str = "") -> SectionData:
    """Section nu_I = f o psi_I where f vanishes exactly on ``zeros`` (base point -> sign)."""
    atlas = red.atlas
    nu, signs = {}, {}
    for I in atlas.indices:
        ch = atlas.charts[I]
        nu[I] = {}
        for x in red.V(I):
            y = ch.psi[x]
            nu[I][x] = ZERO if y in zeros else "1"
            if y in zeros:
                signs[(I, x)] = zeros[y]
    return SectionData(nu, signs, name)


class EulerResult(NamedTuple):
    zero_groupoid: GroupoidModel
    weighting: dict
    total: Fraction


def euler_number(atlas: Atlas, red: Reduction, sec: SectionData, H: GroupoidModel | None = None, gk: GroupoidModel | None = None) -> EulerResult:
    bad = section_violations(red, sec)
    if bad:
        raise IncompatibleSection(f"{bad[0][0]} section at {bad[0][1:]}", bad[0])
    if H is None:
        H = hausdorff_close(build_resolution(atlas, red, gk), atlas, red)
    zero = np.array([sec.nu[I][x] == ZERO for I, x in H.objects], dtype=bool)
    mor = zero[H.src] & zero[H.tgt]
    Z = H.restrict(zero, mor, "groupoid", f"Z({atlas.name}{',' + sec.name if sec.name else ''})")
    space, _ = H.realize()
    lam = {}
    order = {I: atlas.group_order(I) for I in atlas.indices}
    for p in space.points:
        by_chart: dict = {}
        for I, x in p:
            by_chart[I] = by_chart.get(I, 0) + 1
        I0 = min(by_chart, key=lambda I: (len(I), index_key(I)))
        lam[p] = Fraction(by_chart[I0], order[I0])
    cls = {}
    for p in space.points:
        for o in p:
            cls[o] = p
    zspace, _ = Z.realize()
    weights = {}
    pairs = []
    for q in zspace.points:
        hp = {cls[o] for o in q}
        if len(hp) != 1:
            raise ValueError("zero set is not a union of realization points")
        signs = {sec.signs[o] for o in q}
        if len(signs) != 1:
            raise IncompatibleSection(f"signs disagree on the zero at {_point_name(q)}", ("sign", _point_name(q)))
        w = lam[next(iter(hp))]
        weights[_point_name(q)] = (w, signs.pop())
        pairs.append(weights[_point_name(q)])
    return EulerResult(Z, weights, total_weight(pairs))


def football_sections(red: Reduction) -> list[SectionData]:
    """Two admissible sections on the football.

    The first vanishes at the two poles.  The second also vanishes over the
    points a0.i0 (sign +) and a0.i4 (sign -), which lie in Q_1 and Q_2 only.
    """
    s1 = section_from_base(red, {"N": 1, "S": 1}, "poles")
    s2 = section_from_base(red, {"N": 1, "S": 1, "a0.i0": 1, "a0.i4": -1}, "poles+pair")
    return [s1, s2]


# ---------------------------------------------------------------- Z/2 gerbes


@dataclass
class CechCocycle:
    alpha: dict
    base: dict
    applicable: bool = True
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "alpha": {index_label(J): a for J, a in sorted(self.alpha.items(), key=lambda t: index_key(t[0]))},
            "base": {index_label(I): sorted(map(str, c))[:1] for I, c in sorted(self.base.items(), key=lambda t: index_key(t[0]))},
            "applicable": self.applicable,
            "note": self.note,
        }


def _check_gerbe_precondition(atlas: Atlas) -> None:
    G = atlas.groups
    for i in atlas.basic:
        if len(G.factors[i]) != 2:
            raise PreconditionError(f"group of chart {i} is not Z/2")
    for I in atlas.indices:
        ch = atlas.charts[I]
        diag = tuple((i, next(g for g in G.factors[i].elements if g != G.factors[i].identity)) for i in sorted(I))
        moved = [x for x in ch.points if ch.act(diag, x) != x]
        if moved:
            raise PreconditionError(f"diagonal Z/2 acts nontrivially on W_{index_label(I)} at {moved[0]}")
        counts: dict = {}
        for x in ch.points:
            counts[ch.psi[x]] = counts.get(ch.psi[x], 0) + 1
        want = 2 ** (len(I) - 1)
        off = [y for y, c in counts.items() if c != want]
        if off:
            raise PreconditionError(f"W_{index_label(I)} has {counts[off[0]]} points over {off[0]}, expected {want}")


def _sheets(atlas: Atlas, I) -> list[frozenset]:
    """Components of W_I mapped bijectively onto F_I."""
    ch = atlas.charts[I]
    F = atlas.footprint(I)
    out = []
    for c in ch.domain.components():
        img = [ch.psi[x] for x in c]
        if len(img) == len(set(img)) and set(img) == set(F):
            out.append(c)
    return sorted(out, key=lambda c: sorted(map(str, c)))


def _maps_into(atlas: Atlas, I, J, CJ, CI) -> bool:
    r = atlas.rho(I, J)
    return all(r[x] in CI for x in CJ)


def _cocycle(atlas: Atlas, base: dict) -> dict:
    alpha = {}
    for J in atlas.indices:
        if len(J) != 3:
            continue
        pairs = [J - {j} for j in sorted(J)]
        comps = atlas.charts[J].domain.components()
        ok = any(all(_maps_into(atlas, I, J, C, base[I]) for I in pairs) for C in comps)
        alpha[J] = 0 if ok else 1
    return alpha


def _gf2_rank(rows: list[int]) -> int:
    rank = 0
    rows = [r for r in rows if r]
    while rows:
        pivot = max(rows)
        top = pivot.bit_length() - 1
        rows = [r ^ pivot if (r >> top) & 1 else r for r in rows if r != pivot]
        rows = [r for r in rows if r]
        rank += 1
    return rank


def _is_coboundary(atlas: Atlas, alpha: dict) -> bool:
    triples = sorted(alpha, key=index_key)
    pairs = [I for I in atlas.indices if len(I) == 2]
    tpos = {J: k for k, J in enumerate(triples)}
    cols = []
    for I in pairs:
        v = 0
        for J in triples:
            if I < J:
                v |= 1 << tpos[J]
        cols.append(v)
    a = 0
    for J, bit in alpha.items():
        if bit:
            a |= 1 << tpos[J]
    return _gf2_rank(cols) == _gf2_rank(cols + [a])


def parity_violations(atlas: Atlas, alpha: dict) -> list[str]:
    out = []
    for K in atlas.indices:
        if len(K) != 4:
            continue
        s = sum(alpha.get(K - {j}, 0) for j in K)
        if s % 2:
            out.append(f"odd number of nonzero terms on {index_label(K)}")
    return out


def compatible_sheets(atlas: Atlas) -> dict | None:
    """Search for sheets C_I with rho_IJ(C_J) inside C_I; None if there is none."""
    order = sorted(atlas.indices, key=lambda I: (len(I), index_key(I)))
    options = {I: _sheets(atlas, I) for I in order}
    chosen: dict = {}

    def go(k: int) -> bool:
        if k == len(order):
            return True
        J = order[k]
        for C in options[J]:
            if all(_maps_into(atlas, I, J, C, chosen[I]) for I in chosen if I < J):
                chosen[J] = C
                if go(k + 1):
                    return True
                del chosen[J]
        return False

    return dict(chosen) if go(0) else None


@dataclass
class GerbeResult:
    cocycle: CechCocycle
    cls: int | None
    trivial: bool
    sheets: dict | None
    parity: list
    rechoices: int = 0
    rechoice_failures: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "cocycle": self.cocycle.to_dict(),
            "class": self.cls,
            "verdict": "trivial" if self.trivial else "nontrivial",
            "parity_violations": self.parity,
            "rechoices": self.rechoices,
            "rechoice_failures": self.rechoice_failures,
            "sheets": None if self.sheets is None else {index_label(I): sorted(map(str, c))[:1] for I, c in self.sheets.items()},
        }


def gerbe_class(atlas: Atlas, base: dict | None = None, rechoose: bool = True, max_rechoices: int = 1 << 12) -> GerbeResult:
    """Cech class of a trivially acting Z/2 gerbe and the triviality verdict.

    The verdict comes from an exhaustive search for a compatible family of
    sheets.  When every pair chart splits into sheets the cocycle is built from
    the chosen base sheets; its class must agree with the verdict and must not
    depend on the base choices.
    """
    _check_gerbe_precondition(atlas)
    pairs = sorted((I for I in atlas.indices if len(I) == 2), key=index_key)
    sheets = {I: _sheets(atlas, I) for I in pairs}
    found = compatible_sheets(atlas)
    trivial = found is not None
    split = all(len(sheets[I]) == 2 for I in pairs)
    if not split:
        coc = CechCocycle({}, {}, False, "some pair chart does not split into two sheets")
        return GerbeResult(coc, None, trivial, found, [])
    base = dict(base) if base else {I: sheets[I][0] for I in pairs}
    alpha = _cocycle(atlas, base)
    coc = CechCocycle(alpha, base, True, "" if alpha else "no triple intersections")
    cls = 0 if _is_coboundary(atlas, alpha) else 1
    parity = parity_violations(atlas, alpha)
    res = GerbeResult(coc, cls, trivial, found, parity)
    if rechoose:
        count = 0
        for flips in product((0, 1), repeat=len(pairs)):
            if count >= max_rechoices:
                break
            count += 1
            b2 = {I: sheets[I][1 - sheets[I].index(base[I])] if f else base[I] for I, f in zip(pairs, flips)}
            a2 = _cocycle(atlas, b2)
            delta = {J: sum(f for I, f in zip(pairs, flips) if I < J) % 2 for J in alpha}
            if any((a2[J] - alpha[J]) % 2 != delta[J] for J in alpha):
                res.rechoice_failures.append(f"flips {flips}: change is not the coboundary of the flips")
            c2 = 0 if _is_coboundary(atlas, a2) else 1
            if c2 != cls:
                res.rechoice_failures.append(f"flips {flips}: class changed")
            if parity_violations(atlas, a2):
                res.rechoice_failures.append(f"flips {flips}: parity fails")
        res.rechoices = count
    return res


# ---------------------------------------------------------------- subatlases


@dataclass
class SubatlasMap:
    source: Atlas
    target: Atlas
    objects: dict
    morphisms: dict


def inclusion_map(source: Atlas, target: Atlas) -> SubatlasMap:
    """The identity on object and morphism keys, for an atlas extended by new charts."""
    bs = build_bk(source)
    return SubatlasMap(source, target, {o: o for o in bs.objects}, {m: m for m in bs.mor_keys})


def subatlas_check(iota: SubatlasMap) -> LawReport:
    """Injective functor B_K -> B_K'' commuting with the footprint maps."""
    rep = LawReport()
    bs, bt = build_bk(iota.source), build_bk(iota.target)
    om, mm = iota.objects, iota.morphisms
    tobj, tmor = bt.obj_index, bt.mor_index

    miss = [o for o in bs.objects if om.get(o) not in tobj]
    miss += [m for m in bs.mor_keys if mm.get(m) not in tmor]
    rep.record("total", len(miss), [f"{k!r} has no valid image" for k in miss], bs.n_obj + bs.n_mor)
    if miss:
        return rep
    inj = (len({om[o] for o in bs.objects}) != bs.n_obj) + (len({mm[m] for m in bs.mor_keys}) != bs.n_mor)
    rep.record("injective", inj, ["two objects or morphisms share an image"] if inj else [], 2)

    obj_img = np.array([tobj[om[o]] for o in bs.objects], dtype=np.int64)
    mor_img = np.array([tmor[mm[m]] for m in bs.mor_keys], dtype=np.int64)
    st_bad = np.flatnonzero((bt.src[mor_img] != obj_img[bs.src]) | (bt.tgt[mor_img] != obj_img[bs.tgt]))
    rep.record("ends", len(st_bad), [f"ends of {bs.mor_keys[k]!r} are not preserved" for k in st_bad[:5]], bs.n_mor)

    id_bad = np.flatnonzero(mor_img[bs.identity] != bt.identity[obj_img])
    rep.record("identities", len(id_bad), [f"identity of {bs.objects[k]!r}" for k in id_bad[:5]], bs.n_obj)

    tab = bs.table
    a_list, b_list = [], []
    for y in range(bs.n_obj):
        ins, outs = tab.ins(y), tab.outs(y)
        if len(ins) and len(outs):
            a_list.append(np.repeat(ins, len(outs)))
            b_list.append(np.tile(outs, len(ins)))
    if a_list:
        a, b = np.concatenate(a_list), np.concatenate(b_list)
        ab = tab.lookup(a, b)
        ok = (bt.tgt[mor_img[a]] == bt.src[mor_img[b]])
        img = np.full(len(a), -1, dtype=np.int64)
        img[ok] = bt.table.lookup(mor_img[a][ok], mor_img[b][ok])
        fbad = np.flatnonzero(img != mor_img[ab])
        wit = [f"image of {bs.mor_keys[a[k]]!r} then {bs.mor_keys[b[k]]!r} is not the composite of the images" for k in fbad[:5]]
        rep.record("functorial", len(fbad), wit, len(a))
    else:
        rep.record("functorial", 0, [], 0)

    src_psi = {o: iota.source.charts[o[0]].psi[o[1]] for o in bs.objects}
    fp_bad = [o for o in bs.objects if iota.target.charts[om[o][0]].psi[om[o][1]] != src_psi[o]]
    rep.record("footprint", len(fp_bad), [f"psi changes at {o!r}" for o in fp_bad[:5]], bs.n_obj)
    return rep


def misroute(iota: SubatlasMap) -> tuple[SubatlasMap, tuple]:
    """Swap the images of two non-identity morphisms with the same source chart."""
    keys = [m for m in iota.morphisms if m[0] != m[1]]
    keys.sort(key=lambda m: (index_key(m[0]), index_key(m[1]), str(m[2]), str(m[3])))
    a = keys[0]
    b = next(m for m in keys[1:] if m[0] == a[0] and m[1] == a[1] and iota.morphisms[m] != iota.morphisms[a])
    mm = dict(iota.morphisms)
    mm[a], mm[b] = mm[b], mm[a]
    return SubatlasMap(iota.source, iota.target, dict(iota.objects), mm), (a, b)
