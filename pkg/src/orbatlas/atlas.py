"""Strict orbifold atlases over finite spaces, their validator, and products."""

from __future__ import annotations

from functools import cached_property
from itertools import combinations
from typing import Iterable

from .finspace import FiniteSpace, SpaceError, SpaceMap, quotient_space
from .groups import FiniteGroup, ProductGroups, project_tuple

Index = frozenset


class AtlasError(ValueError):
    pass


def index_key(index: Iterable) -> tuple:
    s = sorted(index)
    return (len(s), s)


def index_label(index: Iterable) -> str:
    return "{" + ",".join(sorted(index)) + "}"


class Chart:
    """A chart (W_I, Gamma_I, psi_I).

    ``actions[i][g][x]`` is the action of ``g`` in the factor Gamma_i on ``x``.
    """

    def __init__(self, index: Iterable, domain: FiniteSpace, actions: dict, psi: dict, orientation: dict | None = None):
        self.index = frozenset(index)
        self.domain = domain
        self.actions = {i: {g: dict(m) for g, m in per.items()} for i, per in actions.items()}
        self.psi = dict(psi)
        self.orientation = dict(orientation) if orientation is not None else None

    def __repr__(self) -> str:
        return f"Chart({index_label(self.index)}, {len(self.domain)} points)"

    @property
    def points(self) -> tuple:
        return self.domain.points

    def act(self, gamma, x):
        """Apply a group tuple; components outside this chart's index are ignored."""
        for i, g in gamma:
            if i in self.index:
                x = self.actions[i][g][x]
        return x

    def footprint(self) -> frozenset:
        return frozenset(self.psi.values())


class Atlas:
    def __init__(
        self,
        base: FiniteSpace,
        groups: ProductGroups,
        basic_footprints: dict,
        charts: dict,
        coverings: dict,
        indices: Iterable | None = None,
        generalized: bool = False,
        name: str = "",
    ):
        self.base = base
        self.groups = groups
        self.basic_footprints = {i: frozenset(f) for i, f in basic_footprints.items()}
        self.basic = tuple(sorted(self.basic_footprints))
        self.charts = {frozenset(k): v for k, v in charts.items()}
        self.coverings = {(frozenset(a), frozenset(b)): dict(m) for (a, b), m in coverings.items()}
        self.generalized = generalized
        self.name = name
        if indices is None:
            indices = self.charts.keys()
        self.indices = tuple(sorted({frozenset(i) for i in indices}, key=index_key))

    def __repr__(self) -> str:
        return f"Atlas({self.name or '?'}, {len(self.indices)} charts, |Y|={len(self.base)})"

    def footprint(self, index: Iterable) -> frozenset:
        idx = list(index)
        if not idx:
            return frozenset(self.base.points)
        out = self.basic_footprints[idx[0]]
        for i in idx[1:]:
            out = out & self.basic_footprints[i]
        return out

    def chart(self, index: Iterable) -> Chart:
        return self.charts[frozenset(index)]

    def rho(self, sub: Iterable, sup: Iterable) -> dict:
        return self.coverings[(frozenset(sub), frozenset(sup))]

    def pairs(self) -> list[tuple[Index, Index]]:
        """All I <= J in the index set."""
        return [(I, J) for J in self.indices for I in self.indices if I <= J]

    def is_index(self, index) -> bool:
        return frozenset(index) in self._index_set

    @cached_property
    def _index_set(self) -> frozenset:
        return frozenset(self.indices)

    @cached_property
    def indexed(self):
        from .indexed import IndexedAtlas

        return IndexedAtlas(self)

    def group_order(self, index) -> int:
        return self.groups.order(index)


class ValidationReport:
    AXIOMS = (
        "cover",
        "index_set",
        "chart_action",
        "footprint",
        "footprint_quotient",
        "freeness",
        "covering_map",
        "compatibility",
        "equivariance",
        "covering_quotient",
        "cocycle",
        "stabilizer",
        "orientation",
    )
    LIMIT = 25

    def __init__(self):
        self.failures: dict[str, list[str]] = {a: [] for a in self.AXIOMS}
        self.counts: dict[str, int] = {a: 0 for a in self.AXIOMS}

    def fail(self, axiom: str, witness: str) -> None:
        self.counts[axiom] += 1
        if len(self.failures[axiom]) < self.LIMIT:
            self.failures[axiom].append(witness)

    @property
    def passed(self) -> bool:
        return not any(self.counts.values())

    def failed_axioms(self) -> list[str]:
        return [a for a in self.AXIOMS if self.counts[a]]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "axioms": {a: {"passed": not self.counts[a], "failures": self.counts[a], "witnesses": self.failures[a]} for a in self.AXIOMS},
        }

    def text(self) -> str:
        lines = []
        for a in self.AXIOMS:
            if self.counts[a]:
                lines.append(f"FAIL {a} ({self.counts[a]} witnesses)")
                lines.extend(f"  - {w}" for w in self.failures[a])
            else:
                lines.append(f"ok   {a}")
        lines.append("atlas valid" if self.passed else "atlas INVALID")
        return "\n".join(lines)


def _quotient_matches(space: FiniteSpace, blocks: list, f: dict, target: FiniteSpace) -> str | None:
    """None if the map ``f`` (constant on blocks) induces an isomorphism space/blocks -> target."""
    for b in blocks:
        images = {f[x] for x in b}
        if len(images) != 1:
            return f"block {sorted(map(str, b))[:4]} has several images {sorted(map(str, images))[:4]}"
    seen = {}
    for b in blocks:
        img = f[next(iter(b))]
        if img in seen:
            return f"two blocks share the image {img!r}"
        seen[img] = b
    missing = [y for y in target.points if y not in seen]
    if missing:
        return f"points {missing[:4]!r} are not images"
    q, proj = quotient_space(space, blocks)
    ind = {p: f[next(iter(p))] for p in q.points}
    try:
        sm = SpaceMap(q, target, ind)
    except SpaceError as exc:
        return str(exc)
    if not sm.is_isomorphism():
        for a in q.points:
            for b in q.points:
                if q.leq(a, b) != target.leq(ind[a], ind[b]):
                    return f"order mismatch between images {ind[a]!r} and {ind[b]!r}"
        return "induced map is not an isomorphism"
    return None


def _orbits(chart: Chart, groups: ProductGroups, index) -> list[frozenset]:
    elems = groups.elements(index)
    seen: set = set()
    out = []
    for x in chart.points:
        if x in seen:
            continue
        orb = frozenset(chart.act(g, x) for g in elems)
        seen |= orb
        out.append(orb)
    return out


def validate_atlas(atlas: Atlas) -> ValidationReport:
    rep = ValidationReport()
    Y = atlas.base
    G = atlas.groups

    # cover and index set
    covered: set = set()
    for i, f in atlas.basic_footprints.items():
        if not f <= set(Y.points):
            rep.fail("cover", f"footprint of {i} has unknown points")
            continue
        if not Y.is_open(f):
            rep.fail("cover", f"footprint of {i} is not open")
        covered |= f
    for y in Y.points:
        if y not in covered:
            rep.fail("cover", f"point {y!r} lies in no basic footprint")
    for i in atlas.basic:
        if i not in G.factors:
            rep.fail("index_set", f"basic index {i} has no group")
    nonempty = set()
    for r in range(1, len(atlas.basic) + 1):
        for c in combinations(atlas.basic, r):
            if atlas.footprint(c):
                nonempty.add(frozenset(c))
    idx = set(atlas.indices)
    if not atlas.generalized:
        for I in sorted(nonempty - idx, key=index_key):
            rep.fail("index_set", f"{index_label(I)} has nonempty footprint but no chart")
        for I in sorted(idx - nonempty, key=index_key):
            rep.fail("index_set", f"{index_label(I)} has empty footprint")
    else:
        for I in sorted(idx - nonempty, key=index_key):
            rep.fail("index_set", f"{index_label(I)} has empty footprint")
        for I in idx:
            for J in nonempty:
                if I < J and J not in idx:
                    rep.fail("index_set", f"{index_label(J)} contains {index_label(I)} and has nonempty footprint but is missing")
        union = set()
        for I in idx:
            union |= atlas.footprint(I)
        for y in Y.points:
            if y not in union:
                rep.fail("index_set", f"point {y!r} lies in no footprint F_I")
    for I in atlas.indices:
        if I not in atlas.charts:
            rep.fail("index_set", f"no chart for {index_label(I)}")
    if rep.counts["index_set"] or rep.counts["cover"]:
        return rep

    for I in atlas.indices:
        _check_chart(atlas, atlas.charts[I], rep)
    if rep.counts["chart_action"] or rep.counts["footprint"]:
        return rep

    # freeness of Gamma_{J \ I} on W_J
    for I, J in atlas.pairs():
        if I == J:
            continue
        ch = atlas.charts[J]
        for g in G.elements(J - I):
            if G.is_identity(g):
                continue
            for x in ch.points:
                if ch.act(g, x) == x:
                    rep.fail("freeness", f"{_fmt(g)} in Gamma_{index_label(J - I)} fixes {x!r} in W_{index_label(J)}")

    for I, J in atlas.pairs():
        if (I, J) not in atlas.coverings:
            rep.fail("covering_map", f"missing covering map rho_{index_label(I)}{index_label(J)}")
            continue
        _check_covering(atlas, I, J, rep)
    if rep.counts["covering_map"]:
        return rep

    for J in atlas.indices:
        r = atlas.coverings[(J, J)]
        for x in atlas.charts[J].points:
            if r[x] != x:
                rep.fail("cocycle", f"rho_{index_label(J)}{index_label(J)} moves {x!r} to {r[x]!r}")
    for I, J in atlas.pairs():
        for K in atlas.indices:
            if J <= K and I != J and J != K:
                rij, rjk, rik = atlas.coverings[(I, J)], atlas.coverings[(J, K)], atlas.coverings[(I, K)]
                for z in atlas.charts[K].points:
                    if rij[rjk[z]] != rik[z]:
                        rep.fail("cocycle", f"rho_{index_label(I)}{index_label(J)} o rho_{index_label(J)}{index_label(K)} != rho_{index_label(I)}{index_label(K)} at {z!r}")
    _check_orientation(atlas, rep)
    return rep


def _fmt(gamma) -> str:
    return "(" + ",".join(f"{i}:{g}" for i, g in gamma) + ")"


def _check_chart(atlas: Atlas, ch: Chart, rep: ValidationReport) -> None:
    I = ch.index
    G = atlas.groups
    name = index_label(I)
    X = ch.domain
    for i in sorted(I):
        grp: FiniteGroup = G.factors.get(i)
        if grp is None:
            rep.fail("chart_action", f"W_{name}: no group for factor {i}")
            return
        per = ch.actions.get(i)
        if per is None:
            rep.fail("chart_action", f"W_{name}: no action of factor {i}")
            return
        for g in grp.elements:
            m = per.get(g)
            if m is None or any(x not in m for x in X.points) or any(m[x] not in X for x in X.points):
                rep.fail("chart_action", f"W_{name}: action of {i}:{g} is not a total self-map")
                return
        for x in X.points:
            if per[grp.identity][x] != x:
                rep.fail("chart_action", f"W_{name}: identity of factor {i} moves {x!r}")
        for g in grp.elements:
            for h in grp.elements:
                gh = grp.mul(g, h)
                for x in X.points:
                    if per[g][per[h][x]] != per[gh][x]:
                        rep.fail("chart_action", f"W_{name}: {i}:{g} after {i}:{h} differs from {i}:{gh} at {x!r}")
                        break
        for g in grp.elements:
            m = per[g]
            if len(set(m.values())) != len(X):
                rep.fail("chart_action", f"W_{name}: {i}:{g} is not bijective")
                continue
            for y in X.points:
                for x in X.down(y):
                    if not X.leq(m[x], m[y]):
                        rep.fail("chart_action", f"W_{name}: {i}:{g} breaks the order {x!r} <= {y!r}")
                        break
    labels = sorted(I)
    for a, b in combinations(labels, 2):
        for g in G.factors[a].elements:
            for h in G.factors[b].elements:
                for x in X.points:
                    if ch.actions[a][g][ch.actions[b][h][x]] != ch.actions[b][h][ch.actions[a][g][x]]:
                        rep.fail("chart_action", f"W_{name}: factors {a}:{g} and {b}:{h} do not commute at {x!r}")
                        break
    # footprint map
    Y = atlas.base
    missing = [x for x in X.points if x not in ch.psi]
    if missing:
        rep.fail("footprint", f"psi_{name} undefined at {missing[:3]!r}")
        return
    stray = [x for x in X.points if ch.psi[x] not in Y]
    if stray:
        rep.fail("footprint", f"psi_{name} leaves Y at {stray[:3]!r}")
        return
    for y in X.points:
        for x in X.down(y):
            if not Y.leq(ch.psi[x], ch.psi[y]):
                rep.fail("footprint", f"psi_{name} breaks the order {x!r} <= {y!r}")
    F = atlas.footprint(I)
    img = ch.footprint()
    if img != F:
        extra = sorted(map(str, img - F))[:3]
        lack = sorted(map(str, F - img))[:3]
        rep.fail("footprint", f"psi_{name}(W) != F_{name}: extra {extra}, missing {lack}")
    if rep.counts["chart_action"]:
        return
    for g in G.elements(I):
        for x in X.points:
            if ch.psi[ch.act(g, x)] != ch.psi[x]:
                rep.fail("footprint", f"psi_{name} is not invariant: {_fmt(g)} moves {x!r} across fibers")
                break
    if rep.counts["footprint"]:
        return
    err = _quotient_matches(X, _orbits(ch, G, I), ch.psi, Y.subspace(F))
    if err:
        rep.fail("footprint_quotient", f"W_{name}/Gamma_{name} -> F_{name}: {err}")


def _check_covering(atlas: Atlas, I, J, rep: ValidationReport) -> None:
    G = atlas.groups
    ci, cj = atlas.charts[I], atlas.charts[J]
    r = atlas.coverings[(I, J)]
    tag = f"rho_{index_label(I)}{index_label(J)}"
    bad = [y for y in cj.points if y not in r or r[y] not in ci.domain]
    if bad:
        rep.fail("covering_map", f"{tag} undefined or leaves W_{index_label(I)} at {bad[:3]!r}")
        return
    Wi, Wj = ci.domain, cj.domain
    for y in Wj.points:
        for x in Wj.down(y):
            if not Wi.leq(r[x], r[y]):
                rep.fail("covering_map", f"{tag} breaks the order {x!r} <= {y!r}")
    FJ = atlas.footprint(J)
    wij = frozenset(x for x in Wi.points if ci.psi[x] in FJ)
    img = frozenset(r.values())
    if img != wij:
        rep.fail("covering_map", f"{tag} image differs from psi^-1(F_J): extra {sorted(map(str, img - wij))[:3]}, missing {sorted(map(str, wij - img))[:3]}")
    for y in Wj.points:
        if ci.psi[r[y]] != cj.psi[y]:
            rep.fail("compatibility", f"psi_{index_label(I)}({tag}({y!r})) = {ci.psi[r[y]]!r} but psi_{index_label(J)}({y!r}) = {cj.psi[y]!r}")
    for g in G.elements(J):
        gi = project_tuple(g, I)
        for y in Wj.points:
            if r[cj.act(g, y)] != ci.act(gi, r[y]):
                rep.fail("equivariance", f"{tag}({_fmt(g)}.{y!r}) != {_fmt(gi)}.{tag}({y!r})")
    if rep.counts["covering_map"]:
        return
    if I != J:
        err = _quotient_matches(Wj, _orbits(cj, G, J - I), r, Wi.subspace(wij))
        if err:
            rep.fail("covering_quotient", f"W_{index_label(J)}/Gamma_{index_label(J - I)} -> W_{index_label(I)}{index_label(J)}: {err}")
    # stabilizers: projection Gamma_J^y -> Gamma_I^x must be bijective
    elems_j = G.elements(J)
    elems_i = G.elements(I)
    for y in Wj.points:
        x = r[y]
        sj = [g for g in elems_j if cj.act(g, y) == y]
        si = {g for g in elems_i if ci.act(g, x) == x}
        img = [project_tuple(g, I) for g in sj]
        if len(set(img)) != len(sj) or set(img) != si:
            rep.fail("stabilizer", f"stabilizer of {y!r} ({len(sj)}) does not project onto stabilizer of {x!r} ({len(si)}) under {tag}")


def _check_orientation(atlas: Atlas, rep: ValidationReport) -> None:
    oriented = {I for I in atlas.indices if atlas.charts[I].orientation is not None}
    if not oriented:
        return
    if oriented != set(atlas.indices):
        rep.fail("orientation", "orientation given on some charts only")
        return
    G = atlas.groups
    for I in atlas.indices:
        ch = atlas.charts[I]
        o = ch.orientation
        for x in ch.points:
            if o.get(x) not in (1, -1):
                rep.fail("orientation", f"W_{index_label(I)}: point {x!r} has no sign")
                return
        for g in G.elements(I):
            for x in ch.points:
                if o[ch.act(g, x)] != o[x]:
                    rep.fail("orientation", f"W_{index_label(I)}: {_fmt(g)} reverses the sign at {x!r}")
    for I, J in atlas.pairs():
        oi, oj = atlas.charts[I].orientation, atlas.charts[J].orientation
        for y, x in atlas.coverings[(I, J)].items():
            if oi[x] != oj[y]:
                rep.fail("orientation", f"rho_{index_label(I)}{index_label(J)} reverses the sign at {y!r}")


# ---------------------------------------------------------------- constructors


def pair_id(a, b) -> str:
    return f"({a},{b})"


def product_atlas(k1: Atlas, k2: Atlas, left: str = "L", right: str = "R") -> Atlas:
    """Product charts indexed by disjoint unions I1 + I2, as a generalized atlas."""
    for k in (k1, k2):
        rep = validate_atlas(k)
        if not rep.passed:
            raise AtlasError(f"input atlas {k.name!r} is invalid: {rep.failed_axioms()}")
    Y = _product_space(k1.base, k2.base)
    lab1 = {i: f"{left}{i}" for i in k1.basic}
    lab2 = {i: f"{right}{i}" for i in k2.basic}
    factors = {lab1[i]: k1.groups[i] for i in k1.basic}
    factors.update({lab2[i]: k2.groups[i] for i in k2.basic})
    groups = ProductGroups(factors)
    feet = {}
    for i in k1.basic:
        feet[lab1[i]] = {pair_id(a, b) for a in k1.basic_footprints[i] for b in k2.base.points}
    for j in k2.basic:
        feet[lab2[j]] = {pair_id(a, b) for a in k1.base.points for b in k2.basic_footprints[j]}

    def joint(I1, I2):
        return frozenset(lab1[i] for i in I1) | frozenset(lab2[j] for j in I2)

    charts, coverings = {}, {}
    for I1 in k1.indices:
        for I2 in k2.indices:
            c1, c2 = k1.charts[I1], k2.charts[I2]
            dom = _product_space(c1.domain, c2.domain)
            acts = {}
            for i in I1:
                acts[lab1[i]] = {g: {pair_id(x, y): pair_id(m[x], y) for x in c1.points for y in c2.points} for g, m in c1.actions[i].items()}
            for j in I2:
                acts[lab2[j]] = {g: {pair_id(x, y): pair_id(x, m[y]) for x in c1.points for y in c2.points} for g, m in c2.actions[j].items()}
            psi = {pair_id(x, y): pair_id(c1.psi[x], c2.psi[y]) for x in c1.points for y in c2.points}
            orient = None
            if c1.orientation is not None and c2.orientation is not None:
                orient = {pair_id(x, y): c1.orientation[x] * c2.orientation[y] for x in c1.points for y in c2.points}
            charts[joint(I1, I2)] = Chart(joint(I1, I2), dom, acts, psi, orient)
    for I1, J1 in k1.pairs():
        for I2, J2 in k2.pairs():
            r1, r2 = k1.coverings[(I1, J1)], k2.coverings[(I2, J2)]
            coverings[(joint(I1, I2), joint(J1, J2))] = {pair_id(x, y): pair_id(r1[x], r2[y]) for x in k1.charts[J1].points for y in k2.charts[J2].points}
    return Atlas(Y, groups, feet, charts, coverings, indices=charts.keys(), generalized=True, name=f"{k1.name}x{k2.name}")


def _product_space(a: FiniteSpace, b: FiniteSpace) -> FiniteSpace:
    rel = [(pair_id(x, y), pair_id(x2, y)) for x, x2 in a.covers() for y in b.points]
    rel += [(pair_id(x, y), pair_id(x, y2)) for y, y2 in b.covers() for x in a.points]
    return FiniteSpace([pair_id(x, y) for x in a.points for y in b.points], rel)


def one_chart_atlas(space: FiniteSpace, label: str = "1", name: str = "manifold") -> Atlas:
    from .groups import trivial_group

    groups = ProductGroups({label: trivial_group()})
    I = frozenset([label])
    ch = Chart(I, space, {label: {"e": {x: x for x in space.points}}}, {x: x for x in space.points})
    return Atlas(space, groups, {label: space.points}, {I: ch}, {(I, I): {x: x for x in space.points}}, name=name)


def add_trivial_chart(atlas: Atlas, footprint: Iterable, label: str) -> Atlas:
    """Extend by a basic chart with trivial group that is the identity over ``footprint``.

    New charts W_{I+label} are the restrictions of W_I over F_I n footprint; the
    result embeds the original atlas as a subatlas.
    """
    from .groups import trivial_group

    foot = frozenset(footprint)
    if label in atlas.basic_footprints:
        raise AtlasError(f"label {label!r} already used")
    Y = atlas.base
    if not Y.is_open(foot):
        raise AtlasError("new footprint must be open")
    factors = dict(atlas.groups.factors)
    factors[label] = trivial_group()
    groups = ProductGroups(factors)
    feet = dict(atlas.basic_footprints)
    feet[label] = foot
    charts = dict(atlas.charts)
    coverings = dict(atlas.coverings)
    new = frozenset([label])
    charts[new] = Chart(new, Y.subspace(foot), {label: {"e": {y: y for y in foot}}}, {y: y for y in foot})
    coverings[(new, new)] = {y: y for y in foot}
    added = {}
    for I in atlas.indices:
        ch = atlas.charts[I]
        keep = [x for x in ch.points if ch.psi[x] in foot]
        if not keep:
            continue
        J = I | new
        acts = {i: {g: {x: m[x] for x in keep} for g, m in per.items()} for i, per in ch.actions.items()}
        acts[label] = {"e": {x: x for x in keep}}
        orient = None if ch.orientation is None else {x: ch.orientation[x] for x in keep}
        charts[J] = Chart(J, ch.domain.subspace(keep), acts, {x: ch.psi[x] for x in keep}, orient)
        added[J] = I
    for J, I in added.items():
        keep = charts[J].points
        coverings[(J, J)] = {x: x for x in keep}
        coverings[(I, J)] = {x: x for x in keep}
        coverings[(new, J)] = {x: charts[J].psi[x] for x in keep}
        for H in atlas.indices:
            if H < I:
                r = atlas.coverings[(H, I)]
                coverings[(H, J)] = {x: r[x] for x in keep}
        for J2, I2 in added.items():
            if I2 < I:
                r = atlas.coverings[(I2, I)]
                coverings[(J2, J)] = {x: r[x] for x in keep}
    return Atlas(Y, groups, feet, charts, coverings, generalized=atlas.generalized, name=f"{atlas.name}+{label}")
