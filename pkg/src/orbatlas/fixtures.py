"""Generators for the standard atlases: football, point orbifolds, Z/2 gerbes, covers, products."""

from __future__ import annotations

from itertools import combinations

from .atlas import Atlas, AtlasError, Chart, one_chart_atlas, product_atlas
from .finspace import FiniteSpace, barycentric_subdivision
from .groups import (
    FiniteGroup,
    ProductGroups,
    cyclic_group,
    direct_product,
    symmetric_group_3,
    trivial_group,
)

FIXTURES = ("football", "point-orbifold", "gerbe-trivial", "gerbe-nontrivial", "manifold-cover", "product")


def circle_points(m: int) -> list[str]:
    return [f"a{k}" for k in range(m)] + [f"b{k}" for k in range(m)]


def circle_covers(m: int) -> list[tuple[str, str]]:
    return [(f"b{k}", f"a{k}") for k in range(m)] + [(f"b{k}", f"a{(k + 1) % m}") for k in range(m)]


def rotate(c: str, r: int, m: int) -> str:
    return f"{c[0]}{(int(c[1:]) + r) % m}"


def reduce_mod(c: str, m: int) -> str:
    return f"{c[0]}{int(c[1:]) % m}"


FENCE = ["p0", "i0", "p1", "i1", "p2", "i2", "p3", "i3", "p4", "i4", "p5"]


def fence_covers(layers: list[str]) -> list[tuple[str, str]]:
    out = []
    for k in range(5):
        for p, i in ((f"p{k}", f"i{k}"), (f"p{k + 1}", f"i{k}")):
            if p in layers and i in layers:
                out.append((p, i))
    return out


def band(m: int, layers: list[str], extra=(), extra_covers=()) -> FiniteSpace:
    pts = [f"{c}.{t}" for c in circle_points(m) for t in layers]
    rel = [(f"{lo}.{t}", f"{hi}.{t}") for lo, hi in circle_covers(m) for t in layers]
    rel += [(f"{c}.{lo}", f"{c}.{hi}") for c in circle_points(m) for lo, hi in fence_covers(layers)]
    return FiniteSpace(list(extra) + pts, rel + list(extra_covers))


def split(p: str) -> tuple[str, str]:
    c, t = p.split(".")
    return c, t


def sphere_base(n: int) -> tuple[FiniteSpace, dict]:
    """Y = {N, S} plus the band C_n x fence, with the poles below the end layers."""
    cov = [("N", f"{c}.p0") for c in circle_points(n)] + [("S", f"{c}.p5") for c in circle_points(n)]
    Y = band(n, FENCE, ["N", "S"], cov)
    feet = {
        "1": {"N"} | {p for p in Y.points if "." in p and split(p)[1] != "p5"},
        "2": {"S"} | {p for p in Y.points if "." in p and split(p)[1] != "p0"},
    }
    return Y, feet


NORTH_LAYERS = FENCE[:-1]
SOUTH_LAYERS = FENCE[1:]
MIDDLE_LAYERS = FENCE[1:-1]


def football(n: int = 1) -> Atlas:
    """The Z2/Z3 football over the sphere model; W_12 is C_6n x middle layers with Z2 x Z3 acting freely."""
    if n < 1:
        raise AtlasError("football needs n >= 1")
    Y, feet = sphere_base(n)
    z2, z3 = cyclic_group(2), cyclic_group(3)
    groups = ProductGroups({"1": z2, "2": z3})
    m1, m2, m12 = 2 * n, 3 * n, 6 * n
    w1 = band(m1, NORTH_LAYERS, ["N*"], [("N*", f"{c}.p0") for c in circle_points(m1)])
    w2 = band(m2, SOUTH_LAYERS, ["S*"], [("S*", f"{c}.p5") for c in circle_points(m2)])
    w12 = band(m12, MIDDLE_LAYERS)

    def rot_map(space, r, m, fixed):
        out = {}
        for p in space.points:
            if p == fixed:
                out[p] = p
            else:
                c, t = split(p)
                out[p] = f"{rotate(c, r, m)}.{t}"
        return out

    def down_map(space, m, pole_from=None, pole_to=None):
        out = {}
        for p in space.points:
            if p == pole_from:
                out[p] = pole_to
            else:
                c, t = split(p)
                out[p] = f"{reduce_mod(c, m)}.{t}"
        return out

    I1, I2, I12 = frozenset("1"), frozenset("2"), frozenset({"1", "2"})
    ch1 = Chart(I1, w1, {"1": {str(k): rot_map(w1, k * n, m1, "N*") for k in range(2)}}, down_map(w1, n, "N*", "N"))
    ch2 = Chart(I2, w2, {"2": {str(k): rot_map(w2, k * n, m2, "S*") for k in range(3)}}, down_map(w2, n, "S*", "S"))
    ch12 = Chart(
        I12,
        w12,
        {"1": {str(k): rot_map(w12, 3 * n * k, m12, None) for k in range(2)}, "2": {str(k): rot_map(w12, 4 * n * k, m12, None) for k in range(3)}},
        down_map(w12, n),
    )
    charts = {I1: ch1, I2: ch2, I12: ch12}
    coverings = {(I, I): {p: p for p in charts[I].points} for I in charts}
    coverings[(I1, I12)] = down_map(w12, m1)
    coverings[(I2, I12)] = down_map(w12, m2)
    return Atlas(Y, groups, feet, charts, coverings, name="football")


def manifold_cover(n: int = 2) -> Atlas:
    """The football base covered by its two footprints with trivial groups."""
    Y, feet = sphere_base(n)
    triv = trivial_group()
    groups = ProductGroups({"1": triv, "2": trivial_group()})
    charts, coverings = {}, {}
    for I in (frozenset("1"), frozenset("2"), frozenset({"1", "2"})):
        F = set(Y.points)
        for i in I:
            F &= feet[i]
        dom = Y.subspace(F)
        charts[I] = Chart(I, dom, {i: {"e": {p: p for p in dom.points}} for i in I}, {p: p for p in dom.points})
    for J in charts:
        for I in charts:
            if I <= J:
                coverings[(I, J)] = {p: p for p in charts[J].points}
    return Atlas(Y, groups, feet, charts, coverings, name="manifold-cover")


# ---------------------------------------------------------------- point orbifolds


def point_group_data(group: str, sub: str) -> tuple[FiniteGroup, FiniteGroup, dict]:
    """(Gamma_i, S, embedding S -> Gamma_i) for the named pair."""
    if group == "Z2":
        G = cyclic_group(2)
    elif group == "Z3":
        G = cyclic_group(3)
    elif group == "Z2xZ2":
        G = direct_product(cyclic_group(2), cyclic_group(2))
    elif group == "S3":
        G = symmetric_group_3()
    else:
        raise AtlasError(f"unknown group {group!r}")
    if sub == "id":
        return G, trivial_group(), {"e": G.identity}
    if sub == "Z2":
        S = cyclic_group(2)
        gen = {"Z2": "1", "Z2xZ2": "1,1"}.get(group)
        if gen is None:
            raise AtlasError(f"no Z2 inside {group}")
        return G, S, {"0": G.identity, "1": gen}
    if sub == "Z3":
        S = cyclic_group(3)
        if group == "S3":
            return G, S, {"0": "012", "1": "120", "2": "201"}
        if group == "Z3":
            return G, S, {"0": "0", "1": "1", "2": "2"}
        raise AtlasError(f"no Z3 inside {group}")
    raise AtlasError(f"unknown subgroup {sub!r}")


def point_orbifold_fixture(group: str = "Z2", sub: str = "id", charts: int = 2):
    from .completion import PointOrbifold

    G, S, emb = point_group_data(group, sub)
    factors = [G] * charts
    return PointOrbifold(factors, S, [emb] * charts, name=f"point-{group}-{sub}-{charts}")


# ---------------------------------------------------------------- Z/2 gerbes

TETRA_VERTICES = ["1", "2", "3", "4"]


def tetrahedron_sphere() -> FiniteSpace:
    v = [f"v{i}" for i in TETRA_VERTICES]
    e = [f"e{a}{b}" for a, b in combinations(TETRA_VERTICES, 2)]
    f = [f"f{a}{b}{c}" for a, b, c in combinations(TETRA_VERTICES, 3)]
    rel = []
    for a, b in combinations(TETRA_VERTICES, 2):
        rel += [(f"v{a}", f"e{a}{b}"), (f"v{b}", f"e{a}{b}")]
    for a, b, c in combinations(TETRA_VERTICES, 3):
        rel += [(f"e{a}{b}", f"f{a}{b}{c}"), (f"e{a}{c}", f"f{a}{b}{c}"), (f"e{b}{c}", f"f{a}{b}{c}")]
    return FiniteSpace(v + e + f, rel)


def _normalize(bits: str) -> str:
    if bits and bits[0] == "1":
        return "".join("0" if b == "1" else "1" for b in bits)
    return bits


def _restrict(bits: str, sup: list, sub: list) -> str:
    return "".join(bits[sup.index(i)] for i in sub)


def _add(a: str, b: str) -> str:
    return "".join("1" if x != y else "0" for x, y in zip(a, b))


def sheet_labels(k: int) -> list[str]:
    return [_normalize(format(n, f"0{k}b")) for n in range(2 ** k) if format(n, f"0{k}b")[0] == "0"] if k else [""]


def z2_gerbe_atlas(Y: FiniteSpace, feet: dict, twists: dict, name: str) -> Atlas:
    """Trivially acting Z/2 gerbe: W_I = F_I x (Z2^I / diagonal).

    ``twists[(I, J)]`` is a bit string over sorted(I) added to the labels by rho_IJ.
    """
    labels = sorted(feet)
    groups = ProductGroups({i: cyclic_group(2) for i in labels})
    charts, coverings = {}, {}
    for r in range(1, len(labels) + 1):
        for c in combinations(labels, r):
            I = frozenset(c)
            F = set(Y.points)
            for i in I:
                F &= set(feet[i])
            if not F:
                continue
            order = sorted(I)
            names = sheet_labels(len(order))
            base = Y.subspace(F)
            pts = [f"{y}#{s}" for s in names for y in base.points]
            rel = [(f"{a}#{s}", f"{b}#{s}") for s in names for a, b in base.covers()]
            dom = FiniteSpace(pts, rel)
            acts = {}
            for pos, i in enumerate(order):
                flip = "".join("1" if k == pos else "0" for k in range(len(order)))
                acts[i] = {
                    "0": {p: p for p in pts},
                    "1": {p: f"{p.split('#')[0]}#{_normalize(_add(p.split('#')[1], flip))}" for p in pts},
                }
            charts[I] = Chart(I, dom, acts, {p: p.split("#")[0] for p in pts})
    for J in charts:
        for I in charts:
            if I <= J:
                sup, sub = sorted(J), sorted(I)
                tw = twists.get((I, J), "0" * len(sub))
                coverings[(I, J)] = {p: f"{p.split('#')[0]}#{_normalize(_add(_restrict(p.split('#')[1], sup, sub), tw))}" for p in charts[J].points}
    return Atlas(Y, groups, feet, charts, coverings, name=name)


def gerbe_tetra(nontrivial: bool, fifth_chart: bool = True, subdivide: int = 0) -> Atlas:
    """Vertex stars of the tetrahedron boundary; F_5 is the open face f123.

    The face poset is too coarse for a cover reduction; ``subdivide`` pulls
    the same cover back along repeated barycentric subdivisions.
    """
    Y = tetrahedron_sphere()
    feet = {i: set(Y.up(f"v{i}")) for i in TETRA_VERTICES}
    if fifth_chart:
        feet["5"] = {"f123"}
    for _ in range(subdivide):
        Y, carrier = barycentric_subdivision(Y, sep="<" if _ == 0 else "|")
        feet = {i: {c for c, top in carrier.items() if top in F} for i, F in feet.items()}
    twists = {}
    if nontrivial:
        twists[(frozenset({"1", "3"}), frozenset({"1", "3", "4"}))] = "01"
    return z2_gerbe_atlas(Y, feet, twists, "gerbe-nontrivial" if nontrivial else "gerbe-trivial")


def gerbe_annulus(nontrivial: bool, n: int = 2) -> Atlas:
    """Two discs over the sphere model; W_12 is a connected double band when nontrivial."""
    Y, feet = sphere_base(n)
    if not nontrivial:
        atlas = z2_gerbe_atlas(Y, feet, {}, "gerbe-trivial-annulus")
        return atlas
    z2 = cyclic_group(2)
    groups = ProductGroups({"1": z2, "2": cyclic_group(2)})
    I1, I2, I12 = frozenset("1"), frozenset("2"), frozenset({"1", "2"})
    charts = {}
    for I, key in ((I1, "1"), (I2, "2")):
        dom = Y.subspace(feet[key])
        charts[I] = Chart(I, dom, {key: {"0": {p: p for p in dom.points}, "1": {p: p for p in dom.points}}}, {p: p for p in dom.points})
    w12 = band(2 * n, MIDDLE_LAYERS)

    def shift(p):
        c, t = split(p)
        return f"{rotate(c, n, 2 * n)}.{t}"

    def down(p):
        c, t = split(p)
        return f"{reduce_mod(c, n)}.{t}"

    acts = {k: {"0": {p: p for p in w12.points}, "1": {p: shift(p) for p in w12.points}} for k in ("1", "2")}
    charts[I12] = Chart(I12, w12, acts, {p: down(p) for p in w12.points})
    coverings = {(I, I): {p: p for p in charts[I].points} for I in charts}
    coverings[(I1, I12)] = {p: down(p) for p in w12.points}
    coverings[(I2, I12)] = {p: down(p) for p in w12.points}
    return Atlas(Y, groups, feet, charts, coverings, name="gerbe-nontrivial-annulus")


def sierpinski_atlas() -> Atlas:
    return one_chart_atlas(FiniteSpace(["s0", "s1"], [("s0", "s1")]), label="1", name="sierpinski")


def build_fixture(name: str, params: dict | None = None):
    """Return the atlas for a fixture name; point-orbifold returns its PointOrbifold."""
    p = dict(params or {})
    if name == "football":
        return football(int(p.get("n", 1)))
    if name == "manifold-cover":
        return manifold_cover(int(p.get("n", 2)))
    if name == "point-orbifold":
        return point_orbifold_fixture(p.get("group", "Z2"), p.get("sub", "id"), int(p.get("charts", 2)))
    if name in ("gerbe-trivial", "gerbe-nontrivial"):
        nontrivial = name == "gerbe-nontrivial"
        if p.get("cover", "tetra") == "annulus":
            return gerbe_annulus(nontrivial, int(p.get("n", 2)))
        return gerbe_tetra(nontrivial, p.get("fifth", "yes") != "no", int(p.get("subdivide", 0)))
    if name == "product":
        left = _simple(p.get("left", "football"))
        right = _simple(p.get("right", "sierpinski"))
        return product_atlas(left, right)
    raise AtlasError(f"unknown fixture {name!r}; choose from {', '.join(FIXTURES)}")


def _simple(name: str) -> Atlas:
    if name == "sierpinski":
        return sierpinski_atlas()
    if name.startswith("point-orbifold"):
        return point_orbifold_fixture().atlas
    atlas = build_fixture(name)
    if not isinstance(atlas, Atlas):
        atlas = atlas.atlas
    return atlas


def fixture_atlas(name: str, params: dict | None = None) -> Atlas:
    obj = build_fixture(name, params)
    return obj if isinstance(obj, Atlas) else obj.atlas
