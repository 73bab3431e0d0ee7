"""Finite T0 spaces as posets.

Convention: ``x <= y`` means ``x`` lies in the closure of ``{y}``.  Open sets
are the up-closed sets, closed sets the down-closed ones.
"""

from __future__ import annotations

from collections import defaultdict
from typing import Hashable, Iterable

Point = Hashable


class SpaceError(ValueError):
    pass


class FiniteSpace:
    def __init__(self, points: Iterable[Point], covers: Iterable[tuple[Point, Point]] = ()):
        self.points = tuple(points)
        self._index = {p: k for k, p in enumerate(self.points)}
        if len(self._index) != len(self.points):
            raise SpaceError("repeated point identifiers")
        below = defaultdict(set)
        for lo, hi in covers:
            if lo not in self._index or hi not in self._index:
                raise SpaceError(f"relation ({lo!r}, {hi!r}) uses an unknown point")
            if lo != hi:
                below[hi].add(lo)
        # down-sets by depth-first search over the given relation
        self._down: dict[Point, frozenset] = {}
        for p in self.points:
            seen = {p}
            stack = [p]
            while stack:
                q = stack.pop()
                for r in below[q]:
                    if r not in seen:
                        seen.add(r)
                        stack.append(r)
            self._down[p] = frozenset(seen)
        up = defaultdict(set)
        for p, ds in self._down.items():
            for q in ds:
                up[q].add(p)
        self._up = {p: frozenset(up[p]) for p in self.points}
        for p in self.points:
            for q in self._down[p]:
                if q != p and p in self._down[q]:
                    raise SpaceError(f"order is not antisymmetric: {p!r} and {q!r} lie in each other's closure")

    @classmethod
    def from_order(cls, points: Iterable[Point], leq) -> "FiniteSpace":
        pts = list(points)
        return cls(pts, [(a, b) for a in pts for b in pts if a != b and leq(a, b)])

    def __len__(self) -> int:
        return len(self.points)

    def __contains__(self, p) -> bool:
        return p in self._index

    def __iter__(self):
        return iter(self.points)

    def __repr__(self) -> str:
        return f"FiniteSpace({len(self.points)} points)"

    def _check(self, subset: Iterable[Point]) -> set:
        s = set(subset)
        bad = [p for p in s if p not in self._index]
        if bad:
            raise SpaceError(f"unknown points {bad[:3]!r}")
        return s

    def leq(self, x: Point, y: Point) -> bool:
        return x in self._down[y]

    def down(self, p: Point) -> frozenset:
        return self._down[p]

    def up(self, p: Point) -> frozenset:
        return self._up[p]

    def closure(self, subset: Iterable[Point]) -> frozenset:
        out: set = set()
        for p in self._check(subset):
            out |= self._down[p]
        return frozenset(out)

    def frontier(self, subset: Iterable[Point]) -> frozenset:
        s = frozenset(self._check(subset))
        return self.closure(s) - s

    def interior(self, subset: Iterable[Point]) -> frozenset:
        s = self._check(subset)
        return frozenset(p for p in s if self._up[p] <= s)

    def minimal_open_nbhd(self, p: Point) -> frozenset:
        if p not in self._index:
            raise SpaceError(f"unknown point {p!r}")
        return self._up[p]

    def up_closure(self, subset: Iterable[Point]) -> frozenset:
        out: set = set()
        for p in self._check(subset):
            out |= self._up[p]
        return frozenset(out)

    def is_open(self, subset: Iterable[Point]) -> bool:
        s = self._check(subset)
        return all(self._up[p] <= s for p in s)

    def is_closed(self, subset: Iterable[Point]) -> bool:
        s = self._check(subset)
        return all(self._down[p] <= s for p in s)

    def shrink(self, subset: Iterable[Point]) -> frozenset:
        """The largest open set whose closure lies inside ``subset``."""
        s = self._check(subset)
        inner = {p for p in self.points if self._down[p] <= s}
        return frozenset(p for p in inner if self._up[p] <= inner)

    def covers(self) -> list[tuple[Point, Point]]:
        """Hasse diagram: pairs (lower, upper) with nothing strictly between."""
        out = []
        for hi in self.points:
            strict = self._down[hi] - {hi}
            for lo in strict:
                if not any(lo in self._down[mid] for mid in strict if mid != lo):
                    out.append((lo, hi))
        return sorted(out, key=lambda e: (self._index[e[1]], self._index[e[0]]))

    def subspace(self, subset: Iterable[Point]) -> "FiniteSpace":
        s = self._check(subset)
        pts = [p for p in self.points if p in s]
        return FiniteSpace(pts, [(a, b) for b in pts for a in self._down[b] if a in s and a != b])

    def components(self, subset: Iterable[Point] | None = None) -> list[frozenset]:
        """Order-connected components of ``subset`` (the whole space by default)."""
        s = set(self.points) if subset is None else self._check(subset)
        comps = []
        seen: set = set()
        for p in self.points:
            if p not in s or p in seen:
                continue
            comp = {p}
            stack = [p]
            while stack:
                q = stack.pop()
                for r in (self._down[q] | self._up[q]):
                    if r in s and r not in comp:
                        comp.add(r)
                        stack.append(r)
            seen |= comp
            comps.append(frozenset(comp))
        return comps

    def product(self, other: "FiniteSpace") -> "FiniteSpace":
        pts = [(a, b) for a in self.points for b in other.points]
        rel = []
        for a, b in pts:
            for a2 in self._down[a]:
                for b2 in other._down[b]:
                    if (a2, b2) != (a, b):
                        rel.append(((a2, b2), (a, b)))
        return FiniteSpace(pts, rel)

    def same_as(self, other: "FiniteSpace") -> bool:
        return set(self.points) == set(other.points) and all(self._down[p] == other._down[p] for p in self.points)


def barycentric_subdivision(space: FiniteSpace, sep: str = "<") -> tuple[FiniteSpace, dict]:
    """Chains of the order, ordered by inclusion; returns the space and the carrier map.

    A chain is named by joining its points with ``sep``; its carrier is the
    largest point.  The carrier map is continuous.
    """
    pts = list(space.points)
    chains = []

    def grow(c):
        chains.append(c)
        for q in pts:
            if q != c[-1] and space.leq(c[-1], q):
                grow(c + (q,))

    for q in pts:
        grow((q,))
    name = {c: sep.join(map(str, c)) for c in chains}
    rel = [(name[c[:k] + c[k + 1:]], name[c]) for c in chains if len(c) > 1 for k in range(len(c))]
    return FiniteSpace([name[c] for c in chains], rel), {name[c]: c[-1] for c in chains}


def closure(space: FiniteSpace, subset: Iterable[Point]) -> frozenset:
    return space.closure(subset)


def frontier(space: FiniteSpace, subset: Iterable[Point]) -> frozenset:
    return space.frontier(subset)


def minimal_open_nbhd(space: FiniteSpace, p: Point) -> frozenset:
    return space.minimal_open_nbhd(p)


def disjoint_union(parts: dict) -> FiniteSpace:
    """Points are (key, point) pairs."""
    pts, rel = [], []
    for key, sp in parts.items():
        pts.extend((key, p) for p in sp.points)
        rel.extend(((key, a), (key, b)) for a, b in sp.covers())
    return FiniteSpace(pts, rel)


class SpaceMap:
    def __init__(self, source: FiniteSpace, target: FiniteSpace, assignment: dict):
        missing = [p for p in source.points if p not in assignment]
        if missing:
            raise SpaceError(f"map undefined at {missing[:3]!r}")
        bad = [assignment[p] for p in source.points if assignment[p] not in target]
        if bad:
            raise SpaceError(f"map lands outside the target at {bad[:3]!r}")
        self.source, self.target, self.assignment = source, target, dict(assignment)

    def __call__(self, p):
        return self.assignment[p]

    def order_violations(self) -> list[tuple]:
        """Pairs x <= y whose images are not ordered (empty iff continuous)."""
        out = []
        for y in self.source.points:
            fy = self.assignment[y]
            for x in self.source.down(y):
                if not self.target.leq(self.assignment[x], fy):
                    out.append((x, y))
        return out

    def is_order_preserving(self) -> bool:
        return not self.order_violations()

    def image(self, subset=None) -> frozenset:
        pts = self.source.points if subset is None else subset
        return frozenset(self.assignment[p] for p in pts)

    def preimage(self, subset) -> frozenset:
        s = set(subset)
        return frozenset(p for p in self.source.points if self.assignment[p] in s)

    def fibers(self) -> dict:
        out = defaultdict(list)
        for p in self.source.points:
            out[self.assignment[p]].append(p)
        return dict(out)

    def is_isomorphism(self) -> bool:
        """Bijective, and x <= y iff f(x) <= f(y)."""
        if len(set(self.assignment.values())) != len(self.source) or len(self.source) != len(self.target):
            return False
        a = self.assignment
        return all(self.source.leq(x, y) == self.target.leq(a[x], a[y]) for x in self.source.points for y in self.source.points)


def quotient_space(space: FiniteSpace, partition: Iterable[Iterable[Point]]) -> tuple[FiniteSpace, SpaceMap]:
    """Quotient by a partition, collapsing any order cycles the quotient preorder creates.

    Points of the quotient are frozensets of original points.
    """
    blocks = [frozenset(b) for b in partition]
    owner = {}
    for b in blocks:
        for p in b:
            if p in owner:
                raise SpaceError(f"point {p!r} lies in two blocks")
            owner[p] = b
    if set(owner) != set(space.points):
        raise SpaceError("partition does not cover the space")
    below = defaultdict(set)
    for y in space.points:
        for x in space.down(y):
            if owner[x] != owner[y]:
                below[owner[y]].add(owner[x])
    reach = {}
    for b in blocks:
        seen = {b}
        stack = [b]
        while stack:
            c = stack.pop()
            for d in below[c]:
                if d not in seen:
                    seen.add(d)
                    stack.append(d)
        reach[b] = seen
    # strongly connected pieces of the preorder get merged
    merged = {}
    for b in blocks:
        cls = frozenset(c for c in reach[b] if b in reach[c])
        merged[b] = frozenset().union(*cls)
    qpoints = list(dict.fromkeys(merged[b] for b in blocks))
    rel = set()
    for b in blocks:
        for c in reach[b]:
            if merged[c] != merged[b]:
                rel.add((merged[c], merged[b]))
    q = FiniteSpace(qpoints, rel)
    proj = SpaceMap(space, q, {p: merged[owner[p]] for p in space.points})
    return q, proj


def orbit_partition(action) -> list[frozenset]:
    seen: set = set()
    out = []
    for x in action.space.points:
        if x in seen:
            continue
        orb = frozenset(action.act(g, x) for g in action.group.elements)
        seen |= orb
        out.append(orb)
    return out


class FiniteGroupAction:
    """A left action of a FiniteGroup on a FiniteSpace, stored as a table."""

    def __init__(self, group, space: FiniteSpace, table: dict):
        self.group, self.space, self.table = group, space, table

    def act(self, g, x):
        return self.table[(g, x)]

    def violations(self) -> list[str]:
        out = []
        G, X = self.group, self.space
        for g in G.elements:
            for x in X.points:
                if (g, x) not in self.table:
                    out.append(f"action undefined at ({g!r}, {x!r})")
                    return out
                if self.table[(g, x)] not in X:
                    out.append(f"action leaves the space at ({g!r}, {x!r})")
                    return out
        for x in X.points:
            if self.table[(G.identity, x)] != x:
                out.append(f"identity moves {x!r}")
        for g in G.elements:
            for h in G.elements:
                for x in X.points:
                    if self.table[(g, self.table[(h, x)])] != self.table[(G.mul(g, h), x)]:
                        out.append(f"g(hx) != (gh)x at g={g!r}, h={h!r}, x={x!r}")
                        break
        for g in G.elements:
            f = SpaceMap(X, X, {x: self.table[(g, x)] for x in X.points})
            if not f.is_isomorphism():
                out.append(f"{g!r} is not an order automorphism")
        return out

    def fixed_points(self, elements=None) -> list[tuple]:
        elems = self.group.elements if elements is None else elements
        return [(g, x) for g in elems if g != self.group.identity for x in self.space.points if self.table[(g, x)] == x]

    def orbits(self) -> list[frozenset]:
        return orbit_partition(self)


class ActionReport:
    def __init__(self, witnesses: list):
        self.witnesses = witnesses
        self.free = not witnesses

    def __repr__(self) -> str:
        return "free" if self.free else f"fixed points {self.witnesses[:5]!r}"


def check_action(action: FiniteGroupAction, subgroup=None) -> ActionReport:
    """Free iff no nonidentity element of ``subgroup`` fixes a point."""
    elems = action.group.elements if subgroup is None else list(subgroup.elements)
    stray = [g for g in elems if g not in action.group]
    if stray:
        raise ValueError(f"subgroup elements not in the group: {stray[:3]!r}")
    return ActionReport(action.fixed_points(elems))


class Orientation:
    """Per-point signs in {+1, -1}."""

    def __init__(self, signs: dict):
        bad = [p for p, s in signs.items() if s not in (1, -1)]
        if bad:
            raise SpaceError(f"signs must be +1 or -1, not at {bad[:3]!r}")
        self.signs = dict(signs)

    def __getitem__(self, p) -> int:
        return self.signs[p]

    def preserved_by(self, mapping: dict, target: "Orientation") -> list:
        return [p for p, q in mapping.items() if p in self.signs and q in target.signs and self.signs[p] != target.signs[q]]


def circle_model(n: int, tag: str = "") -> FiniteSpace:
    """The 2n-point circle: maxima a_i, minima b_i, with b_i < a_i and b_i < a_{i+1}."""
    a = [f"a{i}{tag}" for i in range(n)]
    b = [f"b{i}{tag}" for i in range(n)]
    rel = []
    for i in range(n):
        rel.append((b[i], a[i]))
        rel.append((b[i], a[(i + 1) % n]))
    return FiniteSpace(a + b, rel)


def sierpinski() -> FiniteSpace:
    return FiniteSpace(["a", "b"], [("a", "b")])
