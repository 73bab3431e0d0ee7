"""Finite groups given by Cayley tables, and the product groups over index sets.

Elements of a product group are *group tuples*: tuples of ``(index, element)``
pairs sorted by index.  A tuple supported on a smaller index set is read as
having identity components elsewhere, which is how tuples over different index
sets get multiplied.
"""

from __future__ import annotations

from itertools import product
from typing import Hashable, Iterable, Sequence

Element = Hashable
GroupTuple = tuple  # tuple[tuple[index, element], ...], sorted by index


class GroupError(ValueError):
    pass


class FiniteGroup:
    def __init__(self, elements: Sequence[Element], table, identity: Element | None = None, name: str = ""):
        self.elements = list(elements)
        self.name = name
        if len(set(self.elements)) != len(self.elements):
            raise GroupError(f"repeated elements in group {name!r}")
        if isinstance(table, dict):
            self._mul = dict(table)
        else:
            self._mul = {}
            for a, row in zip(self.elements, table):
                for b, c in zip(self.elements, row):
                    self._mul[(a, b)] = c
        members = set(self.elements)
        for a in self.elements:
            for b in self.elements:
                if (a, b) not in self._mul:
                    raise GroupError(f"table of {name!r} has no entry for ({a!r}, {b!r})")
                if self._mul[(a, b)] not in members:
                    raise GroupError(f"table of {name!r} leaves the group at ({a!r}, {b!r})")
        if identity is None:
            identity = next((e for e in self.elements if all(self._mul[(e, x)] == x == self._mul[(x, e)] for x in self.elements)), None)
            if identity is None:
                raise GroupError(f"group {name!r} has no identity")
        self.identity = identity
        self._members = members
        self._inv = {}
        for a in self.elements:
            for b in self.elements:
                if self._mul[(a, b)] == identity and self._mul[(b, a)] == identity:
                    self._inv[a] = b
                    break

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, g) -> bool:
        return g in self._members

    def __repr__(self) -> str:
        return f"FiniteGroup({self.name or '?'}, order={len(self)})"

    def mul(self, a, b):
        return self._mul[(a, b)]

    def inv(self, a):
        return self._inv[a]

    def table(self) -> list[list]:
        return [[self._mul[(a, b)] for b in self.elements] for a in self.elements]

    def law_violations(self) -> list[str]:
        """Every failure of the identity, inverse and associativity laws, as text."""
        out = []
        e = self.identity
        for a in self.elements:
            if self._mul[(e, a)] != a or self._mul[(a, e)] != a:
                out.append(f"identity law fails at {a!r}")
            if a not in self._inv:
                out.append(f"{a!r} has no inverse")
        for a, b, c in product(self.elements, repeat=3):
            if self._mul[(self._mul[(a, b)], c)] != self._mul[(a, self._mul[(b, c)])]:
                out.append(f"associativity fails at ({a!r}, {b!r}, {c!r})")
                break
        return out

    def subgroup(self, elements: Iterable, name: str = "") -> "FiniteGroup":
        elems = [g for g in self.elements if g in set(elements)]
        sub = {(a, b): self._mul[(a, b)] for a in elems for b in elems}
        if any(c not in set(elems) for c in sub.values()) or self.identity not in elems:
            raise GroupError("elements do not form a subgroup")
        return FiniteGroup(elems, sub, self.identity, name or f"sub({self.name})")

    def is_abelian(self) -> bool:
        return all(self._mul[(a, b)] == self._mul[(b, a)] for a in self.elements for b in self.elements)


def cyclic_group(n: int, name: str | None = None) -> FiniteGroup:
    elems = [str(k) for k in range(n)]
    table = [[str((a + b) % n) for b in range(n)] for a in range(n)]
    return FiniteGroup(elems, table, "0", name or f"Z{n}")


def trivial_group(name: str = "1") -> FiniteGroup:
    return FiniteGroup(["e"], [["e"]], "e", name)


def symmetric_group_3() -> FiniteGroup:
    """S3 on the letters 0,1,2; elements are named by their images, e.g. "120"."""
    perms = ["012", "021", "102", "120", "201", "210"]

    def compose(p, q):  # apply q first, then p
        return "".join(p[int(q[i])] for i in range(3))

    return FiniteGroup(perms, {(p, q): compose(p, q) for p in perms for q in perms}, "012", "S3")


def direct_product(g1: FiniteGroup, g2: FiniteGroup, name: str | None = None) -> FiniteGroup:
    """Product with string element names "a,b" so the result can be serialized."""
    elems = [f"{a},{b}" for a in g1.elements for b in g2.elements]
    pairs = {f"{a},{b}": (a, b) for a in g1.elements for b in g2.elements}
    table = {}
    for x in elems:
        for y in elems:
            (a, b), (c, d) = pairs[x], pairs[y]
            table[(x, y)] = f"{g1.mul(a, c)},{g2.mul(b, d)}"
    return FiniteGroup(elems, table, f"{g1.identity},{g2.identity}", name or f"{g1.name}x{g2.name}")


class ProductGroups:
    """The family of groups Gamma_I = prod_{i in I} Gamma_i for a fixed set of factors."""

    def __init__(self, factors: dict):
        self.factors = dict(factors)
        self._elements_cache: dict = {}

    def __getitem__(self, i) -> FiniteGroup:
        return self.factors[i]

    def order(self, index: Iterable) -> int:
        n = 1
        for i in index:
            n *= len(self.factors[i])
        return n

    def identity(self, index: Iterable = ()) -> GroupTuple:
        return tuple((i, self.factors[i].identity) for i in sorted(index))

    def elements(self, index: Iterable) -> list[GroupTuple]:
        key = tuple(sorted(index))
        if key not in self._elements_cache:
            missing = [i for i in key if i not in self.factors]
            if missing:
                raise GroupError(f"no factor group for indices {missing}")
            comps = [[(i, g) for g in self.factors[i].elements] for i in key]
            self._elements_cache[key] = [tuple(t) for t in product(*comps)]
        return self._elements_cache[key]

    def mul(self, a: GroupTuple, b: GroupTuple) -> GroupTuple:
        """Product over the union of supports, missing components read as identities."""
        da, db = dict(a), dict(b)
        out = []
        for i in sorted(set(da) | set(db)):
            g = self.factors[i]
            x, y = da.get(i, g.identity), db.get(i, g.identity)
            out.append((i, g.mul(x, y)))
        return tuple(out)

    def mul_all(self, *terms: GroupTuple) -> GroupTuple:
        out: GroupTuple = ()
        for t in terms:
            out = self.mul(out, t)
        return out

    def inv(self, a: GroupTuple) -> GroupTuple:
        return tuple((i, self.factors[i].inv(g)) for i, g in a)

    def is_identity(self, a: GroupTuple) -> bool:
        return all(self.factors[i].identity == g for i, g in a)

    def extend(self, a: GroupTuple, index: Iterable) -> GroupTuple:
        """Identity-extend ``a`` to the index set ``index`` (which must contain its support)."""
        da = dict(a)
        idx = sorted(index)
        if not set(da) <= set(idx):
            raise GroupError(f"cannot extend a tuple over {sorted(da)} to {idx}")
        return tuple((i, da.get(i, self.factors[i].identity)) for i in idx)

    def trim(self, a: GroupTuple) -> GroupTuple:
        """Drop identity components."""
        return tuple((i, g) for i, g in a if self.factors[i].identity != g)

    def product_group(self, index: Iterable, name: str = "") -> FiniteGroup:
        elems = self.elements(index)
        table = {(a, b): self.mul(a, b) for a in elems for b in elems}
        return FiniteGroup(elems, table, self.identity(index), name or "x".join(str(i) for i in sorted(index)))


def project_tuple(gamma: GroupTuple, index: Iterable) -> GroupTuple:
    """Forget the components outside ``index`` (the canonical projection Gamma_J -> Gamma_I)."""
    keep = set(index)
    support = {i for i, _ in gamma}
    if not keep <= support:
        raise GroupError(f"cannot project a tuple over {sorted(support)} to {sorted(keep)}")
    return tuple((i, g) for i, g in gamma if i in keep)


def split_tuple(groups: ProductGroups, gamma: GroupTuple, index: Iterable) -> tuple[GroupTuple, GroupTuple]:
    """Split gamma into (the part on ``index``, gamma times the inverse of that part).

    Both parts are returned over the full support of gamma; the second is
    identity on ``index``.  They commute and multiply back to gamma.
    """
    keep = set(index)
    support = [i for i, _ in gamma]
    inside = tuple((i, g) for i, g in gamma if i in keep)
    inside_ext = groups.extend(inside, support)
    outside = groups.mul(gamma, groups.inv(inside_ext))
    return inside_ext, outside


def stabilizer(action, x) -> FiniteGroup:
    """The subgroup of ``action.group`` fixing ``x``."""
    if x not in action.space:
        raise KeyError(f"unknown point {x!r}")
    fix = [g for g in action.group.elements if action.act(g, x) == x]
    return action.group.subgroup(fix, name=f"stab({x!r})")


def embedding_is_homomorphism(source: FiniteGroup, target: FiniteGroup, mapping: dict) -> bool:
    return all(mapping[source.mul(a, b)] == target.mul(mapping[a], mapping[b]) for a in source.elements for b in source.elements)
