"""The nine acceptance criteria, one test each.

Every test prints a single ``ACCEPTANCE n PASS|FAIL`` line; the lines are
also collected and repeated in the terminal summary.
"""

import time
from fractions import Fraction

import pytest

from orbatlas.atlas import validate_atlas
from orbatlas.category import build_bk, check_category_laws
from orbatlas.completion import complete_atlas, verify_groupoid
from orbatlas.derive import derive_atlas, embeddings_from_atlas, induced_functor, reorder_atlas
from orbatlas.document import atlas_to_doc, mutation_outcomes
from orbatlas.fixtures import fixture_atlas, point_orbifold_fixture
from orbatlas.invariants import (
    euler_number,
    football_sections,
    gerbe_class,
    orbifold_weighting,
    orbifold_weighting_by_base,
    pushforward_check,
)
from orbatlas.resolve import resolution_report, resolve, weights_by_base, wnb_check

LINES: list[str] = []

POINT_PARAMS = [("Z2", "id"), ("Z2xZ2", "Z2"), ("S3", "Z3")]


def report(n: int, ok: bool, detail: str) -> None:
    line = f"ACCEPTANCE {n} {'PASS' if ok else 'FAIL'}: {detail}"
    LINES.append(line)
    print(line)
    assert ok, line


def fresh(name, **params):
    return fixture_atlas(name, {k: str(v) for k, v in params.items()})


def test_1_football_euler_number():
    t = time.perf_counter()
    K = fresh("football")
    r = resolve(K)
    sec = football_sections(r["reduction"])[0]
    total = euler_number(K, r["reduction"], sec, r["VH"]).total
    dt = time.perf_counter() - t
    report(1, total == Fraction(5, 6) and dt < 10, f"Euler total {total} (want 5/6) in {dt:.2f}s")


def test_2_football_weighting_profile():
    t = time.perf_counter()
    K = fresh("football")
    G = complete_atlas(K)
    r = resolve(K, gk=G)
    Q = r["reduction"].Q
    Y = K.base
    north = next(I for I in K.indices if len(I) == 1 and "N" in Q[I])
    south = next(I for I in K.indices if len(I) == 1 and "S" in Q[I])
    cn, cs = Y.closure(Q[north]), Y.closure(Q[south])

    def expect(y):
        return Fraction(1, 2) if y in cn else Fraction(1, 3) if y in cs else Fraction(1, 6)

    by_base = weights_by_base(r["weighting"])
    profile = all(set(vs) == {expect(y)} for y, vs in by_base.items()) and set(by_base) == set(Y.points)
    values = r["weighting"].values() == {Fraction(1, 2), Fraction(1, 3), Fraction(1, 6)}
    push = pushforward_check(r["weighting"], orbifold_weighting(G)).passed
    lam = orbifold_weighting_by_base(G)
    poles = lam["N"] == Fraction(1, 2) and lam["S"] == Fraction(1, 3) and all(v == 1 for y, v in lam.items() if y not in ("N", "S"))
    dt = time.perf_counter() - t
    report(2, profile and values and push and poles and dt < 10, f"values {', '.join(map(str, sorted(r['weighting'].values())))}, bands {'ok' if profile else 'wrong'}, pushforward {'ok' if push and poles else 'wrong'} in {dt:.2f}s")


def law_suite_atlases():
    out = [(n, fresh(n)) for n in ("football", "gerbe-trivial", "gerbe-nontrivial", "manifold-cover", "product")]
    out += [(f"point-orbifold {g}/{s}", point_orbifold_fixture(g, s, 2).atlas) for g, s in POINT_PARAMS]
    return out


def test_3_groupoid_law_suite():
    t = time.perf_counter()
    bad = []
    for name, K in law_suite_atlases():
        b = check_category_laws(build_bk(K))
        g = verify_groupoid(complete_atlas(K))
        for rep, tag in ((b, "B_K"), (g, "G_K")):
            bad += [f"{name} {tag} {c}" for c, v in rep.checks.items() if v["failures"]]
        if not {"associativity", "unit", "inverse", "condition_star", "stabilizer", "unique_lift"} <= set(g.checks):
            bad.append(f"{name}: checks missing")
    dt = time.perf_counter() - t
    report(3, not bad and dt < 120, f"{len(law_suite_atlases())} atlases, failures {bad[:3] or 'none'} in {dt:.1f}s")


def test_4_point_orbifold_completion():
    bad = []
    for g, s in POINT_PARAMS:
        for n in (2, 3):
            po = point_orbifold_fixture(g, s, n)
            if not po.check_quotient_isomorphism()["passed"]:
                bad.append(f"{g}/{s} N={n} quotient")
            if not po.check_fs_invariance()["passed"]:
                bad.append(f"{g}/{s} N={n} F_S")
    report(4, not bad, f"6 cases, failures {bad or 'none'}")


RESOLVE_CASES = [
    ("football", {}),
    ("manifold-cover", {}),
    ("product", {}),
    ("point-orbifold", {}),
    ("gerbe-trivial", {"cover": "annulus"}),
    ("gerbe-nontrivial", {"cover": "annulus"}),
]


def test_5_resolution_structure():
    bad = []
    for name, params in RESOLVE_CASES:
        r = resolve(fresh(name, **params))
        w = r["weighting"]
        for tag, rep in (("resolution", resolution_report(r["V"], r["VH"])), ("wnb", wnb_check(r["VH"], w))):
            bad += [f"{name} {tag} {c}" for c, v in rep.checks.items() if v["failures"]]
        if w.defects or set(w.fibers) != set(w.space.points):
            bad.append(f"{name}: free orbit {w.defects[:1]}")
    report(5, not bad, f"{len(RESOLVE_CASES)} fixtures (gerbes on the annulus cover), failures {bad[:3] or 'none'}")


def test_6_gerbe_classification():
    got = {}
    ok = True
    for name, cls in (("gerbe-trivial", 0), ("gerbe-nontrivial", 1)):
        res = gerbe_class(fresh(name))
        got[name] = (res.cls, res.trivial, len(res.parity), res.rechoices, len(res.rechoice_failures))
        ok &= res.cls == cls and res.trivial == (cls == 0) and not res.parity and not res.rechoice_failures and res.rechoices > 0
    report(6, ok, f"(class, trivial, parity violations, rechoices, rechoice failures): {got}")


def test_7_section_choice_invariance():
    K = fresh("football")
    r = resolve(K)
    secs = football_sections(r["reduction"])
    totals = {s.name: euler_number(K, r["reduction"], s, r["VH"]).total for s in secs}
    distinct = len({tuple(sorted((str(I), tuple(sorted(v.items()))) for I, v in s.nu.items())) for s in secs}) == len(secs)
    report(7, len(secs) >= 2 and distinct and len(set(totals.values())) == 1, f"totals {({k: str(v) for k, v in totals.items()})}")


def test_8_derive_round_trip():
    G = complete_atlas(fresh("football"))
    D = derive_atlas(G, embeddings_from_atlas(G))
    valid = validate_atlas(D).passed
    F = induced_functor(D)
    a, b = D.derived["order"][:2]
    D2, _ = reorder_atlas(D, a, b)
    report(8, valid and F.report.passed and D2.reorder_report.passed, f"validate {valid}, functor {F.report.passed}, reorder {D2.reorder_report.passed}")


def test_9_mutation_sensitivity():
    rows = mutation_outcomes(atlas_to_doc(fresh("football")))
    missed = [r["mutation"] for r in rows if not r["caught"]]
    report(9, len(rows) == 10 and not missed, f"{len(rows)} mutations, missed {missed or 'none'}")


@pytest.fixture(scope="module", autouse=True)
def _summary(request):
    yield
    request.config._acceptance_lines = list(LINES)
