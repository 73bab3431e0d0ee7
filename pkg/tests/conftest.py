from functools import lru_cache

import pytest
from hypothesis import settings, strategies as st

from orbatlas.completion import complete_atlas
from orbatlas.finspace import FiniteSpace
from orbatlas.fixtures import fixture_atlas, point_orbifold_fixture
from orbatlas.resolve import resolve

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@lru_cache(maxsize=None)
def atlas(name: str, **params):
    return fixture_atlas(name, {k: str(v) for k, v in params.items()})


@lru_cache(maxsize=None)
def gk(name: str, **params):
    return complete_atlas(atlas(name, **params))


@lru_cache(maxsize=None)
def resolved(name: str, **params):
    return resolve(atlas(name, **params), gk=gk(name, **params))


@lru_cache(maxsize=None)
def point(group: str, sub: str, charts: int = 2):
    return point_orbifold_fixture(group, sub, charts)


@st.composite
def posets(draw, max_points: int = 7):
    """Random finite T0 spaces: edges only go from lower to higher labels."""
    n = draw(st.integers(1, max_points))
    pts = [f"p{i}" for i in range(n)]
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs))) if pairs else []
    return FiniteSpace(pts, [(pts[i], pts[j]) for i, j in chosen])


@st.composite
def subsets(draw, space: FiniteSpace):
    return frozenset(draw(st.lists(st.sampled_from(space.points), unique=True)))


@pytest.fixture
def football():
    return atlas("football")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance")
        for line in lines:
            terminalreporter.write_line(line)
