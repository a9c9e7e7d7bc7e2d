import pytest

from spallstrip.equilibrium import find_equilibrium, leading_eigenpair
from spallstrip.manifold import expand_graph
from spallstrip.spatial import SpatialGrid


class Setup:
    def __init__(self, n):
        self.grid = SpatialGrid(n)
        self.eq = find_equilibrium(self.grid)
        self.pairs = leading_eigenpair(self.eq, k=3)
        self.pair = self.pairs[0]
        self.exp = expand_graph(self.eq, self.pair, 8)


_cache = {}


def setup_for(n):
    if n not in _cache:
        _cache[n] = Setup(n)
    return _cache[n]


@pytest.fixture(scope="session")
def s128():
    return setup_for(128)


@pytest.fixture(scope="session")
def s256():
    return setup_for(256)


@pytest.fixture(scope="session")
def s64():
    return setup_for(64)


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def record(number, ok, detail):
        lines.append(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
