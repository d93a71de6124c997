import random

import pytest

from boundext.domain import build_domain, square_domain
from boundext.staged import StagedSet


def battery(count: int = 50, seed: int = 20260519):
    """Randomized stage tables with J <= 6 and stages <= 12."""
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        J = rng.randint(1, 6)
        entries = {j: rng.randint(0, 12) for j in range(J) if rng.random() < 0.6}
        out.append((StagedSet(n_max=J - 1, s_max=12, entries=entries), J))
    return out


@pytest.fixture(scope="session")
def tent_domain():
    """Tent j=0 entering at stage 2."""
    return build_domain(StagedSet(n_max=4, s_max=9, entries={0: 2}), 1)


@pytest.fixture(scope="session")
def spike_domain():
    """Two spikes, nothing enters."""
    return build_domain(StagedSet(n_max=4, s_max=9, entries={}), 2)


@pytest.fixture(scope="session")
def mixed_domain():
    return build_domain(StagedSet(n_max=5, s_max=12, entries={0: 3, 2: 0, 3: 7}), 4)


@pytest.fixture(scope="session")
def square():
    return square_domain()


@pytest.fixture(scope="session")
def battery_domains():
    return [build_domain(S, J) for S, J in battery()]


@pytest.fixture(scope="session")
def square_map(square):
    from boundext.conformal import solve_map

    return solve_map(square, eps=1e-8)


@pytest.fixture(scope="session")
def spike_map(spike_domain):
    from boundext.conformal import solve_map

    return solve_map(spike_domain, eps=1e-8)


@pytest.fixture(scope="session")
def spike_covers_timed(spike_map):
    """Oscillation covers of the two-spike map for k = 1 .. 4 with their build time (about 100 s, shared)."""
    import time

    from boundext.conformal import oscillation_cover

    t0 = time.perf_counter()
    covers = {k: oscillation_cover(spike_map, k) for k in range(1, 5)}
    return covers, time.perf_counter() - t0


@pytest.fixture(scope="session")
def spike_covers(spike_covers_timed):
    return spike_covers_timed[0]


# -- acceptance summary ------------------------------------------------------------

ACCEPTANCE_LINES = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


@pytest.fixture
def criterion(request):
    """Collects one summary line per acceptance criterion; the test fills in ``label`` and ``detail``."""
    entry = {"label": request.node.name, "detail": ""}
    yield entry
    rep = getattr(request.node, "rep_call", None)
    ok = rep is not None and rep.passed
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {entry['label']}  {entry['detail']}".rstrip())


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
