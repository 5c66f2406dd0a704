import numpy as np
import pytest

from slabgreen import build_profile, find_guided_modes


@pytest.fixture(scope="session")
def p0():
    return build_profile(1.0, 1.0, 1.0, 1.5)


@pytest.fixture(scope="session")
def p0_modes(p0):
    return find_guided_modes(p0)


@pytest.fixture(scope="session")
def p_free():
    return build_profile(1.0, 1.0, 1.0, 1.0)


@pytest.fixture(scope="session")
def p_free_modes(p_free):
    return find_guided_modes(p_free)


@pytest.fixture(scope="session")
def p_h5():
    return build_profile(1.0, 5.0, 1.0, 1.5)


@pytest.fixture(scope="session")
def graded():
    """Even parabolic core, n = 1.5 at the centre falling to 1.2 at |x| = h."""
    return build_profile(1.0, 1.0, 1.0, lambda x: 1.5 - 0.3 * np.asarray(x) ** 2)


@pytest.fixture(scope="session")
def graded_modes(graded):
    return find_guided_modes(graded)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance_log(request):
    """List collecting one summary line per acceptance criterion."""
    return request.config.stash.setdefault(_ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda l: int(l.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
