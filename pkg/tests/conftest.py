import numpy as np
import pytest

from flowcast.dataset import RawSeries

_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)


@pytest.fixture
def criterion(request):
    """Record one acceptance line, then assert it."""
    log = request.config.stash[_ACCEPTANCE_KEY]

    def check(label, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] {label}" + (f": {detail}" if detail else "")
        log.append(line)
        print(line)
        assert passed, line

    return check


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def square_series(pattern, repeats=1, n_covariates=2, seed=0, noise=0.0):
    """Series whose target alternates +1/-1 runs given by ``pattern``
    (positive lengths, negative lengths alternating, starting positive)."""
    target = []
    sign = 1.0
    for _ in range(repeats):
        for length in pattern:
            target.extend([sign] * length)
            sign = -sign
    target = np.asarray(target)
    gen = np.random.default_rng(seed)
    covs = gen.normal(size=(target.size, n_covariates))
    if noise:
        target = target + gen.normal(0, noise, target.size)
    values = np.column_stack([covs, target])
    names = tuple(f"x{j}" for j in range(n_covariates)) + ("y",)
    return RawSeries(values, names)
