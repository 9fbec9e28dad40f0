import numpy as np
import pytest

from grabmdm import MultiviewDataset, block_affinity, view_kernels, KernelSpec


def random_instance(rng, n, K, p=3, eps=None):
    views = [rng.normal(size=(n, p)) * (1 + v) for v in range(K)]
    data = MultiviewDataset.from_arrays(views)
    if eps is None:
        eps = [2.0 * p * (1 + v) ** 2 for v in range(K)]
    kernels = view_kernels(data, KernelSpec(), epsilons=eps)
    return data, kernels, block_affinity(kernels)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def small_instance(rng):
    return random_instance(rng, 6, 3)


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one acceptance line; the assertion is left to the caller."""

    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} | {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
