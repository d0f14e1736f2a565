import numpy as np
import pytest

from ecmsim.datasets import DatasetNotFoundError, load_mnist, mnist_dir


@pytest.fixture(scope="session")
def mnist():
    """``(train, test)`` binarized MNIST; skips when the IDX files are absent."""
    try:
        mnist_dir()
        return load_mnist(split="train"), load_mnist(split="test")
    except DatasetNotFoundError as exc:
        pytest.skip(f"MNIST not available: {exc}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record and print one PASS/FAIL line, then assert on it."""
    lines = request.config.stash.setdefault(_CRITERIA, [])

    def report(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print("\n" + line, flush=True)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_CRITERIA, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
