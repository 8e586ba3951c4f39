import numpy as np
import pytest

ACCEPTANCE_LINES = []


def record(criterion: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] criterion {criterion:>2}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)


def mc_within(samples: np.ndarray, expected: np.ndarray, n_se: float = 3.0):
    """Entrywise check of a Monte Carlo mean against ``expected``.

    ``samples`` has the draw index first. Only the upper triangle of square
    Hermitian targets is checked (the rest is redundant), and real and
    imaginary parts are tested separately. Returns ``(ok, worst z-score)``.
    """
    mean = samples.mean(axis=0)
    n = samples.shape[0]
    if expected.ndim == 2 and expected.shape[0] == expected.shape[1]:
        iu = np.triu_indices(expected.shape[0])
        samples = samples[:, iu[0], iu[1]]
        mean, expected = mean[iu], expected[iu]
    zs = []
    for part in (np.real, np.imag):
        se = part(samples).std(axis=0, ddof=1) / np.sqrt(n)
        err = np.abs(part(mean) - part(expected))
        exact = se == 0
        if np.any(err[exact] > 1e-12):
            return False, np.inf
        zs.append(err[~exact] / se[~exact])
    z = np.concatenate(zs)
    worst = float(z.max()) if z.size else 0.0
    return worst <= n_se, worst


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
