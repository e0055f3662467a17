
import numpy as np
import pytest

from nicd.noise import all_points


def brute_joint(mask_x, mask_y, s, n, eps):
    """sum over all (x, y) of P(x, y) 1{x in A} 1{y in B}, by explicit loops."""
    pts = [tuple(p) for p in all_points(s, n)]
    diag = (1 - eps + eps / s) / s
    off = eps / s**2
    total = 0.0
    for i, x in enumerate(pts):
        if not mask_x[i]:
            continue
        for j, y in enumerate(pts):
            if mask_y[j]:
                total += np.prod([diag if a == b else off for a, b in zip(x, y)])
    return total


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for the acceptance summary."""

    def report(name: str, passed: bool, detail: str) -> bool:
        line = f"{'PASS' if passed else 'FAIL'} {name}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def pair_kernel(points_a, points_b, s, eps):
    """P(X = a, Y = b) for every pair, from Hamming distances."""
    a = np.asarray(points_a)[:, None, :]
    b = np.asarray(points_b)[None, :, :]
    dist = np.count_nonzero(a != b, axis=2)
    n = a.shape[2]
    diag = (1 - eps + eps / s) / s
    off = eps / s**2
    return diag ** (n - dist) * off**dist
