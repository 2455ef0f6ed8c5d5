import numpy as np
import pytest

from toric_homotopy.expsum import SupportTuple
from toric_homotopy.polytope import bkk_count

SQUARES3 = [
    [(0, 0, 0), (0, 1, 0), (0, 0, 1), (0, 1, 1)],
    [(0, 0, 0), (1, 0, 0), (0, 0, 1), (1, 0, 1)],
    [(0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 0)],
]
SQUARE_TRI = [[(0, 0), (2, 0), (0, 2), (2, 2)], [(2, 0), (0, 2), (4, 4)]]
DENSE3 = [[(i, j) for i in range(4) for j in range(4) if i + j <= 3]] * 2


def random_support(rng, n, lo=-3, hi=3, max_points=6):
    """Random full-dimensional support tuple with 2..max_points points per equation."""
    while True:
        sets = []
        for _ in range(n):
            k = int(rng.integers(n + 1, max_points + 1))
            pts = set()
            while len(pts) < k:
                pts.add(tuple(int(v) for v in rng.integers(lo, hi + 1, size=n)))
            sets.append(sorted(pts))
        try:
            s = SupportTuple(sets)
            s.nu
            s.lattice
            if n <= 2:
                bkk_count(s)
            return s
        except Exception:
            continue


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def squares3():
    return SupportTuple(SQUARES3)


@pytest.fixture(scope="session")
def square_tri():
    return SupportTuple(SQUARE_TRI)


@pytest.fixture(scope="session", autouse=True)
def compiled_kernels():
    # compile or load the tracking kernels once so timed tests measure work, not JIT
    from toric_homotopy.tracker import warmup

    warmup()
