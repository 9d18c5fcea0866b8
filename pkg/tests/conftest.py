import numpy as np
import pytest

from rectpart.loads import build_tensor

# 8x8 pattern matrix of the hand-worked example: row sums [5,4,2,0,1,0,2,1],
# column sums [2,1,1,3,1,1,4,2], found by constraint search.
TOY_ENTRIES = [
    (0, 0), (0, 3), (0, 4), (0, 6), (0, 7),
    (1, 0), (1, 3), (1, 6), (1, 7),
    (2, 2), (2, 3),
    (4, 6),
    (6, 1), (6, 5),
    (7, 6),
]
TOY_P = [0, 2, 4, 8]


@pytest.fixture
def toy():
    return build_tensor((8, 8), TOY_ENTRIES)


def random_tensor(rng, n, m, nnz=None, density=None, weighted=False):
    if density is not None:
        idx = np.argwhere(rng.random((n, m)) < density)
    else:
        idx = np.column_stack([rng.integers(0, n, nnz), rng.integers(0, m, nnz)])
    w = rng.integers(1, 5, len(idx)).astype(float) + 0.5 if weighted else None
    return build_tensor((n, m), idx, w)


def naive_rect(tensor, r1, r2, c1, c2):
    rows, cols = tensor.indices[:, 0], tensor.indices[:, 1]
    mask = (rows >= r1) & (rows < r2) & (cols >= c1) & (cols < c2)
    return tensor.weights[mask].sum()


def naive_tiles(tensor, p1, p2):
    """Tile table of a 2-D tensor by scanning every entry."""
    out = np.zeros((len(p1) - 1, len(p2) - 1), dtype=tensor.weights.dtype)
    for (r, c), w in zip(tensor.indices, tensor.weights):
        a = np.searchsorted(p1, r, side="right") - 1
        b = np.searchsorted(p2, c, side="right") - 1
        out[a, b] += w
    return out


def random_partition(rng, n, k):
    return np.concatenate([[0], np.sort(rng.integers(0, n + 1, k - 1)), [n]]).astype(np.int64)


# acceptance criteria report: one PASS/FAIL/SKIP line per criterion at the end of the run
_CRITERIA: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by the test")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    num, title = marker.args
    if call.excinfo is not None:
        if call.excinfo.errisinstance(pytest.skip.Exception):
            _CRITERIA[num] = ("SKIP", title, str(call.excinfo.value))
        else:
            _CRITERIA[num] = ("FAIL", title, call.excinfo.exconly().splitlines()[0][:200])
    elif call.when == "call":
        _CRITERIA.setdefault(num, ("PASS", title, ""))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        status, title, detail = _CRITERIA[num]
        line = f"{status} criterion {num:2d}: {title}"
        terminalreporter.write_line(line + (f" ({detail})" if detail else ""))
