import time

import pytest

from spinline.runtime.pool import CellPool, resolve_jobs


def _slow_square(x):
    time.sleep(0.001 * (5 - x % 5))
    return x * x


def _fail_on_three(x):
    if x == 3:
        raise ValueError("bad cell")
    return x


@pytest.mark.parametrize("jobs", [1, 4])
def test_results_keep_input_order(jobs):
    with CellPool(jobs) as pool:
        cells = pool.map(_slow_square, [(i,) for i in range(20)])
    assert [c.value for c in cells] == [i * i for i in range(20)]
    assert all(c.ok for c in cells)


@pytest.mark.parametrize("jobs", [1, 3])
def test_errors_stay_in_their_cell(jobs):
    cells = CellPool(jobs).map(_fail_on_three, [(i,) for i in range(6)], keys=list("abcdef"))
    assert [c.key for c in cells] == list("abcdef")
    assert isinstance(cells[3].error, ValueError)
    assert [c.value for c in cells if c.ok] == [0, 1, 2, 4, 5]


def test_mismatched_keys_raise():
    with pytest.raises(ValueError):
        CellPool(2).map(_slow_square, [(1,), (2,)], keys=["only-one"])


def test_resolve_jobs_precedence(monkeypatch):
    monkeypatch.delenv("SPINLINE_JOBS", raising=False)
    assert resolve_jobs(None, 2) == 2
    monkeypatch.setenv("SPINLINE_JOBS", "6")
    assert resolve_jobs(None, 2) == 6
    assert resolve_jobs(3, 2) == 3
    assert resolve_jobs(0, 2) == 1
    monkeypatch.setenv("SPINLINE_JOBS", "many")
    assert resolve_jobs(None, 2) == 2
