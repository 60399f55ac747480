from __future__ import annotations

import logging
import os
import queue
import threading
from dataclasses import dataclass
from typing import Any, Callable, Hashable, List, Optional, Sequence, Tuple

logger = logging.getLogger("spinline.runtime")

_SENTINEL = object()


@dataclass
class CellResult:
    key: Hashable
    value: Any = None
    error: Optional[BaseException] = None

    @property
    def ok(self) -> bool:
        return self.error is None


def resolve_jobs(jobs: Optional[int] = None, default: int = 1) -> int:
    """--jobs, then SPINLINE_JOBS, then the config default."""
    if jobs is None:
        env = os.environ.get("SPINLINE_JOBS")
        if env:
            try:
                jobs = int(env)
            except ValueError:
                logger.warning("ignoring non-integer SPINLINE_JOBS=%r", env)
    if jobs is None:
        jobs = default
    return max(1, int(jobs))


class CellPool:
    """Pool luồng có giới hạn cho các ô lưới (T, B, psi, ...) độc lập.

    - jobs: số worker (daemon thread)
    - map(fn, cells): gọi fn(*cell) cho từng ô, trả về CellResult theo đúng thứ tự đầu vào
    - lỗi của một ô được giữ trong CellResult.error, không làm dừng các ô khác
    """

    def __init__(self, jobs: int = 1, name: str = "CellPool") -> None:
        self._jobs = max(1, int(jobs))
        self._name = name
        self._tasks: "queue.Queue[Any]" = queue.Queue()
        self._stop_event = threading.Event()
        self._threads: List[threading.Thread] = []

    @property
    def jobs(self) -> int:
        return self._jobs

    def start(self) -> None:
        if self._threads and any(t.is_alive() for t in self._threads):
            return
        self._stop_event.clear()
        self._threads = [
            threading.Thread(target=self._run, name=f"{self._name}-{i}", daemon=True)
            for i in range(self._jobs)
        ]
        for t in self._threads:
            t.start()

    def stop(self) -> None:
        self._stop_event.set()
        for _ in self._threads:
            self._tasks.put(_SENTINEL)
        for t in self._threads:
            t.join(timeout=2.0)
        self._threads = []

    def __enter__(self) -> "CellPool":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.stop()

    def _run(self) -> None:
        while not self._stop_event.is_set():
            try:
                item = self._tasks.get(timeout=0.1)
            except queue.Empty:
                continue
            if item is _SENTINEL:
                break
            index, key, fn, args, results, done = item
            try:
                results[index] = CellResult(key=key, value=fn(*args))
            except Exception as exc:  # captured per cell
                logger.debug("cell %r failed: %s", key, exc)
                results[index] = CellResult(key=key, error=exc)
            finally:
                done.release()

    def map(self, fn: Callable[..., Any], cells: Sequence[Tuple[Any, ...]],
            keys: Optional[Sequence[Hashable]] = None) -> List[CellResult]:
        cells = [tuple(c) for c in cells]
        keys = list(keys) if keys is not None else cells
        if len(keys) != len(cells):
            raise ValueError("keys and cells differ in length")
        results: List[Optional[CellResult]] = [None] * len(cells)

        if self._jobs == 1 or len(cells) <= 1:
            for i, (k, args) in enumerate(zip(keys, cells)):
                try:
                    results[i] = CellResult(key=k, value=fn(*args))
                except Exception as exc:
                    results[i] = CellResult(key=k, error=exc)
            return results  # type: ignore[return-value]

        started_here = not self._threads
        if started_here:
            self.start()
        done = threading.Semaphore(0)
        try:
            for i, (k, args) in enumerate(zip(keys, cells)):
                self._tasks.put((i, k, fn, args, results, done))
            for _ in cells:
                done.acquire()
        finally:
            if started_here:
                self.stop()
        return results  # type: ignore[return-value]
