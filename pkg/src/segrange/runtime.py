"""Single-process runtime simulating P memory locales.

Each locale gets one worker thread draining a FIFO queue, so tasks
submitted to the same locale run in submission order while tasks on
distinct locales may run concurrently.  That per-locale FIFO is the
runtime's only ordering promise.  Storage lives in per-locale arenas;
cross-locale transfers go through copy / copy_async so the data movement
is explicit even though it is a plain memory copy in-process.

Copies run on a small dedicated transfer pool rather than the locale
workers, so a task may wait on a copy of its own locale's data without
deadlocking its worker.
"""

from __future__ import annotations

import concurrent.futures
import os
import queue
import threading
import weakref

import numpy as np

from . import core
from .core import LocaleId

LOCALE_CAP = 16
LOCALES_ENV = "SEGRANGE_LOCALES"


class AggregateTaskError(RuntimeError):
    """One or more tasks in a wait_all failed.

    Carries every failure, not just the first, as (ticket index, exception)
    pairs in ``failures``.
    """

    def __init__(self, failures):
        self.failures = list(failures)
        indices = ", ".join(str(i) for i, _ in self.failures)
        msgs = "; ".join(f"[{i}] {type(e).__name__}: {e}" for i, e in self.failures)
        super().__init__(f"{len(self.failures)} task(s) failed (indices {indices}): {msgs}")


def default_locale_count() -> int:
    """SEGRANGE_LOCALES if set, else hardware execution units capped at 16."""
    env = os.environ.get(LOCALES_ENV)
    if env:
        n = int(env)
        if n < 1:
            raise ValueError(f"{LOCALES_ENV} must be at least 1, got {n}")
        return n
    try:
        hw = len(os.sched_getaffinity(0))
    except AttributeError:
        hw = os.cpu_count() or 1
    return max(1, min(hw, LOCALE_CAP))


class StorageHandle:
    """Zero-initialized storage owned by exactly one locale.

    Elements are reached either through the read/write proxy accessors
    (modelling remote references) or in bulk through the span, which
    algorithms obtain via ``core.local_view`` on a segment.
    """

    __slots__ = ("locale", "length", "dtype", "runtime", "_array", "_freed", "__weakref__")

    def __init__(self, runtime, locale: LocaleId, length: int, dtype):
        self.runtime = runtime
        self.locale = locale
        self.length = length
        self.dtype = np.dtype(dtype)
        self._array = np.zeros(length, dtype=self.dtype)
        self._freed = False

    def span(self) -> np.ndarray:
        if self._freed:
            raise RuntimeError("use after free: storage handle was released")
        return self._array

    def read(self, i: int):
        return self.span()[i].item()

    def write(self, i: int, value):
        self.span()[i] = value

    def free(self):
        if self._freed:
            raise RuntimeError("double free of storage handle")
        self._freed = True
        self._array = np.zeros(0, dtype=self.dtype)

    @property
    def freed(self) -> bool:
        return self._freed

    def __len__(self):
        return self.length

    def __repr__(self):
        state = "freed" if self._freed else "live"
        return f"StorageHandle(locale={self.locale}, length={self.length}, dtype={self.dtype}, {state})"


class TaskTicket:
    """Completion token for a submitted task.

    ``wait`` returns the task's result, re-raising its exception if it
    failed.  Waiting again is a no-op returning the cached result.
    """

    __slots__ = ("_future",)

    def __init__(self, future):
        self._future = future

    def wait(self, timeout=None):
        return self._future.result(timeout)

    def done(self) -> bool:
        return self._future.done()

    def exception(self, timeout=None):
        return self._future.exception(timeout)


class _Worker(threading.Thread):
    def __init__(self, locale: LocaleId):
        super().__init__(name=f"segrange-locale-{locale}", daemon=True)
        self.locale = locale
        self.tasks = queue.SimpleQueue()
        self.start()

    def run(self):
        core._set_current_locale(self.locale)
        while True:
            item = self.tasks.get()
            if item is None:
                return
            future, fn, args, kwargs = item
            if not future.set_running_or_notify_cancel():
                continue
            try:
                future.set_result(fn(*args, **kwargs))
            except BaseException as exc:
                future.set_exception(exc)


class Runtime:
    """P locales, each with a storage arena and one FIFO worker agent.

    ``worker_mode="threads"`` (default) runs tasks on per-locale threads;
    ``"inline"`` executes them synchronously at submission, which keeps the
    same semantics (per-locale order, ticket results) minus concurrency and
    is occasionally handy for debugging.

    Safe to share between driver threads.  Writes made by tasks are visible
    to anything that observed the corresponding wait, which is the
    wait_all barrier the algorithms rely on.
    """

    def __init__(self, locale_count: int | None = None, worker_mode: str = "threads"):
        if locale_count is None:
            locale_count = default_locale_count()
        if locale_count < 1:
            raise ValueError(f"locale_count must be at least 1, got {locale_count}")
        if worker_mode not in ("threads", "inline"):
            raise ValueError(f"unknown worker mode {worker_mode!r}")
        self.locale_count = int(locale_count)
        self.worker_mode = worker_mode
        self._closed = False
        self._lock = threading.Lock()
        # Registry is weak: arrays die with their handles, the arena only
        # tracks what is currently live.
        self._registry = [weakref.WeakSet() for _ in range(self.locale_count)]
        self._workers = (
            [_Worker(i) for i in range(self.locale_count)]
            if worker_mode == "threads"
            else []
        )
        self._copy_pool = concurrent.futures.ThreadPoolExecutor(
            max_workers=max(2, min(self.locale_count, 4)),
            thread_name_prefix="segrange-copy",
        )

    # -- allocation --------------------------------------------------

    def allocate(self, locale: LocaleId, length: int, dtype=np.float64) -> StorageHandle:
        self._check_open()
        self._check_locale(locale)
        if length < 0:
            raise ValueError(f"allocation length must be non-negative, got {length}")
        handle = StorageHandle(self, locale, length, dtype)
        self._registry[locale].add(handle)
        return handle

    def live_allocations(self, locale: LocaleId) -> int:
        self._check_locale(locale)
        return len(self._registry[locale])

    # -- task submission ---------------------------------------------

    def submit(self, locale: LocaleId, fn, *args, **kwargs) -> TaskTicket:
        self._check_open()
        self._check_locale(locale)
        future = concurrent.futures.Future()
        if self.worker_mode == "inline":
            self._run_inline(future, locale, fn, args, kwargs)
        else:
            self._workers[locale].tasks.put((future, fn, args, kwargs))
        return TaskTicket(future)

    @staticmethod
    def _run_inline(future, locale, fn, args, kwargs):
        prev = core.current_locale()
        core._set_current_locale(locale)
        try:
            if future.set_running_or_notify_cancel():
                try:
                    future.set_result(fn(*args, **kwargs))
                except BaseException as exc:
                    future.set_exception(exc)
        finally:
            core._set_current_locale(prev)

    def wait_all(self, tickets) -> list:
        """Results in ticket order, regardless of completion order.

        If any task failed, raises AggregateTaskError naming every failed
        ticket index (the remaining tasks still ran to completion).
        """
        tickets = list(tickets)
        results = []
        failures = []
        for i, t in enumerate(tickets):
            try:
                results.append(t.wait())
            except Exception as exc:
                failures.append((i, exc))
        if failures:
            raise AggregateTaskError(failures)
        return results

    def map_segments(self, pairs) -> list:
        """Submit (locale, thunk) pairs and wait; results in pair order."""
        return self.wait_all([self.submit(loc, fn) for loc, fn in pairs])

    # -- copy --------------------------------------------------------

    def copy(self, src, dst) -> None:
        """Elementwise copy between spans/handles, possibly across locales.

        Lengths and dtypes must match; the check happens before any write.
        """
        s, d = _resolve_span(src), _resolve_span(dst)
        _check_copy(s, d)
        d[...] = s

    def copy_async(self, src, dst) -> TaskTicket:
        """Asynchronous copy; the returned ticket resolves on completion.

        copy_async followed by wait is observationally identical to copy.
        Runs on the transfer pool, never on a locale worker.
        """
        self._check_open()
        s, d = _resolve_span(src), _resolve_span(dst)
        _check_copy(s, d)

        def transfer():
            d[...] = s

        return TaskTicket(self._copy_pool.submit(transfer))

    def run_transfer(self, fn, *args) -> TaskTicket:
        """Run an arbitrary thunk on the transfer pool (internal plumbing)."""
        self._check_open()
        return TaskTicket(self._copy_pool.submit(fn, *args))

    # -- lifecycle ---------------------------------------------------

    def close(self):
        with self._lock:
            if self._closed:
                return
            self._closed = True
        for w in self._workers:
            w.tasks.put(None)
        for w in self._workers:
            w.join(timeout=5.0)
        self._copy_pool.shutdown(wait=True)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False

    def __repr__(self):
        return f"Runtime(locale_count={self.locale_count}, worker_mode={self.worker_mode!r})"

    def _check_open(self):
        if self._closed:
            raise RuntimeError("runtime is closed")

    def _check_locale(self, locale):
        if not 0 <= locale < self.locale_count:
            raise ValueError(
                f"invalid locale {locale}: runtime has locales 0..{self.locale_count - 1}"
            )


def _resolve_span(obj) -> np.ndarray:
    if isinstance(obj, StorageHandle):
        return obj.span()
    if isinstance(obj, np.ndarray):
        return obj
    raise TypeError(f"cannot copy {type(obj).__name__}; expected ndarray or StorageHandle")


def _check_copy(src: np.ndarray, dst: np.ndarray):
    if src.shape != dst.shape:
        raise ValueError(f"copy length mismatch: source {src.shape}, destination {dst.shape}")
    if src.dtype != dst.dtype:
        raise ValueError(f"copy dtype mismatch: source {src.dtype}, destination {dst.dtype}")
    if not dst.flags.writeable:
        raise ValueError("copy destination is read-only")
