"""Writer-preferred reentrant reader/writer lock and the cancellation token built on it.

The lock admits any number of concurrent readers, but from the moment a
writer starts waiting, threads that do not already hold read access queue
up behind it.  A thread that already holds read access may re-acquire it
without blocking, so polling loops never deadlock against themselves.
Read-to-write upgrade is forbidden and raises instead of deadlocking.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager
from typing import Iterator


class LockUpgradeError(RuntimeError):
    """Raised when a thread holding read access requests write access."""


class RwLockWP:
    """Reentrant (read side) reader/writer lock with writer preference.

    Writer reentrancy is not supported; the intended write sections are a
    couple of instructions long.  Blocking is wait/notify based, never a
    spin loop.
    """

    def __init__(self) -> None:
        self._cond = threading.Condition()
        self._holds: dict[int, int] = {}  # thread id -> read reentrancy depth
        self._writer: int | None = None
        self._writers_waiting = 0

    def acquire_read(self) -> None:
        me = threading.get_ident()
        with self._cond:
            if self._writer == me:
                raise LockUpgradeError("write holder may not take read access")
            if self._holds.get(me, 0) > 0:
                # Reentrant re-acquisition never blocks, even against a
                # waiting writer; blocking here would deadlock the writer
                # preference protocol.
                self._holds[me] += 1
                return
            while self._writer is not None or self._writers_waiting > 0:
                self._cond.wait()
            self._holds[me] = 1

    def release_read(self) -> None:
        me = threading.get_ident()
        with self._cond:
            depth = self._holds.get(me, 0)
            if depth == 0:
                raise RuntimeError("release_read without matching acquire_read")
            if depth == 1:
                del self._holds[me]
                if not self._holds:
                    self._cond.notify_all()
            else:
                self._holds[me] = depth - 1

    def acquire_write(self) -> None:
        me = threading.get_ident()
        with self._cond:
            if self._holds.get(me, 0) > 0:
                raise LockUpgradeError("read-to-write upgrade would deadlock")
            if self._writer == me:
                raise LockUpgradeError("writer reentrancy is not supported")
            self._writers_waiting += 1
            try:
                while self._writer is not None or self._holds:
                    self._cond.wait()
            finally:
                self._writers_waiting -= 1
            self._writer = me

    def release_write(self) -> None:
        me = threading.get_ident()
        with self._cond:
            if self._writer != me:
                raise RuntimeError("release_write by a thread that is not the writer")
            self._writer = None
            self._cond.notify_all()

    @contextmanager
    def read_locked(self) -> Iterator[None]:
        self.acquire_read()
        try:
            yield
        finally:
            self.release_read()

    @contextmanager
    def write_locked(self) -> Iterator[None]:
        self.acquire_write()
        try:
            yield
        finally:
            self.release_write()

    # Introspection used by tests and by the scripted interleaving suite.
    @property
    def reader_count(self) -> int:
        with self._cond:
            return len(self._holds)

    @property
    def writers_waiting(self) -> int:
        with self._cond:
            return self._writers_waiting

    @property
    def writer_active(self) -> bool:
        with self._cond:
            return self._writer is not None


class CancellationToken:
    """Shared abort flag guarded by a writer-preferred RW lock.

    Workers poll :meth:`is_cancelled` under the read lock; :meth:`cancel`
    takes the write lock, so every check that starts after ``cancel()``
    returns observes the flag.  The flag is monotone within one run;
    :meth:`reset` rearms the token between benchmark passes.
    """

    def __init__(self, lock: RwLockWP | None = None) -> None:
        self._lock = lock if lock is not None else RwLockWP()
        self._cancelled = False

    @property
    def lock(self) -> RwLockWP:
        return self._lock

    def cancel(self) -> None:
        with self._lock.write_locked():
            self._cancelled = True

    def reset(self) -> None:
        with self._lock.write_locked():
            self._cancelled = False

    def is_cancelled(self) -> bool:
        with self._lock.read_locked():
            return self._cancelled
