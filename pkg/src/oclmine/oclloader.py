"""Runtime loader for the system's OpenCL shared library.

The library is loaded and unloaded explicitly at runtime; nothing links
against it at build time.  Symbols are resolved lazily, immediately
before their first invocation, and cached.  Calling any API entry while
the library is not loaded returns ``NOT_LOADED_ERROR`` through the
entry's normal error channel (the error-code return, or the trailing
``errcode_ret`` out-parameter of handle-returning entries).  Once
loaded, calls forward to the native library unchanged.

Status and cache are guarded by the writer-preferred RW lock from
:mod:`oclmine.concur`: dispatches hold read access for the duration of
the native call, so an unload can never rip the library out from under
a call in flight, and a load/unload storm serializes against the
readers exactly once per transition.
"""

from __future__ import annotations

import ctypes
import threading
from ctypes.util import find_library
from functools import partial

import _ctypes

from . import clapi
from .concur import RwLockWP

# Returned by any API entry invoked while the library is not loaded.
# Numerically the conventional "no platform found" extension code, so it
# flows through existing OpenCL error handling unmodified.
NOT_LOADED_ERROR = -1001
# Returned when the loaded library does not export the requested entry.
SYMBOL_MISSING_ERROR = -1002

# Probed in order when no explicit path or environment override is given.
DEFAULT_LIBRARY_CANDIDATES = (
    "libOpenCL.so.1",
    "libOpenCL.so",
    "libOpenCL.so.1.0.0",
    "OpenCL.dll",
)

ENV_LIBRARY_PATH = "OPENCL_LIB_PATH"


class LibraryNotFoundError(RuntimeError):
    """The OpenCL shared library could not be located or loaded."""


class LoaderStateError(RuntimeError):
    """Operation not valid for the loader's current status."""


class OpenClLoader:
    """Explicit load/unload lifecycle plus transparent call forwarding.

    API entries are available as attributes (``loader.clGetPlatformIDs(...)``)
    or via :meth:`dispatch`.  Resolved-symbol and per-entry forward
    counters are exposed for conformance tests.
    """

    def __init__(self) -> None:
        self._guard = RwLockWP()
        self._cdll: ctypes.CDLL | None = None
        self._path: str | None = None
        self._symbols: dict[str, object] = {}
        self._missing: set[str] = set()
        self._stats_lock = threading.Lock()
        self._forward_counts: dict[str, int] = {}

    # -- lifecycle ---------------------------------------------------

    def load(self, path: str | None = None) -> str:
        """Load the shared library; returns the path that was opened.

        With no argument the ``OPENCL_LIB_PATH`` environment variable
        and then a list of conventional library names are probed.
        Loading again with the same path is a no-op; a different path
        requires an unload first.  A missing library leaves the status
        unchanged and raises :class:`LibraryNotFoundError`.
        """
        candidates = self._candidates(path)
        with self._guard.write_locked():
            if self._cdll is not None:
                if path is None or str(path) == self._path:
                    return self._path  # type: ignore[return-value]
                raise LoaderStateError(
                    f"already loaded from {self._path!r}; unload before loading {path!r}"
                )
            errors = []
            for cand in candidates:
                try:
                    cdll = ctypes.CDLL(cand)
                except OSError as exc:
                    errors.append(f"{cand}: {exc}")
                    continue
                self._cdll = cdll
                self._path = cand
                self._symbols.clear()
                self._missing.clear()
                return cand
            raise LibraryNotFoundError(
                "no OpenCL library could be loaded; tried:\n  " + "\n  ".join(errors)
            )

    @staticmethod
    def _candidates(path: str | None) -> list[str]:
        if path is not None:
            return [str(path)]
        import os

        env = os.environ.get(ENV_LIBRARY_PATH)
        if env:
            return [env]
        cands = list(DEFAULT_LIBRARY_CANDIDATES)
        found = find_library("OpenCL")
        if found and found not in cands:
            cands.insert(0, found)
        return cands

    def unload(self) -> None:
        """Unload the library and clear the symbol cache; no-op when unloaded.

        The handle is closed, which drops this loader's reference;
        whether the OS actually releases the mapping is up to it.
        """
        with self._guard.write_locked():
            if self._cdll is None:
                return
            handle = self._cdll._handle
            self._cdll = None
            self._path = None
            self._symbols.clear()
            self._missing.clear()
            try:
                _ctypes.dlclose(handle)
            except OSError:
                pass

    # -- introspection -----------------------------------------------

    @property
    def loaded(self) -> bool:
        with self._guard.read_locked():
            return self._cdll is not None

    @property
    def library_path(self) -> str | None:
        with self._guard.read_locked():
            return self._path

    @property
    def resolved_symbols(self) -> tuple[str, ...]:
        with self._guard.read_locked():
            return tuple(self._symbols)

    def forward_count(self, name: str) -> int:
        with self._stats_lock:
            return self._forward_counts.get(name, 0)

    def reset_counters(self) -> None:
        with self._stats_lock:
            self._forward_counts.clear()

    # -- dispatch ----------------------------------------------------

    def dispatch(self, name: str, *args):
        """Invoke the named API entry per the load-status protocol.

        Not loaded: the entry's not-loaded error result.  Loaded but
        unresolved: resolve under exclusive access, then forward.
        Resolved: forward directly.  Forwarding happens under read
        access and returns the native result untouched.
        """
        entry = clapi.SIGNATURES.get(name)
        if entry is None:
            raise ValueError(f"{name!r} is not an OpenCL 1.2 core entry point")
        while True:
            with self._guard.read_locked():
                if self._cdll is None:
                    return self._error_result(entry, args, NOT_LOADED_ERROR)
                fn = self._symbols.get(name)
                if fn is not None:
                    with self._stats_lock:
                        self._forward_counts[name] = self._forward_counts.get(name, 0) + 1
                    return fn(*args)
                if name in self._missing:
                    return self._error_result(entry, args, SYMBOL_MISSING_ERROR)
            # Resolution mutates the cache, which needs exclusive access;
            # the lock forbids upgrades, so release and re-acquire, then
            # loop to re-check the status (an unload may have won the race).
            with self._guard.write_locked():
                if self._cdll is None:
                    continue
                if name not in self._symbols and name not in self._missing:
                    try:
                        fn = getattr(self._cdll, name)
                    except AttributeError:
                        self._missing.add(name)
                        continue
                    fn.restype = entry.restype
                    fn.argtypes = list(entry.argtypes)
                    self._symbols[name] = fn

    @staticmethod
    def _error_result(entry: clapi.ApiEntry, args: tuple, code: int):
        if entry.restype is clapi.cl_int:
            return code
        if entry.errcode_arg and args:
            out = args[-1]
            target = None
            if isinstance(out, ctypes.POINTER(clapi.cl_int)):
                target = out
            elif hasattr(out, "_obj"):  # byref(...) argument
                target = out._obj
            if target is not None:
                try:
                    target[0] = code
                except TypeError:
                    target.value = code
        return None

    def __getattr__(self, name: str):
        if name in clapi.SIGNATURES:
            return partial(self.dispatch, name)
        raise AttributeError(name)


_global_loader: OpenClLoader | None = None
_global_lock = threading.Lock()


def get_loader() -> OpenClLoader:
    """Process-wide loader instance."""
    global _global_loader
    with _global_lock:
        if _global_loader is None:
            _global_loader = OpenClLoader()
        return _global_loader
