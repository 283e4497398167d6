"""Shared fixtures: the instrumented stub OpenCL driver, built once per session."""

from __future__ import annotations

import ctypes
import subprocess
from pathlib import Path

import pytest

STUB_SOURCE = Path(__file__).resolve().parents[1] / "stub" / "stubcl.c"


def _compile_stub(out: Path, extra: list[str]) -> Path:
    cmd = ["cc", "-shared", "-fPIC", "-O2", str(STUB_SOURCE), "-o", str(out), *extra]
    subprocess.run(cmd, check=True, capture_output=True)
    return out


@pytest.fixture(scope="session")
def stub_lib(tmp_path_factory: pytest.TempPathFactory) -> Path:
    """Full stub driver shared library."""
    out = tmp_path_factory.mktemp("stub") / "libstubcl.so"
    return _compile_stub(out, [])


@pytest.fixture(scope="session")
def stub_lib_truncated(tmp_path_factory: pytest.TempPathFactory) -> Path:
    """Stub variant missing clFinish, for missing-symbol tests."""
    out = tmp_path_factory.mktemp("stub_trunc") / "libstubcl.so"
    return _compile_stub(out, ["-DSTUB_TRUNCATED"])


class StubProbe:
    """Direct handle to the stub's instrumentation exports.

    Loading the same path again shares globals with the loader's handle,
    so counters reflect calls made through the loader.
    """

    def __init__(self, path: Path) -> None:
        self._lib = ctypes.CDLL(str(path))
        self._lib.stubcl_call_count.restype = ctypes.c_long
        self._lib.stubcl_call_count.argtypes = [ctypes.c_char_p]
        self._lib.stubcl_total_calls.restype = ctypes.c_long
        self._lib.stubcl_live_objects.restype = ctypes.c_long
        self._lib.stubcl_live_of_type.restype = ctypes.c_long
        self._lib.stubcl_live_of_type.argtypes = [ctypes.c_int]

    def calls(self, name: str) -> int:
        return self._lib.stubcl_call_count(name.encode())

    def total_calls(self) -> int:
        return self._lib.stubcl_total_calls()

    def live_objects(self) -> int:
        return self._lib.stubcl_live_objects()

    def live_of_type(self, type_id: int) -> int:
        return self._lib.stubcl_live_of_type(type_id)

    def reset(self) -> None:
        self._lib.stubcl_reset()


@pytest.fixture()
def stub_probe(stub_lib: Path) -> StubProbe:
    probe = StubProbe(stub_lib)
    probe.reset()
    return probe
