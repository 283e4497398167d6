"""Fixtures for the device-program tests: stub driver build and device probe."""

from __future__ import annotations

import subprocess
from pathlib import Path

import pytest

from oclmine import gpubackend
from oclmine.oclloader import OpenClLoader

KERNEL_DIR = Path(__file__).resolve().parents[1]
STUB_SOURCE = KERNEL_DIR.parent / "stub" / "stubcl.c"


@pytest.fixture(scope="session")
def stub_lib(tmp_path_factory: pytest.TempPathFactory) -> Path:
    out = tmp_path_factory.mktemp("stub") / "libstubcl.so"
    subprocess.run(
        ["cc", "-shared", "-fPIC", "-O2", str(STUB_SOURCE), "-o", str(out)],
        check=True,
        capture_output=True,
    )
    return out


@pytest.fixture(scope="session")
def bundle() -> gpubackend.KernelSourceBundle:
    return gpubackend.load_kernel_bundle(KERNEL_DIR)


@pytest.fixture(scope="module")
def device_loader():
    """Loader bound to a real or software OpenCL device, or skip."""
    loader = OpenClLoader()
    try:
        loader.load()
    except Exception:
        pytest.skip("no OpenCL shared library on this machine")
    try:
        ctx = gpubackend.gpu_setup(loader, gpubackend.load_kernel_bundle(KERNEL_DIR), allow_cpu=True)
    except (gpubackend.DeviceUnavailable, gpubackend.GpuError) as exc:
        loader.unload()
        pytest.skip(f"no usable OpenCL device: {exc}")
    gpubackend.gpu_teardown(ctx)
    yield loader
    loader.unload()
