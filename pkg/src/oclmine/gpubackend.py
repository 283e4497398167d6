"""OpenCL host-side backend: device discovery, program build, buffers, launches.

Device programs are compiled from source at runtime through the loader.
Buffers that carry the dataset and the per-point 16-bit state are
host-memory-backed (``CL_MEM_USE_HOST_PTR``); the backing numpy arrays
are kept referenced for the buffer's lifetime so the memory cannot move
under the device, and the data buffer is additionally read-only.

The cancellation token is checked between kernel launches, never inside
one, so after ``cancel()`` returns at most one in-flight launch
completes.  Both algorithms drive the exact traversal/iteration logic
of the single-threaded reference; only the distance step runs on the
device, which keeps labels bitwise-identical across backends.
"""

from __future__ import annotations

import ctypes
import logging
import os
import time
from ctypes import byref, c_char_p, c_float, c_int32, c_size_t, c_uint32, c_void_p
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import clapi, cluster
from .concur import CancellationToken
from .datagen import Dataset
from .oclloader import OpenClLoader
from .parbackend import SetupTiming

logger = logging.getLogger(__name__)

ENV_KERNEL_DIR = "OCLMINE_KERNELS"

KMEANS_KERNEL = "kmeans_assign"
DBSCAN_MAIN_KERNEL = "dbscan_reach_main"
DBSCAN_EXPAND_KERNEL = "dbscan_reach_expand"


class GpuError(RuntimeError):
    """A native call failed; carries the OpenCL error code verbatim."""

    def __init__(self, message: str, code: int | None = None) -> None:
        if code is not None:
            message = f"{message}: {clapi.error_name(code)}"
        super().__init__(message)
        self.code = code


class DeviceUnavailable(GpuError):
    """No OpenCL platform/device of the requested type is reachable."""


class CompileError(GpuError):
    """Program build failed; ``build_log`` is the compiler output verbatim."""

    def __init__(self, message: str, build_log: str, code: int | None = None) -> None:
        super().__init__(message, code)
        self.build_log = build_log


class UseAfterTeardown(RuntimeError):
    """The context was already torn down."""


@dataclass(frozen=True)
class KernelSourceBundle:
    """Device program sources plus the compiler option string."""

    kmeans_assign: str
    dbscan_main: str
    dbscan_expand: str
    build_options: str = ""


def default_kernel_dir() -> Path:
    env = os.environ.get(ENV_KERNEL_DIR)
    if env:
        return Path(env)
    return Path(__file__).resolve().parents[2] / "kernels"


def load_kernel_bundle(path: str | Path | None = None) -> KernelSourceBundle:
    """Read the kernel sources from ``kernels/`` (or an explicit directory)."""
    base = Path(path) if path is not None else default_kernel_dir()
    try:
        return KernelSourceBundle(
            kmeans_assign=(base / "kmeans_assign.cl").read_text(),
            dbscan_main=(base / "dbscan_main.cl").read_text(),
            dbscan_expand=(base / "dbscan_expand.cl").read_text(),
        )
    except OSError as exc:
        raise FileNotFoundError(f"kernel sources not found under {base}: {exc}") from exc


class GpuContext:
    """One device context: queue, built programs, kernels, live buffers.

    Created by :func:`gpu_setup`, destroyed by :func:`gpu_teardown`;
    usable only in between.  Buffers created by the algorithms are
    registered here and released in reverse creation order.
    """

    def __init__(self, loader: OpenClLoader) -> None:
        self.loader = loader
        self.platform = c_void_p()
        self.device = c_void_p()
        self.device_name = ""
        self.context = None
        self.queue = None
        self.programs: dict[str, int] = {}
        self.kernels: dict[str, int] = {}
        self.setup_ns = 0
        self.buffer_ns = 0
        self.teardown_ns = 0
        self._buffers: list[tuple[int, object]] = []  # (handle, pinned backing)
        self._torn = False

    def check_alive(self) -> None:
        if self._torn:
            raise UseAfterTeardown("GPU context was torn down")

    # -- buffer management -------------------------------------------

    def create_buffer(self, flags: int, size: int, host: np.ndarray | None = None) -> int:
        """Create a device buffer; ``host`` pins the backing array for its lifetime."""
        self.check_alive()
        t0 = time.perf_counter_ns()
        err = c_int32(0)
        host_ptr = host.ctypes.data if host is not None else None
        handle = self.loader.clCreateBuffer(
            self.context, flags, size, c_void_p(host_ptr) if host_ptr else None, byref(err)
        )
        self.buffer_ns += time.perf_counter_ns() - t0
        if not handle or err.value != clapi.CL_SUCCESS:
            raise GpuError("clCreateBuffer failed", err.value)
        self._buffers.append((handle, host))
        return handle

    def release_buffer(self, handle: int) -> None:
        t0 = time.perf_counter_ns()
        rc = self.loader.clReleaseMemObject(c_void_p(handle))
        self.buffer_ns += time.perf_counter_ns() - t0
        self._buffers = [(h, b) for h, b in self._buffers if h != handle]
        if rc != clapi.CL_SUCCESS:
            logger.warning("clReleaseMemObject failed: %s", clapi.error_name(rc))

    def release_all_buffers(self) -> None:
        for handle, _ in reversed(list(self._buffers)):
            self.release_buffer(handle)

    # -- launch helpers ------------------------------------------------

    def set_args(self, kernel: int, args: list[tuple[int, object]]) -> None:
        for index, value in args:
            if isinstance(value, int):  # buffer handle
                holder = c_void_p(value)
                rc = self.loader.clSetKernelArg(
                    c_void_p(kernel), index, ctypes.sizeof(c_void_p), byref(holder)
                )
            else:  # ctypes scalar
                rc = self.loader.clSetKernelArg(
                    c_void_p(kernel), index, ctypes.sizeof(value), byref(value)
                )
            if rc != clapi.CL_SUCCESS:
                raise GpuError(f"clSetKernelArg({index}) failed", rc)

    def launch(self, kernel: int, global_size: int) -> None:
        gsz = c_size_t(global_size)
        rc = self.loader.clEnqueueNDRangeKernel(
            self.queue, c_void_p(kernel), 1, None, byref(gsz), None, 0, None, None
        )
        if rc != clapi.CL_SUCCESS:
            raise GpuError("clEnqueueNDRangeKernel failed", rc)

    def write_buffer(self, handle: int, host: np.ndarray) -> None:
        rc = self.loader.clEnqueueWriteBuffer(
            self.queue, c_void_p(handle), clapi.CL_BLOCKING, 0, host.nbytes,
            c_void_p(host.ctypes.data), 0, None, None,
        )
        if rc != clapi.CL_SUCCESS:
            raise GpuError("clEnqueueWriteBuffer failed", rc)

    def read_buffer(self, handle: int, host: np.ndarray) -> None:
        rc = self.loader.clEnqueueReadBuffer(
            self.queue, c_void_p(handle), clapi.CL_BLOCKING, 0, host.nbytes,
            c_void_p(host.ctypes.data), 0, None, None,
        )
        if rc != clapi.CL_SUCCESS:
            raise GpuError("clEnqueueReadBuffer failed", rc)

    def map_buffer(self, handle: int, nbytes: int, flags: int) -> int:
        err = c_int32(0)
        ptr = self.loader.clEnqueueMapBuffer(
            self.queue, c_void_p(handle), clapi.CL_BLOCKING, flags, 0, nbytes, 0, None, None, byref(err)
        )
        if not ptr or err.value != clapi.CL_SUCCESS:
            raise GpuError("clEnqueueMapBuffer failed", err.value)
        return ptr

    def unmap_buffer(self, handle: int, ptr: int) -> None:
        rc = self.loader.clEnqueueUnmapMemObject(self.queue, c_void_p(handle), c_void_p(ptr), 0, None, None)
        if rc != clapi.CL_SUCCESS:
            raise GpuError("clEnqueueUnmapMemObject failed", rc)

    def finish(self) -> None:
        rc = self.loader.clFinish(self.queue)
        if rc != clapi.CL_SUCCESS:
            raise GpuError("clFinish failed", rc)


def _find_device(loader: OpenClLoader, allow_cpu: bool) -> tuple[c_void_p, c_void_p]:
    nplat = c_uint32(0)
    rc = loader.clGetPlatformIDs(0, None, byref(nplat))
    if rc != clapi.CL_SUCCESS or nplat.value == 0:
        raise DeviceUnavailable("no OpenCL platform", rc if rc != clapi.CL_SUCCESS else None)
    platforms = (clapi.cl_handle * nplat.value)()
    rc = loader.clGetPlatformIDs(nplat.value, platforms, None)
    if rc != clapi.CL_SUCCESS:
        raise DeviceUnavailable("platform enumeration failed", rc)
    device_types = [clapi.CL_DEVICE_TYPE_GPU]
    if allow_cpu:
        device_types.append(clapi.CL_DEVICE_TYPE_ALL)
    last_rc = clapi.CL_DEVICE_NOT_FOUND
    for devtype in device_types:
        for plat in platforms:
            dev = c_void_p()
            ndev = c_uint32(0)
            rc = loader.clGetDeviceIDs(c_void_p(plat), devtype, 1, byref(dev), byref(ndev))
            if rc == clapi.CL_SUCCESS and ndev.value >= 1:
                return c_void_p(plat), dev
            last_rc = rc
    raise DeviceUnavailable("no usable OpenCL device", last_rc)


def _build_program(ctx: GpuContext, name: str, sources: list[str], options: str) -> int:
    loader = ctx.loader
    err = c_int32(0)
    encoded = [s.encode() for s in sources]
    strings = (c_char_p * len(encoded))(*encoded)
    lengths = (c_size_t * len(encoded))(*[len(s) for s in encoded])
    program = loader.clCreateProgramWithSource(ctx.context, len(encoded), strings, lengths, byref(err))
    if not program or err.value != clapi.CL_SUCCESS:
        raise GpuError(f"clCreateProgramWithSource({name}) failed", err.value)
    rc = loader.clBuildProgram(c_void_p(program), 1, byref(ctx.device), options.encode() or None, None, None)
    if rc != clapi.CL_SUCCESS:
        log_size = c_size_t(0)
        loader.clGetProgramBuildInfo(
            c_void_p(program), ctx.device, clapi.CL_PROGRAM_BUILD_LOG, 0, None, byref(log_size)
        )
        buf = ctypes.create_string_buffer(max(log_size.value, 1))
        loader.clGetProgramBuildInfo(
            c_void_p(program), ctx.device, clapi.CL_PROGRAM_BUILD_LOG, len(buf), buf, None
        )
        loader.clReleaseProgram(c_void_p(program))
        raise CompileError(f"build of {name} program failed", buf.value.decode(errors="replace"), rc)
    return program


def _create_kernel(ctx: GpuContext, program: int, name: str) -> int:
    err = c_int32(0)
    kernel = ctx.loader.clCreateKernel(c_void_p(program), name.encode(), byref(err))
    if not kernel or err.value != clapi.CL_SUCCESS:
        raise GpuError(f"clCreateKernel({name}) failed", err.value)
    return kernel


def gpu_setup(
    loader: OpenClLoader,
    sources: KernelSourceBundle,
    algorithms: tuple[str, ...] = ("dbscan", "kmeans"),
    allow_cpu: bool = False,
) -> GpuContext:
    """Pick a device, create context and queue, compile the requested programs.

    The whole sequence is timed into ``ctx.setup_ns``.  Build failures
    raise :class:`CompileError` carrying the build log verbatim; a
    missing platform or device (including an unloaded loader) raises
    :class:`DeviceUnavailable` wrapping the native code.
    """
    ctx = GpuContext(loader)
    t0 = time.perf_counter_ns()
    ctx.platform, ctx.device = _find_device(loader, allow_cpu)

    name_buf = ctypes.create_string_buffer(256)
    if loader.clGetDeviceInfo(ctx.device, clapi.CL_DEVICE_NAME, 256, name_buf, None) == clapi.CL_SUCCESS:
        ctx.device_name = name_buf.value.decode(errors="replace")

    err = c_int32(0)
    ctx.context = loader.clCreateContext(None, 1, byref(ctx.device), None, None, byref(err))
    if not ctx.context or err.value != clapi.CL_SUCCESS:
        raise GpuError("clCreateContext failed", err.value)
    ctx.queue = loader.clCreateCommandQueue(c_void_p(ctx.context), ctx.device, 0, byref(err))
    if not ctx.queue or err.value != clapi.CL_SUCCESS:
        loader.clReleaseContext(c_void_p(ctx.context))
        raise GpuError("clCreateCommandQueue failed", err.value)
    ctx.context = c_void_p(ctx.context)
    ctx.queue = c_void_p(ctx.queue)

    try:
        if "kmeans" in algorithms:
            prog = _build_program(ctx, "kmeans", [sources.kmeans_assign], sources.build_options)
            ctx.programs["kmeans"] = prog
            ctx.kernels[KMEANS_KERNEL] = _create_kernel(ctx, prog, KMEANS_KERNEL)
        if "dbscan" in algorithms:
            prog = _build_program(
                ctx, "dbscan", [sources.dbscan_main, sources.dbscan_expand], sources.build_options
            )
            ctx.programs["dbscan"] = prog
            ctx.kernels[DBSCAN_MAIN_KERNEL] = _create_kernel(ctx, prog, DBSCAN_MAIN_KERNEL)
            ctx.kernels[DBSCAN_EXPAND_KERNEL] = _create_kernel(ctx, prog, DBSCAN_EXPAND_KERNEL)
    except Exception:
        _teardown_native(ctx)
        ctx._torn = True
        raise
    ctx.setup_ns = time.perf_counter_ns() - t0
    return ctx


def _teardown_native(ctx: GpuContext) -> None:
    loader = ctx.loader

    def best_effort(rc: int, what: str) -> None:
        if rc != clapi.CL_SUCCESS:
            logger.warning("%s failed during teardown: %s", what, clapi.error_name(rc))

    ctx.release_all_buffers()
    for name, kernel in reversed(list(ctx.kernels.items())):
        best_effort(loader.clReleaseKernel(c_void_p(kernel)), f"clReleaseKernel({name})")
    for name, program in reversed(list(ctx.programs.items())):
        best_effort(loader.clReleaseProgram(c_void_p(program)), f"clReleaseProgram({name})")
    if ctx.queue:
        best_effort(loader.clReleaseCommandQueue(ctx.queue), "clReleaseCommandQueue")
    if ctx.context:
        best_effort(loader.clReleaseContext(ctx.context), "clReleaseContext")
    ctx.kernels.clear()
    ctx.programs.clear()
    ctx.queue = None
    ctx.context = None


def gpu_teardown(ctx: GpuContext) -> SetupTiming:
    """Release kernels, programs, buffers, queue, and context (best effort).

    Returns the context's overhead interval: setup plus accumulated
    buffer management time on the setup side, and the teardown duration.
    Tearing down twice is an error.
    """
    ctx.check_alive()
    t0 = time.perf_counter_ns()
    _teardown_native(ctx)
    ctx.teardown_ns = time.perf_counter_ns() - t0
    ctx._torn = True
    return SetupTiming(setup_ns=ctx.setup_ns + ctx.buffer_ns, teardown_ns=ctx.teardown_ns)


def kmeans_gpu(
    ctx: GpuContext,
    ds: Dataset,
    params: cluster.KmeansParams,
    seed: int,
    token: CancellationToken | None = None,
    init_indices: np.ndarray | None = None,
    on_iteration: cluster.IterationHook | None = None,
) -> cluster.KmeansResult:
    """Lloyd Kmeans with the assignment step on the device.

    Per iteration the host writes the current centers, launches one
    kernel over n work-items that stores each point's argmin center
    index in the 16-bit state buffer, then maps the buffer and performs
    the canonical center update and tolerance test.  Initialization and
    termination match the single-threaded reference exactly.
    """
    ctx.check_alive()
    if KMEANS_KERNEL not in ctx.kernels:
        raise GpuError("context was set up without the kmeans program")
    n, d = ds.n, ds.d
    labels_host = np.zeros(n, dtype=np.uint16)
    data_buf = ctx.create_buffer(
        clapi.CL_MEM_READ_ONLY | clapi.CL_MEM_USE_HOST_PTR, ds.data.nbytes, ds.data
    )
    state_buf = ctx.create_buffer(
        clapi.CL_MEM_READ_WRITE | clapi.CL_MEM_USE_HOST_PTR, labels_host.nbytes, labels_host
    )
    centers_buf = ctx.create_buffer(clapi.CL_MEM_READ_ONLY, params.k * d * 4)
    kernel = ctx.kernels[KMEANS_KERNEL]
    ctx.set_args(
        kernel,
        [
            (0, data_buf),
            (1, centers_buf),
            (2, c_uint32(n)),
            (3, c_uint32(d)),
            (4, c_uint32(params.k)),
            (5, state_buf),
        ],
    )

    def assign(centers: np.ndarray, labels: np.ndarray) -> None:
        ctx.write_buffer(centers_buf, centers)
        ctx.launch(kernel, n)
        ptr = ctx.map_buffer(state_buf, labels_host.nbytes, clapi.CL_MAP_READ)
        labels[:] = labels_host
        ctx.unmap_buffer(state_buf, ptr)

    try:
        result = cluster.kmeans_drive(ds, params, token, assign, seed, init_indices, on_iteration)
        ctx.finish()
        return result
    finally:
        for buf in (centers_buf, state_buf, data_buf):
            ctx.release_buffer(buf)


def dbscan_gpu(
    ctx: GpuContext,
    ds: Dataset,
    params: cluster.DbscanParams,
    token: CancellationToken | None = None,
) -> np.ndarray:
    """DBSCAN with the reachability scans on the device.

    The host drives the reference traversal; each query point costs one
    launch over n work-items that sets a phase flag bit in the shared
    16-bit state words and bumps an atomic neighbor counter.  The main
    loop and cluster expansion use their own kernel variants, which
    differ only in the flag bit they own.  The state buffer aliases the
    traversal's own word array, so kernels and host cooperate on a
    single 16-bit word per point.
    """
    ctx.check_alive()
    if DBSCAN_MAIN_KERNEL not in ctx.kernels:
        raise GpuError("context was set up without the dbscan program")
    n = ds.n
    state_host = np.zeros(n, dtype=np.uint16)
    counter_host = np.zeros(1, dtype=np.uint32)
    data_buf = ctx.create_buffer(
        clapi.CL_MEM_READ_ONLY | clapi.CL_MEM_USE_HOST_PTR, ds.data.nbytes, ds.data
    )
    state_buf = ctx.create_buffer(
        clapi.CL_MEM_READ_WRITE | clapi.CL_MEM_USE_HOST_PTR, state_host.nbytes, state_host
    )
    counter_buf = ctx.create_buffer(clapi.CL_MEM_READ_WRITE, 4)
    eps2 = c_float(float(params.eps2))
    zero = np.zeros(1, dtype=np.uint32)

    phases = {
        "main": (ctx.kernels[DBSCAN_MAIN_KERNEL], np.uint16(cluster.FLAG_REACH_MAIN)),
        "expand": (ctx.kernels[DBSCAN_EXPAND_KERNEL], np.uint16(cluster.FLAG_REACH_EXPAND)),
    }
    for kernel, _ in phases.values():
        ctx.set_args(
            kernel,
            [
                (0, data_buf),
                (1, c_uint32(n)),
                (2, c_uint32(ds.d)),
                (4, eps2),
                (5, state_buf),
                (6, counter_buf),
            ],
        )

    # The state buffer stays mapped while the host traversal reads and
    # labels; it is unmapped only around launches.
    mapped = ctx.map_buffer(state_buf, state_host.nbytes, clapi.CL_MAP_READ | clapi.CL_MAP_WRITE)

    def query_fn(phase: str):
        kernel, flag = phases[phase]

        def query(qs: np.ndarray) -> list[np.ndarray]:
            nonlocal mapped
            results = []
            for q in qs:
                if token is not None and token.is_cancelled():
                    raise cluster.Aborted("dbscan cancelled")
                ctx.unmap_buffer(state_buf, mapped)
                mapped = 0
                ctx.write_buffer(counter_buf, zero)
                ctx.set_args(kernel, [(3, c_uint32(int(q)))])
                ctx.launch(kernel, n)
                ctx.read_buffer(counter_buf, counter_host)
                mapped = ctx.map_buffer(
                    state_buf, state_host.nbytes, clapi.CL_MAP_READ | clapi.CL_MAP_WRITE
                )
                hits = np.flatnonzero(state_host & flag).astype(np.int32)
                state_host[hits] &= ~flag  # type: ignore[misc]
                if hits.shape[0] != int(counter_host[0]):
                    raise GpuError(
                        f"device neighbor counter {int(counter_host[0])} != flagged count {hits.shape[0]}"
                    )
                results.append(hits)
            return results

        return query

    try:
        labels = cluster.dbscan_drive(
            n, params, token, query_fn("main"), query_fn("expand"),
            expansion_batch=1, main_lookahead=1, state=state_host,
        )
        ctx.finish()
        return labels
    finally:
        if mapped:
            ctx.unmap_buffer(state_buf, mapped)
        for buf in (counter_buf, state_buf, data_buf):
            ctx.release_buffer(buf)
