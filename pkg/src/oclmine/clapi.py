"""OpenCL 1.2 core C API: ctypes signatures and the constants the host code uses.

The signature table is the loader's wire contract: symbol names,
argument types, and which entries report failure through a trailing
``errcode_ret`` out-parameter instead of an error-code return.  The
1.1 entry points that 1.2 still ships (deprecated) are included, since
the targeted device class speaks 1.1/1.2.
"""

from __future__ import annotations

from ctypes import CFUNCTYPE, POINTER, c_char_p, c_int32, c_size_t, c_uint32, c_uint64, c_void_p
from dataclasses import dataclass, field

cl_int = c_int32
cl_uint = c_uint32
cl_ulong = c_uint64
cl_bool = c_uint32
cl_bitfield = c_uint64
cl_handle = c_void_p  # platforms, devices, contexts, queues, mems, programs, kernels, events, samplers

# Notification callback shapes, for callers that register callbacks.  The
# signature table declares callback slots as c_void_p so that both NULL
# and CFUNCTYPE instances pass through unchanged.
context_notify_fn = CFUNCTYPE(None, c_char_p, c_void_p, c_size_t, c_void_p)
program_notify_fn = CFUNCTYPE(None, c_void_p, c_void_p)
mem_destructor_fn = CFUNCTYPE(None, c_void_p, c_void_p)
event_notify_fn = CFUNCTYPE(None, c_void_p, c_int32, c_void_p)
native_kernel_fn = CFUNCTYPE(None, c_void_p)
_cb = c_void_p

# Error codes
CL_SUCCESS = 0
CL_DEVICE_NOT_FOUND = -1
CL_DEVICE_NOT_AVAILABLE = -2
CL_COMPILER_NOT_AVAILABLE = -3
CL_MEM_OBJECT_ALLOCATION_FAILURE = -4
CL_OUT_OF_RESOURCES = -5
CL_OUT_OF_HOST_MEMORY = -6
CL_BUILD_PROGRAM_FAILURE = -11
CL_INVALID_VALUE = -30
CL_INVALID_PLATFORM = -32
CL_INVALID_DEVICE = -33
CL_INVALID_CONTEXT = -34
CL_INVALID_COMMAND_QUEUE = -36
CL_INVALID_MEM_OBJECT = -38
CL_INVALID_PROGRAM = -44
CL_INVALID_PROGRAM_EXECUTABLE = -45
CL_INVALID_KERNEL_NAME = -46
CL_INVALID_KERNEL = -48
CL_INVALID_ARG_INDEX = -49
CL_INVALID_KERNEL_ARGS = -52
CL_INVALID_WORK_GROUP_SIZE = -54
CL_INVALID_GLOBAL_WORK_SIZE = -63
CL_PLATFORM_NOT_FOUND_KHR = -1001

ERROR_NAMES = {
    0: "CL_SUCCESS",
    -1: "CL_DEVICE_NOT_FOUND",
    -2: "CL_DEVICE_NOT_AVAILABLE",
    -3: "CL_COMPILER_NOT_AVAILABLE",
    -4: "CL_MEM_OBJECT_ALLOCATION_FAILURE",
    -5: "CL_OUT_OF_RESOURCES",
    -6: "CL_OUT_OF_HOST_MEMORY",
    -7: "CL_PROFILING_INFO_NOT_AVAILABLE",
    -8: "CL_MEM_COPY_OVERLAP",
    -9: "CL_IMAGE_FORMAT_MISMATCH",
    -10: "CL_IMAGE_FORMAT_NOT_SUPPORTED",
    -11: "CL_BUILD_PROGRAM_FAILURE",
    -12: "CL_MAP_FAILURE",
    -13: "CL_MISALIGNED_SUB_BUFFER_OFFSET",
    -14: "CL_EXEC_STATUS_ERROR_FOR_EVENTS_IN_WAIT_LIST",
    -15: "CL_COMPILE_PROGRAM_FAILURE",
    -16: "CL_LINKER_NOT_AVAILABLE",
    -17: "CL_LINK_PROGRAM_FAILURE",
    -18: "CL_DEVICE_PARTITION_FAILED",
    -19: "CL_KERNEL_ARG_INFO_NOT_AVAILABLE",
    -30: "CL_INVALID_VALUE",
    -31: "CL_INVALID_DEVICE_TYPE",
    -32: "CL_INVALID_PLATFORM",
    -33: "CL_INVALID_DEVICE",
    -34: "CL_INVALID_CONTEXT",
    -35: "CL_INVALID_QUEUE_PROPERTIES",
    -36: "CL_INVALID_COMMAND_QUEUE",
    -37: "CL_INVALID_HOST_PTR",
    -38: "CL_INVALID_MEM_OBJECT",
    -39: "CL_INVALID_IMAGE_FORMAT_DESCRIPTOR",
    -40: "CL_INVALID_IMAGE_SIZE",
    -41: "CL_INVALID_SAMPLER",
    -42: "CL_INVALID_BINARY",
    -43: "CL_INVALID_BUILD_OPTIONS",
    -44: "CL_INVALID_PROGRAM",
    -45: "CL_INVALID_PROGRAM_EXECUTABLE",
    -46: "CL_INVALID_KERNEL_NAME",
    -47: "CL_INVALID_KERNEL_DEFINITION",
    -48: "CL_INVALID_KERNEL",
    -49: "CL_INVALID_ARG_INDEX",
    -50: "CL_INVALID_ARG_VALUE",
    -51: "CL_INVALID_ARG_SIZE",
    -52: "CL_INVALID_KERNEL_ARGS",
    -53: "CL_INVALID_WORK_DIMENSION",
    -54: "CL_INVALID_WORK_GROUP_SIZE",
    -55: "CL_INVALID_WORK_ITEM_SIZE",
    -56: "CL_INVALID_GLOBAL_OFFSET",
    -57: "CL_INVALID_EVENT_WAIT_LIST",
    -58: "CL_INVALID_EVENT",
    -59: "CL_INVALID_OPERATION",
    -60: "CL_INVALID_GL_OBJECT",
    -61: "CL_INVALID_BUFFER_SIZE",
    -62: "CL_INVALID_MIP_LEVEL",
    -63: "CL_INVALID_GLOBAL_WORK_SIZE",
    -64: "CL_INVALID_PROPERTY",
    -65: "CL_INVALID_IMAGE_DESCRIPTOR",
    -66: "CL_INVALID_COMPILER_OPTIONS",
    -67: "CL_INVALID_LINKER_OPTIONS",
    -68: "CL_INVALID_DEVICE_PARTITION_COUNT",
    -1001: "CL_PLATFORM_NOT_FOUND_KHR",
}


def error_name(code: int) -> str:
    return ERROR_NAMES.get(code, f"UNKNOWN_CL_ERROR({code})")


# Device types
CL_DEVICE_TYPE_DEFAULT = 1 << 0
CL_DEVICE_TYPE_CPU = 1 << 1
CL_DEVICE_TYPE_GPU = 1 << 2
CL_DEVICE_TYPE_ACCELERATOR = 1 << 3
CL_DEVICE_TYPE_ALL = 0xFFFFFFFF

# Platform / device info
CL_PLATFORM_NAME = 0x0902
CL_PLATFORM_VENDOR = 0x0903
CL_PLATFORM_VERSION = 0x0901
CL_DEVICE_TYPE = 0x1000
CL_DEVICE_MAX_COMPUTE_UNITS = 0x1002
CL_DEVICE_GLOBAL_MEM_SIZE = 0x101F
CL_DEVICE_AVAILABLE = 0x1027
CL_DEVICE_NAME = 0x102B
CL_DEVICE_VENDOR = 0x102C
CL_DEVICE_VERSION = 0x102F

# Memory flags
CL_MEM_READ_WRITE = 1 << 0
CL_MEM_WRITE_ONLY = 1 << 1
CL_MEM_READ_ONLY = 1 << 2
CL_MEM_USE_HOST_PTR = 1 << 3
CL_MEM_ALLOC_HOST_PTR = 1 << 4
CL_MEM_COPY_HOST_PTR = 1 << 5

# Map flags
CL_MAP_READ = 1 << 0
CL_MAP_WRITE = 1 << 1

# Program build info
CL_PROGRAM_BUILD_STATUS = 0x1181
CL_PROGRAM_BUILD_OPTIONS = 0x1182
CL_PROGRAM_BUILD_LOG = 0x1183

CL_FALSE = 0
CL_TRUE = 1
CL_BLOCKING = CL_TRUE
CL_NON_BLOCKING = CL_FALSE


@dataclass(frozen=True)
class ApiEntry:
    """Signature of one native entry point."""

    restype: object
    argtypes: tuple = field(default_factory=tuple)
    errcode_arg: bool = False  # failure reported through a trailing errcode_ret pointer


_evt = (cl_uint, POINTER(cl_handle), POINTER(cl_handle))  # wait-list tail + out event

SIGNATURES: dict[str, ApiEntry] = {
    # Platform
    "clGetPlatformIDs": ApiEntry(cl_int, (cl_uint, POINTER(cl_handle), POINTER(cl_uint))),
    "clGetPlatformInfo": ApiEntry(cl_int, (cl_handle, cl_uint, c_size_t, c_void_p, POINTER(c_size_t))),
    # Device
    "clGetDeviceIDs": ApiEntry(cl_int, (cl_handle, cl_bitfield, cl_uint, POINTER(cl_handle), POINTER(cl_uint))),
    "clGetDeviceInfo": ApiEntry(cl_int, (cl_handle, cl_uint, c_size_t, c_void_p, POINTER(c_size_t))),
    "clCreateSubDevices": ApiEntry(cl_int, (cl_handle, c_void_p, cl_uint, POINTER(cl_handle), POINTER(cl_uint))),
    "clRetainDevice": ApiEntry(cl_int, (cl_handle,)),
    "clReleaseDevice": ApiEntry(cl_int, (cl_handle,)),
    # Context
    "clCreateContext": ApiEntry(
        cl_handle,
        (c_void_p, cl_uint, POINTER(cl_handle), _cb, c_void_p, POINTER(cl_int)),
        errcode_arg=True,
    ),
    "clCreateContextFromType": ApiEntry(
        cl_handle, (c_void_p, cl_bitfield, _cb, c_void_p, POINTER(cl_int)), errcode_arg=True
    ),
    "clRetainContext": ApiEntry(cl_int, (cl_handle,)),
    "clReleaseContext": ApiEntry(cl_int, (cl_handle,)),
    "clGetContextInfo": ApiEntry(cl_int, (cl_handle, cl_uint, c_size_t, c_void_p, POINTER(c_size_t))),
    # Command queue
    "clCreateCommandQueue": ApiEntry(
        cl_handle, (cl_handle, cl_handle, cl_bitfield, POINTER(cl_int)), errcode_arg=True
    ),
    "clRetainCommandQueue": ApiEntry(cl_int, (cl_handle,)),
    "clReleaseCommandQueue": ApiEntry(cl_int, (cl_handle,)),
    "clGetCommandQueueInfo": ApiEntry(cl_int, (cl_handle, cl_uint, c_size_t, c_void_p, POINTER(c_size_t))),
    # Memory objects
    "clCreateBuffer": ApiEntry(
        cl_handle, (cl_handle, cl_bitfield, c_size_t, c_void_p, POINTER(cl_int)), errcode_arg=True
    ),
    "clCreateSubBuffer": ApiEntry(
        cl_handle, (cl_handle, cl_bitfield, cl_uint, c_void_p, POINTER(cl_int)), errcode_arg=True
    ),
    "clCreateImage": ApiEntry(
        cl_handle, (cl_handle, cl_bitfield, c_void_p, c_void_p, c_void_p, POINTER(cl_int)), errcode_arg=True
    ),
    "clCreateImage2D": ApiEntry(
        cl_handle,
        (cl_handle, cl_bitfield, c_void_p, c_size_t, c_size_t, c_size_t, c_void_p, POINTER(cl_int)),
        errcode_arg=True,
    ),
    "clCreateImage3D": ApiEntry(
        cl_handle,
        (cl_handle, cl_bitfield, c_void_p, c_size_t, c_size_t, c_size_t, c_size_t, c_size_t, c_void_p, POINTER(cl_int)),
        errcode_arg=True,
    ),
    "clRetainMemObject": ApiEntry(cl_int, (cl_handle,)),
    "clReleaseMemObject": ApiEntry(cl_int, (cl_handle,)),
    "clGetSupportedImageFormats": ApiEntry(
        cl_int, (cl_handle, cl_bitfield, cl_uint, cl_uint, c_void_p, POINTER(cl_uint))
    ),
    "clGetMemObjectInfo": ApiEntry(cl_int, (cl_handle, cl_uint, c_size_t, c_void_p, POINTER(c_size_t))),
    "clGetImageInfo": ApiEntry(cl_int, (cl_handle, cl_uint, c_size_t, c_void_p, POINTER(c_size_t))),
    "clSetMemObjectDestructorCallback": ApiEntry(cl_int, (cl_handle, _cb, c_void_p)),
    # Samplers
    "clCreateSampler": ApiEntry(
        cl_handle, (cl_handle, cl_bool, cl_uint, cl_uint, POINTER(cl_int)), errcode_arg=True
    ),
    "clRetainSampler": ApiEntry(cl_int, (cl_handle,)),
    "clReleaseSampler": ApiEntry(cl_int, (cl_handle,)),
    "clGetSamplerInfo": ApiEntry(cl_int, (cl_handle, cl_uint, c_size_t, c_void_p, POINTER(c_size_t))),
    # Programs
    "clCreateProgramWithSource": ApiEntry(
        cl_handle, (cl_handle, cl_uint, POINTER(c_char_p), POINTER(c_size_t), POINTER(cl_int)), errcode_arg=True
    ),
    "clCreateProgramWithBinary": ApiEntry(
        cl_handle,
        (cl_handle, cl_uint, POINTER(cl_handle), POINTER(c_size_t), c_void_p, POINTER(cl_int), POINTER(cl_int)),
        errcode_arg=True,
    ),
    "clCreateProgramWithBuiltInKernels": ApiEntry(
        cl_handle, (cl_handle, cl_uint, POINTER(cl_handle), c_char_p, POINTER(cl_int)), errcode_arg=True
    ),
    "clRetainProgram": ApiEntry(cl_int, (cl_handle,)),
    "clReleaseProgram": ApiEntry(cl_int, (cl_handle,)),
    "clBuildProgram": ApiEntry(
        cl_int, (cl_handle, cl_uint, POINTER(cl_handle), c_char_p, _cb, c_void_p)
    ),
    "clCompileProgram": ApiEntry(
        cl_int,
        (cl_handle, cl_uint, POINTER(cl_handle), c_char_p, cl_uint, POINTER(cl_handle), POINTER(c_char_p), _cb, c_void_p),
    ),
    "clLinkProgram": ApiEntry(
        cl_handle,
        (cl_handle, cl_uint, POINTER(cl_handle), c_char_p, cl_uint, POINTER(cl_handle), _cb, c_void_p, POINTER(cl_int)),
        errcode_arg=True,
    ),
    "clUnloadPlatformCompiler": ApiEntry(cl_int, (cl_handle,)),
    "clUnloadCompiler": ApiEntry(cl_int, ()),
    "clGetProgramInfo": ApiEntry(cl_int, (cl_handle, cl_uint, c_size_t, c_void_p, POINTER(c_size_t))),
    "clGetProgramBuildInfo": ApiEntry(
        cl_int, (cl_handle, cl_handle, cl_uint, c_size_t, c_void_p, POINTER(c_size_t))
    ),
    # Kernels
    "clCreateKernel": ApiEntry(cl_handle, (cl_handle, c_char_p, POINTER(cl_int)), errcode_arg=True),
    "clCreateKernelsInProgram": ApiEntry(cl_int, (cl_handle, cl_uint, POINTER(cl_handle), POINTER(cl_uint))),
    "clRetainKernel": ApiEntry(cl_int, (cl_handle,)),
    "clReleaseKernel": ApiEntry(cl_int, (cl_handle,)),
    "clSetKernelArg": ApiEntry(cl_int, (cl_handle, cl_uint, c_size_t, c_void_p)),
    "clGetKernelInfo": ApiEntry(cl_int, (cl_handle, cl_uint, c_size_t, c_void_p, POINTER(c_size_t))),
    "clGetKernelArgInfo": ApiEntry(cl_int, (cl_handle, cl_uint, cl_uint, c_size_t, c_void_p, POINTER(c_size_t))),
    "clGetKernelWorkGroupInfo": ApiEntry(
        cl_int, (cl_handle, cl_handle, cl_uint, c_size_t, c_void_p, POINTER(c_size_t))
    ),
    # Events
    "clWaitForEvents": ApiEntry(cl_int, (cl_uint, POINTER(cl_handle))),
    "clGetEventInfo": ApiEntry(cl_int, (cl_handle, cl_uint, c_size_t, c_void_p, POINTER(c_size_t))),
    "clCreateUserEvent": ApiEntry(cl_handle, (cl_handle, POINTER(cl_int)), errcode_arg=True),
    "clRetainEvent": ApiEntry(cl_int, (cl_handle,)),
    "clReleaseEvent": ApiEntry(cl_int, (cl_handle,)),
    "clSetUserEventStatus": ApiEntry(cl_int, (cl_handle, cl_int)),
    "clSetEventCallback": ApiEntry(cl_int, (cl_handle, cl_int, _cb, c_void_p)),
    "clGetEventProfilingInfo": ApiEntry(cl_int, (cl_handle, cl_uint, c_size_t, c_void_p, POINTER(c_size_t))),
    # Queue flush
    "clFlush": ApiEntry(cl_int, (cl_handle,)),
    "clFinish": ApiEntry(cl_int, (cl_handle,)),
    # Enqueued commands
    "clEnqueueReadBuffer": ApiEntry(
        cl_int, (cl_handle, cl_handle, cl_bool, c_size_t, c_size_t, c_void_p) + _evt
    ),
    "clEnqueueReadBufferRect": ApiEntry(
        cl_int,
        (cl_handle, cl_handle, cl_bool, POINTER(c_size_t), POINTER(c_size_t), POINTER(c_size_t),
         c_size_t, c_size_t, c_size_t, c_size_t, c_void_p) + _evt,
    ),
    "clEnqueueWriteBuffer": ApiEntry(
        cl_int, (cl_handle, cl_handle, cl_bool, c_size_t, c_size_t, c_void_p) + _evt
    ),
    "clEnqueueWriteBufferRect": ApiEntry(
        cl_int,
        (cl_handle, cl_handle, cl_bool, POINTER(c_size_t), POINTER(c_size_t), POINTER(c_size_t),
         c_size_t, c_size_t, c_size_t, c_size_t, c_void_p) + _evt,
    ),
    "clEnqueueFillBuffer": ApiEntry(
        cl_int, (cl_handle, cl_handle, c_void_p, c_size_t, c_size_t, c_size_t) + _evt
    ),
    "clEnqueueCopyBuffer": ApiEntry(
        cl_int, (cl_handle, cl_handle, cl_handle, c_size_t, c_size_t, c_size_t) + _evt
    ),
    "clEnqueueCopyBufferRect": ApiEntry(
        cl_int,
        (cl_handle, cl_handle, cl_handle, POINTER(c_size_t), POINTER(c_size_t), POINTER(c_size_t),
         c_size_t, c_size_t, c_size_t, c_size_t) + _evt,
    ),
    "clEnqueueReadImage": ApiEntry(
        cl_int, (cl_handle, cl_handle, cl_bool, POINTER(c_size_t), POINTER(c_size_t), c_size_t, c_size_t, c_void_p) + _evt
    ),
    "clEnqueueWriteImage": ApiEntry(
        cl_int, (cl_handle, cl_handle, cl_bool, POINTER(c_size_t), POINTER(c_size_t), c_size_t, c_size_t, c_void_p) + _evt
    ),
    "clEnqueueFillImage": ApiEntry(
        cl_int, (cl_handle, cl_handle, c_void_p, POINTER(c_size_t), POINTER(c_size_t)) + _evt
    ),
    "clEnqueueCopyImage": ApiEntry(
        cl_int, (cl_handle, cl_handle, cl_handle, POINTER(c_size_t), POINTER(c_size_t), POINTER(c_size_t)) + _evt
    ),
    "clEnqueueCopyImageToBuffer": ApiEntry(
        cl_int, (cl_handle, cl_handle, cl_handle, POINTER(c_size_t), POINTER(c_size_t), c_size_t) + _evt
    ),
    "clEnqueueCopyBufferToImage": ApiEntry(
        cl_int, (cl_handle, cl_handle, cl_handle, c_size_t, POINTER(c_size_t), POINTER(c_size_t)) + _evt
    ),
    "clEnqueueMapBuffer": ApiEntry(
        c_void_p,
        (cl_handle, cl_handle, cl_bool, cl_bitfield, c_size_t, c_size_t, cl_uint, POINTER(cl_handle),
         POINTER(cl_handle), POINTER(cl_int)),
        errcode_arg=True,
    ),
    "clEnqueueMapImage": ApiEntry(
        c_void_p,
        (cl_handle, cl_handle, cl_bool, cl_bitfield, POINTER(c_size_t), POINTER(c_size_t), POINTER(c_size_t),
         POINTER(c_size_t), cl_uint, POINTER(cl_handle), POINTER(cl_handle), POINTER(cl_int)),
        errcode_arg=True,
    ),
    "clEnqueueUnmapMemObject": ApiEntry(cl_int, (cl_handle, cl_handle, c_void_p) + _evt),
    "clEnqueueMigrateMemObjects": ApiEntry(
        cl_int, (cl_handle, cl_uint, POINTER(cl_handle), cl_bitfield) + _evt
    ),
    "clEnqueueNDRangeKernel": ApiEntry(
        cl_int,
        (cl_handle, cl_handle, cl_uint, POINTER(c_size_t), POINTER(c_size_t), POINTER(c_size_t)) + _evt,
    ),
    "clEnqueueTask": ApiEntry(cl_int, (cl_handle, cl_handle) + _evt),
    "clEnqueueNativeKernel": ApiEntry(
        cl_int,
        (cl_handle, _cb, c_void_p, c_size_t, cl_uint, POINTER(cl_handle), c_void_p) + _evt,
    ),
    "clEnqueueMarkerWithWaitList": ApiEntry(cl_int, (cl_handle,) + _evt),
    "clEnqueueBarrierWithWaitList": ApiEntry(cl_int, (cl_handle,) + _evt),
    "clEnqueueMarker": ApiEntry(cl_int, (cl_handle, POINTER(cl_handle))),
    "clEnqueueWaitForEvents": ApiEntry(cl_int, (cl_handle, cl_uint, POINTER(cl_handle))),
    "clEnqueueBarrier": ApiEntry(cl_int, (cl_handle,)),
    # Extensions
    "clGetExtensionFunctionAddressForPlatform": ApiEntry(c_void_p, (cl_handle, c_char_p)),
    "clGetExtensionFunctionAddress": ApiEntry(c_void_p, (c_char_p,)),
}
