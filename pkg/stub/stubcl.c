/* stubcl.c - instrumented fake OpenCL driver.
 *
 * Exports enough of the OpenCL 1.2 C API for the loader and the GPU
 * host code to run their full lifecycle on machines without any OpenCL
 * device.  Kernels are never executed: clEnqueueNDRangeKernel just
 * counts.  Buffers are real memory (aliasing the caller's pointer when
 * CL_MEM_USE_HOST_PTR is set) so read/write/map round-trips work.
 *
 * Instrumentation (stubcl_* exports) reports per-entry call counts and
 * live object counts; tests load this library a second time directly
 * to query them, which shares the same globals as the loader's handle.
 *
 * Build:   cc -shared -fPIC -O2 stubcl.c -o libstubcl.so
 * Variant: add -DSTUB_TRUNCATED to omit clFinish (missing-symbol tests).
 */

#include <pthread.h>
#include <stdint.h>
#include <stdlib.h>
#include <stdio.h>
#include <string.h>

typedef int32_t cl_int;
typedef uint32_t cl_uint;
typedef uint64_t cl_ulong;

#define CL_SUCCESS 0
#define CL_DEVICE_NOT_FOUND -1
#define CL_BUILD_PROGRAM_FAILURE -11
#define CL_INVALID_VALUE -30
#define CL_INVALID_PLATFORM -32
#define CL_INVALID_CONTEXT -34
#define CL_INVALID_COMMAND_QUEUE -36
#define CL_INVALID_MEM_OBJECT -38
#define CL_INVALID_PROGRAM -44
#define CL_INVALID_KERNEL_NAME -46
#define CL_INVALID_KERNEL -48

#define CL_DEVICE_TYPE_GPU (1 << 2)
#define CL_DEVICE_TYPE_ALL 0xFFFFFFFFu
#define CL_DEVICE_TYPE_DEFAULT (1 << 0)

#define CL_PLATFORM_VERSION 0x0901
#define CL_PLATFORM_NAME 0x0902
#define CL_PLATFORM_VENDOR 0x0903

#define CL_DEVICE_TYPE_INFO 0x1000
#define CL_DEVICE_MAX_COMPUTE_UNITS 0x1002
#define CL_DEVICE_GLOBAL_MEM_SIZE 0x101F
#define CL_DEVICE_AVAILABLE 0x1027
#define CL_DEVICE_NAME 0x102B
#define CL_DEVICE_VENDOR 0x102C
#define CL_DEVICE_VERSION 0x102F

#define CL_MEM_USE_HOST_PTR (1 << 3)
#define CL_PROGRAM_BUILD_LOG 0x1183

#define STUB_PLATFORM ((void *)0x5150)
#define STUB_DEVICE ((void *)0xDE51)

/* ---- instrumentation ------------------------------------------------ */

#define MAX_NAMES 64
static struct {
    const char *name;
    long count;
} call_counts[MAX_NAMES];
static int n_names = 0;
static pthread_mutex_t count_mu = PTHREAD_MUTEX_INITIALIZER;

static void count_call(const char *name) {
    pthread_mutex_lock(&count_mu);
    for (int i = 0; i < n_names; i++) {
        if (strcmp(call_counts[i].name, name) == 0) {
            call_counts[i].count++;
            pthread_mutex_unlock(&count_mu);
            return;
        }
    }
    if (n_names < MAX_NAMES) {
        call_counts[n_names].name = name;
        call_counts[n_names].count = 1;
        n_names++;
    }
    pthread_mutex_unlock(&count_mu);
}

long stubcl_call_count(const char *name) {
    long v = 0;
    pthread_mutex_lock(&count_mu);
    for (int i = 0; i < n_names; i++) {
        if (strcmp(call_counts[i].name, name) == 0) {
            v = call_counts[i].count;
            break;
        }
    }
    pthread_mutex_unlock(&count_mu);
    return v;
}

long stubcl_total_calls(void) {
    long v = 0;
    pthread_mutex_lock(&count_mu);
    for (int i = 0; i < n_names; i++) v += call_counts[i].count;
    pthread_mutex_unlock(&count_mu);
    return v;
}

/* ---- object registry ------------------------------------------------- */

enum { OBJ_CONTEXT = 1, OBJ_QUEUE = 2, OBJ_BUFFER = 3, OBJ_PROGRAM = 4, OBJ_KERNEL = 5 };

typedef struct {
    void *handle;
    int type;
    int alive;
    unsigned char *data; /* buffers */
    size_t size;
    int owns_data;
    char *source; /* programs */
    int built;    /* 0 unbuilt, 1 ok, -1 failed */
    char log[128];
} object_t;

#define MAX_OBJ 8192
static object_t objects[MAX_OBJ];
static int n_objects = 0;
static uintptr_t next_handle = 0x1000;
static pthread_mutex_t reg_mu = PTHREAD_MUTEX_INITIALIZER;

static object_t *alloc_obj(int type) {
    pthread_mutex_lock(&reg_mu);
    if (n_objects >= MAX_OBJ) {
        pthread_mutex_unlock(&reg_mu);
        return NULL;
    }
    object_t *o = &objects[n_objects++];
    memset(o, 0, sizeof(*o));
    o->handle = (void *)(next_handle);
    next_handle += 0x10;
    o->type = type;
    o->alive = 1;
    pthread_mutex_unlock(&reg_mu);
    return o;
}

static object_t *find_obj(void *handle, int type) {
    pthread_mutex_lock(&reg_mu);
    for (int i = 0; i < n_objects; i++) {
        if (objects[i].handle == handle && objects[i].type == type && objects[i].alive) {
            pthread_mutex_unlock(&reg_mu);
            return &objects[i];
        }
    }
    pthread_mutex_unlock(&reg_mu);
    return NULL;
}

static cl_int release_obj(void *handle, int type, cl_int bad_code) {
    object_t *o = find_obj(handle, type);
    if (!o) return bad_code;
    pthread_mutex_lock(&reg_mu);
    o->alive = 0;
    if (o->owns_data && o->data) free(o->data);
    if (o->source) free(o->source);
    o->data = NULL;
    o->source = NULL;
    pthread_mutex_unlock(&reg_mu);
    return CL_SUCCESS;
}

long stubcl_live_objects(void) {
    long v = 0;
    pthread_mutex_lock(&reg_mu);
    for (int i = 0; i < n_objects; i++) v += objects[i].alive;
    pthread_mutex_unlock(&reg_mu);
    return v;
}

long stubcl_live_of_type(int type) {
    long v = 0;
    pthread_mutex_lock(&reg_mu);
    for (int i = 0; i < n_objects; i++)
        if (objects[i].type == type) v += objects[i].alive;
    pthread_mutex_unlock(&reg_mu);
    return v;
}

void stubcl_reset(void) {
    pthread_mutex_lock(&reg_mu);
    for (int i = 0; i < n_objects; i++) {
        if (objects[i].alive) {
            if (objects[i].owns_data && objects[i].data) free(objects[i].data);
            if (objects[i].source) free(objects[i].source);
        }
    }
    n_objects = 0;
    pthread_mutex_unlock(&reg_mu);
    pthread_mutex_lock(&count_mu);
    n_names = 0;
    pthread_mutex_unlock(&count_mu);
}

/* ---- info helper ------------------------------------------------------ */

static cl_int put_info(const void *src, size_t n, size_t sz, void *val, size_t *szret) {
    if (szret) *szret = n;
    if (val) {
        if (sz < n) return CL_INVALID_VALUE;
        memcpy(val, src, n);
    }
    return CL_SUCCESS;
}

/* ---- platform / device ------------------------------------------------ */

cl_int clGetPlatformIDs(cl_uint num_entries, void **platforms, cl_uint *num_platforms) {
    count_call("clGetPlatformIDs");
    if (!platforms && !num_platforms) return CL_INVALID_VALUE;
    if (num_platforms) *num_platforms = 1;
    if (platforms && num_entries >= 1) platforms[0] = STUB_PLATFORM;
    return CL_SUCCESS;
}

cl_int clGetPlatformInfo(void *platform, cl_uint param, size_t sz, void *val, size_t *szret) {
    count_call("clGetPlatformInfo");
    if (platform != STUB_PLATFORM) return CL_INVALID_PLATFORM;
    const char *s = "StubCL";
    if (param == CL_PLATFORM_VENDOR) s = "oclmine";
    if (param == CL_PLATFORM_VERSION) s = "OpenCL 1.2 stubcl";
    return put_info(s, strlen(s) + 1, sz, val, szret);
}

cl_int clGetDeviceIDs(void *platform, cl_ulong devtype, cl_uint num_entries, void **devices,
                      cl_uint *num_devices) {
    count_call("clGetDeviceIDs");
    if (platform != STUB_PLATFORM) return CL_INVALID_PLATFORM;
    if (!(devtype & (CL_DEVICE_TYPE_GPU | CL_DEVICE_TYPE_DEFAULT)) && devtype != CL_DEVICE_TYPE_ALL)
        return CL_DEVICE_NOT_FOUND;
    if (num_devices) *num_devices = 1;
    if (devices && num_entries >= 1) devices[0] = STUB_DEVICE;
    return CL_SUCCESS;
}

cl_int clGetDeviceInfo(void *device, cl_uint param, size_t sz, void *val, size_t *szret) {
    count_call("clGetDeviceInfo");
    if (device != STUB_DEVICE) return CL_INVALID_VALUE;
    switch (param) {
    case CL_DEVICE_NAME: {
        const char *s = "StubCL Device";
        return put_info(s, strlen(s) + 1, sz, val, szret);
    }
    case CL_DEVICE_VENDOR: {
        const char *s = "oclmine";
        return put_info(s, strlen(s) + 1, sz, val, szret);
    }
    case CL_DEVICE_VERSION: {
        const char *s = "OpenCL 1.2 stubcl";
        return put_info(s, strlen(s) + 1, sz, val, szret);
    }
    case CL_DEVICE_TYPE_INFO: {
        cl_ulong t = CL_DEVICE_TYPE_GPU;
        return put_info(&t, sizeof t, sz, val, szret);
    }
    case CL_DEVICE_MAX_COMPUTE_UNITS: {
        cl_uint v = 2;
        return put_info(&v, sizeof v, sz, val, szret);
    }
    case CL_DEVICE_AVAILABLE: {
        cl_uint v = 1;
        return put_info(&v, sizeof v, sz, val, szret);
    }
    case CL_DEVICE_GLOBAL_MEM_SIZE: {
        cl_ulong v = 256ull << 20;
        return put_info(&v, sizeof v, sz, val, szret);
    }
    default: {
        if (val && sz) memset(val, 0, sz);
        if (szret) *szret = 0;
        return CL_SUCCESS;
    }
    }
}

/* ---- context / queue --------------------------------------------------- */

void *clCreateContext(const void *props, cl_uint ndev, void **devs, void *pfn, void *ud, cl_int *err) {
    (void)props; (void)pfn; (void)ud;
    count_call("clCreateContext");
    if (ndev != 1 || !devs || devs[0] != STUB_DEVICE) {
        if (err) *err = CL_INVALID_VALUE;
        return NULL;
    }
    object_t *o = alloc_obj(OBJ_CONTEXT);
    if (err) *err = o ? CL_SUCCESS : CL_INVALID_VALUE;
    return o ? o->handle : NULL;
}

cl_int clRetainContext(void *ctx) {
    count_call("clRetainContext");
    return find_obj(ctx, OBJ_CONTEXT) ? CL_SUCCESS : CL_INVALID_CONTEXT;
}

cl_int clReleaseContext(void *ctx) {
    count_call("clReleaseContext");
    return release_obj(ctx, OBJ_CONTEXT, CL_INVALID_CONTEXT);
}

void *clCreateCommandQueue(void *ctx, void *dev, cl_ulong props, cl_int *err) {
    (void)props;
    count_call("clCreateCommandQueue");
    if (!find_obj(ctx, OBJ_CONTEXT) || dev != STUB_DEVICE) {
        if (err) *err = CL_INVALID_CONTEXT;
        return NULL;
    }
    object_t *o = alloc_obj(OBJ_QUEUE);
    if (err) *err = o ? CL_SUCCESS : CL_INVALID_VALUE;
    return o ? o->handle : NULL;
}

cl_int clReleaseCommandQueue(void *q) {
    count_call("clReleaseCommandQueue");
    return release_obj(q, OBJ_QUEUE, CL_INVALID_COMMAND_QUEUE);
}

cl_int clFlush(void *q) {
    count_call("clFlush");
    return find_obj(q, OBJ_QUEUE) ? CL_SUCCESS : CL_INVALID_COMMAND_QUEUE;
}

#ifndef STUB_TRUNCATED
cl_int clFinish(void *q) {
    count_call("clFinish");
    return find_obj(q, OBJ_QUEUE) ? CL_SUCCESS : CL_INVALID_COMMAND_QUEUE;
}
#endif

/* ---- buffers ----------------------------------------------------------- */

void *clCreateBuffer(void *ctx, cl_ulong flags, size_t size, void *host_ptr, cl_int *err) {
    count_call("clCreateBuffer");
    if (!find_obj(ctx, OBJ_CONTEXT) || size == 0) {
        if (err) *err = CL_INVALID_VALUE;
        return NULL;
    }
    object_t *o = alloc_obj(OBJ_BUFFER);
    if (!o) {
        if (err) *err = CL_INVALID_VALUE;
        return NULL;
    }
    o->size = size;
    if ((flags & CL_MEM_USE_HOST_PTR) && host_ptr) {
        o->data = (unsigned char *)host_ptr;
        o->owns_data = 0;
    } else {
        o->data = (unsigned char *)calloc(1, size);
        o->owns_data = 1;
    }
    if (err) *err = CL_SUCCESS;
    return o->handle;
}

cl_int clReleaseMemObject(void *buf) {
    count_call("clReleaseMemObject");
    return release_obj(buf, OBJ_BUFFER, CL_INVALID_MEM_OBJECT);
}

cl_int clEnqueueWriteBuffer(void *q, void *buf, cl_uint blocking, size_t offset, size_t size,
                            const void *ptr, cl_uint nev, void **evl, void **ev) {
    (void)blocking; (void)nev; (void)evl; (void)ev;
    count_call("clEnqueueWriteBuffer");
    object_t *o = find_obj(buf, OBJ_BUFFER);
    if (!find_obj(q, OBJ_QUEUE) || !o) return CL_INVALID_MEM_OBJECT;
    if (offset + size > o->size || !ptr) return CL_INVALID_VALUE;
    if (o->data + offset != (const unsigned char *)ptr) memcpy(o->data + offset, ptr, size);
    return CL_SUCCESS;
}

cl_int clEnqueueReadBuffer(void *q, void *buf, cl_uint blocking, size_t offset, size_t size,
                           void *ptr, cl_uint nev, void **evl, void **ev) {
    (void)blocking; (void)nev; (void)evl; (void)ev;
    count_call("clEnqueueReadBuffer");
    object_t *o = find_obj(buf, OBJ_BUFFER);
    if (!find_obj(q, OBJ_QUEUE) || !o) return CL_INVALID_MEM_OBJECT;
    if (offset + size > o->size || !ptr) return CL_INVALID_VALUE;
    if (o->data + offset != (unsigned char *)ptr) memcpy(ptr, o->data + offset, size);
    return CL_SUCCESS;
}

void *clEnqueueMapBuffer(void *q, void *buf, cl_uint blocking, cl_ulong flags, size_t offset,
                         size_t size, cl_uint nev, void **evl, void **ev, cl_int *err) {
    (void)blocking; (void)flags; (void)nev; (void)evl; (void)ev;
    count_call("clEnqueueMapBuffer");
    object_t *o = find_obj(buf, OBJ_BUFFER);
    if (!find_obj(q, OBJ_QUEUE) || !o || offset + size > o->size) {
        if (err) *err = CL_INVALID_MEM_OBJECT;
        return NULL;
    }
    if (err) *err = CL_SUCCESS;
    return o->data + offset;
}

cl_int clEnqueueUnmapMemObject(void *q, void *buf, void *ptr, cl_uint nev, void **evl, void **ev) {
    (void)ptr; (void)nev; (void)evl; (void)ev;
    count_call("clEnqueueUnmapMemObject");
    if (!find_obj(q, OBJ_QUEUE) || !find_obj(buf, OBJ_BUFFER)) return CL_INVALID_MEM_OBJECT;
    return CL_SUCCESS;
}

/* ---- programs / kernels ------------------------------------------------ */

void *clCreateProgramWithSource(void *ctx, cl_uint count, const char **strings,
                                const size_t *lengths, cl_int *err) {
    count_call("clCreateProgramWithSource");
    if (!find_obj(ctx, OBJ_CONTEXT) || count == 0 || !strings) {
        if (err) *err = CL_INVALID_VALUE;
        return NULL;
    }
    size_t total = 0;
    for (cl_uint i = 0; i < count; i++)
        total += (lengths && lengths[i]) ? lengths[i] : strlen(strings[i]);
    object_t *o = alloc_obj(OBJ_PROGRAM);
    if (!o) {
        if (err) *err = CL_INVALID_VALUE;
        return NULL;
    }
    o->source = (char *)malloc(total + 1);
    size_t at = 0;
    for (cl_uint i = 0; i < count; i++) {
        size_t n = (lengths && lengths[i]) ? lengths[i] : strlen(strings[i]);
        memcpy(o->source + at, strings[i], n);
        at += n;
    }
    o->source[at] = 0;
    if (err) *err = CL_SUCCESS;
    return o->handle;
}

cl_int clBuildProgram(void *prog, cl_uint ndev, void **devs, const char *options, void *pfn, void *ud) {
    (void)ndev; (void)devs; (void)options; (void)pfn; (void)ud;
    count_call("clBuildProgram");
    object_t *o = find_obj(prog, OBJ_PROGRAM);
    if (!o) return CL_INVALID_PROGRAM;
    if (strstr(o->source, "__kernel") && !strstr(o->source, "@stub_build_error")) {
        o->built = 1;
        snprintf(o->log, sizeof o->log, "stubcl: build ok");
        return CL_SUCCESS;
    }
    o->built = -1;
    snprintf(o->log, sizeof o->log, "stubcl: error: no __kernel entry found (parse failed)");
    return CL_BUILD_PROGRAM_FAILURE;
}

cl_int clGetProgramBuildInfo(void *prog, void *dev, cl_uint param, size_t sz, void *val,
                             size_t *szret) {
    (void)dev;
    count_call("clGetProgramBuildInfo");
    object_t *o = find_obj(prog, OBJ_PROGRAM);
    if (!o) return CL_INVALID_PROGRAM;
    if (param == CL_PROGRAM_BUILD_LOG) return put_info(o->log, strlen(o->log) + 1, sz, val, szret);
    if (val && sz) memset(val, 0, sz);
    if (szret) *szret = 0;
    return CL_SUCCESS;
}

cl_int clReleaseProgram(void *prog) {
    count_call("clReleaseProgram");
    return release_obj(prog, OBJ_PROGRAM, CL_INVALID_PROGRAM);
}

void *clCreateKernel(void *prog, const char *name, cl_int *err) {
    count_call("clCreateKernel");
    object_t *o = find_obj(prog, OBJ_PROGRAM);
    if (!o || o->built != 1) {
        if (err) *err = CL_INVALID_PROGRAM;
        return NULL;
    }
    if (!name || !strstr(o->source, name)) {
        if (err) *err = CL_INVALID_KERNEL_NAME;
        return NULL;
    }
    object_t *k = alloc_obj(OBJ_KERNEL);
    if (err) *err = k ? CL_SUCCESS : CL_INVALID_VALUE;
    return k ? k->handle : NULL;
}

cl_int clSetKernelArg(void *kern, cl_uint idx, size_t size, const void *val) {
    (void)idx; (void)size; (void)val;
    count_call("clSetKernelArg");
    return find_obj(kern, OBJ_KERNEL) ? CL_SUCCESS : CL_INVALID_KERNEL;
}

cl_int clReleaseKernel(void *kern) {
    count_call("clReleaseKernel");
    return release_obj(kern, OBJ_KERNEL, CL_INVALID_KERNEL);
}

cl_int clEnqueueNDRangeKernel(void *q, void *kern, cl_uint dim, const size_t *goff,
                              const size_t *gsz, const size_t *lsz, cl_uint nev, void **evl,
                              void **ev) {
    (void)goff; (void)lsz; (void)nev; (void)evl; (void)ev;
    count_call("clEnqueueNDRangeKernel");
    if (!find_obj(q, OBJ_QUEUE) || !find_obj(kern, OBJ_KERNEL)) return CL_INVALID_KERNEL;
    if (dim < 1 || dim > 3 || !gsz) return CL_INVALID_VALUE;
    return CL_SUCCESS;
}
