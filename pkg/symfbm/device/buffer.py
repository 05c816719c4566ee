import numpy as np

try:
    import pyopencl as cl
except ImportError:  # pragma: no cover
    cl = None


class DeviceBuffer:
    """A float64/int32 array living in device memory."""
    def __init__(self, context, cl_mem, shape, dtype):
        self.context = context
        self.cl_mem = cl_mem
        self.shape = shape
        self.dtype = dtype
        self.size = cl_mem.size

    @classmethod
    def from_numpy(cls, context, arr):
        """Copies a host array to a new read-only device buffer."""
        # pyopencl wants a writable host buffer even for COPY_HOST_PTR
        arr = np.array(arr, copy=True, order="C")
        flags = cl.mem_flags.READ_ONLY | cl.mem_flags.COPY_HOST_PTR
        cl_buffer = cl.Buffer(context.context, flags, hostbuf=arr)
        return cls(context, cl_buffer, arr.shape, arr.dtype)

    @classmethod
    def empty_like(cls, context, arr):
        flags = cl.mem_flags.READ_WRITE
        cl_buffer = cl.Buffer(context.context, flags, size=max(arr.nbytes, 1))
        return cls(context, cl_buffer, arr.shape, arr.dtype)

    def read(self):
        host_array = np.empty(self.shape, dtype=self.dtype)
        cl.enqueue_copy(self.context.queue, host_array, self.cl_mem)
        return host_array

    def write(self, arr):
        if arr.shape != self.shape or arr.dtype != self.dtype:
            raise ValueError("Input array shape or dtype does not match buffer's.")
        cl.enqueue_copy(self.context.queue, self.cl_mem, np.ascontiguousarray(arr))

    def release(self):
        if self.cl_mem:
            self.cl_mem.release()
            self.cl_mem = None

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.release()
