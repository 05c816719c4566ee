import numpy as np

from .buffer import DeviceBuffer, cl


class Kernel:
    """
    One kernel function of a compiled Program.

    Python ints are passed as ``int`` (np.int32) and floats as ``double``
    (np.float64); kernels must declare their scalar arguments accordingly.
    """
    def __init__(self, context, cl_kernel):
        self.context = context
        self.cl_kernel = cl_kernel

    def __call__(self, *args, global_size, local_size=None):
        processed_args = []
        for arg in args:
            if isinstance(arg, DeviceBuffer):
                processed_args.append(arg.cl_mem)
            elif isinstance(arg, (bool, np.bool_)):
                processed_args.append(np.int32(arg))
            elif isinstance(arg, (int, np.integer)):
                processed_args.append(np.int32(arg))
            elif isinstance(arg, (float, np.floating)):
                processed_args.append(np.float64(arg))
            else:
                processed_args.append(arg)
        self.cl_kernel(self.context.queue, global_size, local_size, *processed_args)


class Program:
    """Compiled OpenCL program; kernels are reached as attributes: ``program.raw_power_sums(...)``."""
    def __init__(self, context, cl_program):
        self.context = context
        self.cl_program = cl_program

    def __getattr__(self, name):
        if name.startswith("__"):
            raise AttributeError(name)
        try:
            cl_kernel = getattr(self.cl_program, name)
        except (cl.LogicError, AttributeError):
            raise AttributeError(f"Kernel '{name}' not found in the compiled program.")
        return Kernel(self.context, cl_kernel)
