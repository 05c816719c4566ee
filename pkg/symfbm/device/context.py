import logging

from .program import Program, cl

log = logging.getLogger(__name__)

FP64_EXTENSION = "cl_khr_fp64"


class ComputeContext:
    """
    Owns the OpenCL context, device and command queue.

    Every kernel in symfbm works in double precision, so by default only
    devices advertising cl_khr_fp64 are considered.
    """
    def __init__(self, device_type="GPU", require_fp64=True):
        """
        Args:
            device_type (str): Preferred device type, "GPU" or "CPU". The other
                type is tried when no suitable device of this one exists.
            require_fp64 (bool): Skip devices without double support.
        """
        if cl is None:
            raise RuntimeError("pyopencl is not installed; the OpenCL backend is unavailable.")
        self.context = None
        self.queue = None
        self.device = None

        log.info("--- Initializing ComputeContext ---")
        order = [device_type, "CPU" if device_type == "GPU" else "GPU"]
        for kind in order:
            self.device = self._find_device(kind, require_fp64)
            if self.device:
                break

        if not self.device:
            need = " with cl_khr_fp64" if require_fp64 else ""
            raise RuntimeError(f"No OpenCL device{need} found.")

        self.context = cl.Context([self.device])
        self.queue = cl.CommandQueue(self.context)
        log.info("Initialized context on device: %s", self.device.name)

    @staticmethod
    def _find_device(kind, require_fp64):
        target = cl.device_type.GPU if kind == "GPU" else cl.device_type.CPU
        try:
            platforms = cl.get_platforms()
        except cl.Error:
            return None
        for platform in platforms:
            try:
                devices = platform.get_devices(device_type=target)
            except cl.Error:
                continue
            for dev in devices:
                if require_fp64 and FP64_EXTENSION not in dev.extensions:
                    continue
                return dev
        return None

    @property
    def fp64(self):
        return FP64_EXTENSION in self.device.extensions

    def compile(self, kernel_code, options=None):
        """Builds OpenCL C source into a Program."""
        cl_program = cl.Program(self.context, kernel_code).build(options=options)
        return Program(self, cl_program)

    def release(self):
        if self.queue:
            self.queue.finish()
            self.queue = None
        self.context = None

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.release()
