import logging
import os

import numpy as np

from ..errors import DomainError
from .buffer import DeviceBuffer
from .context import ComputeContext

log = logging.getLogger(__name__)

KERNEL_PATH = os.path.join(os.path.dirname(os.path.dirname(__file__)), "kernels", "power_sums.cl")


class DevicePowerSums:
    """
    Per-path sums of odd increment powers on an OpenCL device.

    The kernel walks each path sequentially in double precision; values agree
    with the numpy reduction up to summation order (about 1e-12 relative).
    """
    def __init__(self, device_type="GPU"):
        self.ctx = ComputeContext(device_type=device_type, require_fp64=True)
        with open(KERNEL_PATH) as f:
            self.kernel_code = f.read()
        self.program = self.ctx.compile(self.kernel_code)

    def raw_power_sums(self, batch, r, t):
        """sum_{j < floor(nt)} D_j^r for every path of a PathBatch."""
        if r < 1 or r % 2 == 0:
            raise DomainError(f"Power must be odd and >= 1, got {r}")
        values = np.asarray(batch.values, dtype=np.float64)
        count, stride = values.shape
        out = np.zeros(count, dtype=np.float64)
        with DeviceBuffer.from_numpy(self.ctx, values) as d_values, \
                DeviceBuffer.empty_like(self.ctx, out) as d_out:
            self.program.raw_power_sums(d_values, d_out, stride, batch.steps(t), r, global_size=(count,))
            return d_out.read()

    def endpoints(self, batch, t):
        values = np.asarray(batch.values, dtype=np.float64)
        count, stride = values.shape
        out = np.zeros(count, dtype=np.float64)
        with DeviceBuffer.from_numpy(self.ctx, values) as d_values, \
                DeviceBuffer.empty_like(self.ctx, out) as d_out:
            self.program.endpoints(d_values, d_out, stride, batch.steps(t), global_size=(count,))
            return d_out.read()

    def release(self):
        self.ctx.release()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.release()
