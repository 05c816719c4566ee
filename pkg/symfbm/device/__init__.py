from .context import ComputeContext
from .buffer import DeviceBuffer
from .program import Program, Kernel
from .power_sums import DevicePowerSums
