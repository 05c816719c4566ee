import time

import numpy as np

from symfbm.device import DevicePowerSums
from symfbm.fbm import GridSpec, sample_paths
from symfbm.riemann import raw_power_sum


def main():
    """
    Cross-checks the OpenCL power-sum kernel against numpy on a batch of
    fBm paths at H = 1/6.
    """
    print("--- symfbm: OpenCL power sums ---")

    grid = GridSpec.critical(ell=1, n=4096)
    count = 2048
    print(f"Sampling {count} paths with {grid.steps} steps...")
    batch = sample_paths(grid, count, seed=7)

    # Hardware dispatch: fails cleanly when no fp64 device is present
    try:
        device = DevicePowerSums()
    except RuntimeError as e:
        print(f"No usable OpenCL device: {e}")
        return

    with device:
        start_time = time.time()
        gpu = device.raw_power_sums(batch, 3, 1.0)
        gpu_time = time.time() - start_time

    start_time = time.time()
    cpu = raw_power_sum(batch, 3, 1.0)
    cpu_time = time.time() - start_time

    if np.allclose(gpu, cpu, rtol=1e-10, atol=1e-12):
        print(f"Success! Device matches numpy (max diff {np.max(np.abs(gpu - cpu)):.2e}).")
    else:
        print("Error! Mismatch found.")
    print(f"--- device {gpu_time:.4f}s, numpy {cpu_time:.4f}s ---")


if __name__ == "__main__":
    main()
