import time

from symfbm.constants import constants_table, exact_power_sum_variance
from symfbm.harness.config import config_from_dict
from symfbm.harness.experiments import power_sum_clt_experiment
from symfbm.measure import lebesgue, midpoint, simpson, trapezoid


def main():
    """
    The 'Hello World' of symfbm.
    Prints the limit constants of the built-in measures, then checks the
    variance of sum (Delta B)^3 at H = 1/6 against its exact value.
    """
    print("--- symfbm: Constants and a small CLT run ---")

    # 1. Constants of the limit theorem
    for row in constants_table([trapezoid(), simpson(), midpoint(), lebesgue()]):
        if row["k"] is None:
            print(f"{row['measure']:>10}: l = {row['ell']}")
            continue
        print(f"{row['measure']:>10}: l = {row['ell']}, H = {row['hurst']:.6f}, k = {row['k']:.6g}, "
              f"sigma^2 = {row['sigma_sq']:.6f}, c_nu = {row['c_nu']:.6g}")

    # 2. Exact finite-n variance against Monte Carlo
    n = 1024
    print(f"\nExact Var(sum D^3) at n={n}: {exact_power_sum_variance(1 / 6, 3, n, 1.0):.6f}")
    config = config_from_dict({"experiment": "clt", "ell": 1, "n_values": [n], "paths": 2000, "seed": 42})

    start_time = time.time()
    report = power_sum_clt_experiment(config, workers=1)
    duration = time.time() - start_time

    for record in report.records:
        if record.name.endswith("variance") and record.se is not None:
            print(f"{record.name}: {record.estimate:.6f} +/- {record.se:.6f} (target {record.target:.6f})")
    print(f"--- Finished in {duration:.2f}s ---")


if __name__ == "__main__":
    main()
