"""
Monte Carlo experiments.

Each experiment samples ``config.paths`` paths per grid size from the master
seed, evaluates its functionals chunk by chunk through BatchTask, and turns
the merged per-path arrays into an ExperimentReport. All grid sizes share the
same seed, so neighbouring n see the same noise streams.

Embedded controls (exact chain rules, the r = 1 telescoping sum) are recorded
with ``control=True``; a miss raises ControlFailure before anything else is
reported.
"""
import logging
import math
import time

import numpy as np
import scipy.stats

from ..constants import (
    bm_limit_variance,
    exact_power_sum_variance,
    gaussian_moment,
    limit_law_variance,
    power_sum_endpoint_correlation,
    sigma_sq,
)
from ..errors import ControlFailure, InfiniteEll
from ..fbm import GridSpec, sample_paths
from ..measure import ell_of, kv_constant
from ..riemann import (
    decompose,
    endpoint,
    increment_power_sum,
    monomial,
    raw_power_sum,
    require_order,
    residual,
)
from ..task import BatchTask, chunk_ranges, merge
from .report import ExperimentReport
from .stats import (
    KS_ALPHA,
    correlation,
    correlation_band,
    ks_statistic,
    mean_and_se,
    skewness_and_se,
    variance_and_se,
    z_score,
)

log = logging.getLogger(__name__)

VARIANCE_BAND = 3.0
SKEWNESS_BAND = 5.0
MEAN_BAND = 4.0
LIMIT_RATIO_TOL = 0.10
CONTROL_TOL = 1e-9
TELESCOPE_TOL = 1e-10
IDENTITY_TOL = 1e-12
SEED_STREAMS = "Philox(SeedSequence(seed, spawn_key=(path,)))"


def _new_report(name, config):
    return ExperimentReport(
        experiment=name,
        config=config.to_dict(),
        seeds={"master": config.seed, "streams": SEED_STREAMS, "paths": [0, config.paths]},
    )


def _label(n, t=None):
    return f"n={n}" if t is None else f"n={n} t={t:g}"


def _control(report, name, value, tol):
    record = report.add(name, value, exact=True, passed=bool(value <= tol), control=True, target=0.0)
    if not record.passed:
        raise ControlFailure(f"control '{name}' failed: {value:.3e} exceeds {tol:.1e}")
    return record


def _run_chunks(func, count, workers, *args):
    task = BatchTask(func, workers=workers)
    return merge(task.run(count, *args))


def _finite_ell(measure):
    ell = ell_of(measure)
    if ell.is_infinite:
        raise InfiniteEll(f"ℓ({measure.name}) is infinite; the limit theorem needs a finite one.")
    return int(ell)


# -- chunk workers (module level so the pool can pickle them) --

def _clt_chunk(start, count, grid, seed, method, r, times):
    batch = sample_paths(grid, count, seed, method, first=start)
    return _clt_values(batch, r, times, raw_power_sum, endpoint)


def _clt_values(batch, r, times, power_sum, end):
    horizon = batch.grid.horizon
    return {
        "power": np.column_stack([power_sum(batch, r, t) for t in times]),
        "endpoint": np.column_stack([end(batch, t) for t in times]),
        "telescoped": np.atleast_1d(np.abs(power_sum(batch, 1, horizon) - end(batch, horizon))),
        "scale": np.atleast_1d(1.0 + np.abs(end(batch, horizon))),
    }


def _clt_device(device, count, grid, seed, method, r, times):
    """OpenCL variant: sampling on the host, power sums on the device, chunk by chunk."""
    results = []
    for start, size in chunk_ranges(count):
        batch = sample_paths(grid, size, seed, method, first=start)
        results.append(_clt_values(batch, r, times, device.raw_power_sums, device.endpoints))
    return merge(results)


def _decomposition_chunk(start, count, grid, seed, method, measure, f, times, ell):
    batch = sample_paths(grid, count, seed, method, first=start)
    linear = monomial(1)
    low = monomial(2 * ell)
    cols = {}

    def put(key, value):
        cols.setdefault(key, []).append(np.atleast_1d(value))

    for t in times:
        dec = decompose(batch, f, measure, t)
        fb = np.abs(np.atleast_1d(f(batch.values[:, batch.steps(t)])))
        put("increment", dec.increment)
        put("nu_sum", dec.nu_sum)
        put("error", dec.error)
        put("residual", dec.residual)
        for h, value in dec.phi.items():
            put(f"phi{h}", value)
        recomposed = dec.nu_sum + sum(dec.phi.values()) + dec.residual
        put("identity", np.abs(recomposed - dec.increment) / (1.0 + fb))

        lin = decompose(batch, linear, measure, t)
        put("linear", np.abs(lin.error) / (1.0 + np.abs(batch.values[:, batch.steps(t)])))
        lo = decompose(batch, low, measure, t)
        put("low", np.abs(lo.error) / (1.0 + np.abs(np.atleast_1d(low(batch.values[:, batch.steps(t)])))))
    return {key: np.column_stack(value) for key, value in cols.items()}


def _residual_chunk(start, count, grid, seed, method, measure, f, times, ell):
    batch = sample_paths(grid, count, seed, method, first=start)
    sup = np.max(np.column_stack([np.abs(residual(batch, f, measure, t)) for t in times]), axis=1)
    linear = np.abs(residual(batch, monomial(1), measure, grid.horizon))
    scale = 1.0 + np.abs(endpoint(batch, grid.horizon))
    return {
        "sup": np.atleast_1d(sup),
        "markov": np.atleast_1d(increment_power_sum(batch, 4 * ell + 2, grid.horizon)),
        "linear": np.atleast_1d(linear / scale),
    }


# -- experiments --

def power_sum_clt_experiment(config, workers=None):
    """
    Breuer-Major check for sum_j D_j^r at the critical H: finite-n variance
    against the exact oracle, Gaussianity by KS, and the correlation proxies
    for independence from B.
    """
    started = time.perf_counter()
    hurst = config.hurst_value
    r = config.power or 2 * config.ell + 1
    times = config.eval_times
    selected = config.selected_statistics
    report = _new_report("clt", config)
    limit = bm_limit_variance(hurst, r)
    device = None
    if config.backend == "opencl":
        from ..device import DevicePowerSums
        device = DevicePowerSums()

    log.info("--- Power-sum CLT: H=%.6g, r=%d, %d paths ---", hurst, r, config.paths)
    try:
        for n in sorted(config.n_values):
            grid = GridSpec(hurst, n, config.horizon)
            log.info("--- Sampling %d paths at n=%d (%s) ---", config.paths, n, config.method)
            if device is None:
                data = _run_chunks(_clt_chunk, config.paths, workers, grid, config.seed, config.method, r, times)
            else:
                data = _clt_device(device, config.paths, grid, config.seed, config.method, r, times)

            telescoped = float(np.max(data["telescoped"] / data["scale"]))
            _control(report, f"{_label(n)} control: r=1 power sum telescopes to B_T", telescoped, TELESCOPE_TOL)
            exact_r1 = exact_power_sum_variance(hurst, 1, n, config.horizon)
            closed = (grid.steps / n) ** (2.0 * hurst)
            _control(report, f"{_label(n)} control: r=1 exact variance", abs(exact_r1 - closed) / closed, 1e-10)

            count = data["power"].shape[0]
            for ti, t in enumerate(times):
                label = _label(n, t)
                x = data["power"][:, ti]
                b = data["endpoint"][:, ti]
                exact = exact_power_sum_variance(hurst, r, n, t)
                if "variance" in selected:
                    var, se = variance_and_se(x)
                    z = z_score(var, exact, se)
                    report.add(f"{label} variance", var, se=se, statistic=z,
                               passed=abs(z) <= VARIANCE_BAND, target=exact)
                    report.add(f"{label} exact variance", exact, exact=True)
                    report.add(f"{label} limit variance", limit.value * t, exact=True)
                    if limit.value > 0:
                        report.add(f"{label} exact / limit variance", exact / (limit.value * t), exact=True)
                if "ks" in selected and exact > 0:
                    stat, p = ks_statistic(x / math.sqrt(exact), scipy.stats.norm.cdf)
                    report.add(f"{label} KS standardized power sum", stat, exact=True, statistic=stat,
                               p_value=p, passed=p > KS_ALPHA)
                if "independence" in selected:
                    band = correlation_band(count)
                    c1 = correlation(x, b)
                    c2 = correlation(x * x, b * b)
                    # first-chaos term of x^r: nonzero at finite n, O(n^{-(r-1)H})
                    finite_corr = power_sum_endpoint_correlation(hurst, r, n, t)
                    report.add(f"{label} exact corr(power sum, B_t)", finite_corr, exact=True)
                    report.add(f"{label} corr(power sum, B_t)", c1, se=1.0 / math.sqrt(count),
                               statistic=c1 - finite_corr, passed=abs(c1 - finite_corr) <= band,
                               target=finite_corr)
                    report.add(f"{label} corr(power sum, B_t) vs limit 0", c1, se=1.0 / math.sqrt(count),
                               statistic=c1, target=0.0)
                    report.add(f"{label} corr(power sum^2, B_t^2)", c2, se=1.0 / math.sqrt(count),
                               statistic=c2, passed=abs(c2) <= band, target=0.0)
                if "skewness" in selected:
                    skew, se = skewness_and_se(x)
                    z = z_score(skew, 0.0, se)
                    report.add(f"{label} skewness", skew, se=se, statistic=z,
                               passed=abs(z) <= SKEWNESS_BAND, target=0.0)
    finally:
        if device is not None:
            device.release()

    report.wall_clock = time.perf_counter() - started
    log.info("Power-sum CLT finished in %.2fs", report.wall_clock)
    return report


def limit_law_experiment(config, workers=None):
    """
    End-to-end check of the change-of-variable formula in law: the error
    E_n = f(B) - f(0) - S_n^nu(f', t) against the mixed-Gaussian correction.
    """
    started = time.perf_counter()
    measure = config.get_measure()
    ell = _finite_ell(measure)
    hurst = 1.0 / (4 * ell + 2)
    f = config.get_function()
    require_order(f, 4 * ell + 1)
    order = 2 * ell + 1
    k = kv_constant(measure, ell)
    constant = f.constant_derivative(order)
    times = config.eval_times
    selected = config.selected_statistics
    report = _new_report("limit", config)
    sigma2 = sigma_sq(ell).value
    oracle_sigma2 = bm_limit_variance(hurst, order).value

    log.info("--- Limit law: %s, f=%s, ℓ=%d, %d paths ---", measure.name, f.describe(), ell, config.paths)
    for n in sorted(config.n_values):
        grid = GridSpec(hurst, n, config.horizon)
        log.info("--- Sampling %d paths at n=%d (%s) ---", config.paths, n, config.method)
        data = _run_chunks(_decomposition_chunk, config.paths, workers, grid, config.seed,
                           config.method, measure, f, times, ell)
        _control(report, f"{_label(n)} control: linear f chain rule", float(np.max(data["linear"])), CONTROL_TOL)
        _control(report, f"{_label(n)} control: degree {2 * ell} chain rule", float(np.max(data["low"])),
                 CONTROL_TOL)

        for ti, t in enumerate(times):
            label = _label(n, t)
            e = data["error"][:, ti]
            mean, mean_se = mean_and_se(e)
            z = z_score(mean, 0.0, mean_se)
            report.add(f"{label} mean E_n", mean, se=mean_se, statistic=z, target=0.0,
                       passed=abs(z) <= MEAN_BAND if constant is not None else None)

            if "variance" in selected:
                oracle = limit_law_variance(f, measure, t, "oracle")
                series_target = oracle * sigma2 / oracle_sigma2
                var, se = variance_and_se(e)
                report.add(f"{label} oracle target variance", oracle, exact=True)
                report.add(f"{label} closed-series target variance", series_target, exact=True)
                if oracle > 0:
                    ratio = var / oracle
                    report.add(f"{label} variance E_n", var, se=se, statistic=ratio, target=oracle,
                               passed=abs(ratio - 1.0) <= LIMIT_RATIO_TOL if constant is not None else None)
                if series_target > 0:
                    report.add(f"{label} variance E_n / closed-series target", var / series_target,
                               se=se / series_target)
                if constant is not None:
                    finite = (constant * k) ** 2 * exact_power_sum_variance(hurst, order, n, t)
                    zf = z_score(var, finite, se)
                    report.add(f"{label} exact finite-n variance", finite, exact=True)
                    report.add(f"{label} variance E_n vs finite-n", var, se=se, statistic=zf, target=finite,
                               passed=abs(zf) <= VARIANCE_BAND)

            if "ks" in selected and constant:
                finite = (constant * k) ** 2 * exact_power_sum_variance(hurst, order, n, t)
                if finite > 0:
                    stat, p = ks_statistic(e / math.sqrt(finite), scipy.stats.norm.cdf)
                    report.add(f"{label} KS standardized E_n", stat, exact=True, statistic=stat,
                               p_value=p, passed=p > KS_ALPHA)

            if "decomposition" in selected:
                _decomposition_records(report, data, ti, label, f, ell)

    report.wall_clock = time.perf_counter() - started
    log.info("Limit law finished in %.2fs", report.wall_clock)
    return report


def _decomposition_records(report, data, ti, label, f, ell):
    identity = float(np.max(data["identity"][:, ti]))
    report.add(f"{label} decomposition identity", identity, exact=True, passed=identity <= IDENTITY_TOL,
               target=0.0)
    for h in range(ell, 2 * ell + 1):
        phi = data[f"phi{h}"][:, ti]
        if f.vanishes(2 * h + 1):
            biggest = float(np.max(np.abs(phi)))
            report.add(f"{label} variance Phi^{h}", biggest, exact=True, passed=biggest == 0.0, target=0.0)
        else:
            var, se = variance_and_se(phi)
            report.add(f"{label} variance Phi^{h}", var, se=se)
    var, se = variance_and_se(data["residual"][:, ti])
    report.add(f"{label} variance R_n", var, se=se)
    mean, se = mean_and_se(np.abs(data["residual"][:, ti]))
    report.add(f"{label} mean |R_n|", mean, se=se)


def riemann_summary(config, workers=None):
    """Per-term means and variances of the Taylor decomposition at every configured n and t."""
    started = time.perf_counter()
    measure = config.get_measure()
    ell = _finite_ell(measure)
    hurst = 1.0 / (4 * ell + 2)
    f = config.get_function()
    require_order(f, 4 * ell + 1)
    times = config.eval_times
    report = _new_report("riemann", config)

    for n in sorted(config.n_values):
        grid = GridSpec(hurst, n, config.horizon)
        data = _run_chunks(_decomposition_chunk, config.paths, workers, grid, config.seed,
                           config.method, measure, f, times, ell)
        _control(report, f"{_label(n)} control: linear f chain rule", float(np.max(data["linear"])), CONTROL_TOL)
        for ti, t in enumerate(times):
            label = _label(n, t)
            terms = ["increment", "nu_sum"] + [f"phi{h}" for h in range(ell, 2 * ell + 1)] + ["residual", "error"]
            for key in terms:
                x = data[key][:, ti]
                if x.size > 1:
                    mean, mean_se = mean_and_se(x)
                    report.add(f"{label} mean {key}", mean, se=mean_se)
                if x.size >= 4:
                    var, var_se = variance_and_se(x)
                    report.add(f"{label} variance {key}", var, se=var_se)
            if "decomposition" in config.selected_statistics:
                identity = float(np.max(data["identity"][:, ti]))
                report.add(f"{label} decomposition identity", identity, exact=True,
                           passed=identity <= IDENTITY_TOL, target=0.0)

    report.wall_clock = time.perf_counter() - started
    return report


def residual_decay_experiment(config, workers=None):
    """
    Decay of the Taylor remainder: E sup_t |R_n(t)| over the configured times
    should fall with n, and E sum_j D_j^{4l+2} should sit at mu_{4l+2} floor(nT)/n.
    """
    started = time.perf_counter()
    measure = config.get_measure()
    ell = _finite_ell(measure)
    hurst = 1.0 / (4 * ell + 2)
    f = config.get_function()
    require_order(f, 4 * ell + 1)
    times = config.eval_times
    selected = config.selected_statistics
    report = _new_report("residual", config)
    mu = gaussian_moment(4 * ell + 2)

    log.info("--- Residual decay: %s, f=%s, ℓ=%d ---", measure.name, f.describe(), ell)
    means = []
    for n in sorted(config.n_values):
        grid = GridSpec(hurst, n, config.horizon)
        data = _run_chunks(_residual_chunk, config.paths, workers, grid, config.seed,
                           config.method, measure, f, times, ell)
        _control(report, f"{_label(n)} control: linear f residual", float(np.max(data["linear"])), CONTROL_TOL)
        if "residual" in selected:
            mean, se = mean_and_se(data["sup"])
            means.append(mean)
            report.add(f"{_label(n)} mean sup|R_n|", mean, se=se)
        if "markov" in selected:
            target = mu * grid.steps / n
            mean, se = mean_and_se(data["markov"])
            z = z_score(mean, target, se)
            report.add(f"{_label(n)} mean sum D^{4 * ell + 2}", mean, se=se, statistic=z, target=target,
                       passed=abs(z) <= VARIANCE_BAND)

    if len(means) > 1:
        decreasing = all(b < a for a, b in zip(means, means[1:]))
        report.add("mean sup|R_n| strictly decreasing in n", float(decreasing), exact=True, passed=decreasing)

    report.wall_clock = time.perf_counter() - started
    return report


def simulate(config):
    """The sampled paths for the first configured n."""
    grid = GridSpec(config.hurst_value, config.n_values[0], config.horizon)
    log.info("--- Sampling %d paths at n=%d (%s) ---", config.paths, grid.n, config.method)
    return sample_paths(grid, config.paths, config.seed, config.method)
