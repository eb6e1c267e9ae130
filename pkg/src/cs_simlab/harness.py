import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.stats import norm

from cs_core.config import CsConfig, Observation
from cs_core.errors import ConfidenceSequenceError, ConfigError, ReplicationError
from cs_simlab.generators import GeneratorSpec, generate_with_bounds
from cs_simlab.methods import CsMethod, SnMethod, build_method
from utils.logger import log


@dataclass
class ExperimentReport:
    """
    Result of a Monte-Carlo experiment.

    summary holds one row per method (and per (alpha, t) cell for width profiles); per_rep holds
    one row per replication. Everything needed to rerun is recorded: spec (with its seed),
    methods, horizon and reps.
    """
    kind: str
    methods: List[str]
    spec: GeneratorSpec
    horizon: int
    reps: int
    true_mean: float
    summary: pd.DataFrame
    per_rep: pd.DataFrame
    runtime_s: float = 0.0
    extra: Dict[str, Any] = field(default_factory=dict)

    @property
    def seed(self) -> int:
        return self.spec.seed


def _stamp(summary: pd.DataFrame, spec: GeneratorSpec, runtime: float) -> pd.DataFrame:
    """Adds the columns needed to rerun and read a summary on its own."""
    return summary.assign(seed=spec.seed, true_mean=spec.true_mean, runtime_s=runtime)


def _map_reps(worker: Callable, args: List[tuple], workers: int) -> List[Any]:
    """Runs worker over args; results come back in replication order either way."""
    if workers <= 1:
        return [worker(a) for a in args]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, args))


def _replicate(rep: int, fn: Callable, *fn_args):
    try:
        return fn(*fn_args)
    except ConfidenceSequenceError as e:
        t = getattr(e, "t", None)
        if t is None:
            t = getattr(e, "diagnostics", {}).get("t")
        raise ReplicationError(rep, t, e) from e


def _coverage_rep(args: tuple) -> dict:
    method, spec, horizon, rep = args
    xs, sigmas = generate_with_bounds(spec, horizon, rep)
    covered = _replicate(rep, method.covers, xs, spec.true_mean, sigmas)
    misses = np.flatnonzero(~covered)
    return {
        "rep": rep,
        "first_miss": int(misses[0]) + 1 if misses.size else None,
        "final_miss": bool(not covered[-1]),
    }


def run_coverage(
        method: CsMethod,
        spec: GeneratorSpec,
        horizon: int = 5000,
        reps: int = 2000,
        workers: int = 1,
) -> ExperimentReport:
    """
    Time-uniform miscoverage: fraction of replications in which the true mean leaves the set at
    some t <= horizon. The true mean is used for scoring only.
    """
    alpha = method.config.alpha
    mu = spec.true_mean
    log.info(f"coverage run: method={method.method_id}, family={spec.family}, alpha={alpha:g}, "
             f"horizon={horizon}, reps={reps}, seed={spec.seed}")
    start = time.perf_counter()
    rows = _map_reps(_coverage_rep, [(method, spec, horizon, rep) for rep in range(reps)], workers)
    per_rep = pd.DataFrame(rows).sort_values("rep").reset_index(drop=True)
    per_rep.insert(0, "method", method.method_id)

    misses = int(per_rep["first_miss"].notna().sum())
    rate = misses / reps
    se = math.sqrt(alpha * (1.0 - alpha) / reps)
    summary = pd.DataFrame([{
        "method": method.method_id,
        "alpha": alpha,
        "horizon": horizon,
        "reps": reps,
        "misses": misses,
        "miscoverage": rate,
        "band_upper": alpha + 3.0 * se,
        "within_band": rate <= alpha + 3.0 * se,
        "final_miscoverage": float(per_rep["final_miss"].mean()),
    }])
    runtime = time.perf_counter() - start
    summary = _stamp(summary, spec, runtime)
    log.info(f"coverage of {method.method_id}: miscoverage={rate:.4f} (band {alpha + 3.0 * se:.4f}), "
             f"{runtime:.1f}s")
    return ExperimentReport("coverage", [method.method_id], spec, horizon, reps, mu, summary, per_rep, runtime)


def run_monitoring(method: CsMethod, spec: GeneratorSpec, horizon: int = 10_000, reps: int = 2000,
                   workers: int = 1) -> ExperimentReport:
    """Continuous monitoring of a fixed-time interval; reports its time-uniform miscoverage."""
    report = run_coverage(method, spec, horizon, reps, workers)
    report.kind = "monitoring"
    return report


def _profile_rep(args: tuple) -> List[dict]:
    method, spec, horizon, rep, ts = args
    xs, sigmas = generate_with_bounds(spec, horizon, rep)
    rows = []
    if isinstance(method, SnMethod):
        est = _replicate(rep, method.estimator)
        wanted = set(ts)
        hetero = method.config.heteroscedastic
        for i, x in enumerate(xs):
            cs = _replicate(rep, est.step, Observation(t=i + 1, x=float(x), sigma_t=float(sigmas[i]) if hetero else None))
            if i + 1 in wanted:
                rows.append({"rep": rep, "t": i + 1, "width": cs.width,
                             "middle_width": est.middle_width(), "topology": est.topology()})
            if i + 1 >= max(ts):
                break
        return rows
    sets = _replicate(rep, method.sets_at, xs, ts, sigmas)
    for t in ts:
        rows.append({"rep": rep, "t": t, "width": sets[t].width, "lower": sets[t].lower, "upper": sets[t].upper})
    return rows


def _alpha_variant(config: CsConfig, alpha: float) -> CsConfig:
    if config.alpha_split is None:
        return replace(config, alpha=alpha)
    share = config.alpha_split[0] / config.alpha
    return replace(config, alpha=alpha, alpha_split=(share * alpha, alpha - share * alpha))


def run_width_profile(
        method_id: str,
        config: CsConfig,
        spec: GeneratorSpec,
        horizon: int,
        reps: int,
        alphas: Sequence[float],
        ts: Optional[Sequence[int]] = None,
        workers: int = 1,
        **method_options,
) -> ExperimentReport:
    """
    Width quantiles on a (t, alpha) grid. ts defaults to the horizon alone. For the
    self-normalized method the middle-piece width and the topology tag are reported too.
    """
    ts = sorted(set(ts or [horizon]))
    if ts[-1] > horizon:
        raise ConfigError(f"requested t={ts[-1]} exceeds horizon {horizon}")
    log.info(f"width profile: method={method_id}, family={spec.family}, alphas={list(alphas)}, ts={ts}, reps={reps}")
    start = time.perf_counter()
    frames = []
    for alpha in alphas:
        method = build_method(method_id, _alpha_variant(config, alpha), **method_options)
        rows = _map_reps(_profile_rep, [(method, spec, horizon, rep, ts) for rep in range(reps)], workers)
        frame = pd.DataFrame([row for rep_rows in rows for row in rep_rows])
        frame.insert(0, "alpha", alpha)
        frames.append(frame)
    per_rep = pd.concat(frames, ignore_index=True)
    per_rep.insert(0, "method", method_id)
    runtime = time.perf_counter() - start
    summary = _stamp(_width_summary(per_rep), spec, runtime)
    log.info(f"width profile of {method_id} done in {runtime:.1f}s")
    return ExperimentReport("widths", [method_id], spec, horizon, reps, spec.true_mean, summary, per_rep, runtime)


def _width_summary(per_rep: pd.DataFrame) -> pd.DataFrame:
    grouped = per_rep.groupby(["method", "alpha", "t"])["width"]
    summary = pd.DataFrame({
        "mean": grouped.mean(),
        "median": grouped.median(),
        "q05": grouped.quantile(0.05),
        "q95": grouped.quantile(0.95),
    }).reset_index()
    if "topology" in per_rep.columns:
        three = per_rep.assign(three_piece=per_rep["topology"] == "three-piece")
        by_cell = three.groupby(["method", "alpha", "t"])
        summary["three_piece_share"] = by_cell["three_piece"].mean().values
        summary["middle_median"] = by_cell["middle_width"].median().values
    return summary


def run_shrinkage(
        method_ids: Sequence[str],
        config: CsConfig,
        spec: GeneratorSpec,
        horizon: int,
        reps: int,
        ts: Sequence[int],
        workers: int = 1,
        **method_options,
) -> ExperimentReport:
    """Width against t at a fixed alpha, one block per method."""
    reports = [run_width_profile(mid, config, spec, horizon, reps, [config.alpha], ts, workers, **method_options)
               for mid in method_ids]
    per_rep = pd.concat([r.per_rep for r in reports], ignore_index=True)
    summary = pd.concat([r.summary for r in reports], ignore_index=True)
    runtime = sum(r.runtime_s for r in reports)
    return ExperimentReport("shrinkage", list(method_ids), spec, horizon, reps, spec.true_mean, summary, per_rep, runtime)


def _crossing_rep(args: tuple) -> dict:
    method_a, method_b, spec, horizon, rep, threshold = args
    xs, sigmas = generate_with_bounds(spec, horizon, rep)
    return {
        "rep": rep,
        "cross_a": _replicate(rep, method_a.crossing_time, xs, threshold, sigmas),
        "cross_b": _replicate(rep, method_b.crossing_time, xs, threshold, sigmas),
    }


def run_crossing(
        method_a: CsMethod,
        method_b: CsMethod,
        spec: GeneratorSpec,
        threshold: float = 0.0,
        reps: int = 100,
        horizon: int = 5000,
        workers: int = 1,
) -> ExperimentReport:
    """
    First t at which each method's lower bound exceeds threshold. Replications that never
    cross within the horizon are censored; they count as +inf in the medians.
    """
    if method_a.config.alpha != method_b.config.alpha:
        raise ConfigError("crossing comparison needs both methods at the same alpha")
    log.info(f"crossing run: {method_a.method_id} vs {method_b.method_id}, threshold={threshold:g}, reps={reps}")
    start = time.perf_counter()
    rows = _map_reps(_crossing_rep, [(method_a, method_b, spec, horizon, rep, threshold) for rep in range(reps)], workers)
    per_rep = pd.DataFrame(rows).sort_values("rep").reset_index(drop=True)
    per_rep["censored_a"] = per_rep["cross_a"].isna()
    per_rep["censored_b"] = per_rep["cross_b"].isna()

    def median_time(column: str) -> float:
        values = per_rep[column].astype(float).fillna(math.inf).to_numpy()
        return float(np.median(values))

    med_a, med_b = median_time("cross_a"), median_time("cross_b")
    ratio = med_a / med_b if math.isfinite(med_b) and med_b > 0 else math.nan
    summary = pd.DataFrame([{
        "method_a": method_a.method_id,
        "method_b": method_b.method_id,
        "threshold": threshold,
        "median_a": med_a,
        "median_b": med_b,
        "ratio": ratio,
        "censored_a": int(per_rep["censored_a"].sum()),
        "censored_b": int(per_rep["censored_b"].sum()),
    }])
    runtime = time.perf_counter() - start
    summary = _stamp(summary, spec, runtime)
    log.info(f"median crossing: {method_a.method_id}={med_a}, {method_b.method_id}={med_b}, ratio={ratio:.3f}")
    return ExperimentReport("crossing", [method_a.method_id, method_b.method_id], spec, horizon, reps,
                            spec.true_mean, summary, per_rep, runtime)


def lil_reference(t: float, sigma: float) -> float:
    """sigma sqrt(2 log log t / t); a reference curve only."""
    if t < 3:
        raise ConfigError(f"lil reference needs t >= 3, got {t}")
    return sigma * math.sqrt(2.0 * math.log(math.log(t)) / t)


def gaussian_lower_reference(t: float, sigma: float, alpha: float, eps: float) -> float:
    """2 sigma / sqrt(t) * Phi^-1(1 - alpha/2 - eps); a reference curve only."""
    if not alpha + 2.0 * eps < 1.0:
        raise ConfigError(f"gaussian lower reference needs alpha + 2 eps < 1, got alpha={alpha}, eps={eps}")
    return 2.0 * sigma / math.sqrt(t) * float(norm.ppf(1.0 - alpha / 2.0 - eps))


if __name__ == '__main__':
    report = run_coverage(
        build_method("catoni", CsConfig(alpha=0.05, sigma2=1.0)),
        GeneratorSpec(family="student-t", df=3.0, seed=7),
        horizon=1000,
        reps=100,
    )
    print(report.summary)
