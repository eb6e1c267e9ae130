import argparse
import sys
from dataclasses import dataclass, field
from typing import IO, List, Optional, Tuple

import pandas as pd
from rich.table import Table

from cs_catoni.stitching import stitch_plan
from cs_cli.serialization import (
    FORMATS,
    RowWriter,
    parse_float_list,
    parse_input_line,
    parse_int_list,
    write_frame,
)
from cs_core.config import CsConfig, Observation
from cs_core.errors import ConfidenceSequenceError, ConfigError
from cs_schedules.lambda_schedules import LambdaSchedule
from cs_simlab.generators import FAMILIES, GeneratorSpec
from cs_simlab.harness import ExperimentReport, run_coverage, run_crossing, run_shrinkage, run_width_profile
from cs_simlab.methods import METHOD_IDS, build_method
from utils.logger import log, set_log_level, stderr_console

SCHEDULE_CHOICES = ("default", "constant", "inv-sqrt-capped", "ds-tuned", "sn-tuned", "catoni-tuned",
                    "p-catoni-tuned", "het-matched")

STREAM_COLUMNS = ["t", "set", "width", "topology", "error"]


@dataclass(frozen=True)
class RunConfig:
    """Validated view of the command line."""
    subcommand: str
    method: str
    cs_config: CsConfig
    schedule: Optional[LambdaSchedule]
    floor_index: int = 9
    max_epoch: int = 60
    input_path: str = "-"
    output_path: str = "-"
    fmt: str = "csv"
    seed: Optional[int] = None
    horizon: int = 5000
    reps: int = 2000
    workers: int = 1
    spec: Optional[GeneratorSpec] = None
    alphas: List[float] = field(default_factory=list)
    ts: List[int] = field(default_factory=list)
    methods: List[str] = field(default_factory=list)
    method_b: Optional[str] = None
    threshold: float = 0.0
    summary: bool = False

    def method_object(self, method_id: Optional[str] = None):
        return build_method(method_id or self.method, self.cs_config, self.schedule,
                            floor_index=self.floor_index, max_epoch=self.max_epoch)


def _alpha_split(raw: Optional[str], alpha: float) -> Optional[Tuple[float, float]]:
    if raw is None:
        return None
    if raw == "default":
        return 0.9 * alpha, alpha - 0.9 * alpha
    values = parse_float_list(raw)
    if len(values) != 2:
        raise ConfigError(f"--alpha-split takes 'a1,a2', got {raw!r}")
    return values[0], values[1]


def _schedule(args: argparse.Namespace, config: CsConfig) -> Optional[LambdaSchedule]:
    kind = args.schedule
    if kind == "default":
        return None
    if kind == "constant":
        return LambdaSchedule.constant(args.lam)
    if kind == "inv-sqrt-capped":
        return LambdaSchedule.capped_inv_sqrt(args.cap)
    if kind == "ds-tuned":
        return LambdaSchedule.ds_tuned(config.alpha, config.variance_bound)
    if kind == "sn-tuned":
        return LambdaSchedule.sn_tuned(config.alpha, config.variance_bound)
    if kind == "catoni-tuned":
        return LambdaSchedule.catoni_tuned(config.alpha, config.variance_bound, args.floor_index)
    if kind == "p-catoni-tuned":
        return LambdaSchedule.p_catoni_tuned(config.alpha, config.p, config.moment_bound)
    return LambdaSchedule.het_matched(args.gamma, args.scale)


def build_run_config(args: argparse.Namespace) -> RunConfig:
    """Validates every flag combination before any computation."""
    sub = args.subcommand
    method = getattr(args, "method", "ds") or "ds"
    alpha = args.alpha
    if sub == "stitchplan":
        if not 0.0 < alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
        return RunConfig(subcommand=sub, method="catoni-stitched", cs_config=CsConfig(alpha=alpha, sigma2=1.0),
                         schedule=None, max_epoch=args.max_epoch, output_path=args.output, fmt=args.format,
                         summary=args.summary)

    if args.p < 2.0 and args.v is None and not args.heteroscedastic:
        raise ConfigError("--p below 2 requires --v")
    sigma2 = args.sigma2
    if sigma2 is None and args.p == 2.0 and args.v is None and not args.heteroscedastic:
        sigma2 = 1.0
    cs_config = CsConfig(
        alpha=alpha,
        p=args.p,
        sigma2=sigma2,
        v=args.v,
        heteroscedastic=args.heteroscedastic,
        alpha_split=_alpha_split(args.alpha_split, alpha),
        intersect=args.intersect,
    )
    if cs_config.alpha_split is not None and method != "sn":
        raise ConfigError("--alpha-split applies to --method sn only")
    if cs_config.heteroscedastic and args.schedule == "default" and method in ("ds", "sn", "catoni") and sigma2 is None:
        raise ConfigError("heteroscedastic mode without --sigma2 needs an explicit --schedule")
    schedule = _schedule(args, cs_config)

    spec = None
    if sub in ("coverage", "widths", "crossing", "shrinkage"):
        if args.seed is None:
            raise ConfigError(f"'{sub}' draws random data and requires --seed")
        variance = None if args.family == "pareto" else args.variance
        spec = GeneratorSpec(family=args.family, mean=args.mean, variance=variance, df=args.df,
                             pareto_index=args.pareto_index, damping=args.damping, p=args.p, v=args.v,
                             seed=args.seed)

    methods = [m.strip() for m in getattr(args, "methods", "").split(",") if m.strip()] if getattr(args, "methods", None) else []
    for m in [method] + methods + ([args.method_b] if getattr(args, "method_b", None) else []):
        if m not in METHOD_IDS:
            raise ConfigError(f"unknown method '{m}', expected one of {METHOD_IDS}")

    return RunConfig(
        subcommand=sub,
        method=method,
        cs_config=cs_config,
        schedule=schedule,
        floor_index=args.floor_index,
        input_path=getattr(args, "input", "-"),
        output_path=args.output,
        fmt=args.format,
        seed=getattr(args, "seed", None),
        horizon=getattr(args, "horizon", 5000),
        reps=getattr(args, "reps", 2000),
        workers=getattr(args, "workers", 1),
        spec=spec,
        alphas=parse_float_list(args.alphas) if getattr(args, "alphas", None) else [alpha],
        ts=parse_int_list(args.ts) if getattr(args, "ts", None) else [],
        methods=methods,
        method_b=getattr(args, "method_b", None),
        threshold=getattr(args, "threshold", 0.0),
        summary=args.summary,
    )


def _open_output(path: str) -> IO[str]:
    return sys.stdout if path == "-" else open(path, "w", newline="")


def _open_input(path: str) -> IO[str]:
    return sys.stdin if path == "-" else open(path, "r")


def _print_summary(title: str, frame: pd.DataFrame) -> None:
    table = Table(title=title)
    for column in frame.columns:
        table.add_column(str(column))
    for record in frame.itertuples(index=False):
        table.add_row(*[f"{v:.6g}" if isinstance(v, float) else str(v) for v in record])
    stderr_console.print(table)


def cmd_stream(config: RunConfig) -> int:
    """One output row per input row: t, set, width, topology."""
    estimator = config.method_object().estimator()
    cs_config = config.cs_config
    out = _open_output(config.output_path)
    writer = RowWriter(out, STREAM_COLUMNS, config.fmt)
    source = _open_input(config.input_path)
    t = 0
    try:
        for row_number, line in enumerate(source, start=1):
            try:
                parsed = parse_input_line(line)
            except ValueError as e:
                log.error(f"input row {row_number}: {e}")
                writer.write_error(row_number, f"row {row_number}: {e}")
                break
            if parsed is None:
                continue
            x, bound = parsed
            t += 1
            sigma_t = v_t = None
            if bound is not None:
                if cs_config.p < 2.0:
                    v_t = bound
                else:
                    sigma_t = bound
            try:
                cs = estimator.step(Observation(t=t, x=x, sigma_t=sigma_t, v_t=v_t))
            except ConfidenceSequenceError as e:
                state = getattr(estimator, "state", None)
                dump = state.sums() if state is not None else {}
                log.error(f"estimator failed at t={t} (input row {row_number}): {e}; state={dump}")
                writer.write_error(t, f"row {row_number}: {e}")
                break
            writer.write({"t": t, "set": cs, "width": cs.width, "topology": cs.topology})
    finally:
        if source is not sys.stdin:
            source.close()
        if out is not sys.stdout:
            out.close()
    return 1 if writer.error_rows else 0


def _write_report(config: RunConfig, report: ExperimentReport, frame: pd.DataFrame) -> int:
    out = _open_output(config.output_path)
    try:
        write_frame(frame, out, config.fmt)
    finally:
        if out is not sys.stdout:
            out.close()
    if config.summary:
        _print_summary(f"{report.kind} ({report.reps} reps, seed {report.seed})", report.summary)
    return 0


def cmd_coverage(config: RunConfig) -> int:
    report = run_coverage(config.method_object(), config.spec, config.horizon, config.reps, config.workers)
    return _write_report(config, report, report.summary)


def cmd_widths(config: RunConfig) -> int:
    """
    (t x alpha) grid with one median-width column per method. The self-normalized set has
    unbounded outer pieces, so it also gets <id>_middle (median middle-piece width) and
    <id>_three_piece_share columns.
    """
    method_ids = config.methods or [config.method]
    ts = config.ts or [config.horizon]
    pieces = []
    grid = None
    last = None
    for method_id in method_ids:
        last = run_width_profile(method_id, config.cs_config, config.spec, config.horizon, config.reps,
                                 config.alphas, ts, config.workers,
                                 schedule=config.schedule, floor_index=config.floor_index)
        pieces.append(last.summary)
        columns = last.summary[["alpha", "t", "median"]].rename(columns={"median": method_id})
        if "middle_median" in last.summary.columns:
            columns[f"{method_id}_middle"] = last.summary["middle_median"].to_numpy()
            columns[f"{method_id}_three_piece_share"] = last.summary["three_piece_share"].to_numpy()
        grid = columns if grid is None else grid.merge(columns, on=["alpha", "t"])
    summary = pd.concat(pieces, ignore_index=True)
    grid = grid.assign(seed=config.spec.seed, true_mean=config.spec.true_mean,
                       runtime_s=float(summary.drop_duplicates("method")["runtime_s"].sum()))
    last.summary = summary
    return _write_report(config, last, grid)


def cmd_shrinkage(config: RunConfig) -> int:
    method_ids = config.methods or [config.method]
    report = run_shrinkage(method_ids, config.cs_config, config.spec, config.horizon, config.reps,
                           config.ts or [config.horizon], config.workers,
                           schedule=config.schedule, floor_index=config.floor_index)
    return _write_report(config, report, report.summary)


def cmd_crossing(config: RunConfig) -> int:
    if config.method_b is None:
        raise ConfigError("crossing needs --method-b")
    report = run_crossing(config.method_object(), config.method_object(config.method_b), config.spec,
                          config.threshold, config.reps, config.horizon, config.workers)
    return _write_report(config, report, report.summary)


def cmd_stitchplan(config: RunConfig) -> int:
    plan = stitch_plan(config.cs_config.alpha, config.max_epoch)
    frame = pd.DataFrame({
        "j": list(range(plan.max_epoch + 1)),
        "t_j": plan.epochs,
        "alpha_j": plan.alphas,
        "lambda_j": plan.lambdas,
    })
    frame["cumulative_alpha"] = frame["alpha_j"].cumsum()
    out = _open_output(config.output_path)
    try:
        write_frame(frame, out, config.fmt)
    finally:
        if out is not sys.stdout:
            out.close()
    if config.summary:
        _print_summary(f"stitch plan, alpha={config.cs_config.alpha:g}, Z={plan.normalizer:.6f}", frame)
    return 0


COMMANDS = {
    "stream": cmd_stream,
    "coverage": cmd_coverage,
    "widths": cmd_widths,
    "shrinkage": cmd_shrinkage,
    "crossing": cmd_crossing,
    "stitchplan": cmd_stitchplan,
}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=0.05, help="error level")
    p.add_argument("--output", default="-", help="output path, '-' for stdout")
    p.add_argument("--format", choices=FORMATS, default="csv")
    p.add_argument("--summary", action="store_true", help="print a summary table to stderr")
    p.add_argument("--verbose", action="store_true", help="debug logging")


def _add_method_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=METHOD_IDS, default="ds")
    p.add_argument("--sigma2", type=float, default=None, help="variance bound (p=2)")
    p.add_argument("--p", type=float, default=2.0, help="moment order in (1, 2]")
    p.add_argument("--v", type=float, default=None, help="p-th central moment bound")
    p.add_argument("--heteroscedastic", action="store_true", help="read per-row sigma_t / v_t")
    p.add_argument("--schedule", choices=SCHEDULE_CHOICES, default="default")
    p.add_argument("--lam", type=float, default=0.1, help="constant schedule value")
    p.add_argument("--cap", type=float, default=0.1, help="cap of the inv-sqrt-capped schedule")
    p.add_argument("--gamma", type=float, default=0.0, help="exponent of the het-matched schedule")
    p.add_argument("--scale", type=float, default=1.0, help="scale of the het-matched schedule")
    p.add_argument("--floor-index", dest="floor_index", type=int, default=9)
    p.add_argument("--intersect", action="store_true", help="report running intersections")
    p.add_argument("--alpha-split", dest="alpha_split", nargs="?", const="default", default=None,
                   help="'a1,a2' for the self-normalized spurious-piece removal; bare flag uses 0.9/0.1")


def _add_simulation_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="root seed (required)")
    p.add_argument("--horizon", type=int, default=5000)
    p.add_argument("--reps", type=int, default=2000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--family", choices=FAMILIES, default="gaussian")
    p.add_argument("--mean", type=float, default=None, help="true mean, default a seeded uniform draw on [-10, 10]")
    p.add_argument("--variance", type=float, default=1.0)
    p.add_argument("--df", type=float, default=3.0)
    p.add_argument("--pareto-index", dest="pareto_index", type=float, default=1.8)
    p.add_argument("--damping", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heavy-cs", description="Anytime-valid confidence sequences for heavy-tailed means.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("stream", help="confidence sets for a stream of observations")
    _add_common(p)
    _add_method_flags(p)
    p.add_argument("--input", default="-", help="input path, '-' for stdin")

    p = sub.add_parser("coverage", help="time-uniform miscoverage by simulation")
    _add_common(p)
    _add_method_flags(p)
    _add_simulation_flags(p)

    p = sub.add_parser("widths", help="width quantiles over a (t, alpha) grid")
    _add_common(p)
    _add_method_flags(p)
    _add_simulation_flags(p)
    p.add_argument("--methods", default=None, help="comma separated method ids")
    p.add_argument("--alphas", default="0.1,0.01,0.001,0.0001,0.00001")
    p.add_argument("--ts", default=None, help="comma separated times, default the horizon")

    p = sub.add_parser("shrinkage", help="width against t at a fixed alpha")
    _add_common(p)
    _add_method_flags(p)
    _add_simulation_flags(p)
    p.add_argument("--methods", default=None, help="comma separated method ids")
    p.add_argument("--ts", default=None, help="comma separated times")

    p = sub.add_parser("crossing", help="first time the lower bound passes a threshold")
    _add_common(p)
    _add_method_flags(p)
    _add_simulation_flags(p)
    p.add_argument("--method-b", dest="method_b", choices=METHOD_IDS, default=None)
    p.add_argument("--threshold", type=float, default=0.0)

    p = sub.add_parser("stitchplan", help="epochs, levels and coefficients of the stitched sequence")
    _add_common(p)
    p.add_argument("--max-epoch", dest="max_epoch", type=int, default=20)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    set_log_level(args.verbose)
    try:
        config = build_run_config(args)
        return COMMANDS[config.subcommand](config)
    except ConfidenceSequenceError as e:
        log.error(f"{args.subcommand}: {e}")
        return 2


if __name__ == '__main__':
    sys.exit(main())
