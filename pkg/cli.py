"""
markrefine command line

Subcommands wire the pipeline stages together:

    synth     generate synthetic transcripts
    clean     fill missing assessment methods, drop markless records
    refine    compute MAI and refined module marks
    fit       fit refinement coefficients (linear vs quadratic)
    stats     means | ttest | corr
    predict   degree-class prediction with and without MAI
    pipeline  clean -> refine -> stats in one run
    report    refinement summary of a refined file

Exit codes: 0 success, 2 usage error, 3 data error, 4 internal invariant
failure.
"""

import argparse
import logging
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import List, Optional

from classify import UK_BOUNDARIES, DegreeBoundaries, build_cohort, mai_effect_experiment
from cleanse import check_cleansed, cleanse
from ingest import check_ingest_report, read_refined_file, read_transcript_file
from mai import load_class_tables
from observability import StageMetrics, get_logger, start_run
from refine import (
    DEFAULT_COEFFS,
    RefineCoeffs,
    check_refined,
    refine_all,
    summarize_refinement,
)
from report import (
    FORMATS,
    RunManifest,
    manifest_path,
    render,
    write_manifest,
    write_refined,
    write_transcripts,
)
from stats import (
    compare_models,
    correlation_matrix,
    group_means,
    group_means_ttests,
    published_ttests,
)
from synthgen import SynthConfig, TranscriptSynthesizer, load_synth_config
from transcript_model import Department, InvariantError, MarkPipelineError

PROG = "markrefine"
EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INVARIANT = 4

logger = get_logger("cli")

_EXTENSIONS = {"csv": "csv", "json": "json", "table": "txt"}


def _department(value: str) -> Department:
    try:
        return Department.parse(value)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def _fraction(value: str) -> float:
    number = float(value)
    if not 0.0 < number < 1.0:
        raise argparse.ArgumentTypeError(f"split must be in (0, 1), got {value}")
    return number


def _positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return number


class RunContext:
    """Stage tracking, metrics and the manifest of one invocation"""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.stage = args.command
        self.metrics = StageMetrics()
        self.manifest = RunManifest(
            subcommand=" ".join(filter(None, [args.command, getattr(args, "action", None)])),
            inputs=[str(args.input)] if getattr(args, "input", None) else [],
            seed=getattr(args, "seed", None),
            class_table_source=str(getattr(args, "classes", None) or "builtin"),
        )

    @contextmanager
    def enter(self, stage: str):
        self.stage = stage
        with self.metrics.time_stage(stage):
            yield

    def emit(self, text: str, out: Optional[Path] = None):
        """Write rendered output to a file (with manifest) or stdout"""
        if out is None:
            sys.stdout.write(text)
            return
        Path(out).write_text(text, encoding="utf-8")
        self.written(out)

    def written(self, path: Path):
        self.manifest.outputs.append(str(path))

    def finish(self):
        self.manifest.finish(self.metrics.snapshot())
        for output in self.manifest.outputs:
            write_manifest(self.manifest, output)


def _manifest_name(out: Optional[Path]) -> Optional[str]:
    return manifest_path(out).name if out else None


def _coeffs(args) -> RefineCoeffs:
    return RefineCoeffs(beta1=args.beta1, beta2=args.beta2)


def _tables(args):
    return load_class_tables(args.classes) if args.classes else None


def _load_transcripts(ctx: RunContext, path: Path, department: Department):
    with ctx.enter("ingest"):
        records, report = read_transcript_file(path, department)
        check_ingest_report(report)
        ctx.metrics.record(
            "ingest",
            {
                "rows_read": report.rows_read,
                "rows_accepted": report.rows_accepted,
                "rows_rejected": report.rows_rejected,
            },
        )
    for line, reason in report.rejects:
        logger.warning("Rejected row", line=line, reason=reason)
    return records


def _load_refined(ctx: RunContext, path: Path, department: Department):
    with ctx.enter("ingest"):
        records, report = read_refined_file(path, department)
        check_ingest_report(report)
        ctx.metrics.record(
            "ingest", {"rows_read": report.rows_read, "rows_accepted": report.rows_accepted}
        )
    return records


def _clean_stage(ctx: RunContext, records):
    with ctx.enter("cleanse"):
        cleaned, report = cleanse(records)
        check_cleansed(records, cleaned, report)
        ctx.metrics.record(
            "cleanse",
            {
                "methods_inferred": report.methods_inferred,
                "records_dropped": report.records_dropped,
                "unresolved": report.unresolved,
                "label_conflicts": report.label_conflicts,
            },
        )
    return cleaned, report


def _refine_stage(ctx: RunContext, records, tables, coeffs: RefineCoeffs):
    with ctx.enter("refine"):
        refined = refine_all(records, tables, coeffs)
        check_refined(records, refined)
        ctx.metrics.record(
            "refine",
            {
                "records": len(refined),
                "flagged": sum(1 for r in refined if r.flag is not None),
            },
        )
    ctx.manifest.coefficients = {"beta1": coeffs.beta1, "beta2": coeffs.beta2}
    return refined


def cmd_synth(ctx: RunContext) -> int:
    args = ctx.args
    tables = _tables(args) or {}
    if args.config:
        config = load_synth_config(args.config, tables)
        ctx.manifest.inputs.append(str(args.config))
    else:
        config = SynthConfig(class_tables=tables)
    if args.seed is not None:
        config.seed = args.seed
    ctx.manifest.seed = config.seed

    with ctx.enter("synthgen"):
        synth = TranscriptSynthesizer(config)
        records = synth.generate()
        ctx.metrics.record(
            "synthgen",
            {"records": len(records), "clamped_marks": synth.report.clamped_marks},
        )
    write_transcripts(records, args.out)
    ctx.written(args.out)
    sys.stdout.write(render(synth.report, args.format))
    return EXIT_OK


def cmd_clean(ctx: RunContext) -> int:
    args = ctx.args
    records = _load_transcripts(ctx, args.input, args.dept)
    cleaned, report = _clean_stage(ctx, records)
    write_transcripts(cleaned, args.out)
    ctx.written(args.out)
    sys.stdout.write(render(report, args.format))
    return EXIT_OK


def cmd_refine(ctx: RunContext) -> int:
    args = ctx.args
    records = _load_transcripts(ctx, args.input, args.dept)
    refined = _refine_stage(ctx, records, _tables(args), _coeffs(args))
    write_refined(refined, args.out)
    ctx.written(args.out)
    if refined:
        sys.stdout.write(render(summarize_refinement(refined), args.format))
    return EXIT_OK


def cmd_fit(ctx: RunContext) -> int:
    args = ctx.args
    refined = [r for r in _load_refined(ctx, args.input, args.dept) if r.flag is None]
    with ctx.enter("stats"):
        comparison = compare_models([r.mai for r in refined], [r.module_mark for r in refined])
    ctx.emit(render(comparison, args.format, _manifest_name(args.out)), args.out)
    return EXIT_OK


def cmd_stats(ctx: RunContext) -> int:
    args = ctx.args
    if args.action == "ttest" and args.table1:
        with ctx.enter("stats"):
            results = published_ttests()
        ctx.emit(render(results, args.format, _manifest_name(args.out)), args.out)
        return EXIT_OK

    records = _load_transcripts(ctx, args.input, args.dept)
    with ctx.enter("stats"):
        if args.action == "means":
            result = group_means(records)
        elif args.action == "ttest":
            result = group_means_ttests(group_means(records))
        else:
            result = correlation_matrix(records)
    ctx.emit(render(result, args.format, _manifest_name(args.out)), args.out)
    return EXIT_OK


def cmd_predict(ctx: RunContext) -> int:
    args = ctx.args
    boundaries = (
        DegreeBoundaries.from_yaml(args.boundaries) if args.boundaries else UK_BOUNDARIES
    )
    refined = _load_refined(ctx, args.input, args.dept)
    with ctx.enter("classify"):
        cohort = build_cohort(refined)
        ctx.metrics.record("classify", {"students": len(cohort)})
        report = mai_effect_experiment(
            cohort,
            split=args.split,
            seed=args.seed,
            trees=args.trees,
            max_depth=args.max_depth,
            boundaries=boundaries,
            mai_scope=args.mai_scope,
            n_jobs=args.jobs,
        )
    ctx.emit(render(report, args.format, _manifest_name(args.out)), args.out)
    return EXIT_OK


def cmd_pipeline(ctx: RunContext) -> int:
    """clean -> refine -> stats with each intermediate file written to --out DIR"""
    args = ctx.args
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    ext = _EXTENSIONS[args.format]

    records = _load_transcripts(ctx, args.input, args.dept)
    cleaned, cleanse_report = _clean_stage(ctx, records)
    cleaned_path = out_dir / "cleaned.csv"
    write_transcripts(cleaned, cleaned_path)
    ctx.written(cleaned_path)

    refined = _refine_stage(ctx, cleaned, _tables(args), _coeffs(args))
    refined_path = out_dir / "refined.csv"
    write_refined(refined, refined_path)
    ctx.written(refined_path)

    with ctx.enter("stats"):
        means = group_means(cleaned)
    means_path = out_dir / f"means.{ext}"
    ctx.emit(render(means, args.format, _manifest_name(means_path)), means_path)

    if refined:
        summary_path = out_dir / f"summary.{ext}"
        ctx.emit(
            render(summarize_refinement(refined), args.format, _manifest_name(summary_path)),
            summary_path,
        )
    sys.stdout.write(render(cleanse_report, args.format))
    return EXIT_OK


def cmd_report(ctx: RunContext) -> int:
    args = ctx.args
    refined = _load_refined(ctx, args.input, args.dept)
    if args.regno:
        refined = [r for r in refined if r.regno == args.regno]
    if args.year:
        refined = [r for r in refined if r.year_of_study == args.year]
    with ctx.enter("refine"):
        summary = summarize_refinement(refined)
    ctx.emit(render(summary, args.format, _manifest_name(args.out)), args.out)
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser, needs_input: bool = True):
    if needs_input:
        parser.add_argument("--in", dest="input", type=Path, required=True, help="Input CSV")
        parser.add_argument("--dept", type=_department, required=True, help="Department")
    parser.add_argument("--format", choices=FORMATS, default="table", help="Report format")


def _add_refine_options(parser: argparse.ArgumentParser):
    parser.add_argument("--beta1", type=float, default=DEFAULT_COEFFS.beta1)
    parser.add_argument("--beta2", type=float, default=DEFAULT_COEFFS.beta2)
    parser.add_argument("--classes", type=Path, help="Class table override CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=PROG, description="Assessment-aware mark refinement")
    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default="WARNING",
        help="Diagnostics on stderr",
    )
    subparsers = parser.add_subparsers(dest="command", metavar="command")
    subparsers.required = True

    p = subparsers.add_parser("synth", help="Generate synthetic transcripts")
    p.add_argument("--config", type=Path, help="Generator YAML config")
    p.add_argument("--seed", type=int, help="Overrides the config seed")
    p.add_argument("--classes", type=Path, help="Class table override CSV")
    p.add_argument("--out", type=Path, required=True)
    _add_common(p, needs_input=False)
    p.set_defaults(handler=cmd_synth)

    p = subparsers.add_parser("clean", help="Fill missing methods and drop markless rows")
    _add_common(p)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(handler=cmd_clean)

    p = subparsers.add_parser("refine", help="Compute MAI and refined marks")
    _add_common(p)
    _add_refine_options(p)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(handler=cmd_refine)

    p = subparsers.add_parser("fit", help="Fit linear and quadratic MAI models")
    _add_common(p)
    p.add_argument("--out", type=Path)
    p.set_defaults(handler=cmd_fit)

    p = subparsers.add_parser("stats", help="Group means, t-tests, correlations")
    p.add_argument("action", choices=["means", "ttest", "corr"])
    p.add_argument("--in", dest="input", type=Path)
    p.add_argument("--dept", type=_department)
    p.add_argument(
        "--table1", "--published", dest="table1", action="store_true",
        help="Use the built-in department means",
    )
    p.add_argument("--out", type=Path)
    _add_common(p, needs_input=False)
    p.set_defaults(handler=cmd_stats)

    p = subparsers.add_parser("predict", help="Degree-class prediction with and without MAI")
    _add_common(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trees", type=_positive_int, default=100)
    p.add_argument("--max-depth", type=_positive_int)
    p.add_argument("--split", type=_fraction, default=0.7)
    p.add_argument("--boundaries", type=Path, help="Degree boundaries YAML")
    p.add_argument("--mai-scope", choices=["year1", "both"], default="year1")
    p.add_argument("--jobs", type=_positive_int, default=1, help="Tree-building threads")
    p.add_argument("--out", type=Path)
    p.set_defaults(handler=cmd_predict)

    p = subparsers.add_parser("pipeline", help="clean, refine and stats in one run")
    _add_common(p)
    _add_refine_options(p)
    p.add_argument("--out", type=Path, required=True, help="Output directory")
    p.set_defaults(handler=cmd_pipeline)

    p = subparsers.add_parser("report", help="Refinement summary of a refined file")
    _add_common(p)
    p.add_argument("--regno", help="Restrict to one student")
    p.add_argument("--year", type=_positive_int, help="Restrict to one year of study")
    p.add_argument("--out", type=Path)
    p.set_defaults(handler=cmd_report)

    return parser


def _check_args(parser: argparse.ArgumentParser, args: argparse.Namespace):
    """Cross-flag rules argparse cannot express"""
    if args.command == "stats" and not (args.action == "ttest" and args.table1):
        if args.input is None or args.dept is None:
            parser.error("stats needs --in and --dept unless running ttest --table1")
    if args.command == "stats" and args.table1 and args.action != "ttest":
        parser.error("--table1 only applies to stats ttest")


def run(argv: Optional[List[str]] = None) -> int:
    """
    Execute one subcommand

    Returns:
        Process exit code
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _check_args(parser, args)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    logging.basicConfig(
        level=getattr(logging, args.log_level), stream=sys.stderr, format="%(message)s"
    )
    start_run()
    ctx = RunContext(args)
    try:
        status = args.handler(ctx)
    except InvariantError as e:
        print(f"{PROG}: {ctx.stage}: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    except (MarkPipelineError, OSError, ValueError) as e:
        print(f"{PROG}: {ctx.stage}: {e}", file=sys.stderr)
        return EXIT_DATA
    ctx.finish()
    return status


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
