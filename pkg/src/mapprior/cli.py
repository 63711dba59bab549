"""Command-line interface.

Subcommands
-----------
map      single-study predictive-prior report (JSON or TSV)
shrink   two-study shrinkage report
table2   comparison table of predictive priors across heterogeneity priors
convert  ratio-scale confidence interval -> log-scale estimate and SE
grid     two-column density/CDF grid export for plotting

Exit codes: 0 success, 1 validation/usage error, 2 numeric failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .correspond import a0_density
from .dataio import emit_density_grid, load_studies_csv, parse_ratio_ci
from .errors import (
    ConfigurationError,
    DataFormatError,
    EssInstabilityError,
    GridCoverageError,
    InvalidParameterError,
    QuadratureError,
)
from .mixture import MapPrior
from .priors import parse_prior_spec
from .report import (
    render_json,
    render_report_tsv,
    render_table_tsv,
    round12,
    round_to_digits,
    prior_comparison_table,
    run_map_report,
)
from .shrink import shrinkage_posterior
from .study import StudyEstimate

_GRID_DISTS = ("map-density", "map-cdf", "map-log-density", "posterior",
               "likelihood", "tau-density", "tau-cdf", "a0-density")


class _Parser(argparse.ArgumentParser):
    # usage problems are validation errors: exit 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_output_options(p: argparse.ArgumentParser, default_format: str = "json"):
    p.add_argument("--out", default="-", metavar="PATH",
                   help="output file (default: stdout)")
    p.add_argument("--format", choices=("json", "tsv"), default=default_format,
                   help=f"output format (default: {default_format})")
    p.add_argument("--round", dest="round_digits", type=int, metavar="N",
                   help="round reported numbers to N significant digits "
                        "(default: 12)")


def _add_study_options(p: argparse.ArgumentParser):
    p.add_argument("--data", metavar="CSV", help="study CSV file")
    p.add_argument("--study", metavar="LABEL", help="row label to use from --data")
    p.add_argument("--y", type=float, help="effect estimate on the log scale")
    p.add_argument("--se", type=float, help="standard error on the log scale")
    p.add_argument("--estimate", type=float, help="ratio-scale point estimate")
    p.add_argument("--lower", type=float, help="ratio-scale interval lower bound")
    p.add_argument("--upper", type=float, help="ratio-scale interval upper bound")
    p.add_argument("--n", type=int, help="patient count behind the estimate")
    p.add_argument("--label", default="", help="label for a directly given study")
    p.add_argument("--ci-level", type=float, default=0.95,
                   help="confidence level of ratio-scale intervals (default 0.95)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mapprior",
                     description="Predictive priors from a single external study")
    sub = parser.add_subparsers(dest="command", required=True)

    p_map = sub.add_parser("map", help="single-study predictive-prior report")
    _add_study_options(p_map)
    p_map.add_argument("--prior", required=True, metavar="SPEC",
                       help='heterogeneity prior, e.g. "half-normal(0.5)"')
    p_map.add_argument("--uisd", type=float,
                       help="unit-information SD override (else derived from n)")
    p_map.add_argument("--level", type=float, action="append",
                       help="interval level, repeatable (default 0.95)")
    p_map.add_argument("--sample-check", type=int, metavar="N",
                       help="append a Monte Carlo moment check with N draws")
    p_map.add_argument("--seed", type=int, default=0, help="seed for --sample-check")
    _add_output_options(p_map)

    p_shr = sub.add_parser("shrink", help="two-study shrinkage report")
    p_shr.add_argument("--data", required=True, metavar="CSV", help="study CSV file")
    p_shr.add_argument("--source", metavar="LABEL",
                       help="source study label (default: first row)")
    p_shr.add_argument("--target", metavar="LABEL",
                       help="target study label (default: second row)")
    p_shr.add_argument("--prior", required=True, metavar="SPEC")
    p_shr.add_argument("--uisd", type=float)
    p_shr.add_argument("--level", type=float, action="append")
    p_shr.add_argument("--ci-level", type=float, default=0.95)
    _add_output_options(p_shr)

    p_tab = sub.add_parser("table2",
                           help="comparison table of predictive priors")
    p_tab.add_argument("--se", type=float, required=True,
                       help="source standard error shared by all rows")
    p_tab.add_argument("--uisd", type=float, required=True,
                       help="unit-information SD for the ESS column")
    p_tab.add_argument("--prior", action="append", default=[], metavar="SPEC",
                       help="heterogeneity prior, repeatable (one table row each)")
    p_tab.add_argument("--quantile-level", type=float, action="append",
                       help="centered quantile level column (default 0.95 0.975 0.995)")
    _add_output_options(p_tab, default_format="tsv")

    p_conv = sub.add_parser("convert",
                            help="ratio-scale CI -> log-scale estimate and SE")
    p_conv.add_argument("--estimate", type=float, required=True)
    p_conv.add_argument("--lower", type=float, required=True)
    p_conv.add_argument("--upper", type=float, required=True)
    p_conv.add_argument("--ci-level", type=float, default=0.95)
    _add_output_options(p_conv)

    p_grid = sub.add_parser("grid", help="density/CDF grid export")
    _add_study_options(p_grid)
    p_grid.add_argument("--dist", required=True, choices=_GRID_DISTS)
    p_grid.add_argument("--prior", metavar="SPEC")
    p_grid.add_argument("--source", metavar="LABEL")
    p_grid.add_argument("--target", metavar="LABEL")
    p_grid.add_argument("--from", dest="lo", type=float, help="grid start")
    p_grid.add_argument("--to", dest="hi", type=float, help="grid end")
    p_grid.add_argument("--points", type=int, default=200)
    p_grid.add_argument("--out", required=True, metavar="PATH")
    return parser


def _direct_study(args) -> StudyEstimate | None:
    ratio_flags = (args.estimate is not None or args.lower is not None
                   or args.upper is not None)
    if args.y is not None or args.se is not None:
        if ratio_flags:
            raise ConfigurationError(
                "give either log-scale (--y/--se) or ratio-scale "
                "(--estimate/--lower/--upper) input, not both")
        if args.y is None or args.se is None:
            raise ConfigurationError("direct log-scale input needs both --y and --se")
        return StudyEstimate(y=args.y, se=args.se, n=args.n, label=args.label)
    if ratio_flags:
        if None in (args.estimate, args.lower, args.upper):
            raise ConfigurationError(
                "ratio-scale input needs --estimate, --lower and --upper")
        y, se = parse_ratio_ci(args.estimate, args.lower, args.upper, args.ci_level)
        return StudyEstimate(y=y, se=se, n=args.n, label=args.label)
    return None


def _pick(studies: list[StudyEstimate], label: str | None, default_index: int,
          path: str) -> StudyEstimate:
    if label is None:
        if default_index >= len(studies):
            raise ConfigurationError(
                f"{path}: need at least {default_index + 1} study rows")
        return studies[default_index]
    matches = [s for s in studies if s.label == label]
    if not matches:
        raise ConfigurationError(f"{path}: no study labelled {label!r}")
    if len(matches) > 1:
        raise ConfigurationError(f"{path}: label {label!r} is ambiguous")
    return matches[0]


def _resolve_source(args) -> StudyEstimate:
    direct = _direct_study(args)
    if args.data is not None:
        if direct is not None:
            raise ConfigurationError("give either --data or direct estimates, not both")
        studies = load_studies_csv(args.data, level=args.ci_level)
        return _pick(studies, args.study, 0, args.data)
    if direct is None:
        raise ConfigurationError(
            "no study given: use --data or direct --y/--se or --estimate/--lower/--upper")
    return direct


def _write(text: str, out: str) -> None:
    if out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _apply_rounding(payload, args):
    if args.round_digits is None:
        return payload
    if args.round_digits < 1:
        raise ConfigurationError("--round needs at least 1 significant digit")
    return round_to_digits(payload, args.round_digits)


def _cmd_map(args) -> None:
    source = _resolve_source(args)
    prior = parse_prior_spec(args.prior)
    report = run_map_report(source, prior, uisd_override=args.uisd,
                            levels=args.level or [0.95],
                            sample_check=args.sample_check, seed=args.seed)
    report = _apply_rounding(report, args)
    text = render_json(report) if args.format == "json" else render_report_tsv(report)
    _write(text, args.out)


def _cmd_shrink(args) -> None:
    studies = load_studies_csv(args.data, level=args.ci_level)
    source = _pick(studies, args.source, 0, args.data)
    target = _pick(studies, args.target, 1, args.data)
    if source is target:
        raise ConfigurationError("source and target are the same study row")
    prior = parse_prior_spec(args.prior)
    report = run_map_report(source, prior, target=target, uisd_override=args.uisd,
                            levels=args.level or [0.95])
    report = _apply_rounding(report, args)
    text = render_json(report) if args.format == "json" else render_report_tsv(report)
    _write(text, args.out)


def _cmd_table2(args) -> None:
    priors = [parse_prior_spec(spec) for spec in args.prior]
    levels = args.quantile_level or [0.95, 0.975, 0.995]
    rows = prior_comparison_table(args.se, priors, args.uisd, quantile_levels=levels)
    rows = _apply_rounding(rows, args)
    if args.format == "json":
        text = render_json(rows)
    else:
        text = render_table_tsv(rows, quantile_levels=levels)
    _write(text, args.out)


def _cmd_convert(args) -> None:
    y, se = parse_ratio_ci(args.estimate, args.lower, args.upper, args.ci_level)
    payload = _apply_rounding({
        "log_estimate": round12(y),
        "se": round12(se),
        "level": args.ci_level,
    }, args)
    if args.format == "json":
        text = render_json(payload)
    else:
        text = f"log_estimate\t{payload['log_estimate']:.12g}\nse\t{payload['se']:.12g}\n"
    _write(text, args.out)


def _grid_function(args):
    needs_prior = args.dist not in ("likelihood",)
    prior = parse_prior_spec(args.prior) if args.prior is not None else None
    if needs_prior and prior is None:
        raise ConfigurationError(f"--dist {args.dist} needs --prior")

    if args.dist in ("tau-density", "tau-cdf"):
        return (prior.density if args.dist == "tau-density" else prior.cdf), (0.0, None)

    if args.dist == "a0-density":
        if args.se is None:
            raise ConfigurationError("--dist a0-density needs --se (the source SE)")
        eps = 1e-6
        fn = lambda x: a0_density(prior, args.se, np.clip(x, eps, 1.0 - eps))
        return fn, (eps, 1.0 - eps)

    if args.dist == "posterior":
        studies = load_studies_csv(args.data, level=args.ci_level) if args.data else None
        if studies is None:
            raise ConfigurationError("--dist posterior needs --data")
        source = _pick(studies, args.source, 0, args.data)
        target = _pick(studies, args.target, 1, args.data)
        post = shrinkage_posterior(source, target, prior)
        return (lambda x: np.interp(x, post.grid, post.density, left=0.0, right=0.0)), (None, None)

    source = _resolve_source(args)
    if args.dist == "likelihood":
        v = source.variance
        return (lambda x: np.exp(-0.5 * np.square(x - source.y) / v)
                / np.sqrt(2.0 * np.pi * v)), (None, None)

    mp = MapPrior.from_study(source, prior)
    if args.dist == "map-density":
        return mp.density, (None, None)
    if args.dist == "map-cdf":
        return mp.cdf, (None, None)
    return (lambda x: np.log(mp.density(x))), (None, None)


def _cmd_grid(args) -> None:
    fn, (default_lo, default_hi) = _grid_function(args)
    lo = args.lo if args.lo is not None else default_lo
    hi = args.hi if args.hi is not None else default_hi
    if lo is None or hi is None:
        raise ConfigurationError("--dist %s needs --from and --to" % args.dist)
    emit_density_grid(fn, lo, hi, args.points, args.out)


_COMMANDS = {
    "map": _cmd_map,
    "shrink": _cmd_shrink,
    "table2": _cmd_table2,
    "convert": _cmd_convert,
    "grid": _cmd_grid,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _COMMANDS[args.command](args)
    except (DataFormatError, InvalidParameterError, ConfigurationError) as exc:
        print(f"mapprior: error: {exc}", file=sys.stderr)
        return 1
    except (QuadratureError, GridCoverageError, EssInstabilityError) as exc:
        print(f"mapprior: numeric failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
