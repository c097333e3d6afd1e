"""Command-line interface with argparse."""

import argparse
import os
import sys
from pathlib import Path
from typing import List, Optional

from . import __version__
from .completion import install_completers
from .config import WORKDIR_ENV
from .errors import ConfigError, MagpieError
from .handlers import campaign, evaluation, search, space, validation
from .history import RunHistory
from .output import get_logger
from .patch import ALL_KINDS, EditKind
from .session import Session, open_session
from .util import parse_csv_list


def _scenario_options() -> argparse.ArgumentParser:
    """Options shared by every scenario-driven subcommand."""
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--scenario", "-s", required=True, help="Scenario file (key = value)")
    parent.add_argument("--work-dir", dest="work_dir", help=f"Work directory (overrides scenario and ${WORKDIR_ENV})")
    parent.add_argument("--process-slots", dest="process_slots", type=int, help="Max concurrent processes")
    parent.add_argument("--keep-failures", dest="keep_failures", action="store_true",
                        help="Keep work directories of failed variants")
    parent.add_argument("--seed", type=int, help="Random seed (overrides the scenario)")
    return parent


def _add_families(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--families",
        "-f",
        help=f"Comma-separated edit families (default: all). Valid: {', '.join(k.value for k in EditKind)}",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="magpie",
        description="Improve software by searching over edit sequences: compiler flags, "
                    "algorithm parameters and source statements.",
    )

    # Global flags
    parser.add_argument(
        "-v",
        "--verbose",
        action="store_true",
        help="Print every evaluation as it happens",
    )
    parser.add_argument("--version", action="version", version=f"magpie {__version__}")

    subparsers = parser.add_subparsers(dest="command", metavar="<command>")
    subparsers.required = True
    common = _scenario_options()

    # ===== ENUMERATE =====
    enumerate_parser = subparsers.add_parser("enumerate", parents=[common], help="Count the edit space")
    _add_families(enumerate_parser)
    enumerate_parser.add_argument("--list", dest="list_edits", action="store_true", help="Print every edit")

    # ===== SEARCH =====
    search_parser = subparsers.add_parser("search", parents=[common], help="Local search from the empty patch")
    _add_families(search_parser)
    search_parser.add_argument("--budget", type=int, help="Mutant evaluations (default: scenario budget)")
    search_parser.add_argument("--joint", action="store_true", help="Joint search (default budget: joint_budget)")
    search_parser.add_argument("--instances", help="Instance file (default: training instances)")
    search_parser.add_argument("--out", help="Write the best patch here")
    search_parser.add_argument("--trace", help="Write the search trace (JSON lines) here")

    # ===== MINIFY =====
    minify_parser = subparsers.add_parser("minify", parents=[common], help="Minimize a patch")
    minify_parser.add_argument("--patch", required=True, help="Patch file")
    minify_parser.add_argument("--instances", help="Validation instance file (default: training instances)")
    minify_parser.add_argument("--out", help="Write the minimized patch here")

    # ===== COMBINE =====
    combine_parser = subparsers.add_parser("combine", parents=[common], help="Combine and minimize patches")
    combine_parser.add_argument("patches", nargs="+", help="Patch files, in concatenation order")
    combine_parser.add_argument("--instances", help="Validation instance file (default: training instances)")
    combine_parser.add_argument("--out", help="Write the combined patch here")

    # ===== CAMPAIGN =====
    campaign_parser = subparsers.add_parser("campaign", parents=[common], help="k-fold search, validation and test")
    _add_families(campaign_parser)
    campaign_parser.add_argument("--k", type=int, help="Number of folds (default: scenario k)")
    campaign_parser.add_argument("--budget", type=int, help="Budget per fold")
    campaign_parser.add_argument("--joint", action="store_true", help="Joint search in every fold")
    campaign_parser.add_argument("--test-repeats", dest="test_repeats", type=int,
                                 help="Repeat test measurements and report stability")
    campaign_parser.add_argument("--out", help="CampaignResult JSON (default: <work_dir>/campaign.json)")
    campaign_parser.add_argument("--patch-out", dest="patch_out", help="Write the selected patch here")

    # ===== EVALUATE =====
    evaluate_parser = subparsers.add_parser("evaluate", parents=[common], help="Evaluate one patch")
    evaluate_parser.add_argument("--patch", help="Patch file (default: empty patch)")
    evaluate_parser.add_argument("--instances", help="Instance file (default: test instances)")
    evaluate_parser.add_argument("--repeats", type=int, default=1, help="Fresh repeats for stability (CoV)")
    evaluate_parser.add_argument("--no-cache", dest="use_cache", action="store_false", help="Ignore cached results")
    evaluate_parser.add_argument("--out", help="Write the FitnessReport JSON here")

    # ===== REPORT =====
    report_parser = subparsers.add_parser("report", help="Percentage change between two reports")
    report_parser.add_argument("--baseline", required=True, help="Baseline FitnessReport JSON")
    report_parser.add_argument("--variant", required=True, help="Variant FitnessReport JSON")
    report_parser.add_argument("--work-dir", dest="work_dir", help="Where to write logs")

    # ===== IMPACTS =====
    impacts_parser = subparsers.add_parser("impacts", parents=[common], help="Rank edits across runs")
    impacts_parser.add_argument("--patches", nargs="+", required=True, help="Patch files or directories")
    impacts_parser.add_argument("--instances", help="Validation instance file (default: training instances)")
    impacts_parser.add_argument("--threshold", type=float, default=1.0, help="Minimum improvement in percent")
    impacts_parser.add_argument("--csv", help="Also write the table as CSV here")

    return parser


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse command-line arguments."""
    parser = build_parser()
    install_completers(parser)
    return parser.parse_args(argv)


def parse_families(value: Optional[str]) -> List[EditKind]:
    names = parse_csv_list(value)
    if not names:
        return list(ALL_KINDS)
    try:
        return [EditKind.parse(name) for name in names]
    except ValueError as e:
        raise ConfigError("--families", str(e)) from None


def _open(args: argparse.Namespace) -> Session:
    return open_session(
        args.scenario,
        work_dir=args.work_dir,
        process_slots=args.process_slots,
        keep_failures=args.keep_failures,
        seed=args.seed,
        verbose=args.verbose,
    )


def dispatch(args: argparse.Namespace, session: Optional[Session]) -> dict:
    """Route to handlers."""
    if args.command == "enumerate":
        return space.enumerate_space(session, parse_families(args.families), args.list_edits)
    if args.command == "search":
        return search.run_search(
            session,
            parse_families(args.families),
            budget=args.budget,
            joint=args.joint,
            instances_path=args.instances,
            out=args.out,
            trace_path=args.trace,
        )
    if args.command == "minify":
        return validation.minify_patch(session, args.patch, args.instances, args.out)
    if args.command == "combine":
        return validation.combine_patch_files(session, args.patches, args.instances, args.out)
    if args.command == "campaign":
        return campaign.run(
            session,
            parse_families(args.families),
            k=args.k,
            budget=args.budget,
            joint=args.joint,
            test_repeats=args.test_repeats,
            out=args.out,
            patch_out=args.patch_out,
        )
    if args.command == "evaluate":
        return evaluation.evaluate_patch(
            session, args.patch, args.instances, args.repeats, args.use_cache, args.out
        )
    if args.command == "report":
        return evaluation.compare_reports(args.baseline, args.variant)
    return validation.edit_impacts(session, args.patches, args.instances, args.threshold, args.csv)


def _log_dir(args: argparse.Namespace, session: Optional[Session]) -> Optional[Path]:
    if session is not None:
        return Path(session.scenario.work_dir)
    explicit = getattr(args, "work_dir", None) or os.getenv(WORKDIR_ENV)
    return Path(explicit) if explicit else None


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point; returns the process exit code."""
    try:
        args = parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors, 0 for --help/--version
        return e.code if isinstance(e.code, int) else 2

    logger = get_logger(args.verbose)
    full_argv = sys.argv[1:] if argv is None else list(argv)
    session: Optional[Session] = None
    code = 0
    try:
        if getattr(args, "scenario", None):
            session = _open(args)
        log_dir = _log_dir(args, session)
        if log_dir is not None:
            RunHistory(log_dir).add_entry(
                argv=["magpie"] + full_argv,
                seed=session.scenario.seed if session else None,
                scenario_digest=session.scenario.digest() if session else None,
                version=__version__,
            )
        dispatch(args, session)
    except (MagpieError, ValueError, OSError) as e:
        logger.log_entry(args.command, error=str(e))
        print(f"Error: {e}", file=sys.stderr)
        code = 1

    log_dir = _log_dir(args, session)
    if log_dir is not None:
        logger.log_entry(
            "run",
            argv=["magpie"] + full_argv,
            seed=session.scenario.seed if session else None,
            scenario_digest=session.scenario.digest() if session else None,
            version=__version__,
            exit_code=code,
        )
        output_file = logger.write_to_file(log_dir)
        if output_file and args.verbose:
            print(f"\nLog written to: {output_file}")
    logger.clear()
    return code
