import argparse
import dataclasses
import logging
import os
import sys
import time
import typing
from typing import Any, Dict, List, Optional

from . import report, selection
from .config import Config, load_config
from .errors import CleshError
from .parse import DatasetBundle, load_dataset
from .pipeline import run_analysis

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_ANALYSIS = 2


@dataclasses.dataclass(frozen=True)
class RunSummary:
    exit_code: int
    n_important: int = 0
    n_significant_univariate: int = 0
    n_significant_interactions: int = 0
    output_dir: str = ""
    elapsed: float = 0.0

    def lines(self) -> List[str]:
        return [
            f"important features: {self.n_important}",
            f"significant univariate findings: {self.n_significant_univariate}",
            f"significant interactions: {self.n_significant_interactions}",
            f"output: {self.output_dir}",
            f"elapsed: {self.elapsed:.1f}s",
        ]


_HELP = {
    "candidate_num_min": "Smallest number of important features to pick from the cuts",
    "candidate_num_max": "Largest number of important features to pick from the cuts",
    "p_feature_selection": "Significance level of the adjacent-rank tests",
    "cont_bound": "Features with more unique values than this are continuous",
    "manual_num": "Analyze exactly this many top features (0 or none: automatic)",
    "p_univariate": "Significance level of the univariate analysis",
    "p_interaction": "Significance level of the interaction analysis",
    "output_dir": "Output directory",
    "rng_seed": "Seed for row subsampling of large datasets",
    "interaction_top_k": "Number of interaction partners analyzed per feature",
    "strict_paired_nonparametric": "Use the signed-rank test for paired comparisons",
    "html": "Also write a self-contained report.html",
}


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    hints = typing.get_type_hints(Config)
    for field in dataclasses.fields(Config):
        flag = "--" + field.name.replace("_", "-")
        if hints[field.name] is bool:
            parser.add_argument(
                flag,
                dest=field.name,
                action=argparse.BooleanOptionalAction,
                default=None,
                help=_HELP[field.name],
            )
        else:
            parser.add_argument(
                flag,
                dest=field.name,
                default=None,
                metavar=field.name.upper(),
                help=f"{_HELP[field.name]} (default: {field.default})",
            )


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="clesh",
        description="Explain the SHAP values of a model with statistical tests",
    )
    parser.add_argument(
        "--features",
        required=True,
        metavar="CSV",
        help="Feature matrix, one header row and one row per sample",
    )
    parser.add_argument(
        "--shap",
        required=True,
        metavar="CSV|NPY",
        help="SHAP values aligned with the feature matrix",
    )
    parser.add_argument(
        "--label",
        required=True,
        help="Name of the predicted label, used in the report sentences",
    )
    parser.add_argument(
        "--config",
        metavar="FILE",
        help="Configuration file (.json5/.json or key = value lines)",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=os.cpu_count() or 1,
        metavar="N",
        help="Number of worker threads",
    )
    parser.add_argument(
        "--dry-run",
        action="store_true",
        help="Only rank features and print the cut analysis",
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="Log progress to stderr (-vv for debug output)",
    )
    _add_config_flags(parser)
    return parser.parse_args(argv)


def setup_logging(verbosity: int) -> None:
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG)
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


def overrides_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    return {
        field.name: getattr(args, field.name)
        for field in dataclasses.fields(Config)
        if getattr(args, field.name) is not None
    }


def print_dry_run(bundle: DatasetBundle, config: Config, threads: int) -> int:
    ranking = selection.rank_features(bundle)
    cuts = selection.adjacent_significance_cuts(bundle, ranking, config, threads)
    cut_set = set(cuts.cut_positions)
    for rank, feature in enumerate(ranking.order, start=1):
        marker = " <- cut" if rank in cut_set else ""
        print(
            f"{rank:>4} {bundle.feature_names[feature]:<30} "
            f"{ranking.mean_abs_shap[feature]:.6g}{marker}"
        )
    positions = ", ".join(str(k) for k in cuts.cut_positions) or "none"
    print(f"cut positions: {positions}")
    print(f"chosen k: {cuts.chosen_k} ({cuts.rule.value})")
    return cuts.chosen_k


def run_pipeline(args: argparse.Namespace) -> RunSummary:
    start = time.monotonic()
    try:
        config = load_config(args.config, overrides_from_args(args))
        logger.info("stage: load")
        bundle = load_dataset(args.features, args.shap, args.label)
        if not args.dry_run:
            report.check_output_dir(config.output_dir)
    except (CleshError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return RunSummary(exit_code=EXIT_INPUT)

    if args.dry_run:
        k = print_dry_run(bundle, config, max(1, args.threads))
        return RunSummary(exit_code=EXIT_OK, n_important=k)

    try:
        analysis = run_analysis(bundle, config, max(1, args.threads))
        logger.debug("analysis log:\n%s", "\n".join(analysis.notes.render()))
        logger.info("stage: report")
        report.write_report(analysis, config)
    except Exception as e:
        logger.exception("analysis failed")
        print(f"error: analysis failed: {e}", file=sys.stderr)
        return RunSummary(exit_code=EXIT_ANALYSIS)

    summary = RunSummary(
        exit_code=EXIT_OK,
        n_important=len(analysis.important),
        n_significant_univariate=analysis.n_significant_univariate(),
        n_significant_interactions=analysis.n_significant_interactions(),
        output_dir=config.output_dir,
        elapsed=time.monotonic() - start,
    )
    for line in summary.lines():
        print(line)
    return summary


def main(argv: Optional[List[str]] = None) -> int:
    args = parse_args(argv)
    setup_logging(args.verbose)
    return run_pipeline(args).exit_code


if __name__ == "__main__":
    sys.exit(main())
