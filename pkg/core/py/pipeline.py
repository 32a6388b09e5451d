import argparse
import logging
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional

from core.py.annotator import annotate_corpus, dump_annotated_corpus
from core.py.classifier import (
    DEFAULT_TAU_ASSIGN,
    DEFAULT_TAU_UNCLASSIFIABLE,
    as_rational,
    assignments_to_csv,
    assignments_to_json,
    check_thresholds,
    classify_all,
    exceptions,
    exceptions_to_json,
    load_models,
)
from core.py.corpus import parse_corpus
from core.py.errors import FilscriptError, InvalidThresholds, UnreadablePath
from core.py.gridlab import (
    DEFAULT_GAMMA,
    DEFAULT_THETA_MANDATORY,
    DEFAULT_THETA_OPTIONAL,
    aggregate,
    build_grid,
    check_script_thresholds,
    grid_to_csv,
    grid_to_json,
    grid_to_markdown,
    induce_scripts,
    render_report,
    scripts_to_json,
    supports_to_json,
    validate_scripts,
    validation_to_json,
)
from core.py.lexicon import load_lexicon

logger = logging.getLogger(__name__)

DATA_DIR = Path(__file__).resolve().parents[2] / "data"
DEFAULT_CORPUS = DATA_DIR / "grid_fixture" / "corpus.json"
DEFAULT_LEXICON = DATA_DIR / "lexicon" / "fr_default.json"
DEFAULT_MODELS = DATA_DIR / "models" / "fr_default_models.json"

SUBCOMMANDS = ("ingest", "annotate", "classify", "grid", "induce", "validate", "pipeline")

GRID_RENDERERS = {
    "csv": ("grid.csv", grid_to_csv),
    "json": ("grid.json", grid_to_json),
    "md": ("grid.md", grid_to_markdown),
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    corpus: Path = DEFAULT_CORPUS
    lexicon: Path = DEFAULT_LEXICON
    models: Path = DEFAULT_MODELS
    out: Path = Path("out")
    holdout: Optional[Path] = None
    tau_assign: Fraction = DEFAULT_TAU_ASSIGN
    tau_unclassifiable: Fraction = DEFAULT_TAU_UNCLASSIFIABLE
    theta_mandatory: Fraction = DEFAULT_THETA_MANDATORY
    theta_optional: Fraction = DEFAULT_THETA_OPTIONAL
    gamma: Fraction = DEFAULT_GAMMA
    format: Optional[str] = None

    def validate(self):
        """
        Check threshold orderings and input paths.

        Raises:
            InvalidThresholds, UnreadablePath
        """
        check_thresholds(self.tau_assign, self.tau_unclassifiable)
        check_script_thresholds(self.theta_mandatory, self.theta_optional)
        if not 0 <= as_rational(self.gamma) <= 1:
            raise InvalidThresholds(f"gamma must lie in [0, 1], got {float(self.gamma)}")
        inputs = [self.corpus, self.lexicon, self.models]
        if self.holdout is not None:
            inputs.append(self.holdout)
        for path in inputs:
            if not Path(path).is_file():
                raise UnreadablePath(f"cannot read {path}")
        if self.out.exists() and not self.out.is_dir():
            raise UnreadablePath(f"output path {self.out} is not a directory")


def _read(path):
    return Path(path).read_bytes()


class Pipeline:
    """
    Runs the analysis stages for one configuration, loading each input once
    and writing each artifact into the output directory.
    """

    def __init__(self, config):
        self.config = config
        self.written = []
        self._corpus = None
        self._lexicon = None
        self._models = None
        self._annotations = None
        self._assignments = None
        self._grid = None
        self._supports = None
        self._scripts = None

    @staticmethod
    def run(config):
        """
        Run one subcommand.

        Args:
            config (RunConfig): Parsed flags.

        Returns:
            int: 0 on success, 1 on input error, 2 on invalid configuration.
        """
        try:
            config.validate()
            pipeline = Pipeline(config)
            steps = {
                "ingest": [pipeline.ingest],
                "annotate": [pipeline.annotate],
                "classify": [pipeline.classify],
                "grid": [pipeline.grid],
                "induce": [pipeline.induce],
                "validate": [pipeline.validate],
                "pipeline": [pipeline.ingest, pipeline.annotate, pipeline.classify, pipeline.grid,
                             pipeline.induce, pipeline.validate],
            }[config.command]
            for step in steps:
                step()
        except FilscriptError as e:
            logger.error(str(e))
            return e.exit_code
        except OSError as e:
            logger.error(f"I/O error: {e}")
            return 1

        for path in pipeline.written:
            print(f"Output written to {path}")
        return 0

    # lazily loaded inputs and stages

    @property
    def corpus(self):
        if self._corpus is None:
            self._corpus = parse_corpus(_read(self.config.corpus), source=str(self.config.corpus))
        return self._corpus

    @property
    def lexicon(self):
        if self._lexicon is None:
            self._lexicon = load_lexicon(_read(self.config.lexicon), source=str(self.config.lexicon))
        return self._lexicon

    @property
    def models(self):
        if self._models is None:
            self._models = load_models(_read(self.config.models), lexicon=self.lexicon, source=str(self.config.models))
        return self._models

    @property
    def annotations(self):
        if self._annotations is None:
            self._annotations = annotate_corpus(self.corpus, self.lexicon)
        return self._annotations

    @property
    def assignments(self):
        if self._assignments is None:
            self._assignments = classify_all(
                self.annotations, self.models, self.config.tau_assign, self.config.tau_unclassifiable)
        return self._assignments

    @property
    def cross_grid(self):
        if self._grid is None:
            self._grid = build_grid(self.annotations)
        return self._grid

    @property
    def supports(self):
        if self._supports is None:
            self._supports = aggregate(self.cross_grid, self.assignments)
        return self._supports

    @property
    def scripts(self):
        if self._scripts is None:
            self._scripts = induce_scripts(self.supports, self.config.theta_mandatory, self.config.theta_optional)
        return self._scripts

    def _write(self, name, payload):
        self.config.out.mkdir(parents=True, exist_ok=True)
        path = self.config.out / name
        path.write_bytes(payload)
        self.written.append(path)

    # subcommands

    def ingest(self):
        corpus = self.corpus
        print(f"Corpus {corpus.corpus_id}: {len(corpus.threads)} threads, {corpus.message_count} messages")

    def annotate(self):
        self._write("annotated_corpus.json", dump_annotated_corpus(self.corpus, self.annotations))

    def classify(self):
        if self.config.format == "csv":
            self._write("assignments.csv", assignments_to_csv(self.assignments))
        else:
            self._write("assignments.json", assignments_to_json(self.assignments))
        self._write("exceptions.json", exceptions_to_json(self.assignments))

    def grid(self):
        name, render = GRID_RENDERERS[self.config.format or "csv"]
        self._write(name, render(self.cross_grid))

    def induce(self):
        self._write("supports.json", supports_to_json(self.supports))
        self._write("scripts.json", scripts_to_json(self.scripts))
        self._write("report.md", render_report(self.scripts, self.supports, self.corpus.corpus_id))

    def validate(self):
        if self.config.holdout is None:
            # self-consistency: the training threads against their own scripts
            holdout, assignments = self.annotations, self.assignments
        else:
            held = parse_corpus(_read(self.config.holdout), source=str(self.config.holdout))
            holdout = annotate_corpus(held, self.lexicon)
            assignments = classify_all(holdout, self.models, self.config.tau_assign, self.config.tau_unclassifiable)
        report = validate_scripts(self.scripts, holdout, assignments, self.config.gamma)
        self._write("validation.json", validation_to_json(report, exceptions(assignments)))


def _rational(text):
    try:
        return as_rational(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def build_parser():
    parser = argparse.ArgumentParser(
        prog="filscript",
        description="Segment, annotate and classify help-seeking forum threads; build the cross-grid and induce scripts.",
    )
    parser.add_argument("command", choices=SUBCOMMANDS)
    parser.add_argument("--corpus", type=Path, default=DEFAULT_CORPUS)
    parser.add_argument("--lexicon", type=Path, default=DEFAULT_LEXICON)
    parser.add_argument("--models", type=Path, default=DEFAULT_MODELS)
    parser.add_argument("--out", type=Path, default=Path("out"))
    parser.add_argument("--holdout", type=Path, default=None, help="second corpus for validate")
    parser.add_argument("--tau-assign", type=_rational, default=DEFAULT_TAU_ASSIGN)
    parser.add_argument("--tau-unclassifiable", type=_rational, default=DEFAULT_TAU_UNCLASSIFIABLE)
    parser.add_argument("--theta-mandatory", type=_rational, default=DEFAULT_THETA_MANDATORY)
    parser.add_argument("--theta-optional", type=_rational, default=DEFAULT_THETA_OPTIONAL)
    parser.add_argument("--gamma", type=_rational, default=DEFAULT_GAMMA)
    parser.add_argument("--format", choices=sorted(GRID_RENDERERS), default=None,
                        help="grid rendering (default csv); csv also switches assignments to CSV")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", "-v", action="store_true")
    verbosity.add_argument("--quiet", "-q", action="store_true")
    return parser


def main(argv=None):
    """Command-line entry point; returns the exit status (argparse usage errors exit 2)."""
    args = build_parser().parse_args(argv)

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s [%(levelname)s] %(message)s", stream=sys.stderr)
    logging.getLogger().setLevel(level)

    config = RunConfig(
        command=args.command,
        corpus=args.corpus,
        lexicon=args.lexicon,
        models=args.models,
        out=args.out,
        holdout=args.holdout,
        tau_assign=args.tau_assign,
        tau_unclassifiable=args.tau_unclassifiable,
        theta_mandatory=args.theta_mandatory,
        theta_optional=args.theta_optional,
        gamma=args.gamma,
        format=args.format,
    )
    return Pipeline.run(config)


if __name__ == "__main__":
    sys.exit(main())
