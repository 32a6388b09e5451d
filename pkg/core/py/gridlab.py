"""
Cross-grid of script slots by thread, per-category slot support, prototype
script induction and validation of scripts on further threads.
"""

import io
import logging
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import pandas as pd
from jinja2 import Environment, FileSystemLoader

from core.py.classifier import LABEL_ORDER, as_rational
from core.py.errors import DuplicateId, InvalidThresholds, MissingScript, ParseError, UnknownThread
from core.py.jsonfile import dump_json, rational_to_json
from core.py.lexicon import SLOT_ORDER

logger = logging.getLogger(__name__)

DEFAULT_THETA_MANDATORY = Fraction(4, 5)
DEFAULT_THETA_OPTIONAL = Fraction(2, 5)
DEFAULT_GAMMA = Fraction(4, 5)

SLOT_NAMES = [s.value for s in SLOT_ORDER]
TEMPLATE_DIR = Path(__file__).resolve().parent / "templates"


class CrossGrid:
    """
    Boolean slot x thread matrix: one row per slot in canonical order, one
    column per thread in input order.
    """

    def __init__(self, frame):
        self.frame = frame

    @property
    def thread_ids(self):
        return list(self.frame.columns)

    @property
    def shape(self):
        return self.frame.shape

    def cell(self, slot, thread_id):
        return bool(self.frame.at[slot.value, thread_id])

    def column(self, thread_id):
        return [bool(v) for v in self.frame[thread_id]]

    def __eq__(self, other):
        if not isinstance(other, CrossGrid):
            return NotImplemented
        return self.thread_ids == other.thread_ids and self.frame.equals(other.frame)

    def __repr__(self):
        return f"CrossGrid({self.shape[0]}x{self.shape[1]})"


@dataclass(frozen=True)
class CategorySupport:
    """Share of a label's threads showing each slot; `support` is None when n = 0."""
    label: object
    n: int
    support: dict = None


@dataclass(frozen=True)
class Script:
    label: object
    mandatory: tuple
    optional: tuple
    theta_mandatory: Fraction
    theta_optional: Fraction
    n: int
    insufficient_data: bool = False


@dataclass(frozen=True)
class ValidationEntry:
    thread_id: str
    label: object
    coverage: Fraction
    conforms: bool
    insufficient_data: bool = False


@dataclass(frozen=True)
class ValidationReport:
    gamma: Fraction
    entries: tuple
    conformance: dict
    skipped: tuple

    def entries_for(self, thread_id):
        return [e for e in self.entries if e.thread_id == thread_id]


def build_grid(annotations):
    """
    Cross-grid of the request presence vectors.

    Raises:
        DuplicateId: If two annotations share a thread id.
    """
    columns = {}
    for a in annotations:
        if a.thread_id in columns:
            raise DuplicateId(f"duplicate thread_id {a.thread_id!r} in grid input")
        columns[a.thread_id] = list(a.presence.bits)
    frame = pd.DataFrame(columns, index=SLOT_NAMES, columns=list(columns), dtype=bool)
    frame.index.name = "slot"
    logger.info(f"Built cross-grid {frame.shape[0]}x{frame.shape[1]}")
    return CrossGrid(frame)


def grid_to_csv(grid):
    """Header "slot,<thread ids>", then one 0/1 row per slot; LF line endings."""
    return grid.frame.astype(int).to_csv(index_label="slot", lineterminator="\n").encode("utf-8")


def read_grid_csv(raw, source=None):
    """Parse a grid CSV written by `grid_to_csv`."""
    text = raw.decode("utf-8") if isinstance(raw, bytes) else raw
    try:
        frame = pd.read_csv(io.StringIO(text), index_col=0, dtype=str, keep_default_na=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ParseError(f"bad grid CSV: {e}", source) from e
    if frame.index.name != "slot":
        raise ParseError("grid CSV must start with a 'slot' header", source, line=1)
    if list(frame.index) != SLOT_NAMES:
        raise ParseError("grid CSV rows must be the 18 slots in canonical order", source)
    bad = ~frame.isin(["0", "1"])
    if bad.to_numpy().any():
        row = int(bad.any(axis=1).to_numpy().argmax())
        raise ParseError("grid cells must be 0 or 1", source, line=row + 2)
    frame = (frame == "1").astype(bool)
    frame.columns = [str(c) for c in frame.columns]
    return CrossGrid(frame)


def grid_to_json(grid):
    return dump_json({
        "threads": grid.thread_ids,
        "rows": [{"slot": name, "cells": [bool(v) for v in grid.frame.loc[name]]} for name in SLOT_NAMES],
    })


def grid_to_markdown(grid):
    header = "| slot | " + " | ".join(grid.thread_ids) + " |"
    rule = "|---|" + "".join(":---:|" for _ in grid.thread_ids)
    lines = [header, rule]
    for name in SLOT_NAMES:
        cells = ["X" if v else "" for v in grid.frame.loc[name]]
        lines.append(f"| {name} | " + " | ".join(cells) + " |")
    return ("\n".join(lines) + "\n").encode("utf-8")


def aggregate(grid, assignments):
    """
    Per-label slot support over the threads assigned that label.

    A thread contributes to every label it is assigned.

    Raises:
        UnknownThread: If an assignment names a thread absent from the grid.
    """
    known = set(grid.thread_ids)
    for a in assignments:
        if a.thread_id not in known:
            raise UnknownThread(f"assignment for unknown thread {a.thread_id!r}")
    missing = known - {a.thread_id for a in assignments}
    if missing:
        logger.warning(f"{len(missing)} grid columns have no assignment: {', '.join(sorted(missing))}")

    supports = []
    for label in LABEL_ORDER:
        columns = [a.thread_id for a in assignments if label in a.assigned]
        n = len(columns)
        if n == 0:
            supports.append(CategorySupport(label, 0, None))
            continue
        counts = grid.frame[columns].sum(axis=1)
        support = {slot: Fraction(int(counts[slot.value]), n) for slot in SLOT_ORDER}
        supports.append(CategorySupport(label, n, support))
    return supports


def check_script_thresholds(theta_mandatory, theta_optional):
    theta_mandatory = as_rational(theta_mandatory)
    theta_optional = as_rational(theta_optional)
    if not 0 <= theta_optional <= theta_mandatory <= 1:
        raise InvalidThresholds(
            f"need 0 <= theta_optional ({float(theta_optional)}) <= theta_mandatory ({float(theta_mandatory)}) <= 1")
    return theta_mandatory, theta_optional


def induce_scripts(supports, theta_mandatory=DEFAULT_THETA_MANDATORY, theta_optional=DEFAULT_THETA_OPTIONAL):
    """
    Prototype script per label: slots with support >= theta_mandatory are
    mandatory, slots with theta_optional <= support < theta_mandatory are
    optional. Both lists follow canonical slot order.
    """
    theta_mandatory, theta_optional = check_script_thresholds(theta_mandatory, theta_optional)
    scripts = []
    for cs in supports:
        if cs.n == 0:
            logger.warning(f"No threads for {cs.label.value}: empty script")
            scripts.append(Script(cs.label, (), (), theta_mandatory, theta_optional, 0, insufficient_data=True))
            continue
        mandatory = tuple(s for s in SLOT_ORDER if cs.support[s] >= theta_mandatory)
        optional = tuple(s for s in SLOT_ORDER if theta_optional <= cs.support[s] < theta_mandatory)
        scripts.append(Script(cs.label, mandatory, optional, theta_mandatory, theta_optional, cs.n))
    return scripts


def validate_scripts(scripts, holdout, assignments, gamma=DEFAULT_GAMMA):
    """
    Check held-out threads against the scripts of the labels they were assigned.

    Coverage is the share of the script's mandatory slots present in the
    thread's request (1 when the script has none); a thread conforms when
    coverage >= gamma. Threads with no label are skipped.

    Raises:
        InvalidThresholds: If gamma is outside [0, 1].
        UnknownThread: If a held-out thread has no assignment.
        MissingScript: If an assigned label has no script.
    """
    gamma = as_rational(gamma)
    if not 0 <= gamma <= 1:
        raise InvalidThresholds(f"gamma must lie in [0, 1], got {float(gamma)}")

    by_label = {s.label: s for s in scripts}
    by_thread = {a.thread_id: a for a in assignments}

    entries = []
    skipped = []
    for annotation in holdout:
        assignment = by_thread.get(annotation.thread_id)
        if assignment is None:
            raise UnknownThread(f"no assignment for held-out thread {annotation.thread_id!r}")
        if not assignment.assigned:
            skipped.append(annotation.thread_id)
            continue
        for label in assignment.assigned:
            script = by_label.get(label)
            if script is None:
                raise MissingScript(f"no script for {label.value} (thread {annotation.thread_id!r})")
            if script.mandatory:
                present = sum(1 for s in script.mandatory if annotation.presence[s])
                coverage = Fraction(present, len(script.mandatory))
            else:
                coverage = Fraction(1)
            entries.append(ValidationEntry(annotation.thread_id, label, coverage, coverage >= gamma, script.insufficient_data))

    conformance = {}
    for label in LABEL_ORDER:
        mine = [e for e in entries if e.label is label]
        conformance[label] = Fraction(sum(e.conforms for e in mine), len(mine)) if mine else None
    logger.info(f"Validated {len(entries)} thread/label pairs, {len(skipped)} threads skipped")
    return ValidationReport(gamma, tuple(entries), conformance, tuple(skipped))


def contrast(scripts):
    """
    Which scripts each slot belongs to (mandatory or optional).

    Returns:
        dict: "membership" slot -> labels, "distinctive" label -> slots found
            in that script only, "never_observed" slots in no script.
    """
    membership = {}
    for slot in SLOT_ORDER:
        membership[slot] = [s.label for s in scripts if slot in s.mandatory or slot in s.optional]
    distinctive = {s.label: [] for s in scripts}
    for slot, labels in membership.items():
        if len(labels) == 1:
            distinctive[labels[0]].append(slot)
    never_observed = [slot for slot, labels in membership.items() if not labels]
    return {"membership": membership, "distinctive": distinctive, "never_observed": never_observed}


def supports_to_json(supports):
    return dump_json({
        "supports": [
            {
                "label": cs.label.value,
                "n": cs.n,
                "support": None if cs.support is None else {s.value: rational_to_json(v) for s, v in cs.support.items()},
            }
            for cs in supports
        ],
    })


def scripts_to_json(scripts):
    return dump_json({
        "scripts": [
            {
                "label": s.label.value,
                "n": s.n,
                "mandatory": [slot.value for slot in s.mandatory],
                "optional": [slot.value for slot in s.optional],
                "theta_mandatory": rational_to_json(s.theta_mandatory),
                "theta_optional": rational_to_json(s.theta_optional),
                "insufficient_data": s.insufficient_data,
            }
            for s in scripts
        ],
    })


def validation_to_json(report, exception_ids=()):
    return dump_json({
        "gamma": rational_to_json(report.gamma),
        "entries": [
            {
                "thread_id": e.thread_id,
                "label": e.label.value,
                "coverage": rational_to_json(e.coverage),
                "conforms": e.conforms,
                "insufficient_data": e.insufficient_data,
            }
            for e in report.entries
        ],
        "conformance": {label.value: rational_to_json(rate) for label, rate in report.conformance.items()},
        "skipped": list(report.skipped),
        "exceptions": list(exception_ids),
    })


def render_report(scripts, supports, corpus_id=""):
    """Markdown report: one section per category script, then the slot contrasts."""
    env = Environment(
        loader=FileSystemLoader(TEMPLATE_DIR),
        keep_trailing_newline=True,
        trim_blocks=True,
        lstrip_blocks=True,
    )
    env.filters["pct"] = lambda v: "n/a" if v is None else f"{float(v) * 100:.0f}%"
    template = env.get_template("report.md.j2")
    support_by_label = {cs.label: cs for cs in supports}
    return template.render(
        corpus_id=corpus_id,
        scripts=scripts,
        supports=support_by_label,
        contrast=contrast(scripts),
    ).encode("utf-8")
