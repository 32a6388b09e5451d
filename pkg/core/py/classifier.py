"""
Compares annotated threads with per-category type models and assigns
social-support labels; threads that fit no model are routed to the
exception list.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Annotated, Union

from pydantic import Field, StrictInt

from core.py.errors import DuplicateId, IncompleteModels, InvalidReference, InvalidThresholds, InvalidWeight
from core.py.jsonfile import StrictModel, dump_json, load_document, rational_to_json
from core.py.lexicon import SlotType

logger = logging.getLogger(__name__)

DEFAULT_TAU_ASSIGN = Fraction(1, 2)
DEFAULT_TAU_UNCLASSIFIABLE = Fraction(3, 10)


class SupportLabel(Enum):
    EmotionalSupport = "EmotionalSupport"
    ExperienceSharing = "ExperienceSharing"
    EvaluationRequest = "EvaluationRequest"
    InformationalSupport = "InformationalSupport"
    Advice = "Advice"
    TangibleSupport = "TangibleSupport"


LABEL_ORDER = tuple(SupportLabel)


def as_rational(value):
    """Exact rational from a Fraction, int, float or numeric string."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not weights")
    # str() keeps the shortest decimal form of floats, e.g. 0.1 -> 1/10
    return Fraction(str(value))


@dataclass(frozen=True)
class CategoryModel:
    label: SupportLabel
    slot_weights: dict
    cue_weights: dict

    @property
    def total_weight(self):
        return sum(self.slot_weights.values(), Fraction(0)) + sum(self.cue_weights.values(), Fraction(0))

    def scaled(self, factor):
        factor = as_rational(factor)
        return CategoryModel(
            self.label,
            {s: w * factor for s, w in self.slot_weights.items()},
            {c: w * factor for c, w in self.cue_weights.items()},
        )


@dataclass(frozen=True)
class CategoryAssignment:
    thread_id: str
    scores: dict
    assigned: tuple
    unclassifiable: bool


# File schemas

# integers stay exact; floats must be finite (1e400 decodes to inf)
Weight = Union[StrictInt, Annotated[float, Field(strict=True, allow_inf_nan=False)]]


class ModelRecord(StrictModel):
    label: str
    slot_weights: dict[str, Weight] = {}
    cue_weights: dict[str, Weight] = {}


class ModelFileRecord(StrictModel):
    models: list[ModelRecord]


def _weights(raw_weights, what, label, source):
    weights = {}
    for name, value in raw_weights.items():
        weight = as_rational(value)
        if weight < 0:
            raise InvalidWeight(f"model {label}: negative {what} weight {value} for {name!r}", source)
        weights[name] = weight
    return weights


def load_models(raw, lexicon=None, source=None):
    """
    Load the type models, one per support label.

    Args:
        raw (bytes): UTF-8 JSON in the model file format.
        lexicon (Lexicon): When given, cue weight keys must be its rule ids.
        source (str): File name for error messages.

    Returns:
        list[CategoryModel]: In SupportLabel order.

    Raises:
        ParseError, IncompleteModels, InvalidWeight, InvalidReference, DuplicateId
    """
    record = load_document(raw, ModelFileRecord, source)
    models = {}
    for m in record.models:
        if m.label not in SupportLabel.__members__:
            raise InvalidReference(f"unknown label {m.label!r}", source)
        label = SupportLabel[m.label]
        if label in models:
            raise DuplicateId(f"duplicate model for {label.value}", source)

        slot_weights = {}
        for name, weight in _weights(m.slot_weights, "slot", label.value, source).items():
            if name not in SlotType.__members__:
                raise InvalidReference(f"model {label.value}: unknown slot {name!r}", source)
            slot_weights[SlotType[name]] = weight
        cue_weights = _weights(m.cue_weights, "cue", label.value, source)
        if lexicon is not None:
            for rule_id in cue_weights:
                if rule_id not in lexicon.rule_ids:
                    raise InvalidReference(f"model {label.value}: unknown rule {rule_id!r}", source)

        model = CategoryModel(label, slot_weights, cue_weights)
        if model.total_weight <= 0:
            raise InvalidWeight(f"model {label.value} has no positive weight", source)
        models[label] = model

    missing = [label.value for label in LABEL_ORDER if label not in models]
    if missing:
        raise IncompleteModels(f"no model for {', '.join(missing)}", source)
    logger.info(f"Loaded {len(models)} category models")
    return [models[label] for label in LABEL_ORDER]


def score(annotation, model):
    """
    Weighted feature overlap between a thread and a type model, in [0, 1].

    Slot features read the request's presence vector; cue features are 1
    iff the rule matched anywhere in the thread.
    """
    total = model.total_weight
    if total == 0:
        return Fraction(0)
    fired = annotation.fired_rules
    hit = sum((w for s, w in model.slot_weights.items() if annotation.presence[s]), Fraction(0))
    hit += sum((w for c, w in model.cue_weights.items() if c in fired), Fraction(0))
    return hit / total


def check_thresholds(tau_assign, tau_unclassifiable):
    tau_assign = as_rational(tau_assign)
    tau_unclassifiable = as_rational(tau_unclassifiable)
    if not 0 <= tau_unclassifiable <= tau_assign <= 1:
        raise InvalidThresholds(
            f"need 0 <= tau_unclassifiable ({float(tau_unclassifiable)}) <= tau_assign ({float(tau_assign)}) <= 1")
    return tau_assign, tau_unclassifiable


def classify(annotation, models, tau_assign=DEFAULT_TAU_ASSIGN, tau_unclassifiable=DEFAULT_TAU_UNCLASSIFIABLE):
    """
    Multi-label assignment of one thread.

    Every label scoring at least tau_assign is assigned; a thread whose best
    score is below tau_unclassifiable is unclassifiable.

    Raises:
        InvalidThresholds: Unless 0 <= tau_unclassifiable <= tau_assign <= 1.
    """
    tau_assign, tau_unclassifiable = check_thresholds(tau_assign, tau_unclassifiable)
    by_label = {m.label: score(annotation, m) for m in models}
    scores = {label: by_label[label] for label in LABEL_ORDER if label in by_label}

    best = max(scores.values(), default=Fraction(0))
    unclassifiable = best < tau_unclassifiable
    assigned = tuple(label for label, s in scores.items() if s >= tau_assign)
    logger.debug(f"Thread {annotation.thread_id}: " + ", ".join(f"{l.value}={float(s):.3f}" for l, s in scores.items()))
    return CategoryAssignment(annotation.thread_id, scores, assigned, unclassifiable)


def classify_all(annotations, models, tau_assign=DEFAULT_TAU_ASSIGN, tau_unclassifiable=DEFAULT_TAU_UNCLASSIFIABLE):
    assignments = [classify(a, models, tau_assign, tau_unclassifiable) for a in annotations]
    logger.info(f"Classified {len(assignments)} threads, {len(exceptions(assignments))} unclassifiable")
    return assignments


def exceptions(assignments):
    """Thread ids of the unclassifiable assignments, in input order."""
    return [a.thread_id for a in assignments if a.unclassifiable]


def assignments_to_json(assignments):
    return dump_json({
        "assignments": [
            {
                "thread_id": a.thread_id,
                "assigned": [label.value for label in a.assigned],
                "unclassifiable": a.unclassifiable,
                "scores": {label.value: rational_to_json(s) for label, s in a.scores.items()},
            }
            for a in assignments
        ],
    })


def assignments_to_csv(assignments):
    """One row per thread: thread_id, one score column per label, assigned labels joined by '+'."""
    header = ["thread_id"] + [label.value for label in LABEL_ORDER] + ["assigned", "unclassifiable"]
    lines = [",".join(header)]
    for a in assignments:
        cells = [a.thread_id]
        cells += [f"{float(a.scores[label]):.6f}" if label in a.scores else "" for label in LABEL_ORDER]
        cells += ["+".join(label.value for label in a.assigned), str(int(a.unclassifiable))]
        lines.append(",".join(cells))
    return ("\n".join(lines) + "\n").encode("utf-8")


def exceptions_to_json(assignments):
    return dump_json({"exceptions": exceptions(assignments)})
