"""
Lexical cue rules and the matcher that locates them in message bodies.

Spans are character offsets (Python str indices), never byte offsets.
Case-insensitive rules rely on `re.IGNORECASE`, which applies simple
Unicode case folding and therefore keeps offsets aligned with the body.
"""

import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Optional, Union

from pydantic import Field

from core.py.errors import DuplicateId, InvalidRule
from core.py.jsonfile import StrictModel, load_document

logger = logging.getLogger(__name__)

DEFAULT_INITIAL_WINDOW = 60
DEFAULT_FINAL_WINDOW = 120


class SlotType(Enum):
    """Script slots, in grid row order."""
    RequestBeneficiary = "RequestBeneficiary"
    OpeningGreeting = "OpeningGreeting"
    AddressTerm = "AddressTerm"
    ForumActivityDescription = "ForumActivityDescription"
    Identity = "Identity"
    ProblemPresentation = "ProblemPresentation"
    ResolutionFailure = "ResolutionFailure"
    PsychologicalState = "PsychologicalState"
    HealthState = "HealthState"
    RequestFormulation = "RequestFormulation"
    ExpectedBenefit = "ExpectedBenefit"
    ExchangeModalities = "ExchangeModalities"
    CounterGiftWish = "CounterGiftWish"
    AnticipatoryThanks = "AnticipatoryThanks"
    Closing = "Closing"
    Signature = "Signature"
    ProverbQuotation = "ProverbQuotation"
    VisualFormatting = "VisualFormatting"

    @property
    def ordinal(self):
        return SLOT_ORDER.index(self)


class ReactionType(Enum):
    """Content categories of replies."""
    EncouragementCompliment = "EncouragementCompliment"
    CriticismDisagreement = "CriticismDisagreement"
    AdviceInformation = "AdviceInformation"
    SituationEvaluationFollowupQuestion = "SituationEvaluationFollowupQuestion"
    ExpertiseEvaluationSharedExperience = "ExpertiseEvaluationSharedExperience"

    @property
    def ordinal(self):
        return REACTION_ORDER.index(self)


SLOT_ORDER = tuple(SlotType)
REACTION_ORDER = tuple(ReactionType)

# slots looked for in replies as well as in the request
BACKGROUND_SLOTS = frozenset({
    SlotType.AddressTerm,
    SlotType.OpeningGreeting,
    SlotType.Signature,
    SlotType.Closing,
    SlotType.VisualFormatting,
    SlotType.ProverbQuotation,
})


def target_from_name(name):
    """Resolve an enum identifier to a SlotType or ReactionType, or None."""
    if name in SlotType.__members__:
        return SlotType[name]
    if name in ReactionType.__members__:
        return ReactionType[name]
    return None


class MatchKind(Enum):
    KEYWORD = "keyword"
    REGEX = "regex"


class AnchorKind(Enum):
    MessageInitial = "MessageInitial"
    MessageFinal = "MessageFinal"
    Anywhere = "Anywhere"


@dataclass(frozen=True)
class Anchor:
    kind: AnchorKind = AnchorKind.Anywhere
    window: Optional[int] = None

    def admits(self, start, end, length):
        if self.kind is AnchorKind.MessageInitial:
            return start < self.window
        if self.kind is AnchorKind.MessageFinal:
            return end > length - self.window
        return True


class Span(NamedTuple):
    start: int
    end: int


@dataclass(frozen=True)
class Rule:
    rule_id: str
    target: Union[SlotType, ReactionType]
    match_kind: MatchKind
    pattern: str
    case_fold: bool = True
    anchor: Anchor = Anchor()
    compiled: re.Pattern = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.pattern:
            raise InvalidRule(f"rule {self.rule_id!r} has an empty pattern")
        if self.anchor.kind is not AnchorKind.Anywhere and (self.anchor.window is None or self.anchor.window <= 0):
            raise InvalidRule(f"rule {self.rule_id!r}: anchored rules need a positive window")
        if self.compiled is None:
            object.__setattr__(self, "compiled", compile_rule(self))

    def finditer(self, body):
        """Yield non-empty spans of this rule in `body` that satisfy its anchor."""
        length = len(body)
        for m in self.compiled.finditer(body):
            start, end = m.span()
            if start < end and self.anchor.admits(start, end, length):
                yield Span(start, end)

    def rematch(self, text):
        """True iff `text` as a whole matches this rule under its folding."""
        return self.compiled.fullmatch(text) is not None


def compile_rule(rule):
    flags = re.IGNORECASE if rule.case_fold else 0
    if rule.match_kind is MatchKind.KEYWORD:
        # word boundaries that also work for keywords starting or ending with punctuation
        source = r"(?<!\w)" + re.escape(rule.pattern) + r"(?!\w)"
    else:
        source = rule.pattern
    try:
        return re.compile(source, flags)
    except re.error as e:
        raise InvalidRule(f"rule {rule.rule_id!r}: bad pattern: {e}") from e


@dataclass(frozen=True)
class Lexicon:
    language: str
    rules: tuple = ()

    def rule(self, rule_id):
        for r in self.rules:
            if r.rule_id == rule_id:
                return r
        raise KeyError(rule_id)

    @property
    def rule_ids(self):
        return frozenset(r.rule_id for r in self.rules)

    def restricted(self, targets):
        """Sub-lexicon of the rules whose target is in `targets`, order kept."""
        return Lexicon(self.language, tuple(r for r in self.rules if r.target in targets))


class Match(NamedTuple):
    rule_id: str
    target: Union[SlotType, ReactionType]
    span: Span


# File schemas

class AnchorRecord(StrictModel):
    kind: str = "Anywhere"
    window: Optional[int] = None


class RuleRecord(StrictModel):
    rule_id: str = Field(min_length=1)
    target: str
    match_kind: str = "keyword"
    pattern: str
    case_fold: bool = True
    anchor: AnchorRecord = AnchorRecord()


class LexiconRecord(StrictModel):
    language: str = "fr"
    rules: list[RuleRecord] = []


def _build_anchor(record, rule_id, source):
    try:
        kind = AnchorKind(record.kind)
    except ValueError:
        raise InvalidRule(f"rule {rule_id!r}: unknown anchor kind {record.kind!r}", source) from None
    window = record.window
    if window is None:
        if kind is AnchorKind.MessageInitial:
            window = DEFAULT_INITIAL_WINDOW
        elif kind is AnchorKind.MessageFinal:
            window = DEFAULT_FINAL_WINDOW
    return Anchor(kind, window)


def _build_rule(record, source):
    target = target_from_name(record.target)
    if target is None:
        raise InvalidRule(f"rule {record.rule_id!r}: unknown target {record.target!r}", source)
    try:
        kind = MatchKind(record.match_kind)
    except ValueError:
        raise InvalidRule(f"rule {record.rule_id!r}: unknown match_kind {record.match_kind!r}", source) from None
    try:
        return Rule(
            rule_id=record.rule_id,
            target=target,
            match_kind=kind,
            pattern=record.pattern,
            case_fold=record.case_fold,
            anchor=_build_anchor(record.anchor, record.rule_id, source),
        )
    except InvalidRule as e:
        raise InvalidRule(str(e), source) from e


def load_lexicon(raw, source=None):
    """
    Load and validate a lexicon file.

    Args:
        raw (bytes): UTF-8 JSON in the lexicon file format.
        source (str): File name for error messages.

    Returns:
        Lexicon: Rules in file order, patterns compiled.

    Raises:
        ParseError, DuplicateId, InvalidRule
    """
    record = load_document(raw, LexiconRecord, source)
    rules = []
    seen = set()
    for r in record.rules:
        if r.rule_id in seen:
            raise DuplicateId(f"duplicate rule_id {r.rule_id!r}", source)
        seen.add(r.rule_id)
        rules.append(_build_rule(r, source))
    lexicon = Lexicon(language=record.language, rules=tuple(rules))
    logger.info(f"Loaded lexicon ({lexicon.language}) with {len(lexicon.rules)} rules")
    return lexicon


def match_rules(body, lexicon):
    """
    Locate every rule of the lexicon in a message body.

    Matches come in rule file order, then span start order.
    """
    return [Match(rule.rule_id, rule.target, span) for rule in lexicon.rules for span in rule.finditer(body)]
