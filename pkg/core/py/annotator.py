"""
Turns lexicon matches into slot annotations (request, plus background-frame
slots on replies) and reaction annotations (replies), and summarizes each
thread as a presence vector and a reaction profile.
"""

import logging
from dataclasses import dataclass

from core.py.corpus import message_to_dict, traversal
from core.py.jsonfile import dump_json
from core.py.lexicon import BACKGROUND_SLOTS, REACTION_ORDER, SLOT_ORDER, ReactionType, SlotType, Span, match_rules

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SlotAnnotation:
    message_id: str
    slot: SlotType
    span: Span
    rule_id: str


@dataclass(frozen=True)
class ReactionAnnotation:
    message_id: str
    reaction: ReactionType
    span: Span
    rule_id: str


@dataclass(frozen=True)
class PresenceVector:
    """One bit per slot, canonical order, computed over the request only."""
    thread_id: str
    bits: tuple

    @classmethod
    def from_slots(cls, thread_id, slots):
        slots = set(slots)
        return cls(thread_id, tuple(s in slots for s in SLOT_ORDER))

    def __getitem__(self, slot):
        return self.bits[slot.ordinal]

    def present_slots(self):
        return [s for s, bit in zip(SLOT_ORDER, self.bits) if bit]


@dataclass(frozen=True)
class ReactionProfile:
    """Number of replies carrying each reaction type (a reply counts once per type)."""
    thread_id: str
    counts: tuple

    def __getitem__(self, reaction):
        return self.counts[reaction.ordinal]

    def as_dict(self):
        return {r.value: c for r, c in zip(REACTION_ORDER, self.counts)}


@dataclass(frozen=True)
class ThreadAnnotation:
    thread_id: str
    request_id: str
    slot_annotations: tuple
    reaction_annotations: tuple
    presence: PresenceVector
    reactions: ReactionProfile

    @property
    def fired_rules(self):
        """Ids of every rule that matched somewhere in the thread."""
        return frozenset(a.rule_id for a in self.slot_annotations + self.reaction_annotations)


def _profile(thread_id, reaction_annotations):
    per_reply = {}
    for a in reaction_annotations:
        per_reply.setdefault(a.message_id, set()).add(a.reaction)
    counts = [0] * len(REACTION_ORDER)
    for reactions in per_reply.values():
        for r in reactions:
            counts[r.ordinal] += 1
    return ReactionProfile(thread_id, tuple(counts))


def _sort_key(annotation):
    return (annotation.span.start, annotation.rule_id)


def annotate_thread(thread, lexicon):
    """
    Annotate one thread.

    The request is matched against slot rules only. Replies are matched
    against reaction rules and background-frame slot rules (address terms,
    greetings, signatures, closings, smileys, proverbs).

    Args:
        thread (Thread): A valid thread.
        lexicon (Lexicon): Loaded rules.

    Returns:
        ThreadAnnotation: Annotations in traversal order, then span start,
            then rule id; presence vector and reaction profile.
    """
    request_rules = lexicon.restricted(set(SLOT_ORDER))
    reply_rules = lexicon.restricted(BACKGROUND_SLOTS | set(REACTION_ORDER))

    slot_annotations = []
    reaction_annotations = []
    for message in traversal(thread):
        is_request = message.parent_id is None
        matches = match_rules(message.body, request_rules if is_request else reply_rules)
        slots = []
        reactions = []
        for m in matches:
            if isinstance(m.target, SlotType):
                slots.append(SlotAnnotation(message.message_id, m.target, m.span, m.rule_id))
            else:
                reactions.append(ReactionAnnotation(message.message_id, m.target, m.span, m.rule_id))
        slot_annotations.extend(sorted(slots, key=_sort_key))
        reaction_annotations.extend(sorted(reactions, key=_sort_key))

    request_id = thread.request.message_id
    presence = PresenceVector.from_slots(
        thread.thread_id,
        (a.slot for a in slot_annotations if a.message_id == request_id),
    )
    annotation = ThreadAnnotation(
        thread_id=thread.thread_id,
        request_id=request_id,
        slot_annotations=tuple(slot_annotations),
        reaction_annotations=tuple(reaction_annotations),
        presence=presence,
        reactions=_profile(thread.thread_id, reaction_annotations),
    )
    logger.debug(f"Thread {thread.thread_id}: slots {[s.value for s in presence.present_slots()]}")
    return annotation


def presence_of(annotation):
    """Presence vector recomputed as the OR over the request's slot annotations."""
    return PresenceVector.from_slots(
        annotation.thread_id,
        (a.slot for a in annotation.slot_annotations if a.message_id == annotation.request_id),
    )


def annotate_corpus(corpus, lexicon):
    annotations = [annotate_thread(t, lexicon) for t in corpus.threads]
    logger.info(f"Annotated {len(annotations)} threads")
    return annotations


def dump_annotated_corpus(corpus, annotations):
    """
    Corpus file format extended with an `annotations` array per message.

    Messages are listed in traversal order; annotations by span start, then
    rule id.
    """
    by_thread = {a.thread_id: a for a in annotations}
    threads = []
    for thread in corpus.threads:
        annotation = by_thread[thread.thread_id]
        per_message = {}
        for a in annotation.slot_annotations:
            per_message.setdefault(a.message_id, []).append(
                (a.span.start, a.rule_id, {"slot": a.slot.value, "start": a.span.start, "end": a.span.end, "rule_id": a.rule_id}))
        for a in annotation.reaction_annotations:
            per_message.setdefault(a.message_id, []).append(
                (a.span.start, a.rule_id, {"reaction": a.reaction.value, "start": a.span.start, "end": a.span.end, "rule_id": a.rule_id}))
        messages = []
        for m in traversal(thread):
            record = message_to_dict(m)
            record["annotations"] = [entry for _, _, entry in sorted(per_message.get(m.message_id, []), key=lambda e: (e[0], e[1]))]
            messages.append(record)
        threads.append({
            "thread_id": thread.thread_id,
            "messages": messages,
            "presence": {s.value: bit for s, bit in zip(SLOT_ORDER, annotation.presence.bits)},
            "reactions": annotation.reactions.as_dict(),
        })
    return dump_json({"corpus_id": corpus.corpus_id, "language": corpus.language, "threads": threads})
