"""
Corpus data model: forum messages grouped into threads (one request plus its
replies and replies-to-replies), and the JSON corpus file codec.
"""

import logging
from dataclasses import dataclass
from datetime import datetime
from functools import cached_property
from typing import Optional

from pydantic import Field, field_validator

from core.py.errors import CyclicReplies, DanglingParent, DuplicateId, MultipleRoots, ParseError
from core.py.jsonfile import StrictModel, dump_json, load_document

logger = logging.getLogger(__name__)


# File schemas

class MessageRecord(StrictModel):
    message_id: str = Field(min_length=1)
    author: str = ""
    parent_id: Optional[str] = None
    timestamp: Optional[str] = None
    body: str

    @field_validator("timestamp")
    @classmethod
    def _iso_timestamp(cls, value):
        if value is not None:
            datetime.fromisoformat(value)
        return value


class ThreadRecord(StrictModel):
    thread_id: str = Field(min_length=1)
    messages: list[MessageRecord]


class CorpusRecord(StrictModel):
    corpus_id: str
    language: str = "fr"
    threads: list[ThreadRecord] = []


# Domain types

@dataclass(frozen=True)
class Message:
    message_id: str
    body: str
    author: str = ""
    parent_id: Optional[str] = None
    timestamp: Optional[str] = None


@dataclass(frozen=True)
class Thread:
    """
    A request and the tree of replies to it.

    `messages` keeps file order; the tree is read through `request`,
    `children()` and `traversal()`.
    """
    thread_id: str
    messages: tuple

    @cached_property
    def request(self):
        return next(m for m in self.messages if m.parent_id is None)

    @property
    def replies(self):
        return tuple(m for m in self.messages if m.parent_id is not None)

    @cached_property
    def _children(self):
        children = {m.message_id: [] for m in self.messages}
        for m in self.messages:
            if m.parent_id is not None:
                children[m.parent_id].append(m)
        return {k: tuple(v) for k, v in children.items()}

    def children(self, message_id):
        """Direct replies to a message, in file order."""
        return self._children.get(message_id, ())

    def __len__(self):
        return len(self.messages)


@dataclass(frozen=True)
class Corpus:
    corpus_id: str
    threads: tuple = ()
    language: str = "fr"

    def thread(self, thread_id):
        for t in self.threads:
            if t.thread_id == thread_id:
                return t
        raise KeyError(thread_id)

    @property
    def message_count(self):
        return sum(len(t) for t in self.threads)


def traversal(thread):
    """
    Depth-first walk of a thread: request first, parent before child,
    siblings in file order.

    Args:
        thread (Thread): A valid thread.

    Returns:
        list[Message]: Every message of the thread exactly once.
    """
    order = []
    stack = [thread.request]
    while stack:
        message = stack.pop()
        order.append(message)
        # reversed so the first sibling is popped first
        stack.extend(reversed(thread.children(message.message_id)))
    return order


def _build_thread(record, seen_ids, source):
    if not record.messages:
        raise ParseError(f"thread {record.thread_id!r} has no messages", source)

    ids = set()
    for m in record.messages:
        if m.message_id in seen_ids or m.message_id in ids:
            raise DuplicateId(f"duplicate message_id {m.message_id!r}", source)
        ids.add(m.message_id)

    flat = all(m.parent_id is None for m in record.messages)
    if flat:
        # a flat reply list: everything after the opener replies to it
        root_id = record.messages[0].message_id
        parents = {m.message_id: (None if i == 0 else root_id) for i, m in enumerate(record.messages)}
    else:
        parents = {m.message_id: m.parent_id for m in record.messages}
        roots = [mid for mid, pid in parents.items() if pid is None]
        if len(roots) > 1:
            raise MultipleRoots(f"thread {record.thread_id!r} has {len(roots)} roots: {', '.join(roots)}", source)
        for mid, pid in parents.items():
            if pid is not None and pid not in ids:
                raise DanglingParent(f"message {mid!r} replies to unknown message {pid!r}", source)
        if not roots:
            raise CyclicReplies(f"thread {record.thread_id!r} has no root message", source)

    # every message must reach the root through parent links
    for mid in parents:
        visited = set()
        current = mid
        while parents[current] is not None:
            if current in visited:
                raise CyclicReplies(f"reply cycle through message {mid!r} in thread {record.thread_id!r}", source)
            visited.add(current)
            current = parents[current]

    seen_ids.update(ids)
    messages = tuple(
        Message(
            message_id=m.message_id,
            body=m.body,
            author=m.author,
            parent_id=parents[m.message_id],
            timestamp=m.timestamp,
        )
        for m in record.messages
    )
    return Thread(thread_id=record.thread_id, messages=messages)


def parse_corpus(raw, source=None):
    """
    Parse a corpus file into validated threads.

    Args:
        raw (bytes): UTF-8 JSON in the corpus file format.
        source (str): File name for error messages.

    Returns:
        Corpus: Threads in file order.

    Raises:
        ParseError, DuplicateId, DanglingParent, MultipleRoots, CyclicReplies
    """
    record = load_document(raw, CorpusRecord, source)

    thread_ids = set()
    seen_ids = set()
    threads = []
    for t in record.threads:
        if t.thread_id in thread_ids:
            raise DuplicateId(f"duplicate thread_id {t.thread_id!r}", source)
        thread_ids.add(t.thread_id)
        threads.append(_build_thread(t, seen_ids, source))

    corpus = Corpus(corpus_id=record.corpus_id, threads=tuple(threads), language=record.language)
    logger.info(f"Parsed corpus {corpus.corpus_id!r}: {len(corpus.threads)} threads, {corpus.message_count} messages")
    return corpus


def message_to_dict(message):
    return {
        "message_id": message.message_id,
        "author": message.author,
        "parent_id": message.parent_id,
        "timestamp": message.timestamp,
        "body": message.body,
    }


def dump_corpus(corpus):
    """Serialize a corpus back to the corpus file format (UTF-8 JSON bytes)."""
    return dump_json({
        "corpus_id": corpus.corpus_id,
        "language": corpus.language,
        "threads": [
            {"thread_id": t.thread_id, "messages": [message_to_dict(m) for m in t.messages]}
            for t in corpus.threads
        ],
    })
