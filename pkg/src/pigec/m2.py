"""Reader and writer for the M2 format used by the CoNLL GEC shared tasks.

An entry looks like::

    S This are a sentence .
    A 1 2|||R:VERB:SVA|||is|||REQUIRED|||-NONE-|||0

Entries are separated by a blank line. ``write_m2(parse_m2(text)) == text``
holds for canonical files.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, List, TextIO, Tuple, Union

from .errors import ParseError, UnknownAnnotator
from .text import detokenize

NOOP = "noop"
NONE = "-NONE-"
REQUIRED = "REQUIRED"


@dataclass(frozen=True)
class M2Edit:
    start: int
    end: int
    type_code: str
    correction: str

    @property
    def correction_tokens(self) -> List[str]:
        if self.correction in ("", NONE):
            return []
        return self.correction.split()


@dataclass
class Annotation:
    annotator_id: int
    edits: List[M2Edit] = field(default_factory=list)


@dataclass
class M2Entry:
    source_tokens: List[str]
    # consecutive A-lines of one annotator form one Annotation; canonical
    # files therefore have one Annotation per annotator
    annotations: List[Annotation] = field(default_factory=list)

    def annotators(self) -> List[int]:
        seen = []
        for ann in self.annotations:
            if ann.annotator_id not in seen:
                seen.append(ann.annotator_id)
        return seen

    def edits_for(self, annotator_id: int) -> List[M2Edit]:
        found = False
        edits: List[M2Edit] = []
        for ann in self.annotations:
            if ann.annotator_id == annotator_id:
                found = True
                edits.extend(ann.edits)
        if not found:
            raise UnknownAnnotator(annotator_id)
        return edits


def _parse_edit(line: str, lineno: int) -> Tuple[int, M2Edit | None]:
    parts = line[2:].split("|||")
    if len(parts) != 6:
        raise ParseError(f"expected 6 '|||' fields, got {len(parts)}", lineno)
    span, type_code, correction, _required, _comment, annotator = parts
    try:
        start, end = (int(x) for x in span.split(" "))
        annotator_id = int(annotator)
    except ValueError:
        raise ParseError(f"bad span or annotator in {line!r}", lineno) from None
    if annotator_id < 0:
        raise ParseError("negative annotator id", lineno)
    if type_code == NOOP or (start, end) == (-1, -1):
        if (start, end) != (-1, -1) or type_code != NOOP:
            raise ParseError("noop edits must use span -1 -1", lineno)
        return annotator_id, None
    if not 0 <= start <= end:
        raise ParseError(f"bad span {start} {end}", lineno)
    return annotator_id, M2Edit(start, end, type_code, correction)


def iter_m2(stream: Union[str, TextIO, Iterable[str]]) -> Iterator[M2Entry]:
    """Stream entries out of M2 text (a string, file object or iterable of lines)."""
    if isinstance(stream, str):
        stream = stream.splitlines(keepends=True)
    entry: M2Entry | None = None
    lineno = 0

    def close(e):
        for ann in e.annotations:
            ordered = sorted(ann.edits, key=lambda x: (x.start, x.end))
            for a, b in zip(ordered, ordered[1:]):
                if b.start < a.end:
                    raise ParseError(f"overlapping edits for annotator {ann.annotator_id}", lineno)
        return e

    for lineno, raw in enumerate(stream, 1):
        line = raw.rstrip("\n").rstrip("\r")
        if line.startswith("S ") or line == "S":
            if entry is not None:
                raise ParseError("S line before the previous entry was closed", lineno)
            body = line[2:]
            entry = M2Entry(body.split(" ") if body else [])
        elif line.startswith("A "):
            if entry is None:
                raise ParseError("A line outside an entry", lineno)
            annotator_id, edit = _parse_edit(line, lineno)
            if edit is not None and edit.end > len(entry.source_tokens):
                raise ParseError(f"span {edit.start} {edit.end} past end of sentence", lineno)
            if entry.annotations and entry.annotations[-1].annotator_id == annotator_id:
                ann = entry.annotations[-1]
                # an annotation that is still empty here began with a noop line
                if edit is None or not ann.edits:
                    raise ParseError("noop mixed with edits for one annotator", lineno)
            else:
                ann = Annotation(annotator_id)
                entry.annotations.append(ann)
            if edit is not None:
                ann.edits.append(edit)
        elif line == "":
            if entry is not None:
                yield close(entry)
                entry = None
        else:
            raise ParseError(f"unrecognised line {line[:40]!r}", lineno)
    if entry is not None:
        yield close(entry)


def parse_m2(stream) -> List[M2Entry]:
    return list(iter_m2(stream))


def _format_edit(edit: M2Edit, annotator_id: int) -> str:
    return (f"A {edit.start} {edit.end}|||{edit.type_code}|||{edit.correction}"
            f"|||{REQUIRED}|||{NONE}|||{annotator_id}")


def write_m2(entries: Iterable[M2Entry]) -> str:
    out: List[str] = []
    for entry in entries:
        out.append("S " + " ".join(entry.source_tokens) + "\n")
        for ann in entry.annotations:
            if not ann.edits:
                out.append(f"A -1 -1|||{NOOP}|||{NONE}|||{REQUIRED}|||{NONE}|||{ann.annotator_id}\n")
            for edit in ann.edits:
                out.append(_format_edit(edit, ann.annotator_id) + "\n")
        out.append("\n")
    return "".join(out)


def corrected_tokens(entry: M2Entry, annotator_id: int) -> List[str]:
    tokens = list(entry.source_tokens)
    for edit in sorted(entry.edits_for(annotator_id), key=lambda e: (e.start, e.end), reverse=True):
        tokens[edit.start:edit.end] = edit.correction_tokens
    return tokens


def apply_m2(entry: M2Entry, annotator_id: int) -> str:
    """Corrected sentence for one annotator, detokenized."""
    return detokenize(corrected_tokens(entry, annotator_id))


def frequent_edits(entry: M2Entry, min_count: int) -> List[M2Edit]:
    """Edits proposed by at least ``min_count`` distinct annotators, in source order.

    Edits are compared on (start, end, correction); the type code is ignored.
    """
    counts: Counter = Counter()
    first: dict = {}
    for annotator_id in entry.annotators():
        keys = {(e.start, e.end, e.correction) for e in entry.edits_for(annotator_id)}
        counts.update(keys)
        for e in entry.edits_for(annotator_id):
            first.setdefault((e.start, e.end, e.correction), e)
    keep = [first[k] for k, n in counts.items() if n >= min_count]
    return sorted(keep, key=lambda e: (e.start, e.end))


def read_m2(path) -> List[M2Entry]:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_m2(fh)
