"""Edit spans: merging alignment ops, numbered prompt strings, patching."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterable, List, Sequence

from .align import DEFAULT_COSTS, AlignmentOp, CostModel, OpKind, align
from .errors import FormatError, OverlapError, RangeError
from .text import detokenize, tokenize

EMPTY = "ε"
ARROW = " → "


@dataclass(frozen=True)
class Edit:
    src_start: int
    src_end: int
    src_text: str
    tgt_text: str
    index: int = 1

    def __post_init__(self):
        if self.src_text == self.tgt_text:
            raise ValueError(f"no-op edit {self.src_text!r} -> {self.tgt_text!r}")

    @property
    def src_tokens(self) -> List[str]:
        return _split(self.src_text)

    @property
    def tgt_tokens(self) -> List[str]:
        return _split(self.tgt_text)

    @property
    def is_synthetic(self) -> bool:
        """True for edits recovered from model output with no source position."""
        return self.src_start < 0

    def key(self):
        return (self.src_start, self.src_end, self.src_text, self.tgt_text)

    def to_dict(self) -> dict:
        d = asdict(self)
        del d["index"]
        return d

    @classmethod
    def from_dict(cls, data: dict, index: int = 1) -> "Edit":
        return cls(int(data["src_start"]), int(data["src_end"]),
                   str(data["src_text"]), str(data["tgt_text"]), index)

    def __str__(self) -> str:
        return format_edit(self)


def _join(tokens: Sequence[str]) -> str:
    return " ".join(tokens) if tokens else EMPTY


def _split(text: str) -> List[str]:
    return [] if text == EMPTY else text.split(" ")


def merge_ops(ops: Sequence[AlignmentOp], src: Sequence = None, tgt: Sequence = None) -> List[Edit]:
    """Collapse every maximal run of non-Match ops into one :class:`Edit`.

    ``src`` and ``tgt`` are the aligned token sequences, needed to fill the
    edit texts.
    """
    src = [getattr(t, "surface", t) for t in (src or [])]
    tgt = [getattr(t, "surface", t) for t in (tgt or [])]
    edits: List[Edit] = []
    run: List[AlignmentOp] = []

    def flush():
        if not run:
            return
        s0, s1 = run[0].src_start, run[-1].src_end
        t0, t1 = run[0].tgt_start, run[-1].tgt_end
        run.clear()
        # only reachable when match_cost exceeds insert + delete
        if src[s0:s1] == tgt[t0:t1]:
            return
        edits.append(Edit(s0, s1, _join(src[s0:s1]), _join(tgt[t0:t1]), len(edits) + 1))

    for op in ops:
        if op.kind is OpKind.MATCH:
            flush()
        else:
            run.append(op)
    flush()
    return edits


def extract_edits(source_text: str, corrected_text: str, costs: CostModel = DEFAULT_COSTS) -> List[Edit]:
    src = tokenize(source_text)
    tgt = tokenize(corrected_text)
    return merge_ops(align(src, tgt, costs), src, tgt)


def format_edit(e: Edit) -> str:
    """Render an edit as its numbered prompt line, e.g. ``1. disorder → disorders:``."""
    if e.index < 1:
        raise FormatError(f"edit index must be >= 1, got {e.index}")
    for side in (e.src_text, e.tgt_text):
        if "→" in side:
            raise FormatError(f"token contains the arrow separator: {side!r}")
    return f"{e.index}. {e.src_text}{ARROW}{e.tgt_text}:"


def apply_edits(source_text: str, edits: Iterable[Edit]) -> str:
    tokens = [t.surface for t in tokenize(source_text)]
    edits = list(edits)
    prev_end = 0
    for e in edits:
        if e.src_start < 0 or e.src_end < e.src_start:
            raise RangeError(f"bad span {e.src_start}..{e.src_end}")
        if e.src_end > len(tokens):
            raise RangeError(f"span {e.src_start}..{e.src_end} exceeds {len(tokens)} tokens")
        if e.src_start < prev_end:
            raise OverlapError(f"edit {e.index} starts at {e.src_start}, before previous end {prev_end}")
        prev_end = e.src_end
    for e in reversed(edits):
        tokens[e.src_start:e.src_end] = e.tgt_tokens
    return detokenize(tokens)
