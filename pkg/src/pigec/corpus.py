"""JSON-lines store of explained corrections and few-shot sampling."""

from __future__ import annotations

import enum
import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple

from .align import DEFAULT_COSTS, CostModel
from .edits import Edit, extract_edits
from .errors import EditMismatchError, NotEnoughExamples, SchemaError

DEFAULT_K = 16
_KEYS = ("id", "source", "corrected", "edits", "explanations")
_EDIT_KEYS = ("src_start", "src_end", "src_text", "tgt_text")


class Placement(enum.Enum):
    """Where a few-shot example shows its explanations relative to the correction."""

    NONE = "none"
    PRE = "pre"
    POST = "post"


@dataclass(frozen=True)
class XgecExample:
    id: str
    source: str
    corrected: str
    edits: Tuple[Edit, ...]
    explanations: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "edits", tuple(self.edits))
        object.__setattr__(self, "explanations", tuple(self.explanations))
        if len(self.edits) != len(self.explanations):
            raise SchemaError(f"example {self.id!r}: {len(self.edits)} edits but "
                              f"{len(self.explanations)} explanations")

    @classmethod
    def build(cls, id: str, source: str, corrected: str, explanations: Sequence[str],
              costs: CostModel = DEFAULT_COSTS) -> "XgecExample":
        """Make an example whose edits are computed from the text pair."""
        return cls(id, source, corrected, extract_edits(source, corrected, costs), explanations)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "source": self.source,
            "corrected": self.corrected,
            "edits": [e.to_dict() for e in self.edits],
            "explanations": list(self.explanations),
        }


@dataclass(frozen=True)
class FewShotSet:
    examples: Tuple[XgecExample, ...] = ()
    seed: int = 0
    placement: Placement = Placement.POST

    def __len__(self) -> int:
        return len(self.examples)

    def ids(self) -> List[str]:
        return [ex.id for ex in self.examples]


def _example_from_obj(obj, lineno: int, costs: CostModel, validate: bool) -> XgecExample:
    if not isinstance(obj, dict):
        raise SchemaError("expected a JSON object", lineno)
    missing = [k for k in _KEYS if k not in obj]
    if missing:
        raise SchemaError(f"missing keys {missing}", lineno)
    if not isinstance(obj["edits"], list) or not isinstance(obj["explanations"], list):
        raise SchemaError("edits and explanations must be arrays", lineno)
    edits = []
    for i, raw in enumerate(obj["edits"], 1):
        if not isinstance(raw, dict) or any(k not in raw for k in _EDIT_KEYS):
            raise SchemaError(f"edit {i} must have keys {list(_EDIT_KEYS)}", lineno)
        try:
            edits.append(Edit.from_dict(raw, i))
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"edit {i}: {exc}", lineno) from None
    if not all(isinstance(x, str) for x in obj["explanations"]):
        raise SchemaError("explanations must be strings", lineno)
    try:
        example = XgecExample(str(obj["id"]), obj["source"], obj["corrected"], edits, obj["explanations"])
    except SchemaError as exc:
        raise SchemaError(str(exc), lineno) from None
    if validate:
        expected = extract_edits(example.source, example.corrected, costs)
        if [e.key() for e in expected] != [e.key() for e in example.edits]:
            raise EditMismatchError(
                f"example {example.id!r}: stored edits differ from recomputed "
                f"{[str(e) for e in expected]}", lineno)
    return example


def parse_corpus(lines, costs: CostModel = DEFAULT_COSTS, validate: bool = True) -> List[XgecExample]:
    examples = []
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc.msg}", lineno) from None
        examples.append(_example_from_obj(obj, lineno, costs, validate))
    return examples


def load_corpus(path, costs: CostModel = DEFAULT_COSTS, validate: bool = True) -> List[XgecExample]:
    with open(path, encoding="utf-8") as fh:
        return parse_corpus(fh, costs, validate)


def dumps_example(example: XgecExample) -> str:
    return json.dumps(example.to_dict(), ensure_ascii=False)


def save_corpus(examples: Sequence[XgecExample], path) -> None:
    Path(path).write_text("".join(dumps_example(ex) + "\n" for ex in examples), encoding="utf-8")


def sample_few_shot(corpus: Sequence[XgecExample], k: int = DEFAULT_K, seed: int = 0,
                    placement: Placement = Placement.POST) -> FewShotSet:
    if k < 0:
        raise ValueError("k must be non-negative")
    if k > len(corpus):
        raise NotEnoughExamples(f"asked for {k} examples, corpus has {len(corpus)}")
    chosen = random.Random(seed).sample(list(corpus), k)
    return FewShotSet(tuple(chosen), seed, placement)


def instance_seed(base_seed: int, ordinal: int) -> int:
    """Seed for resampling few-shot examples per test instance."""
    return base_seed ^ ordinal
