"""Explanation generation with prompt insertion, and the two single-call baselines.

With prompt insertion the model first writes a corrected sentence. The edits
between source and correction are then fed back one numbered line at a time
(``1. disorder → disorders:``), and the model continues each line with its
explanation, so every edit gets exactly one explanation.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .align import DEFAULT_COSTS, CostModel
from .corpus import FewShotSet, Placement, XgecExample
from .edits import ARROW, Edit, extract_edits, format_edit
from .errors import EmptyCorrection, ParseWarning
from .llm import (DEFAULT_MAX_TOKENS, Backend, CompletionRequest, Transcript, complete)

INSTRUCTION = (
    "Correct the input text grammatically and explain the reason for each correction. "
    "If the input text is grammatically correct, only the input text should be generated as is."
)

EXPLANATIONS_HEADER = "Explanations:"
_NUMBERED = re.compile(r"^\s*(\d+)\.\s+(.*?)" + re.escape(ARROW) + r"(.*?):(?:\s(.*))?$")


class Mode(enum.Enum):
    POST_WITH_PI = "pi"
    POST_WITHOUT_PI = "post"
    PRE_WITHOUT_PI = "pre"

    @property
    def placement(self) -> Placement:
        return Placement.PRE if self is Mode.PRE_WITHOUT_PI else Placement.POST


@dataclass(frozen=True)
class PromptConfig:
    instruction: str = INSTRUCTION
    few_shot: FewShotSet = FewShotSet()
    mode: Mode = Mode.POST_WITH_PI
    cost_model: CostModel = DEFAULT_COSTS
    max_tokens: int = DEFAULT_MAX_TOKENS
    temperature: Fraction = Fraction(0)

    def __post_init__(self):
        if not self.instruction:
            raise ValueError("instruction must be non-empty")


@dataclass(frozen=True)
class ExplanationRecord:
    edit: Edit
    explanation: str

    def to_dict(self) -> dict:
        d = self.edit.to_dict()
        d["index"] = self.edit.index
        return {"edit": d, "explanation": self.explanation}

    @classmethod
    def from_dict(cls, data: dict) -> "ExplanationRecord":
        e = data["edit"]
        return cls(Edit.from_dict(e, e.get("index", 1)), data["explanation"])


@dataclass
class PiResult:
    source: str
    corrected: str
    records: List[ExplanationRecord]
    transcript: Transcript
    mode: Mode
    id: str = ""
    warnings: List[ParseWarning] = field(default_factory=list)

    @property
    def explanations(self) -> List[str]:
        return [r.explanation for r in self.records]

    def to_dict(self, with_transcript: bool = False) -> dict:
        d = {
            "id": self.id,
            "mode": self.mode.value,
            "source": self.source,
            "corrected": self.corrected,
            "records": [r.to_dict() for r in self.records],
            "warnings": [str(w) for w in self.warnings],
        }
        if with_transcript:
            d["transcript"] = self.transcript.to_dict()
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "PiResult":
        transcript = Transcript.from_dict(data["transcript"]) if "transcript" in data else Transcript()
        return cls(data["source"], data["corrected"],
                   [ExplanationRecord.from_dict(r) for r in data["records"]],
                   transcript, Mode(data["mode"]), data.get("id", ""),
                   [ParseWarning(w) for w in data.get("warnings", [])])


def explanation_line(edit: Edit, explanation: str) -> str:
    return f"{format_edit(edit)} {explanation}"


def render_example(example: XgecExample, placement: Placement) -> str:
    lines = "".join(explanation_line(e, x) + "\n" for e, x in zip(example.edits, example.explanations))
    if placement is Placement.NONE:
        return f"Input: {example.source}\nOutput: {example.corrected}\n\n"
    if placement is Placement.PRE:
        return (f"Input: {example.source}\n{EXPLANATIONS_HEADER}\n{lines}"
                f"Output: {example.corrected}\n\n")
    return f"Input: {example.source}\nOutput: {example.corrected}\n{EXPLANATIONS_HEADER}\n{lines}\n"


def build_prompt(config: PromptConfig, source: str) -> str:
    parts = [config.instruction, "\n\n"]
    parts.extend(render_example(ex, config.few_shot.placement) for ex in config.few_shot.examples)
    if config.mode is Mode.PRE_WITHOUT_PI:
        parts.append(f"Input: {source}\n{EXPLANATIONS_HEADER}")
    else:
        parts.append(f"Input: {source}\nOutput:")
    return "".join(parts)


def _request(config: PromptConfig, prompt: str, stop: str) -> CompletionRequest:
    return CompletionRequest(prompt, (stop,), config.max_tokens, config.temperature)


def pi_explain(backend: Backend, config: PromptConfig, source: str, id: str = "") -> PiResult:
    if config.mode is not Mode.POST_WITH_PI:
        raise ValueError(f"prompt insertion needs mode {Mode.POST_WITH_PI.value!r}, got {config.mode.value!r}")
    transcript = backend.new_transcript()
    prompt = build_prompt(config, source)
    corrected = complete(backend, _request(config, prompt, "\n"), transcript).strip()
    if not corrected:
        raise EmptyCorrection(f"blank correction for {source!r}")

    edits = extract_edits(source, corrected, config.cost_model)
    records: List[ExplanationRecord] = []
    if edits:
        prompt += f" {corrected}\n{EXPLANATIONS_HEADER}\n"
        for edit in edits:
            prompt += format_edit(edit) + " "
            explanation = complete(backend, _request(config, prompt, "\n"), transcript).strip()
            records.append(ExplanationRecord(edit, explanation))
            prompt += explanation + "\n"
    return PiResult(source, corrected, records, transcript, config.mode, id)


def parse_numbered(line: str) -> Optional[Tuple[int, str, str, str]]:
    """Split ``"2. . → ?: reason"`` into ``(2, ".", "?", "reason")``."""
    m = _NUMBERED.match(line)
    if not m:
        return None
    return int(m.group(1)), m.group(2).strip(), m.group(3).strip(), (m.group(4) or "").strip()


def _records_from_lines(lines: Sequence[str], edits: Sequence[Edit],
                        warnings: List[ParseWarning]) -> List[ExplanationRecord]:
    unused = list(edits)
    records = []
    for line in lines:
        parsed = parse_numbered(line)
        if parsed is None:
            warnings.append(ParseWarning(f"unparsed line: {line!r}"))
            continue
        number, src_text, tgt_text, explanation = parsed
        match = next((e for e in unused if (e.src_text, e.tgt_text) == (src_text, tgt_text)), None)
        if match is not None:
            unused.remove(match)
            records.append(ExplanationRecord(match, explanation))
            continue
        try:
            synthetic = Edit(-1, -1, src_text or "ε", tgt_text or "ε", max(number, 1))
        except ValueError:
            warnings.append(ParseWarning(f"no-op pair in line: {line!r}"))
            continue
        warnings.append(ParseWarning(f"pair not among extracted edits: {src_text!r} -> {tgt_text!r}"))
        records.append(ExplanationRecord(synthetic, explanation))
    return records


def post_explain_no_pi(backend: Backend, config: PromptConfig, source: str, id: str = "") -> PiResult:
    if config.mode is not Mode.POST_WITHOUT_PI:
        raise ValueError(f"expected mode {Mode.POST_WITHOUT_PI.value!r}, got {config.mode.value!r}")
    transcript = backend.new_transcript()
    reply = complete(backend, _request(config, build_prompt(config, source), "\n\n"), transcript)
    first, _, rest = reply.partition("\n")
    corrected = first.strip()
    if not corrected:
        raise EmptyCorrection(f"blank correction for {source!r}")
    lines = [ln for ln in rest.split("\n") if ln.strip()]
    if lines and lines[0].strip() == EXPLANATIONS_HEADER:
        lines = lines[1:]
    warnings: List[ParseWarning] = []
    edits = extract_edits(source, corrected, config.cost_model)
    records = _records_from_lines(lines, edits, warnings)
    return PiResult(source, corrected, records, transcript, config.mode, id, warnings)


def pre_explain_no_pi(backend: Backend, config: PromptConfig, source: str, id: str = "") -> PiResult:
    if config.mode is not Mode.PRE_WITHOUT_PI:
        raise ValueError(f"expected mode {Mode.PRE_WITHOUT_PI.value!r}, got {config.mode.value!r}")
    transcript = backend.new_transcript()
    reply = complete(backend, _request(config, build_prompt(config, source), "\n\n"), transcript)
    corrected = ""
    explanation_lines = []
    for line in reply.split("\n"):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("Output:"):
            corrected = stripped[len("Output:"):].strip()
            break
        explanation_lines.append(line)
    if not corrected:
        raise EmptyCorrection(f"no Output line for {source!r}")
    warnings: List[ParseWarning] = []
    edits = extract_edits(source, corrected, config.cost_model)
    records = _records_from_lines(explanation_lines, edits, warnings)
    return PiResult(source, corrected, records, transcript, config.mode, id, warnings)


_RUNNERS = {
    Mode.POST_WITH_PI: pi_explain,
    Mode.POST_WITHOUT_PI: post_explain_no_pi,
    Mode.PRE_WITHOUT_PI: pre_explain_no_pi,
}


def explain(backend: Backend, config: PromptConfig, source: str, id: str = "") -> PiResult:
    """Dispatch on ``config.mode``."""
    return _RUNNERS[config.mode](backend, config, source, id)


def config_for(mode: Mode, examples: Sequence[XgecExample] = (), seed: int = 0, **kwargs) -> PromptConfig:
    """Config whose few-shot explanations sit where ``mode`` expects them."""
    few_shot = FewShotSet(tuple(examples), seed, mode.placement)
    return PromptConfig(few_shot=few_shot, mode=mode, **kwargs)


def with_mode(config: PromptConfig, mode: Mode) -> PromptConfig:
    few_shot = replace(config.few_shot, placement=mode.placement) \
        if config.few_shot.placement is not Placement.NONE else config.few_shot
    return replace(config, mode=mode, few_shot=few_shot)
