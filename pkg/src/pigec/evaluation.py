"""Coverage scoring, token-overlap P/R/F1, reports and human annotation sheets.

The P/R/F1 numbers use multiset token overlap rather than a neural
embedding similarity; the report layout keeps the same three columns so a
different similarity can be dropped in.
"""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .align import DEFAULT_COSTS, CostModel
from .corpus import XgecExample
from .edits import EMPTY, Edit, extract_edits, format_edit
from .errors import LengthMismatch
from .text import surfaces

SHEET_COLUMNS = ["id", "source", "corrected", "edit", "explanation", "validity", "coverage"]


@dataclass(frozen=True)
class CoverageScore:
    covered: int
    total: int

    @property
    def rubric_level(self) -> int:
        return rubric_level(self.covered, self.total)


def rubric_level(covered: int, total: int) -> int:
    """0-2 scale: all covered -> 2, more than half -> 1, otherwise 0."""
    if covered > total or covered < 0:
        raise ValueError(f"covered={covered} total={total}")
    if covered == total:
        return 2
    if 2 * covered > total:
        return 1
    return 0


def _mentions(text: str, edit: Edit) -> bool:
    text = text.casefold()
    return all(side.casefold() in text for side in (edit.src_text, edit.tgt_text) if side != EMPTY)


def coverage(records: Sequence, gold_edits: Sequence[Edit]) -> CoverageScore:
    pairs = {(r.edit.src_text.casefold(), r.edit.tgt_text.casefold()) for r in records}
    covered = 0
    for gold in gold_edits:
        if (gold.src_text.casefold(), gold.tgt_text.casefold()) in pairs:
            covered += 1
        elif any(_mentions(r.explanation, gold) for r in records):
            covered += 1
    return CoverageScore(covered, len(gold_edits))


def _overlap(candidate: str, reference: str) -> Tuple[int, int, int]:
    cand = Counter(s.casefold() for s in surfaces(candidate))
    ref = Counter(s.casefold() for s in surfaces(reference))
    return sum((cand & ref).values()), sum(cand.values()), sum(ref.values())


def _prf(overlap: int, n_cand: int, n_ref: int) -> Tuple[float, float, float]:
    if n_cand == 0 and n_ref == 0:
        return 1.0, 1.0, 1.0
    if n_cand == 0 or n_ref == 0:
        return 0.0, 0.0, 0.0
    p = overlap / n_cand
    r = overlap / n_ref
    f = 0.0 if p + r == 0 else 2 * p * r / (p + r)
    return p, r, f


def token_f1(candidate: str, reference: str) -> Tuple[float, float, float]:
    return _prf(*_overlap(candidate, reference))


@dataclass
class ExampleRow:
    id: str
    covered: int
    total: int
    rubric_level: int
    precision: float
    recall: float
    f1: float


@dataclass
class SystemScores:
    precision: float
    recall: float
    f1: float
    mean_rubric_level: float
    n: int
    rows: List[ExampleRow] = field(default_factory=list)

    @property
    def coverage_percent(self) -> float:
        # the 0-2 rubric mean scaled to 0-100
        return self.mean_rubric_level * 50


@dataclass
class EvalReport:
    systems: Dict[str, SystemScores] = field(default_factory=dict)
    fingerprint: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"fingerprint": self.fingerprint, "systems": {}}
        for name, s in self.systems.items():
            d = asdict(s)
            d["coverage_percent"] = s.coverage_percent
            out["systems"][name] = d
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "EvalReport":
        systems = {}
        for name, d in data["systems"].items():
            rows = [ExampleRow(**r) for r in d["rows"]]
            systems[name] = SystemScores(d["precision"], d["recall"], d["f1"],
                                         d["mean_rubric_level"], d["n"], rows)
        return cls(systems, data.get("fingerprint", {}))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, ensure_ascii=False, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "EvalReport":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def table(self) -> str:
        lines = [f"{'System':<12} {'Precision':>9} {'Recall':>9} {'F1':>9} {'Coverage':>9} {'Level':>6}"]
        for name, s in self.systems.items():
            lines.append(f"{name:<12} {s.precision * 100:>9.1f} {s.recall * 100:>9.1f} "
                         f"{s.f1 * 100:>9.1f} {s.coverage_percent:>9.1f} {s.mean_rubric_level:>6.2f}")
        return "\n".join(lines)


def evaluate(results: Sequence, references: Sequence[XgecExample], *, system: str = "system",
             costs: CostModel = DEFAULT_COSTS, report: Optional[EvalReport] = None) -> EvalReport:
    """Score results against references, pairing them by position.

    When both sides carry ids they must agree. Token P/R/F1 is micro-averaged:
    overlaps and lengths are pooled over all examples before dividing.
    """
    if len(results) != len(references):
        raise LengthMismatch(f"{len(results)} results vs {len(references)} references")
    rows = []
    pooled = [0, 0, 0]
    levels = 0
    for res, ref in zip(results, references):
        if res.id and ref.id and res.id != ref.id:
            raise LengthMismatch(f"id mismatch: result {res.id!r} vs reference {ref.id!r}")
        gold = extract_edits(res.source, ref.corrected, costs)
        cov = coverage(res.records, gold)
        counts = _overlap(" ".join(res.explanations), " ".join(ref.explanations))
        for i, c in enumerate(counts):
            pooled[i] += c
        p, r, f = _prf(*counts)
        rows.append(ExampleRow(ref.id, cov.covered, cov.total, cov.rubric_level, p, r, f))
        levels += cov.rubric_level
    p, r, f = _prf(*pooled)
    mean_level = levels / len(rows) if rows else 0.0
    report = report or EvalReport()
    report.systems[system] = SystemScores(p, r, f, mean_level, len(rows), rows)
    return report


def export_annotation_sheet(results: Sequence, path) -> int:
    """Write one CSV row per explanation with blank validity/coverage cells. Returns the row count."""
    n = 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, quoting=csv.QUOTE_ALL)
        writer.writerow(SHEET_COLUMNS)
        for res in results:
            for rec in res.records:
                writer.writerow([res.id, res.source, res.corrected, format_edit(rec.edit),
                                 rec.explanation, "", ""])
                n += 1
    return n


def read_annotation_sheet(path) -> Dict[str, Optional[float]]:
    """Mean validity and coverage over the rows an annotator filled in.

    Each score must be 0, 1 or 2; blank cells are skipped.
    """
    sums = {"validity": [0, 0], "coverage": [0, 0]}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != SHEET_COLUMNS:
            raise ValueError(f"unexpected header {reader.fieldnames}")
        for lineno, row in enumerate(reader, 2):
            for col in sums:
                cell = row[col].strip()
                if not cell:
                    continue
                if cell not in ("0", "1", "2"):
                    raise ValueError(f"line {lineno}: {col} must be 0, 1 or 2, got {cell!r}")
                sums[col][0] += int(cell)
                sums[col][1] += 1
    return {col: (total / count if count else None) for col, (total, count) in sums.items()}
