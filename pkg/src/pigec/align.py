"""Minimum-cost token alignment with adjacent-block transpositions.

Costs are exact rationals (:class:`fractions.Fraction`) so that ties are real
ties and the traceback order is reproducible on every platform.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, fields
from fractions import Fraction
from typing import List, Sequence

from .text import Token

HALF = Fraction(1, 2)


class OpKind(enum.Enum):
    MATCH = "Match"
    SUBSTITUTE = "Substitute"
    INSERT = "Insert"
    DELETE = "Delete"
    TRANSPOSE = "Transpose"


def _rational(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        # 0.1 should mean one tenth, not its binary approximation
        return Fraction(repr(value))
    return Fraction(value)


@dataclass(frozen=True)
class CostModel:
    insert_cost: Fraction = Fraction(1)
    delete_cost: Fraction = Fraction(1)
    match_cost: Fraction = Fraction(0)
    case_only_substitute_cost: Fraction = Fraction(1, 10)
    substitute_base: Fraction = Fraction(2)
    transpose_cost_per_token: Fraction = Fraction(1)

    def __post_init__(self):
        for f in fields(self):
            value = _rational(getattr(self, f.name))
            if value < 0:
                raise ValueError(f"{f.name} must be non-negative, got {value}")
            object.__setattr__(self, f.name, value)
        # used as a cache key on every substitution lookup
        object.__setattr__(self, "_hash", hash(tuple(getattr(self, f.name) for f in fields(self))))

    def __hash__(self) -> int:
        return self._hash

    def transpose_cost(self, k: int) -> Fraction:
        return max(Fraction(0), k * self.transpose_cost_per_token - HALF)

    def to_dict(self) -> dict:
        return {f.name: str(getattr(self, f.name)) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "CostModel":
        return cls(**{k: Fraction(v) for k, v in data.items()})


DEFAULT_COSTS = CostModel()


@dataclass(frozen=True)
class AlignmentOp:
    kind: OpKind
    src_start: int
    src_end: int
    tgt_start: int
    tgt_end: int
    cost: Fraction

    def __repr__(self) -> str:
        return (f"{self.kind.value}({self.src_start}..{self.src_end}, "
                f"{self.tgt_start}..{self.tgt_end}, cost={self.cost})")


def char_distance(a: str, b: str) -> int:
    """Plain character-level Levenshtein distance."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def char_similarity(a: str, b: str) -> Fraction:
    longest = max(len(a), len(b))
    if longest == 0:
        return Fraction(1)
    sim = 1 - Fraction(char_distance(a, b), longest)
    return min(Fraction(1), max(Fraction(0), sim))


def _surface(tok) -> str:
    return tok.surface if isinstance(tok, Token) else tok


def substitution_cost(a, b, costs: CostModel = DEFAULT_COSTS) -> Fraction:
    return _substitution_cost(_surface(a), _surface(b), costs)


@functools.lru_cache(maxsize=1 << 16)
def _substitution_cost(a: str, b: str, costs: CostModel) -> Fraction:
    if a == b:
        return Fraction(0)
    if a.lower() == b.lower():
        return costs.case_only_substitute_cost
    return costs.substitute_base * (1 - char_similarity(a, b))


def align(src: Sequence, tgt: Sequence, costs: CostModel = DEFAULT_COSTS) -> List[AlignmentOp]:
    """Return the minimum-cost tiling of ``src`` and ``tgt`` as a list of ops.

    Tokens may be :class:`Token` objects or bare strings. Among equally cheap
    alignments the traceback prefers, at each step from the end, Match, then
    Substitute, then Transpose (shorter blocks first), then Delete or Insert.
    A Delete/Insert tie goes to whichever op touches the smaller token
    surface, Delete if the surfaces are equal; this keeps ``align(t, s)`` the
    mirror image of ``align(s, t)``.
    """
    s = [_surface(t) for t in src]
    t = [_surface(t) for t in tgt]
    scaled = _ScaledCosts(s, t, costs)
    table = _fill(s, t, scaled)

    ops: List[AlignmentOp] = []
    i, j = len(s), len(t)
    while i or j:
        op = _best_step(s, t, i, j, table, scaled)
        ops.append(op)
        i, j = op.src_start, op.tgt_start
    ops.reverse()
    return ops


def alignment_cost(ops: Sequence[AlignmentOp]) -> Fraction:
    return sum((op.cost for op in ops), Fraction(0))


class _ScaledCosts:
    """All costs of one alignment problem as integers over a common denominator.

    Integer arithmetic keeps the DP exact and is far cheaper than Fractions.
    """

    def __init__(self, s, t, costs: CostModel):
        self.sub = {}
        for a in set(s):
            for b in set(t):
                if a != b:
                    self.sub[a, b] = substitution_cost(a, b, costs)
        k_max = min(len(s), len(t))
        self.trans = {k: costs.transpose_cost(k) for k in range(2, k_max + 1)}
        values = [costs.insert_cost, costs.delete_cost, costs.match_cost,
                  *self.sub.values(), *self.trans.values()]
        self.denom = math.lcm(*(v.denominator for v in values))
        d = self.denom

        def scale(v: Fraction) -> int:
            return v.numerator * (d // v.denominator)

        self.ins = scale(costs.insert_cost)
        self.dele = scale(costs.delete_cost)
        self.match = scale(costs.match_cost)
        self.sub = {key: scale(v) for key, v in self.sub.items()}
        self.trans = {k: scale(v) for k, v in self.trans.items()}

    def rational(self, value: int) -> Fraction:
        return Fraction(value, self.denom)


def cost_table(s: Sequence[str], t: Sequence[str], costs: CostModel = DEFAULT_COSTS):
    """``table[i][j]`` is the cheapest way to align s[:i] with t[:j]."""
    scaled = _ScaledCosts(s, t, costs)
    return [[scaled.rational(v) for v in row] for row in _fill(s, t, scaled)]


def _fill(s, t, c: _ScaledCosts):
    n, m = len(s), len(t)
    table = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        table[i][0] = table[i - 1][0] + c.dele
    for j in range(1, m + 1):
        table[0][j] = table[0][j - 1] + c.ins
    src_keys: dict = {}
    tgt_keys: dict = {}
    for i in range(1, n + 1):
        row, up = table[i], table[i - 1]
        a = s[i - 1]
        for j in range(1, m + 1):
            b = t[j - 1]
            best = up[j] + c.dele
            v = row[j - 1] + c.ins
            if v < best:
                best = v
            v = up[j - 1] + (c.match if a == b else c.sub[a, b])
            if v < best:
                best = v
            for k in range(2, min(i, j) + 1):
                if _block_key(s, i, k, src_keys) == _block_key(t, j, k, tgt_keys):
                    v = table[i - k][j - k] + c.trans[k]
                    if v < best:
                        best = v
            row[j] = best
    return table


def _block_key(seq, end, k, cache):
    key = cache.get((end, k))
    if key is None:
        key = cache[(end, k)] = tuple(sorted(seq[end - k:end]))
    return key


def _best_step(s, t, i, j, table, c: _ScaledCosts) -> AlignmentOp:
    target = table[i][j]
    if i and j:
        if s[i - 1] == t[j - 1]:
            if table[i - 1][j - 1] + c.match == target:
                return AlignmentOp(OpKind.MATCH, i - 1, i, j - 1, j, c.rational(c.match))
        else:
            cost = c.sub[s[i - 1], t[j - 1]]
            if table[i - 1][j - 1] + cost == target:
                return AlignmentOp(OpKind.SUBSTITUTE, i - 1, i, j - 1, j, c.rational(cost))
        for k in range(2, min(i, j) + 1):
            if sorted(s[i - k:i]) == sorted(t[j - k:j]) and table[i - k][j - k] + c.trans[k] == target:
                return AlignmentOp(OpKind.TRANSPOSE, i - k, i, j - k, j, c.rational(c.trans[k]))
    can_delete = i > 0 and table[i - 1][j] + c.dele == target
    can_insert = j > 0 and table[i][j - 1] + c.ins == target
    if can_delete and can_insert:
        # pick by token surface so that align(t, s) mirrors align(s, t)
        can_insert = t[j - 1] < s[i - 1]
        can_delete = not can_insert
    if can_delete:
        return AlignmentOp(OpKind.DELETE, i - 1, i, j, j, c.rational(c.dele))
    if can_insert:
        return AlignmentOp(OpKind.INSERT, i, i, j - 1, j, c.rational(c.ins))
    raise AssertionError(f"no predecessor reproduces cell ({i}, {j})")  # pragma: no cover
