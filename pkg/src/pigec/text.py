"""Rule-based tokenization and detokenization.

Splitting is done on whitespace; punctuation characters at either edge of a
whitespace chunk are peeled off into tokens of their own. Inner punctuation
(``don't``, ``e.g``, ``3.5``) stays attached. Chunks are walked by extended
grapheme cluster so a punctuation mark carrying a combining accent is never
split from it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Sequence

import regex

PUNCTUATION = frozenset('.,?!;:"\'()')

# no space is emitted before these when joining
_ATTACH_LEFT = frozenset(".,?!;:)")
# no space is emitted after these
_ATTACH_RIGHT = frozenset("(")

_CHUNK = regex.compile(r"\S+")
_GRAPHEME = regex.compile(r"\X")


@dataclass(frozen=True)
class Token:
    surface: str
    char_start: int
    char_end: int

    def __str__(self) -> str:
        return self.surface


def tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    for chunk in _CHUNK.finditer(text):
        clusters = [(m.start(), m.end()) for m in _GRAPHEME.finditer(chunk.group())]
        offset = chunk.start()
        head: List[Token] = []
        tail: List[Token] = []
        lo, hi = 0, len(clusters)
        while lo < hi and chunk.group()[clusters[lo][0]:clusters[lo][1]] in PUNCTUATION:
            s, e = clusters[lo]
            head.append(Token(text[offset + s:offset + e], offset + s, offset + e))
            lo += 1
        while hi > lo and chunk.group()[clusters[hi - 1][0]:clusters[hi - 1][1]] in PUNCTUATION:
            s, e = clusters[hi - 1]
            tail.append(Token(text[offset + s:offset + e], offset + s, offset + e))
            hi -= 1
        tokens.extend(head)
        if lo < hi:
            s, e = clusters[lo][0] + offset, clusters[hi - 1][1] + offset
            tokens.append(Token(text[s:e], s, e))
        tokens.extend(reversed(tail))
    return tokens


def surfaces(text: str) -> List[str]:
    return [t.surface for t in tokenize(text)]


def detokenize(tokens: Iterable[str | Token]) -> str:
    """Join token surfaces with single spaces, attaching closing punctuation.

    >>> detokenize(["other", "disorders", "?"])
    'other disorders?'
    >>> detokenize(["a", "(", "b", ")"])
    'a (b)'
    """
    out: List[str] = []
    prev = None
    for tok in tokens:
        surface = tok.surface if isinstance(tok, Token) else tok
        if prev is not None and (surface not in _ATTACH_LEFT and prev not in _ATTACH_RIGHT
                                 or not _boundary(prev, surface)):
            out.append(" ")
        out.append(surface)
        prev = surface
    return "".join(out)


def _boundary(left: str, right: str) -> bool:
    """True if ``left + right`` keeps a grapheme break between the two parts."""
    left, right = left[-4:], right[:4]
    return any(m.end() == len(left) for m in _GRAPHEME.finditer(left + right))


def gaps(text: str, tokens: Sequence[Token]) -> List[str]:
    """Return the n+1 inter-token strings around ``tokens`` (leading, between, trailing)."""
    result = []
    pos = 0
    for tok in tokens:
        result.append(text[pos:tok.char_start])
        pos = tok.char_end
    result.append(text[pos:])
    return result
