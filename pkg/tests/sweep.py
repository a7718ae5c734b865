"""Alignment cost sweep shared by the acceptance test and the offline full run.

``python tests/sweep.py`` runs the exhaustive length<=6 sweep with no deadline
and prints progress; it takes hours on one core.
"""

import itertools
import random
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from oracles import min_tiling_cost, replay  # noqa: E402

from pigec.align import align, alignment_cost  # noqa: E402
from pigec.edits import apply_edits, merge_ops  # noqa: E402
from pigec.text import surfaces  # noqa: E402

VOCAB = ("a", "b", "c", "A")


def sequences(max_len, vocab=VOCAB):
    for n in range(max_len + 1):
        yield from itertools.product(vocab, repeat=n)


def check_pair(src, tgt):
    """Return None if DP and oracle agree and the ops/edits reproduce tgt, else a message."""
    ops = align(src, tgt)
    got = alignment_cost(ops)
    want = min_tiling_cost(src, tgt)
    if got != want:
        return f"cost {got} != oracle {want} for {src} -> {tgt}"
    if replay(ops, src, tgt) != list(tgt):
        return f"ops do not replay {src} -> {tgt}"
    patched = apply_edits(" ".join(src), merge_ops(ops, src, tgt))
    if surfaces(patched) != list(tgt):
        return f"edits do not round-trip {src} -> {tgt}"
    return None


def random_pairs(n, max_len=8, seed=0):
    rng = random.Random(seed)
    for _ in range(n):
        yield (tuple(rng.choice(VOCAB) for _ in range(rng.randint(0, max_len))),
               tuple(rng.choice(VOCAB) for _ in range(rng.randint(0, max_len))))


def exhaustive_pairs(max_len=6):
    for src in sequences(max_len):
        for tgt in sequences(max_len):
            yield src, tgt


def total_exhaustive(max_len=6, vocab=VOCAB):
    return sum(len(vocab) ** n for n in range(max_len + 1)) ** 2


def run(pairs, deadline=None, progress_every=0):
    """Check pairs until exhausted or ``deadline`` (time.monotonic) passes.

    Returns (checked, failures, finished).
    """
    checked = 0
    failures = []
    for src, tgt in pairs:
        if deadline is not None and time.monotonic() > deadline:
            return checked, failures, False
        msg = check_pair(src, tgt)
        if msg:
            failures.append(msg)
        checked += 1
        if progress_every and checked % progress_every == 0:
            print(f"{checked} checked, {len(failures)} failures", flush=True)
    return checked, failures, True


if __name__ == "__main__":
    start = time.monotonic()
    checked, failures, _ = run(exhaustive_pairs(), progress_every=500_000)
    print(f"exhaustive: {checked} pairs, {len(failures)} failures, "
          f"{time.monotonic() - start:.0f}s")
    for msg in failures[:20]:
        print(msg)
