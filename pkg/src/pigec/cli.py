"""Command-line entry point: ``pigec {extract-edits,apply,explain,evaluate,annotate}``.

Exit codes: 0 success, 1 some examples failed, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Sequence

from . import __version__
from .align import CostModel
from .corpus import DEFAULT_K, FewShotSet, XgecExample, instance_seed, load_corpus, sample_few_shot
from .edits import Edit, apply_edits, extract_edits
from .errors import PigecError
from .evaluation import EvalReport, evaluate, export_annotation_sheet
from .llm import Backend, backend_from_env, load_script
from .m2 import apply_m2, read_m2
from .pi import Mode, PiResult, PromptConfig, explain

logger = logging.getLogger("pigec")

EXIT_OK, EXIT_PARTIAL, EXIT_USAGE = 0, 1, 2

MODES = {"pi": [Mode.POST_WITH_PI], "post": [Mode.POST_WITHOUT_PI], "pre": [Mode.PRE_WITHOUT_PI],
         "all": [Mode.POST_WITH_PI, Mode.POST_WITHOUT_PI, Mode.PRE_WITHOUT_PI]}

_COST_FLAGS = {
    "insert": "insert_cost",
    "delete": "delete_cost",
    "match": "match_cost",
    "case": "case_only_substitute_cost",
    "substitute-base": "substitute_base",
    "transpose": "transpose_cost_per_token",
}


class UsageError(Exception):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True)


def _read_lines(path) -> List[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh]


def cost_model_from_args(args) -> CostModel:
    overrides = {}
    for flag, name in _COST_FLAGS.items():
        value = getattr(args, "cost_" + flag.replace("-", "_"), None)
        if value is not None:
            overrides[name] = value
    return CostModel(**overrides)


# extract-edits / apply

def cmd_extract_edits(args) -> int:
    costs = cost_model_from_args(args)
    if args.m2:
        pairs = []
        for entry in read_m2(args.m2):
            source = " ".join(entry.source_tokens)
            pairs.append((source, apply_m2(entry, args.annotator)))
    else:
        if not (args.src and args.tgt):
            raise UsageError("give --src and --tgt, or --m2")
        src, tgt = _read_lines(args.src), _read_lines(args.tgt)
        if len(src) != len(tgt):
            raise UsageError(f"{args.src} has {len(src)} lines but {args.tgt} has {len(tgt)}")
        pairs = list(zip(src, tgt))
    out = sys.stdout
    for source, corrected in pairs:
        edits = extract_edits(source, corrected, costs)
        out.write(_dump([dict(e.to_dict(), index=e.index) for e in edits]) + "\n")
    return EXIT_OK


def cmd_apply(args) -> int:
    sources = _read_lines(args.src)
    edit_lines = _read_lines(args.edits)
    if len(sources) != len(edit_lines):
        raise UsageError(f"{len(sources)} source lines but {len(edit_lines)} edit lines")
    for source, line in zip(sources, edit_lines):
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise UsageError(f"bad edits line: {exc}") from None
        edits = [Edit.from_dict(d, d.get("index", i)) for i, d in enumerate(raw, 1)]
        sys.stdout.write(apply_edits(source, edits) + "\n")
    return EXIT_OK


# explain

def make_backend(spec: str) -> Backend:
    if spec.startswith("mock:"):
        return load_script(spec[len("mock:"):])
    if spec in ("live", "live:chat"):
        return backend_from_env("chat")
    if spec == "live:completion":
        return backend_from_env("completion")
    raise UsageError(f"unknown backend {spec!r}; use live, live:completion or mock:SCRIPT")


def _load_inputs(args, costs) -> List[XgecExample]:
    given = [x for x in (args.corpus, args.input, args.text) if x is not None]
    if len(given) != 1:
        raise UsageError("give exactly one of --corpus, --input, --text")
    if args.corpus:
        return load_corpus(args.corpus, costs, validate=not args.no_validate)
    lines = [args.text] if args.text is not None else [ln for ln in _read_lines(args.input) if ln.strip()]
    return [XgecExample(f"{i:06d}", line, line, (), ()) for i, line in enumerate(lines)]


_UNSAFE = re.compile(r"[^A-Za-z0-9._-]")


def _file_stem(example_id: str) -> str:
    return _UNSAFE.sub("_", example_id) or "_"


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _fingerprint(args, backend: Backend, costs: CostModel) -> dict:
    replay_args = {k: getattr(args, k) for k in _REPLAY_KEYS}
    replay_args = {k: str(v) if isinstance(v, Fraction) else v for k, v in replay_args.items()}
    fp = {
        "version": __version__,
        "args": replay_args,
        "backend": args.backend,
        "model": backend.model,
        "cost_model": costs.to_dict(),
        "seed": args.seed,
        "k": args.k,
    }
    for key in ("corpus", "input", "few_shot"):
        path = getattr(args, key)
        if path:
            fp[key + "_sha256"] = _sha256(path)
    if args.backend.startswith("mock:"):
        fp["script_sha256"] = _sha256(args.backend[len("mock:"):])
    return fp


_REPLAY_KEYS = ("corpus", "input", "text", "few_shot", "mode", "k", "seed", "backend",
                "resample", "no_validate", "max_tokens") + tuple("cost_" + f.replace("-", "_") for f in _COST_FLAGS)


def _few_shot_for(pool, args, mode: Mode, ordinal: int, exclude_id: str) -> FewShotSet:
    if args.k == 0:
        return FewShotSet((), args.seed, mode.placement)
    if args.resample:
        candidates = [ex for ex in pool if ex.id != exclude_id]
        return sample_few_shot(candidates, args.k, instance_seed(args.seed, ordinal), mode.placement)
    return sample_few_shot(pool, args.k, args.seed, mode.placement)


def cmd_explain(args) -> int:
    if args.replay:
        fp = json.loads(Path(args.replay).read_text(encoding="utf-8"))
        for key, value in fp["args"].items():
            setattr(args, key, value)
    if args.single_call and args.mode in ("pi", "all"):
        raise UsageError("--single-call contradicts prompt insertion (mode pi/all)")
    if args.k < 0:
        raise UsageError("--k must be non-negative")
    costs = cost_model_from_args(args)
    inputs = _load_inputs(args, costs)
    pool: Sequence[XgecExample] = ()
    if args.k > 0:
        if not args.few_shot:
            raise UsageError("--k > 0 needs a --few-shot corpus (or pass --k 0)")
        pool = load_corpus(args.few_shot, costs, validate=not args.no_validate)
        if len(pool) < args.k:
            raise UsageError(f"--few-shot corpus has {len(pool)} examples, --k is {args.k}")
    backend = make_backend(args.backend)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "fingerprint.json").write_text(
        json.dumps(_fingerprint(args, backend, costs), indent=2, sort_keys=True) + "\n", encoding="utf-8")

    jobs = max(1, args.jobs)
    failed = 0
    for mode in MODES[args.mode]:
        def run(item, mode=mode):
            ordinal, example = item
            try:
                few_shot = _few_shot_for(pool, args, mode, ordinal, example.id)
                config = PromptConfig(few_shot=few_shot, mode=mode, cost_model=costs,
                                      max_tokens=args.max_tokens)
                return explain(backend, config, example.source, example.id), None
            except PigecError as exc:
                return None, exc

        with ThreadPoolExecutor(max_workers=jobs) as pool_exec:
            outcomes = list(pool_exec.map(run, enumerate(inputs)))

        tdir = out / f"transcripts-{mode.value}"
        tdir.mkdir(exist_ok=True)
        with open(out / f"results-{mode.value}.jsonl", "w", encoding="utf-8") as fh:
            for example, (result, exc) in zip(inputs, outcomes):
                if exc is not None:
                    failed += 1
                    logger.error("%s [%s]: %s: %s", example.id, mode.value, type(exc).__name__, exc)
                    continue
                fh.write(_dump(result.to_dict()) + "\n")
                (tdir / f"{_file_stem(example.id)}.json").write_text(
                    json.dumps(result.transcript.to_dict(), ensure_ascii=False, indent=2) + "\n",
                    encoding="utf-8")
        logger.info("mode %s: %d/%d examples done", mode.value,
                    sum(1 for r, _ in outcomes if r is not None), len(inputs))
    return EXIT_PARTIAL if failed else EXIT_OK


# evaluate / annotate

def load_results(path) -> List[PiResult]:
    results = []
    for lineno, line in enumerate(_read_lines(path), 1):
        if not line.strip():
            continue
        try:
            results.append(PiResult.from_dict(json.loads(line)))
        except (ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"{path}:{lineno}: bad result line: {exc}") from None
    return results


def cmd_evaluate(args) -> int:
    costs = cost_model_from_args(args)
    references = load_corpus(args.references, costs, validate=not args.no_validate)
    report = EvalReport(fingerprint={"cost_model": costs.to_dict(), "references_sha256": _sha256(args.references)})
    for path in args.results:
        results = load_results(path)
        name = args.system if args.system and len(args.results) == 1 else Path(path).stem
        evaluate(results, references, system=name, costs=costs, report=report)
    if args.out:
        report.save(args.out)
    print(report.table())
    return EXIT_OK


def cmd_annotate(args) -> int:
    n = export_annotation_sheet(load_results(args.results), args.out)
    logger.info("wrote %d rows to %s", n, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pigec", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_costs(p):
        group = p.add_argument_group("alignment costs")
        for flag in _COST_FLAGS:
            group.add_argument(f"--cost-{flag}", type=Fraction, metavar="Q")

    p = sub.add_parser("extract-edits", help="edits between parallel files, one JSON array per line")
    p.add_argument("--src")
    p.add_argument("--tgt")
    p.add_argument("--m2", help="M2 file; corrections from --annotator")
    p.add_argument("--annotator", type=int, default=0)
    add_costs(p)
    p.set_defaults(func=cmd_extract_edits)

    p = sub.add_parser("apply", help="apply edits JSONL to source lines")
    p.add_argument("--src", required=True)
    p.add_argument("--edits", required=True)
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("explain", help="correct and explain with an LLM backend")
    p.add_argument("--corpus", help="JSONL corpus of examples to explain")
    p.add_argument("--input", help="plain text, one source sentence per line")
    p.add_argument("--text", help="a single source sentence")
    p.add_argument("--few-shot", help="JSONL corpus to draw few-shot examples from")
    p.add_argument("--mode", choices=sorted(MODES), default="pi")
    p.add_argument("--k", type=int, default=DEFAULT_K)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--resample", action="store_true", help="draw fresh few-shot examples per input")
    p.add_argument("--backend", default="live", help="live, live:completion, or mock:SCRIPT.json")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--max-tokens", type=int, default=256)
    p.add_argument("--single-call", action="store_true", help="refuse modes that need more than one call")
    p.add_argument("--no-validate", action="store_true")
    p.add_argument("--replay", help="fingerprint.json of an earlier run to repeat")
    p.add_argument("--out", required=True, help="output directory")
    add_costs(p)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("evaluate", help="score results against a reference corpus")
    p.add_argument("--results", required=True, nargs="+")
    p.add_argument("--references", required=True)
    p.add_argument("--system")
    p.add_argument("--out")
    p.add_argument("--no-validate", action="store_true")
    add_costs(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("annotate", help="export a CSV sheet for human scoring")
    p.add_argument("--results", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_annotate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, PigecError, OSError, ValueError) as exc:
        logger.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
