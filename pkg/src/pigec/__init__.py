"""Explainable grammatical error correction by prompt insertion."""

__version__ = "0.1.0"

from .align import CostModel, align, substitution_cost
from .edits import Edit, apply_edits, extract_edits, format_edit, merge_ops
from .pi import Mode, PromptConfig, build_prompt, explain, pi_explain
from .text import Token, detokenize, tokenize

__all__ = [
    "CostModel", "Edit", "Mode", "PromptConfig", "Token",
    "align", "apply_edits", "build_prompt", "detokenize", "explain", "extract_edits",
    "format_edit", "merge_ops", "pi_explain", "substitution_cost", "tokenize",
]
