"""Prompt and answer serialization for multiple-choice items.

Options render as lettered lines so duplicated distractor labels stay
distinguishable; the supervised answer span is the single line
"<letter>. <label>" (plus EOS) for the gold index.
"""

from __future__ import annotations

import numpy as np

from ..errors import UsageError
from .tokenizer import ByteTokenizer, TokenSequence

LETTERS = "ABCDEF"
PROMPT_VERSION = "mc-prompt-v1"


def render_prompt(question: str, options) -> str:
    if len(options) > len(LETTERS):
        raise UsageError(f"at most {len(LETTERS)} options supported, got {len(options)}")
    lines = [question]
    lines += [f"{LETTERS[k]}. {label}" for k, label in enumerate(options)]
    lines.append("Answer:")
    return "\n".join(lines)


def render_answer(index: int, label: str) -> str:
    return f"\n{LETTERS[index]}. {label}"


def training_tokens(
    tokenizer: ByteTokenizer, question: str, options, gold_index: int
) -> tuple[TokenSequence, np.ndarray]:
    """Full token sequence plus the supervision mask over the answer span."""
    prompt = render_prompt(question, options)
    answer = render_answer(gold_index, options[gold_index])
    prompt_ids = tokenizer.tokenize(prompt, bos=True).ids
    answer_ids = tokenizer.tokenize(answer, eos=True).ids
    ids = prompt_ids + answer_ids
    mask = np.zeros(len(ids), dtype=bool)
    mask[len(prompt_ids):] = True
    return TokenSequence(ids=ids, text=prompt + answer), mask


def prompt_tokens(tokenizer: ByteTokenizer, question: str, options) -> TokenSequence:
    return tokenizer.tokenize(render_prompt(question, options), bos=True)


def answer_tokens(tokenizer: ByteTokenizer, index: int, label: str) -> TokenSequence:
    return tokenizer.tokenize(render_answer(index, label), eos=True)
