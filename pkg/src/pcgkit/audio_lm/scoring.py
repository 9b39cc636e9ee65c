"""Multiple-choice scoring by answer-span log-likelihood.

The prompt (audio, question, lettered options, "Answer:") is run once
with a key/value cache; each option's serialized answer line is then
scored as a continuation of that shared prefix. Scores are
length-normalized (mean log-likelihood per answer token): summed
log-likelihoods systematically favor short labels, which pushes an
untrained model far from chance level on real label sets. Ties break to
the lowest option index.
"""

from __future__ import annotations

import numpy as np

from ..dsp import PatchSequence
from ..errors import UsageError
from ..nn.functional import log_softmax
from .model import AudioLM
from .prompts import answer_tokens, prompt_tokens


def score_options(model: AudioLM, patches: PatchSequence, item) -> np.ndarray:
    """Answer-span log-likelihood per option, normalized by span length."""
    if len(item.options) < 2:
        raise UsageError("multiple-choice items need at least 2 options")
    prompt_ids = prompt_tokens(model.tokenizer, item.question, item.options).ids
    cache, last_logits = model.prefix_forward(patches, prompt_ids)

    scores = np.empty(len(item.options))
    for k, label in enumerate(item.options):
        ids = np.asarray(answer_tokens(model.tokenizer, k, label).ids, dtype=np.int64)
        rows = [last_logits]
        if len(ids) > 1:
            more, _ = model.extend(cache, ids[:-1])
            rows.extend(more)
        logp = log_softmax(np.stack(rows), axis=-1)
        scores[k] = float(logp[np.arange(len(ids)), ids].sum()) / len(ids)
    return scores


def answer(model: AudioLM, patches: PatchSequence, item) -> int:
    """Index of the highest-scoring option (lowest index on exact ties)."""
    return int(np.argmax(score_options(model, patches, item)))
