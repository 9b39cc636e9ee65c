from .tokenizer import ByteTokenizer, TokenSequence, VOCAB_SIZE
from .model import AudioLM, LMConfig, encode_audio
from .loss import next_token_loss
from .lora import DEFAULT_TARGETS, lora_merge, lora_wrap
from .prompts import LETTERS, render_answer, render_prompt, training_tokens
from .scoring import answer, score_options
from .train import LMTrainConfig, finetune
from .checkpoint import LM_FORMAT, load_lm, save_lm
from ..nn.lora import LoRAAdapter

__all__ = [
    "ByteTokenizer",
    "TokenSequence",
    "VOCAB_SIZE",
    "AudioLM",
    "LMConfig",
    "encode_audio",
    "next_token_loss",
    "DEFAULT_TARGETS",
    "lora_merge",
    "lora_wrap",
    "LETTERS",
    "render_answer",
    "render_prompt",
    "training_tokens",
    "answer",
    "score_options",
    "LMTrainConfig",
    "finetune",
    "LM_FORMAT",
    "load_lm",
    "save_lm",
    "LoRAAdapter",
]
