"""Byte-level tokenizer: 256 byte ids plus PAD/BOS/EOS specials.

Any UTF-8 string round-trips exactly; there is no out-of-vocabulary
text.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import UsageError

PAD, BOS, EOS = 256, 257, 258
VOCAB_SIZE = 259


@dataclass(frozen=True)
class TokenSequence:
    ids: tuple[int, ...]
    text: str = ""

    def __len__(self) -> int:
        return len(self.ids)


class ByteTokenizer:
    vocab_size = VOCAB_SIZE
    pad_id, bos_id, eos_id = PAD, BOS, EOS

    def tokenize(self, text: str, bos: bool = False, eos: bool = False) -> TokenSequence:
        ids = list(text.encode("utf-8"))
        if bos:
            ids.insert(0, BOS)
        if eos:
            ids.append(EOS)
        return TokenSequence(ids=tuple(ids), text=text)

    def detokenize(self, ids) -> str:
        data = bytes(i for i in ids if 0 <= i < 256)
        return data.decode("utf-8")

    def describe(self) -> dict:
        return {
            "kind": "byte",
            "vocab_size": VOCAB_SIZE,
            "specials": {"pad": PAD, "bos": BOS, "eos": EOS},
        }


def check_ids(ids, vocab_size: int) -> None:
    for i in ids:
        if not 0 <= i < vocab_size:
            raise UsageError(f"token id {i} outside vocabulary of size {vocab_size}")
