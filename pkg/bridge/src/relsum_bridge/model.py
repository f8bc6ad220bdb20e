"""Checkpoint construction and loading.

Checkpoints produced here are ordinary `save_pretrained` directories
plus a vocab.json for the word tokenizer. `load_checkpoint` recognizes
them by that file; anything else is handed to the transformers auto
classes so a stock pretrained summarization model can serve too.
"""

from __future__ import annotations

from pathlib import Path

import torch
from transformers import BartConfig, BartForConditionalGeneration
from transformers.utils import logging as hf_logging

from .errors import BridgeError
from .tokenizer import VOCAB_FILE, WordTokenizer

hf_logging.disable_progress_bar()


def build_model(vocab_size: int, seed: int = 0) -> BartForConditionalGeneration:
    """A small randomly initialized encoder-decoder, deterministic in seed."""
    config = BartConfig(
        vocab_size=vocab_size,
        d_model=64,
        encoder_layers=2,
        decoder_layers=2,
        encoder_attention_heads=4,
        decoder_attention_heads=4,
        encoder_ffn_dim=128,
        decoder_ffn_dim=128,
        max_position_embeddings=512,
        pad_token_id=WordTokenizer.pad_id,
        bos_token_id=WordTokenizer.bos_id,
        eos_token_id=WordTokenizer.eos_id,
        decoder_start_token_id=WordTokenizer.bos_id,
        forced_eos_token_id=None,
    )
    torch.manual_seed(seed)
    return BartForConditionalGeneration(config)


def save_checkpoint(model, tokenizer: WordTokenizer,
                    out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out)
    tokenizer.save(out)


class _HFTokenizerAdapter:
    """Expose a transformers tokenizer through the word-tokenizer surface."""

    def __init__(self, inner):
        self.inner = inner
        if inner.eos_token_id is None:
            raise BridgeError("model tokenizer has no EOS token")
        self.eos_id = int(inner.eos_token_id)

    @property
    def vocab_size(self) -> int:
        return len(self.inner)

    def encode(self, text: str) -> list[int]:
        return [int(i) for i in self.inner.encode(text,
                                                  add_special_tokens=False)]

    def decode(self, ids: list[int]) -> str:
        return self.inner.decode([int(i) for i in ids],
                                 skip_special_tokens=True)


def load_checkpoint(model_id: str | Path):
    """(model, tokenizer) in eval mode. Local word-tokenizer checkpoints
    are detected by vocab.json; other ids go through the auto classes."""
    path = Path(model_id)
    if path.is_dir() and (path / VOCAB_FILE).exists():
        tokenizer = WordTokenizer.load(path)
        try:
            model = BartForConditionalGeneration.from_pretrained(path)
        except (OSError, ValueError) as exc:
            raise BridgeError(f"{path}: cannot load model ({exc})") from exc
        return model.eval(), tokenizer
    try:
        from transformers import AutoModelForSeq2SeqLM, AutoTokenizer
        model = AutoModelForSeq2SeqLM.from_pretrained(str(model_id))
        tokenizer = _HFTokenizerAdapter(AutoTokenizer.from_pretrained(str(model_id)))
    except (OSError, ValueError) as exc:
        raise BridgeError(f"{model_id}: cannot load model ({exc})") from exc
    return model.eval(), tokenizer
