"""Cross-entropy finetuning on converted (source, target) pairs.

Adam with a linear warmup-then-decay schedule. Defaults mirror the full
training recipe (lr 1e-4, 20 epochs, warmup 1000, weight decay 5e-6,
gradient accumulation 2); the low-resource recipe is lr 1e-5, 100
epochs, no warmup.
"""

from __future__ import annotations

import json
import math
import random
from pathlib import Path

import torch
from torch.optim.lr_scheduler import LambdaLR

from .errors import BridgeError
from .model import build_model, load_checkpoint, save_checkpoint
from .tokenizer import WordTokenizer


def load_pairs(path: str | Path) -> list[tuple[str, str]]:
    pairs: list[tuple[str, str]] = []
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise BridgeError(f"{path}: {exc}") from exc
    with fh:
        for index, line in enumerate(fh):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise BridgeError(
                    f"{path}: record {index}: invalid JSON ({exc})") from exc
            if "source" not in rec or "target" not in rec:
                raise BridgeError(f"{path}: record {index}: training needs "
                                  "'source' and 'target' fields")
            pairs.append((str(rec["source"]), str(rec["target"])))
    if not pairs:
        raise BridgeError(f"{path}: no training pairs")
    return pairs


def _make_schedule(optimizer, warmup: int, total: int) -> LambdaLR:
    def factor(step: int) -> float:
        if warmup > 0 and step < warmup:
            return (step + 1) / warmup
        if total <= warmup:
            return 1.0
        return max(0.0, (total - step) / (total - warmup))
    return LambdaLR(optimizer, factor)


def _batches(examples, batch_size: int, pad_id: int, device: str):
    for lo in range(0, len(examples), batch_size):
        chunk = examples[lo:lo + batch_size]
        src_width = max(len(src) for src, _ in chunk)
        tgt_width = max(len(tgt) for _, tgt in chunk)
        input_ids = torch.full((len(chunk), src_width), pad_id,
                               dtype=torch.long)
        mask = torch.zeros((len(chunk), src_width), dtype=torch.long)
        labels = torch.full((len(chunk), tgt_width), -100, dtype=torch.long)
        for row, (src, tgt) in enumerate(chunk):
            input_ids[row, :len(src)] = torch.tensor(src)
            mask[row, :len(src)] = 1
            labels[row, :len(tgt)] = torch.tensor(tgt)
        yield (input_ids.to(device), mask.to(device), labels.to(device))


def finetune(train_path: str | Path, out_dir: str | Path,
             model_path: str | Path | None = None, lr: float = 1e-4,
             epochs: int = 20, warmup: int = 1000,
             weight_decay: float = 5e-6, batch_size: int = 8,
             grad_accum: int = 2, seed: int = 0, device: str = "cpu",
             max_source_len: int = 256, max_target_len: int = 64,
             vocab_size: int = 8000,
             vocab_texts: tuple[str | Path, ...] = ()) -> list[float]:
    """Train, save a checkpoint into out_dir, return per-epoch mean losses.

    vocab_texts lists extra files whose words join the fresh vocabulary
    (pass the template file here: a word-level model can only score
    relation verbalizations whose words it knows, and relations absent
    from the training targets would otherwise collapse to <unk>).
    """
    if epochs <= 0 or batch_size <= 0 or grad_accum <= 0:
        raise BridgeError("epochs, batch_size, and grad_accum must be positive")
    pairs = load_pairs(train_path)

    if model_path is not None:
        model, tokenizer = load_checkpoint(model_path)
        if not isinstance(tokenizer, WordTokenizer):
            raise BridgeError("finetune only supports word-tokenizer checkpoints")
    else:
        pool = [text for pair in pairs for text in pair]
        for extra in vocab_texts:
            try:
                with open(extra, encoding="utf-8") as fh:
                    pool.append(fh.read())
            except OSError as exc:
                raise BridgeError(f"{extra}: {exc}") from exc
        tokenizer = WordTokenizer.from_texts(pool, max_size=vocab_size)
        model = build_model(tokenizer.vocab_size, seed=seed)
    model = model.to(device).train()

    examples = []
    for source, target in pairs:
        src = tokenizer.encode(source)[:max_source_len] or [tokenizer.eos_id]
        tgt = tokenizer.encode(target)[:max_target_len - 1] + [tokenizer.eos_id]
        examples.append((src, tgt))

    steps_per_epoch = math.ceil(math.ceil(len(examples) / batch_size)
                                / grad_accum)
    optimizer = torch.optim.AdamW(model.parameters(), lr=lr,
                                  weight_decay=weight_decay)
    schedule = _make_schedule(optimizer, warmup, steps_per_epoch * epochs)

    torch.manual_seed(seed)
    shuffler = random.Random(seed)
    losses: list[float] = []
    for epoch in range(epochs):
        shuffler.shuffle(examples)
        epoch_losses: list[float] = []
        pending = 0
        batches = list(_batches(examples, batch_size, tokenizer.pad_id,
                                device))
        for index, (input_ids, mask, labels) in enumerate(batches):
            loss = model(input_ids=input_ids, attention_mask=mask,
                         labels=labels).loss
            epoch_losses.append(float(loss.detach()))
            (loss / grad_accum).backward()
            pending += 1
            if pending == grad_accum or index == len(batches) - 1:
                optimizer.step()
                schedule.step()
                optimizer.zero_grad()
                pending = 0
        losses.append(sum(epoch_losses) / len(epoch_losses))

    model.eval()
    out = Path(out_dir)
    save_checkpoint(model, tokenizer, out)
    log = {"losses": losses, "lr": lr, "epochs": epochs, "warmup": warmup,
           "weight_decay": weight_decay, "batch_size": batch_size,
           "grad_accum": grad_accum, "seed": seed, "examples": len(examples)}
    with open(out / "training_log.json", "w", encoding="utf-8") as fh:
        json.dump(log, fh, indent=2)
        fh.write("\n")
    return losses
