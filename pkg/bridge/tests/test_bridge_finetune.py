"""Training behavior: loss decrease, checkpoint layout, determinism."""

import json
import math

import pytest

from relsum import shipped_file
from relsum_bridge import (
    BridgeError,
    ScorerService,
    WordTokenizer,
    finetune,
    load_checkpoint,
    load_pairs,
)

TEMPLATES = str(shipped_file("tacred_semantic1.tsv"))


@pytest.fixture(scope="module")
def log(quick_checkpoint):
    with open(quick_checkpoint / "training_log.json", encoding="utf-8") as fh:
        return json.load(fh)


class TestQuickFinetune:
    """The two-epoch CLI run on the 100-pair fixture."""

    def test_log_records_the_run(self, log):
        assert log["epochs"] == 2
        assert log["examples"] == 100
        assert log["warmup"] == 0

    def test_checkpoint_directory_layout(self, quick_checkpoint):
        for name in ("vocab.json", "model.safetensors", "training_log.json",
                     "config.json"):
            assert (quick_checkpoint / name).exists()

    def test_checkpoint_loads_in_eval_mode(self, quick_checkpoint):
        model, tokenizer = load_checkpoint(quick_checkpoint)
        assert not model.training
        assert isinstance(tokenizer, WordTokenizer)
        assert model.config.vocab_size == tokenizer.vocab_size

    def test_template_words_survive_in_the_vocabulary(self, quick_checkpoint):
        # without --vocab-text, relations absent from the training targets
        # would all encode to <unk> and become indistinguishable
        _, tokenizer = load_checkpoint(quick_checkpoint)
        assert tokenizer.unk_id not in tokenizer.encode("dissolved religion")


class TestOverfitSanity:
    """A deliberately overfit model should pin the fixture targets."""

    def test_gold_final_token_lands_in_top_five(self, overfit_checkpoint,
                                                pairs_file):
        model, tokenizer = load_checkpoint(overfit_checkpoint)
        service = ScorerService(model, tokenizer)
        every_id = list(range(tokenizer.vocab_size))
        hits = 0
        pairs = load_pairs(pairs_file)[:50]
        for source, target in pairs:
            ids = tokenizer.encode(target)
            probs = service.next(source, ids[:-1], every_id)["probs"]
            ranked = sorted(every_id, key=lambda i: -probs[i])
            hits += ids[-1] in ranked[:5]
        assert hits >= 0.8 * len(pairs)


class TestDeterminism:
    """Same seed, same data, same result, CLI or library."""

    def test_library_run_matches_the_cli_run_bit_for_bit(
            self, quick_checkpoint, pairs_file, tmp_path):
        losses = finetune(pairs_file, tmp_path / "again", epochs=2, lr=1e-3,
                          warmup=0, vocab_texts=(TEMPLATES,))
        with open(quick_checkpoint / "training_log.json",
                  encoding="utf-8") as fh:
            assert json.load(fh)["losses"] == losses
        for name in ("model.safetensors", "vocab.json"):
            assert ((tmp_path / "again" / name).read_bytes()
                    == (quick_checkpoint / name).read_bytes())


class TestContinueFromCheckpoint:
    """model_path resumes with the checkpoint's frozen vocabulary."""

    def test_one_more_epoch_runs_on_the_saved_model(self, quick_checkpoint,
                                                    pairs_file, tmp_path):
        losses = finetune(pairs_file, tmp_path / "more",
                          model_path=quick_checkpoint, epochs=1, lr=1e-4,
                          warmup=0)
        assert len(losses) == 1 and math.isfinite(losses[0])
        assert ((tmp_path / "more" / "vocab.json").read_bytes()
                == (quick_checkpoint / "vocab.json").read_bytes())


class TestFinetuneValidation:
    """Bad inputs fail up front with named causes."""

    def test_nonpositive_epochs_rejected(self, pairs_file, tmp_path):
        with pytest.raises(BridgeError, match="positive"):
            finetune(pairs_file, tmp_path / "out", epochs=0)

    def test_missing_training_file_rejected(self, tmp_path):
        with pytest.raises(BridgeError, match="nope.jsonl"):
            finetune(tmp_path / "nope.jsonl", tmp_path / "out")

    def test_unreadable_vocab_text_rejected(self, pairs_file, tmp_path):
        with pytest.raises(BridgeError, match="missing.txt"):
            finetune(pairs_file, tmp_path / "out",
                     vocab_texts=(tmp_path / "missing.txt",))

    def test_model_path_without_a_model_rejected(self, pairs_file, tmp_path):
        (tmp_path / "empty").mkdir()
        with pytest.raises(BridgeError, match="cannot load model"):
            finetune(pairs_file, tmp_path / "out",
                     model_path=tmp_path / "empty")
