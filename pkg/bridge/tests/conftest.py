"""Session fixtures: converted training pairs, trained checkpoints, and
clients for a served checkpoint.

The pairs come from the core package's convert CLI, exactly as a user
would produce them; the checkpoints are trained once per session and
shared across the protocol and finetune tests.
"""

import json
import subprocess
import sys
from pathlib import Path

import pytest

from relsum import create_backend, shipped_file

REPO_DATA = Path(__file__).resolve().parents[2] / "tests" / "data"
TEMPLATES = str(shipped_file("tacred_semantic1.tsv"))
LABELS = str(shipped_file("tacred_labels.txt"))

BRIDGE = [sys.executable, "-m", "relsum_bridge"]
RELSUM = [sys.executable, "-m", "relsum"]


@pytest.hookimpl(tryfirst=True, hookwrapper=True)
def pytest_runtest_makereport(item, call):
    # stash the call-phase report so fixtures can see pass/fail after the test
    outcome = yield
    rep = outcome.get_result()
    setattr(item, "rep_" + rep.when, rep)


def run_cli(argv):
    proc = subprocess.run(argv, capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="session")
def pairs_file(tmp_path_factory):
    out = tmp_path_factory.mktemp("pairs") / "pairs.jsonl"
    run_cli(RELSUM + ["convert", "--templates", TEMPLATES,
                      "--in", str(REPO_DATA / "synth_train.jsonl"),
                      "--scheme", "typed_marker_punct", "--out", str(out)])
    assert len(out.read_text().splitlines()) == 100
    return out


@pytest.fixture(scope="session")
def quick_checkpoint(pairs_file, tmp_path_factory):
    """Two-epoch checkpoint, trained through the bridge CLI."""
    out = tmp_path_factory.mktemp("ckpt") / "quick"
    run_cli(BRIDGE + ["finetune", "--train", str(pairs_file),
                      "--out", str(out), "--epochs", "2", "--lr", "1e-3",
                      "--warmup", "0", "--vocab-text", TEMPLATES])
    return out


@pytest.fixture(scope="session")
def overfit_checkpoint(pairs_file, tmp_path_factory):
    """Checkpoint trained long enough to pin the fixture targets."""
    from relsum_bridge import finetune

    out = tmp_path_factory.mktemp("ckpt") / "overfit"
    finetune(pairs_file, out, epochs=20, lr=3e-3, warmup=0,
             vocab_texts=(TEMPLATES,))
    return out


@pytest.fixture(scope="session")
def quick_serve_spec(quick_checkpoint):
    """Backend spec string that serves the quick checkpoint on demand."""
    return "cmd:" + " ".join(BRIDGE + ["serve", "--model",
                                       str(quick_checkpoint)])


@pytest.fixture(scope="session")
def live_backend(quick_serve_spec):
    """One serving process kept open for the whole session."""
    backend = create_backend(quick_serve_spec)
    yield backend
    backend.close()


@pytest.fixture(scope="session")
def probe():
    """Run the core package's probe command against a backend spec."""
    def run(backend_spec):
        proc = run_cli(RELSUM + ["probe-backend", "--backend", backend_spec])
        return json.loads(proc.stdout)
    return run
