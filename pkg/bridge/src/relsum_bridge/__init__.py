"""Model backend for the relsum scorer protocol.

Serves tokenize / next-token / generate requests from a seq2seq model
over stdio or TCP, and finetunes checkpoints on converted pairs.
"""

from .errors import BridgeError
from .finetune import finetune, load_pairs
from .model import build_model, load_checkpoint, save_checkpoint
from .service import ScorerService, serve_stdio, serve_tcp
from .tokenizer import WordTokenizer

__version__ = "0.1.0"

__all__ = [
    "BridgeError",
    "ScorerService",
    "WordTokenizer",
    "build_model",
    "finetune",
    "load_checkpoint",
    "load_pairs",
    "save_checkpoint",
    "serve_stdio",
    "serve_tcp",
    "__version__",
]
