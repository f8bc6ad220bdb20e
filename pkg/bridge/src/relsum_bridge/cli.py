"""Command line entry points: serve a model over the wire protocol, or
finetune one on converted pairs."""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import BridgeError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relsum-bridge",
        description="seq2seq scorer backend speaking line-delimited JSON")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="answer protocol requests from a model")
    serve.add_argument("--model", required=True,
                       help="checkpoint directory (or a transformers model id)")
    serve.add_argument("--tcp", metavar="HOST:PORT",
                       help="listen on TCP instead of stdio (port 0 picks one)")
    serve.add_argument("--device", default="cpu")
    serve.add_argument("--max-source-len", type=int, default=256)
    serve.add_argument("--max-target-len", type=int, default=64)

    tune = sub.add_parser("finetune", help="cross-entropy training on pairs")
    tune.add_argument("--train", required=True,
                      help="JSONL with 'source' and 'target' fields "
                           "(output of the converter)")
    tune.add_argument("--out", required=True, help="checkpoint directory")
    tune.add_argument("--model", default=None,
                      help="existing checkpoint to continue from "
                           "(default: fresh small model + vocabulary "
                           "built from the training pairs)")
    tune.add_argument("--vocab-text", action="append", default=[],
                      metavar="FILE",
                      help="extra file whose words join a fresh vocabulary; "
                           "pass the template file so every relation "
                           "verbalization stays encodable (repeatable)")
    tune.add_argument("--lr", type=float, default=1e-4,
                      help="learning rate (low-resource recipe: 1e-5)")
    tune.add_argument("--epochs", type=int, default=20,
                      help="epochs (low-resource recipe: 100)")
    tune.add_argument("--warmup", type=int, default=1000,
                      help="warmup steps (low-resource recipe: 0)")
    tune.add_argument("--weight-decay", type=float, default=5e-6)
    tune.add_argument("--batch-size", type=int, default=8)
    tune.add_argument("--grad-accum", type=int, default=2)
    tune.add_argument("--seed", type=int, default=0)
    tune.add_argument("--device", default="cpu")
    return parser


def _cmd_serve(args) -> int:
    from .model import load_checkpoint
    from .service import ScorerService, serve_stdio, serve_tcp

    model, tokenizer = load_checkpoint(args.model)
    service = ScorerService(model, tokenizer,
                            max_source_len=args.max_source_len,
                            max_target_len=args.max_target_len,
                            device=args.device)
    if args.tcp:
        host, sep, port = args.tcp.rpartition(":")
        if not sep or not port.isdigit():
            raise BridgeError("--tcp expects HOST:PORT")
        serve_tcp(service, host, int(port))
    else:
        serve_stdio(service)
    return 0


def _cmd_finetune(args) -> int:
    from .finetune import finetune

    losses = finetune(args.train, args.out, model_path=args.model,
                      lr=args.lr, epochs=args.epochs, warmup=args.warmup,
                      weight_decay=args.weight_decay,
                      batch_size=args.batch_size, grad_accum=args.grad_accum,
                      seed=args.seed, device=args.device,
                      vocab_texts=tuple(args.vocab_text))
    print(f"finetune: {len(losses)} epoch(s), loss {losses[0]:.4f} -> "
          f"{losses[-1]:.4f}, checkpoint in {args.out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "serve":
            return _cmd_serve(args)
        return _cmd_finetune(args)
    except BridgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
