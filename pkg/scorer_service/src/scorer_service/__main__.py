"""Run the scoring service: flags override SCORER_* environment variables."""

from __future__ import annotations

import argparse
import os
import sys

import uvicorn

from .app import create_app
from .models import load_backend


def _env(name: str, default):
    return os.environ.get(f"SCORER_{name}", default)


def parse_stub_logits(raw: str | None):
    if not raw:
        return None
    yes, no = (float(part) for part in raw.split(","))
    return (yes, no)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="scorer-service")
    parser.add_argument("--model", default=_env("MODEL", "stub"),
                        help="checkpoint path/name, or 'stub'")
    parser.add_argument("--kind", default=_env("MODEL_KIND", "auto"),
                        choices=["auto", "sequence", "seq2seq"])
    parser.add_argument("--device", default=_env("DEVICE", "cpu"))
    parser.add_argument("--host", default=_env("HOST", "127.0.0.1"))
    parser.add_argument("--port", type=int, default=int(_env("PORT", 8071)))
    parser.add_argument("--max-batch", type=int,
                        default=int(_env("MAX_BATCH", 32)))
    parser.add_argument("--max-input-tokens", type=int,
                        default=int(_env("MAX_INPUT_TOKENS", 4096)))
    parser.add_argument("--stub-logits", default=_env("STUB_LOGITS", None),
                        help="fixed 'yes,no' logits for the stub backend")
    args = parser.parse_args(argv)

    # A broken checkpoint must abort startup, not limp along.
    backend = load_backend(
        model=args.model,
        kind=args.kind,
        device=args.device,
        stub_logits=parse_stub_logits(args.stub_logits),
    )
    app = create_app(
        backend,
        max_batch=args.max_batch,
        max_input_tokens=args.max_input_tokens,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


if __name__ == "__main__":
    sys.exit(main())
