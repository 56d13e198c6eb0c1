"""CLI entry point: `modelserver [--port N] [--embed-model ID] ...`."""

import argparse

import uvicorn

from .config import ServerConfig
from .service import make_service


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="modelserver")
    parser.add_argument("--port", type=int, default=None)
    parser.add_argument("--embed-model", default=None,
                        help="`hashed` or a sentence-transformers model id")
    parser.add_argument("--extractive-model", default=None,
                        help="`overlap` or a transformers QA model id")
    parser.add_argument("--generative-model", default=None,
                        help="`echo` or a transformers QA model id")
    parser.add_argument("--max-batch", type=int, default=None)
    args = parser.parse_args(argv)

    overrides = {
        key: value
        for key, value in (
            ("port", args.port),
            ("embed_model", args.embed_model),
            ("extractive_model", args.extractive_model),
            ("generative_model", args.generative_model),
            ("max_batch", args.max_batch),
        )
        if value is not None
    }
    config = ServerConfig.from_env(**overrides)
    uvicorn.run(make_service(config), host="127.0.0.1", port=config.port)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
