"""Command-line interface and HTTP service.

Subcommands: `build` (reports -> KG + passages), `ask` (one-shot or
REPL), `eval` (four metrics over a test set, for the fused system and
both single-module variants), `serve` (HTTP /ask sharing the exact code
path of `ask`).
"""

import argparse
import json
import sys
from pathlib import Path

from .engine import (EngineConfig, QaEngine, build_artifacts, response_to_dict)
from .errors import AeroQaError
from .fusion import (EvalConfig, evaluate, format_report_table, load_testset)
from .reader import Retriever


def _engine_config(args: argparse.Namespace) -> EngineConfig:
    return EngineConfig(
        provider=args.provider,
        reader=args.reader,
        retriever=Retriever(args.retriever),
        k=args.k,
        tau=args.tau,
    )


def _add_engine_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", required=True, help="directory written by `build`")
    parser.add_argument("--provider", default="hashed",
                        help="hashed | file:PATH | remote:URL")
    parser.add_argument("--reader", default="fallback", help="fallback | remote:URL")
    parser.add_argument("--retriever", default="bm25", choices=["bm25", "dense"])
    parser.add_argument("--k", type=int, default=5, help="passages sent to the reader")
    parser.add_argument("--tau", type=float, default=0.8,
                        help="semantic similarity threshold")


def cmd_build(args: argparse.Namespace) -> int:
    result = build_artifacts(args.reports, args.patterns, args.taxonomy, args.out)
    for filename, message in result.errors:
        print(f"error: {filename}: {message}", file=sys.stderr)
    print(f"reports ok, {len(result.passages)} passages, "
          f"{result.stats.axioms} triples -> {args.out}")
    for key, value in result.stats.as_dict().items():
        print(f"  {key}: {value}")
    return 1 if result.errors else 0


def _print_response(question: str, engine: QaEngine, as_json: bool) -> None:
    response = engine.answer(question)
    if as_json:
        print(json.dumps(response_to_dict(question, response), ensure_ascii=False,
                         indent=2))
        return
    if not response.items:
        print("no answer (both modules abstained or returned nothing)")
        return
    for i, item in enumerate(response.items, start=1):
        tag = "KG" if item.source.value == "kg" else "DL"
        line = f"{i:2d}. [{tag}] {item.text}"
        if item.passage is not None:
            snippet = item.passage.text
            if len(snippet) > 100:
                snippet = snippet[:97] + "..."
            line += f"\n      ({item.passage.report_id} / {item.passage.heading}) {snippet}"
        print(line)


def cmd_ask(args: argparse.Namespace) -> int:
    engine = QaEngine.from_data_dir(args.data, _engine_config(args))
    if args.question:
        _print_response(args.question, engine, args.json)
        return 0
    # REPL mode
    print("aeroqa - type a question, empty line or Ctrl-D to quit")
    while True:
        try:
            question = input("? ").strip()
        except EOFError:
            break
        if not question:
            break
        _print_response(question, engine, args.json)
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    engine = QaEngine.from_data_dir(args.data, _engine_config(args))
    testset = load_testset(Path(args.testset).read_text(encoding="utf-8"))
    config = EvalConfig(provider=engine.provider, tau=args.tau)
    reports = {
        "kgqa": evaluate(engine.kg_only, testset, config),
        "dlqa": evaluate(engine.dl_only, testset, config),
        "fused": evaluate(engine.answer, testset, config),
    }
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(
        json.dumps({name: r.as_dict() for name, r in reports.items()},
                   ensure_ascii=False, indent=2),
        encoding="utf-8")
    table = format_report_table(reports)
    out_path.with_suffix(out_path.suffix + ".txt").write_text(table + "\n",
                                                              encoding="utf-8")
    print(table)
    return 0


def make_service(engine: QaEngine):
    """FastAPI app over a shared immutable engine."""
    from fastapi import FastAPI, HTTPException, Request
    from fastapi.exceptions import RequestValidationError
    from fastapi.responses import JSONResponse
    from pydantic import BaseModel

    class AskBody(BaseModel):
        question: str

    service = FastAPI(title="aeroqa")

    @service.exception_handler(RequestValidationError)
    def malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @service.get("/health")
    def health():
        return {"status": "ok"}

    @service.post("/ask")
    def ask(body: AskBody):
        if not body.question.strip():
            raise HTTPException(status_code=400, detail="question must be non-empty")
        response = engine.answer(body.question)
        return response_to_dict(body.question, response)

    return service


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    engine = QaEngine.from_data_dir(args.data, _engine_config(args))
    uvicorn.run(make_service(engine), host="127.0.0.1", port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aeroqa",
                                     description="hybrid KG + retriever-reader QA")
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build", help="build KG and passage files from reports")
    p_build.add_argument("--reports", required=True, help="directory of .txt reports")
    p_build.add_argument("--patterns", required=True, help="extraction pattern JSON")
    p_build.add_argument("--taxonomy", default=None, help="taxonomy file (optional)")
    p_build.add_argument("--out", required=True, help="output directory")
    p_build.set_defaults(func=cmd_build)

    p_ask = sub.add_parser("ask", help="answer one question (REPL without argument)")
    p_ask.add_argument("question", nargs="?", default=None)
    p_ask.add_argument("--json", action="store_true", help="emit JSON")
    _add_engine_flags(p_ask)
    p_ask.set_defaults(func=cmd_ask)

    p_eval = sub.add_parser("eval", help="score the system on a test set")
    p_eval.add_argument("--testset", required=True)
    p_eval.add_argument("--out", required=True, help="report JSON path")
    _add_engine_flags(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    p_serve = sub.add_parser("serve", help="HTTP service with /health and /ask")
    p_serve.add_argument("--port", type=int, default=8080)
    _add_engine_flags(p_serve)
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except AeroQaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
