"""Thin HTTP client for the vardro service.

Every subcommand builds a request and sends it to the service; by default
the app is mounted in-process over an ASGI transport (no socket, same
results), and ``--url`` points the client at a remote server instead.
``serve`` runs the service under uvicorn.

Exit codes: 0 success, 1 invalid config, 2 runtime divergence, 3 I/O
failure.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys
from pathlib import Path

import httpx

EXIT_OK = 0
EXIT_INVALID_CONFIG = 1
EXIT_DIVERGENCE = 2
EXIT_IO = 3

_KIND_TO_EXIT = {
    "invalid_config": EXIT_INVALID_CONFIG,
    "divergence": EXIT_DIVERGENCE,
    "io_failure": EXIT_IO,
}


class InProcessTransport(httpx.BaseTransport):
    """Sync bridge onto the ASGI app: each request runs the app to
    completion and returns a fully buffered response."""

    def __init__(self, app):
        self._asgi = httpx.ASGITransport(app=app)

    def handle_request(self, request: httpx.Request) -> httpx.Response:
        async def call() -> httpx.Response:
            response = await self._asgi.handle_async_request(request)
            body = await response.aread()
            await response.aclose()
            return httpx.Response(
                status_code=response.status_code,
                headers=response.headers,
                content=body,
            )

        return asyncio.run(call())


def make_client(url: str | None) -> httpx.Client:
    if url:
        return httpx.Client(base_url=url, timeout=600.0)
    from .service.app import app

    return httpx.Client(transport=InProcessTransport(app), base_url="http://vardro", timeout=None)


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _exit_code_for(response: httpx.Response) -> int:
    if response.status_code == 422:
        return EXIT_INVALID_CONFIG
    try:
        detail = response.json().get("detail")
    except ValueError:
        detail = None
    if isinstance(detail, dict):
        return _KIND_TO_EXIT.get(detail.get("kind"), EXIT_DIVERGENCE)
    return EXIT_INVALID_CONFIG if response.status_code < 500 else EXIT_DIVERGENCE


def _post(args, path: str, payload: dict) -> tuple[int, dict | None]:
    try:
        with make_client(args.url) as client:
            response = client.post(path, json=payload)
    except httpx.HTTPError as exc:
        return _fail(f"cannot reach service: {exc}", EXIT_IO), None
    if response.status_code != 200:
        print(f"error: {response.text}", file=sys.stderr)
        return _exit_code_for(response), None
    return EXIT_OK, response.json()


def _load_json_arg(path: str, stdin_ok: bool = False):
    if stdin_ok and path in ("-", ""):
        return json.load(sys.stdin)
    return json.loads(Path(path).read_text())


def cmd_solve(args) -> int:
    try:
        doc = _load_json_arg(args.input, stdin_ok=True)
    except OSError as exc:
        return _fail(str(exc), EXIT_IO)
    except (json.JSONDecodeError, ValueError) as exc:
        return _fail(f"invalid solve input: {exc}", EXIT_INVALID_CONFIG)
    code, body = _post(args, "/solve", doc if isinstance(doc, dict) else {})
    if code == EXIT_OK:
        print(json.dumps({"weights": body["weights"], "objective": body["objective"]}))
    return code


def cmd_train(args) -> int:
    try:
        config = _load_json_arg(args.config)
    except OSError as exc:
        return _fail(str(exc), EXIT_IO)
    except json.JSONDecodeError as exc:
        return _fail(f"invalid config JSON: {exc}", EXIT_INVALID_CONFIG)
    code, body = _post(args, "/train", {"config": config})
    if code == EXIT_OK:
        print(json.dumps(body["summary"], indent=2, sort_keys=True))
    return code


def cmd_sweep(args) -> int:
    try:
        config = _load_json_arg(args.config)
    except OSError as exc:
        return _fail(str(exc), EXIT_IO)
    except json.JSONDecodeError as exc:
        return _fail(f"invalid config JSON: {exc}", EXIT_INVALID_CONFIG)
    payload = {
        "config": config,
        "methods": args.methods,
        "seeds": args.seeds,
        "output_dir": args.output_dir,
    }
    code, body = _post(args, "/sweep", payload)
    if code == EXIT_OK:
        print(json.dumps(body["summary"], indent=2, sort_keys=True))
    return code


def cmd_eval(args) -> int:
    try:
        checkpoint = _load_json_arg(args.checkpoint)
        dataset = _load_json_arg(args.dataset)
    except OSError as exc:
        return _fail(str(exc), EXIT_IO)
    except json.JSONDecodeError as exc:
        return _fail(f"invalid JSON input: {exc}", EXIT_INVALID_CONFIG)
    payload: dict = {
        "checkpoint": checkpoint,
        "dataset": dataset,
        "seed": args.seed,
        "split": args.split,
    }
    if args.corrupt is not None:
        payload["corruption"] = {"kind": args.corrupt, "severity": args.severity}
    code, body = _post(args, "/evaluate", payload)
    if code == EXIT_OK:
        print(json.dumps(body["metrics"], indent=2, sort_keys=True))
    return code


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vardro", description=__doc__)
    parser.add_argument("--url", default=None, help="remote service URL (default: in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one inner LP from JSON {losses, epsilons}")
    p.add_argument("input", nargs="?", default="-", help="input file, or - for stdin")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("train", help="run one experiment config")
    p.add_argument("config", help="path to an experiment config JSON file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="cross product of methods and seeds over a base config")
    p.add_argument("config", help="path to the base experiment config JSON file")
    p.add_argument("--methods", nargs="+", required=True, choices=["erm", "kl_dro", "var_dro"])
    p.add_argument("--seeds", nargs="+", type=int, required=True)
    p.add_argument("--output-dir", default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("eval", help="evaluate a checkpoint against a dataset spec")
    p.add_argument("--checkpoint", required=True, help="checkpoint JSON file")
    p.add_argument("--dataset", required=True, help="dataset spec JSON file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split", choices=["train", "test"], default="test")
    p.add_argument("--corrupt", default=None, help="corruption kind for shifted evaluation")
    p.add_argument("--severity", type=int, default=3)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="run the HTTP service under uvicorn")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
