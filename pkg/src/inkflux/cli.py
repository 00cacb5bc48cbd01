"""Command-line client for the inkflux service.

Every subcommand speaks HTTP to the service API; by default the app runs
in-process, and --server (or INKFLUX_SERVER) points the same commands at a
remote deployment. Exit codes: 0 success, 1 usage error, 2 data error,
3 provider error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional

import httpx

SERVER_ENV = "INKFLUX_SERVER"
EMBED_ENDPOINT_ENV = "INKFLUX_EMBED_ENDPOINT"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_PROVIDER = 3

_STATUS_TO_EXIT = {400: EXIT_DATA, 422: EXIT_DATA, 502: EXIT_PROVIDER}


class CliError(Exception):
    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


class InProcessTransport(httpx.BaseTransport):
    """Serves each request by running the ASGI app on a private event loop,
    so the CLI works without a server process."""

    def __init__(self, app):
        self._app = app

    def handle_request(self, request: httpx.Request) -> httpx.Response:
        import asyncio

        transport = httpx.ASGITransport(app=self._app)

        async def run() -> httpx.Response:
            response = await transport.handle_async_request(request)
            body = await response.aread()
            await response.aclose()
            return httpx.Response(response.status_code, headers=response.headers, content=body)

        return asyncio.run(run())


def make_client(server: Optional[str]) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=httpx.Timeout(300.0))
    from .service import app

    return httpx.Client(transport=InProcessTransport(app), base_url="http://inkflux.local")


def _call(client, path: str, payload: dict) -> dict:
    try:
        response = client.post(path, json=payload)
    except httpx.HTTPError as exc:
        raise CliError(f"request to {path} failed: {exc}", EXIT_PROVIDER)
    if response.status_code != 200:
        try:
            body = response.json()
            message = f"{body.get('error', 'error')}: {body.get('message', response.text)}"
        except ValueError:
            message = f"HTTP {response.status_code}"
        raise CliError(message, _STATUS_TO_EXIT.get(response.status_code, EXIT_DATA))
    return response.json()


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}", EXIT_DATA)


def _read_json(path: str) -> dict:
    try:
        return json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise CliError(f"{path} is not valid JSON: {exc.msg}", EXIT_DATA)


def _write_text(path: Path, content: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(content, encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror}", EXIT_DATA)


def _write_bundle(files: dict[str, str], out_dir: str) -> None:
    out = Path(out_dir)
    for name, content in files.items():
        _write_text(out / name, content)
    print(f"wrote {len(files)} files to {out}")


def cmd_validate(client, args) -> int:
    body = _call(client, "/logs/validate", {"log": _read_text(args.log)})
    print(
        f"ok: {body['events']} events, {body['documents']} documents, "
        f"{body['tasks']} tasks, {body['suggestions']} suggestions, {body['reads']} reads"
    )
    return EXIT_OK


def cmd_reconstruct(client, args) -> int:
    body = _call(
        client,
        "/logs/reconstruct",
        {"log": _read_text(args.log), "doc_id": args.doc, "at_ms": args.at},
    )
    print(body["text"])
    return EXIT_OK


def _parse_sweep(raw: str) -> dict:
    parts = raw.split(":")
    if len(parts) != 3:
        raise CliError("--sweep expects lo:hi:step in seconds", EXIT_USAGE)
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError:
        raise CliError("--sweep expects numeric lo:hi:step", EXIT_USAGE)
    return {"lo_s": lo, "hi_s": hi, "step_s": step}


def cmd_sessions(client, args) -> int:
    payload: dict = {"log": _read_text(args.log), "pooled": args.pooled}
    if args.threshold is not None:
        payload["threshold_s"] = args.threshold
    if args.sweep is not None:
        payload["sweep"] = _parse_sweep(args.sweep)
    body = _call(client, "/logs/sessions", payload)
    if body.get("sweep"):
        for point in body["sweep"]:
            print(f"sweep\t{point['threshold_s']:g}\t{point['session_count']}")
    if body.get("knee_s") is not None:
        print(f"knee_s\t{body['knee_s']:g}")
    print(f"threshold_s\t{body['threshold_s']:g}")
    for s in body["sessions"]:
        print(
            f"session\t{s['doc_id']}\t{s['start_ms']}\t{s['end_ms']}"
            f"\t{s['event_count']}\t{s['duration_s']:g}"
        )
    print(f"sessions\t{len(body['sessions'])}")
    return EXIT_OK


def cmd_rq1(client, args) -> int:
    body = _call(client, "/analyses/rq1", {"log": _read_text(args.log)})
    _write_bundle(body["files"], args.out)
    print(f"requests: {json.dumps(body['meta']['requests'])}")
    return EXIT_OK


def cmd_rq2(client, args) -> int:
    body = _call(
        client,
        "/analyses/rq2",
        {
            "log": _read_text(args.log),
            "window_s": args.window,
            "runs": args.runs,
            "seed": args.seed,
            "threshold_s": args.threshold,
        },
    )
    _write_bundle(body["files"], args.out)
    meta = body["meta"]
    print(f"progress samples: {meta['samples']}, baseline runs: {meta['baseline_runs']}")
    return EXIT_OK


def cmd_rq3(client, args) -> int:
    embed_endpoint = args.embed_endpoint or os.environ.get(EMBED_ENDPOINT_ENV)
    payload = {
        "log": _read_text(args.log),
        "metric": args.metric,
        "window_s": args.window,
        "runs": args.runs,
        "seed": args.seed,
        "threshold_s": args.threshold,
    }
    if embed_endpoint:
        payload["embed_endpoint"] = embed_endpoint
    if args.paraphrase_endpoint:
        payload["paraphrase_endpoint"] = args.paraphrase_endpoint
    body = _call(client, "/analyses/rq3", payload)
    _write_bundle(body["files"], args.out)
    meta = body["meta"]
    print(f"influence samples: {meta['samples']} ({meta['excluded']} excluded)")
    return EXIT_OK


def cmd_synth(client, args) -> int:
    body = _call(client, "/synth", {"config": _read_json(args.config)})
    out = Path(args.out)
    _write_text(out, body["log"])
    truth_path = out.with_name(out.name + ".truth.json")
    _write_text(truth_path, json.dumps(body["truth"], ensure_ascii=False, indent=2) + "\n")
    lines = body["log"].count("\n")
    print(f"wrote {lines} events to {out} (ground truth: {truth_path})")
    return EXIT_OK


def cmd_simulate(client, args) -> int:
    body = _call(client, "/simulate", {"config": _read_json(args.config)})
    out = Path(args.out)
    _write_text(out, body["log"])
    trace_path = out.with_name(out.name + ".trace.json")
    _write_text(trace_path, json.dumps(body["trace"], ensure_ascii=False, indent=2) + "\n")
    lines = body["log"].count("\n")
    print(f"wrote {lines} events to {out} (trace: {trace_path})")
    return EXIT_OK


def cmd_serve(client, args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="inkflux",
        description="Replay, analyze and simulate writing-suggestion session logs.",
    )
    parser.add_argument(
        "--server",
        default=None,
        help=f"service base URL (default: in-process; env {SERVER_ENV})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse a log and print summary counts")
    p.add_argument("log")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("reconstruct", help="print a document's text at a timestamp")
    p.add_argument("log")
    p.add_argument("--doc", required=True)
    p.add_argument("--at", type=int, required=True, help="timestamp in ms")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("sessions", help="segment working sessions / sweep thresholds")
    p.add_argument("log")
    p.add_argument("--threshold", type=float, default=None, help="inactivity threshold (s)")
    p.add_argument("--sweep", default=None, help="lo:hi:step threshold sweep (s)")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--per-doc", dest="pooled", action="store_false", default=False)
    group.add_argument("--pooled", dest="pooled", action="store_true")
    p.set_defaults(func=cmd_sessions)

    p = sub.add_parser("rq1", help="usage and latency reports")
    p.add_argument("log")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rq1)

    p = sub.add_parser("rq2", help="progress vs. baseline reports")
    p.add_argument("log")
    p.add_argument("--window", type=float, default=300.0)
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=240.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rq2)

    p = sub.add_parser("rq3", help="influence vs. baseline reports")
    p.add_argument("log")
    p.add_argument("--metric", required=True, choices=["edit", "semantic", "paraphrase"])
    p.add_argument("--window", type=float, default=300.0)
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=240.0)
    p.add_argument(
        "--embed-endpoint",
        default=None,
        help=f"remote embedding provider base URL (env {EMBED_ENDPOINT_ENV})",
    )
    p.add_argument("--paraphrase-endpoint", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rq3)

    p = sub.add_parser("synth", help="generate a synthetic log with ground truth")
    p.add_argument("config")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("simulate", help="run a scripted orchestrator simulation")
    p.add_argument("config")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    server = args.server or os.environ.get(SERVER_ENV)
    try:
        if args.func is cmd_serve:
            return cmd_serve(None, args)
        with make_client(server) as client:
            return args.func(client, args)
    except CliError as exc:
        print(f"inkflux: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
