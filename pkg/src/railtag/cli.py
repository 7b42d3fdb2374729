"""Command-line client for the simulation service.

The CLI is a thin HTTP client: by default it mounts the FastAPI app
in-process (no server needed), or talks to a running instance when --url is
given. Exit codes: 0 success, 2 configuration error, 1 anything else.
"""
from __future__ import annotations

import argparse
import asyncio
import json
import sys

import httpx

from .errors import ConfigError


def _call(method: str, path: str, payload: dict | None, base_url: str | None) -> httpx.Response:
    if base_url:
        with httpx.Client(base_url=base_url, timeout=None) as client:
            return client.request(method, path, json=payload)

    from .service.app import app

    async def go() -> httpx.Response:
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(
            transport=transport, base_url="http://railtag.local", timeout=None
        ) as client:
            return await client.request(method, path, json=payload)

    return asyncio.run(go())


def _check(resp: httpx.Response) -> dict:
    if resp.status_code == 200:
        return resp.json()
    if resp.status_code == 422:
        raise ConfigError(f"invalid request: {resp.text}")
    try:
        body = resp.json()
    except ValueError:
        body = {}
    if resp.status_code == 400:
        detail = body.get("detail", resp.text)
        if body.get("error") == "ConfigError":
            raise ConfigError(detail)
        raise ConfigError(f"{body.get('error', 'error')}: {detail}")
    raise RuntimeError(f"service error {resp.status_code}: {resp.text}")


def _load_scenario_doc(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"scenario file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc


def cmd_simulate(args: argparse.Namespace) -> int:
    payload = {
        "scenario": _load_scenario_doc(args.scenario),
        "controller": args.controller,
        "seed": args.seed,
        "include_trace": args.trace is not None,
        "include_decisions": args.decisions is not None,
    }
    body = _check(_call("POST", "/simulate", payload, args.url))
    if args.trace is not None:
        with open(args.trace, "w", encoding="utf-8") as f:
            f.write(body["trace_csv"])
    if args.decisions is not None:
        with open(args.decisions, "w", encoding="utf-8") as f:
            f.write(body["decisions_csv"])
    print(json.dumps(body["result"], indent=2))
    return 0


def cmd_experiment(args: argparse.Namespace) -> int:
    payload = {
        "scenario": _load_scenario_doc(args.scenario),
        "trips": args.trips,
        "hazardous": args.hazardous,
        "seed": args.seed,
        "format": args.format,
        "parallel": args.parallel,
        "modes": args.modes,
    }
    body = _check(_call("POST", "/experiment", payload, args.url))
    sys.stdout.write(body["report"])
    return 0


def cmd_init_scenario(args: argparse.Namespace) -> int:
    body = _check(_call("GET", "/scenario/default", None, args.url))
    text = json.dumps(body, indent=2) + "\n"
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text)
        print(f"wrote {args.out}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="railtag",
        description="Tag-triggered train protection simulator",
    )
    parser.add_argument(
        "--url",
        default=None,
        help="base URL of a running railtag service (default: run in-process)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a single trip")
    p.add_argument("--scenario", required=True, help="scenario JSON file")
    p.add_argument("--controller", choices=["on", "off"], default="on")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--trace", default=None, help="write per-tick trajectory CSV here")
    p.add_argument("--decisions", default=None, help="write per-tick controller decision CSV here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("experiment", help="run the controller on/off comparison")
    p.add_argument("--scenario", required=True, help="scenario JSON file (template, no hazard)")
    p.add_argument("--trips", type=int, default=60)
    p.add_argument("--hazardous", type=int, default=16)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--parallel", type=int, default=1, metavar="N")
    p.add_argument("--modes", choices=["both", "on", "off"], default="both")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("init-scenario", help="write the default scenario file")
    p.add_argument("--out", default="scenario.json", help="output path ('-' for stdout)")
    p.set_defaults(func=cmd_init_scenario)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except httpx.HTTPError as exc:
        print(f"error: cannot reach service: {exc}", file=sys.stderr)
        return 1
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
