"""Command-line client for the solver service.

The CLI performs no numerics itself: every subcommand posts to the
FastAPI service — in-process by default, or a remote instance with
``--server http://host:port`` — and writes the returned CSV artifacts,
verifying their content hashes.  Exit status 0 means the run completed
with every certificate met, 1 that a certificate was missed, 2 that the
run errored.  The solver's worker pool is capped by FRACLAP_THREADS.
"""

import argparse
import asyncio
import json
import sys
from pathlib import Path

import httpx

from .csvio import content_hash


def _post(server, path, payload):
    """POST to the service and return (status_code, parsed body)."""

    async def go():
        if server:
            client = httpx.AsyncClient(base_url=server, timeout=None)
        else:
            from .service.app import app
            client = httpx.AsyncClient(
                transport=httpx.ASGITransport(app=app),
                base_url="http://fraclap.internal", timeout=None,
            )
        async with client:
            response = await client.post(path, json=payload)
            return response.status_code, response.json()

    return asyncio.run(go())


def _deliver(status, body, out):
    """Write artifacts, print the summary, map outcome to exit status."""
    if status != 200:
        detail = body.get("detail", body) if isinstance(body, dict) else body
        print(f"error: {detail}", file=sys.stderr)
        return 2
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for artifact in body["artifacts"]:
        path = out_dir / artifact["name"]
        path.write_text(artifact["text"])
        if content_hash(artifact["text"]) != artifact["content_hash"]:
            print(f"error: content hash mismatch for {path}",
                  file=sys.stderr)
            return 2
        print(f"wrote {path}  [{artifact['content_hash'][:12]}]")
    print(json.dumps(body["summary"], indent=2))
    if body["ok"]:
        print("all certificates met")
        return 0
    print("certificates NOT met", file=sys.stderr)
    return 1


def _cmd_solve(args):
    config_toml = Path(args.config).read_text()
    status, body = _post(args.server, "/solve",
                         {"config_toml": config_toml})
    return _deliver(status, body, args.out)


def _cmd_example(args):
    payload = {"name": args.name, "nu": args.nu, "omega": args.omega,
               "accuracy": args.accuracy, "contour": args.contour,
               "N": args.N, "t0": args.t0, "t1": args.t1, "b": args.b,
               "delta": args.delta}
    status, body = _post(args.server, "/example", payload)
    return _deliver(status, body, args.out)


def _cmd_curves(args):
    status, body = _post(args.server, "/curves",
                         {"nu": args.nu, "M": args.M})
    return _deliver(status, body, args.out)


def _cmd_contour_dump(args):
    payload = {}
    if args.config is not None:
        payload["config_toml"] = Path(args.config).read_text()
    status, body = _post(args.server, "/contour-dump", payload)
    return _deliver(status, body, args.out)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fraclap",
        description="Certified contour-quadrature solver for fractional "
                    "viscoelastic beams",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--server", default=None,
                        help="service URL (default: run in-process)")
    common.add_argument("--out", default=".",
                        help="directory for CSV artifacts")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common],
                       help="solve a TOML problem config")
    p.add_argument("--config", required=True, help="path to config file")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("example", parents=[common],
                       help="run a named example with overrides")
    p.add_argument("name", help="example1 | example1_free | example2 | "
                                "example3 | convergence")
    p.add_argument("--nu", type=float, default=None)
    p.add_argument("--omega", type=float, default=None)
    p.add_argument("--accuracy", type=float, default=None)
    p.add_argument("--contour", choices=("hyperbolic", "parabolic"),
                   default=None)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--t0", type=float, default=None)
    p.add_argument("--t1", type=float, default=None)
    p.add_argument("--b", default=None,
                   help="damping expression override (e.g. 0)")
    p.add_argument("--delta", type=float, default=None,
                   help="contour opening override (default: automatic "
                        "region selection)")
    p.set_defaults(func=_cmd_example)

    p = sub.add_parser("curves", parents=[common],
                       help="emit the r*(theta, eps) region curves")
    p.add_argument("--nu", type=float, required=True)
    p.add_argument("--M", type=float, required=True)
    p.set_defaults(func=_cmd_curves)

    p = sub.add_parser("contour-dump", parents=[common],
                       help="emit the contour nodes a config would use")
    p.add_argument("--config", default=None,
                   help="path to config file (default: stiff-beam example)")
    p.set_defaults(func=_cmd_contour_dump)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except httpx.HTTPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
