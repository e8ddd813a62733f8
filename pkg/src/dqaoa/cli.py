"""Command line client.

All subcommands go through the HTTP API: by default an in-process ASGI
transport (no sockets, no server to start), or a running server when
--url is given.  Exit status 0 on success, 1 on usage errors, 2 on
input/service errors.  Randomness flows from --seed flags only; the
environment is never consulted.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys
from pathlib import Path

import httpx

SUMMARY_COLUMNS = (
    "class",
    "method",
    "n",
    "q",
    "rows",
    "reference",
    "mean_r",
    "median_r",
    "q1_r",
    "q3_r",
    "fence_low",
    "fence_high",
)


class InputError(Exception):
    """Unreadable files, malformed payloads, or service failures: exit 2."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage problems; 2 is reserved for
    # input errors here, so remap to 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


class Client:
    """Minimal JSON-over-POST wrapper: remote when a URL is given,
    otherwise the app is mounted in-process behind an ASGI transport."""

    def __init__(self, url: str | None = None):
        self._url = url
        self._app = None
        self._client = None
        if url:
            self._client = httpx.Client(base_url=url.rstrip("/"), timeout=600.0)
        else:
            from .service.app import create_app

            self._app = create_app()

    async def _post_asgi(self, path: str, payload: dict) -> httpx.Response:
        transport = httpx.ASGITransport(app=self._app)
        async with httpx.AsyncClient(
            transport=transport, base_url="http://service.local", timeout=None
        ) as client:
            return await client.post(path, json=payload)

    def post(self, path: str, payload: dict) -> dict:
        try:
            if self._client is not None:
                resp = self._client.post(path, json=payload)
            else:
                resp = asyncio.run(self._post_asgi(path, payload))
        except httpx.HTTPError as exc:
            raise InputError(f"service request failed: {exc}") from exc
        if resp.status_code >= 400:
            try:
                detail = resp.json().get("detail", resp.text)
            except ValueError:
                detail = resp.text
            raise InputError(f"{path}: {detail}")
        return resp.json()

    def close(self) -> None:
        if self._client is not None:
            self._client.close()


# ---------------------------------------------------------------------------
# helpers

def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _emit(text: str, out: str | None) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if out:
        try:
            Path(out).write_text(text)
        except OSError as exc:
            raise InputError(f"cannot write {out}: {exc}") from exc
    else:
        sys.stdout.write(text)


def _is_problem_file(path: str, text: str) -> bool:
    """Problem files open with a min:/max: objective; graph files hold
    q/l/c records.  The extension wins when it is unambiguous."""
    if path.endswith(".pbo"):
        return True
    if path.endswith(".graph"):
        return False
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head = line.split(":", 1)[0].strip().lower()
        return head in ("min", "max")
    return False


def _fmt(x: float) -> str:
    return f"{x:g}"


def _spin_string(z: list[int]) -> str:
    return "".join("+" if v > 0 else "-" for v in z)


def _summary_csv(summary: list[dict]) -> str:
    lines = [",".join(SUMMARY_COLUMNS)]
    for cell in summary:
        lines.append(
            ",".join(
                _fmt(cell[c]) if isinstance(cell[c], float) else str(cell[c])
                for c in SUMMARY_COLUMNS
            )
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# subcommand handlers

def _cmd_reduce(args, client: Client) -> int:
    payload = {"problem": _read(args.file)}
    for key in ("mu", "lam", "slack_bits"):
        if getattr(args, key) is not None:
            payload[key] = getattr(args, key)
    resp = client.post("/reduce", payload)
    if args.format == "json":
        _emit(json.dumps(resp, indent=2), args.out)
        return 0
    lines = [
        f"spins: {resp['n_spins']} (from {resp['n_original']} variables)",
        f"mu: {_fmt(resp['mu'])}",
        f"offset: {_fmt(resp['offset'])}",
        "linear:",
    ]
    lines += [f"  {t['i']} {_fmt(t['weight'])}" for t in resp["linear"]]
    lines.append("couplings:")
    lines += [f"  {c['i']} {c['j']} {_fmt(c['weight'])}" for c in resp["couplings"]]
    _emit("\n".join(lines), args.out)
    return 0


def _cmd_solve(args, client: Client) -> int:
    text = _read(args.file)
    kind = "problem" if _is_problem_file(args.file, text) else "graph"
    payload = {
        kind: text,
        "q_cap": args.q,
        "partition": args.partition,
        "baseline": args.baseline,
        "seed": args.seed,
        "qaoa": {
            "p": args.p,
            "iterations": args.iterations,
            "restarts": args.restarts,
            "shots": args.shots,
        },
    }
    for key in ("mu", "lam", "slack_bits"):
        if getattr(args, key) is not None:
            payload[key] = getattr(args, key)
    resp = client.post("/solve", payload)
    if args.format == "json":
        _emit(json.dumps(resp, indent=2), args.out)
        return 0
    lines = [f"kind: {resp['kind']}", f"spins: {resp['n']}"]
    if resp["kind"] == "problem":
        lines.append(f"objective: {_fmt(resp['objective'])}")
        lines.append(f"x: {resp['bitstring']}")
        lines.append(f"feasible: {'yes' if resp['feasible'] else 'no'}")
        for v in resp["violations"]:
            lines.append(f"violation: {v}")
    else:
        lines.append(f"z: {_spin_string(resp['z'])}")
    lines.append(f"global_value: {_fmt(resp['global_value'])}")
    lines.append(f"r: {'-' if resp['r'] is None else _fmt(resp['r'])}")
    lines.append(f"tree_height: {resp['tree_height']}")
    lines.append("per_level: " + " ".join(_fmt(v) for v in resp["per_level"]))
    if resp["baseline_value"] is not None:
        lines.append(f"baseline_value: {_fmt(resp['baseline_value'])}")
        lines.append(f"used_naive: {'yes' if resp['used_naive'] else 'no'}")
    lines.append(f"modularity: {_fmt(resp['modularity'])}")
    lines.append(f"communities: {len(resp['communities'])}")
    lines.append(f"runtime_ms: {resp['runtime_ms']:.1f}")
    _emit("\n".join(lines), args.out)
    return 0


def _cmd_oracle(args, client: Client) -> int:
    resp = client.post("/oracle", {"graph": _read(args.file)})
    if args.format == "json":
        _emit(json.dumps(resp, indent=2), args.out)
        return 0
    _emit(f"minimum: {_fmt(resp['value'])}\nz: {_spin_string(resp['z'])}", args.out)
    return 0


def _cmd_gen(args, client: Client) -> int:
    payload = {
        "kind": args.kind,
        "n": args.n,
        "weighted": args.weighted,
        "weight_range": list(args.weight_range),
        "seed": args.seed,
    }
    if args.kind == "regular":
        payload["d"] = args.d
    else:
        payload["avg_degree"] = args.avg_degree
    resp = client.post("/gen", payload)
    if args.format == "json":
        _emit(json.dumps(resp, indent=2), args.out)
    else:
        _emit(resp["graph"], args.out)
    return 0


def _cmd_bench(args, client: Client) -> int:
    spec_text = _read(args.file)
    try:
        spec = json.loads(spec_text)
    except ValueError as exc:
        raise InputError(f"bench spec is not valid JSON: {exc}") from exc
    resp = client.post("/bench", {"spec": spec})
    if args.format == "json":
        _emit(json.dumps(resp, indent=2), args.out)
    elif args.format == "csv":
        _emit(resp["csv"], args.out)
    else:
        _emit(resp["csv"] + "\n" + _summary_csv(resp["summary"]), args.out)
    return 0


def _cmd_serve(args, client: Client) -> int:
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dqaoa", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command")

    def common(p, formats=("text", "json")):
        p.add_argument("--format", choices=formats, default=formats[0])
        p.add_argument("--out", default=None, help="write output to this file")
        p.add_argument("--url", default=None, help="remote service base URL")

    p = sub.add_parser("reduce", help="map a constrained problem to a spin model")
    p.add_argument("file")
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--lam", type=float, default=None)
    p.add_argument("--slack-bits", dest="slack_bits", type=int, default=None)
    common(p)
    p.set_defaults(handler=_cmd_reduce)

    p = sub.add_parser("solve", help="reduce if needed, then run the solver")
    p.add_argument("file", help="problem (.pbo) or graph file")
    p.add_argument("--q", type=int, default=10, help="qubit cap per subproblem")
    p.add_argument("--partition", choices=("louvain", "random", "greedy"), default="louvain")
    p.add_argument("--baseline", choices=("naive", "none"), default="naive")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p", type=int, default=1, help="circuit layers")
    p.add_argument("--iterations", type=int, default=20)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--shots", type=int, default=1024)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--lam", type=float, default=None)
    p.add_argument("--slack-bits", dest="slack_bits", type=int, default=None)
    common(p)
    p.set_defaults(handler=_cmd_solve)

    p = sub.add_parser("oracle", help="exhaustive minimum of a graph file")
    p.add_argument("file")
    common(p)
    p.set_defaults(handler=_cmd_oracle)

    p = sub.add_parser("gen", help="generate a benchmark graph")
    kind = p.add_subparsers(dest="kind", metavar="{regular,er}", required=True)
    for name in ("regular", "er"):
        k = kind.add_parser(name)
        k.add_argument("--n", type=int, required=True)
        if name == "regular":
            k.add_argument("--d", type=int, required=True)
        else:
            k.add_argument("--avg-degree", dest="avg_degree", type=float, required=True)
        k.add_argument("--weighted", action="store_true")
        k.add_argument("--weight-range", dest="weight_range", type=int, nargs=2,
                       default=(1, 6), metavar=("LO", "HI"))
        k.add_argument("--seed", type=int, default=0)
        common(k)
        k.set_defaults(handler=_cmd_gen)

    p = sub.add_parser("bench", help="run a benchmark spec (JSON)")
    p.add_argument("file")
    common(p, formats=("text", "csv", "json"))
    p.set_defaults(handler=_cmd_bench)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(handler=_cmd_serve, url=None)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "command", None) is None:
        parser.print_usage(sys.stderr)
        return 1
    client = Client(args.url) if args.handler is not _cmd_serve else None
    try:
        return args.handler(args, client)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    finally:
        if client is not None:
            client.close()


if __name__ == "__main__":
    sys.exit(main())
