"""Command line client for the scenario service.

The client validates scenario files locally for early line/column errors,
then posts them to the service: by default in process over an ASGI
transport (no socket, no separate process), or to a remote instance with
--server.  Reports print as canonical JSON or a text summary.  Exit codes:
0 all checks passed, 2 a check failed, 1 input or transport error.
"""

from __future__ import annotations

import asyncio
import sys

import click
import httpx

from . import __version__
from .scenario import ParseError, canonical_json, load_scenario_file


def _post(server, path, payload):
    if server:
        try:
            with httpx.Client(base_url=server, timeout=600.0) as client:
                return client.post(path, json=payload)
        except httpx.HTTPError as exc:
            raise ParseError(f"cannot reach server {server}: {exc}") from exc

    async def in_process():
        from .service import app
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(transport=transport,
                                     base_url="http://ncsurf.local",
                                     timeout=600.0) as client:
            return await client.post(path, json=payload)

    return asyncio.run(in_process())


def _group_text(g):
    parts = []
    if g["rank"]:
        parts.append(f"Z^{g['rank']}" if g["rank"] > 1 else "Z")
    parts.extend(f"Z/{d}" for d in g["torsion"])
    return " + ".join(parts) if parts else "0"


def _result_lines(result):
    mark = "ok" if result["pass"] else "FAIL"
    yield f"[{mark}] {result['id']}"
    task = result["task"]
    if task == "cohomology":
        for row in result["rows"]:
            yield (f"    n={row['twist']:+d}  h0 = {_group_text(row['h0'])}  "
                   f"h1 = {_group_text(row['h1'])}")
    elif task == "lambda":
        yield f"    adeg lambda = {result['adeg']:.12g}"
    elif task == "intersect":
        yield f"    intersection number = {result['number']:.12g}"
    elif task in ("duality-check", "rr-check"):
        for row in result["rows"]:
            mark = "ok" if row["pass"] else "FAIL"
            name = row["line"] or "(trivial)"
            yield f"    [{mark}] {name}: residual = {row['residual']:.6g}"
            if "warning" in row:
                yield f"         warning: {row['warning']}"
    elif task == "semisimple-check":
        cert = result["certification"]
        yield (f"    certified_simple = {cert['certified_simple']}  "
               f"max_rel_gap = {result['max_rel_gap']:.6g}")
    elif task == "oracle-compare":
        for row in result["rows"]:
            mark = "ok" if row["match"] else "FAIL"
            yield (f"    [{mark}] degree {row['degree']:+d}: "
                   f"h0 = {_group_text(row['cech_h0'])}  "
                   f"h1 = {_group_text(row['cech_h1'])}")
    elif task == "selftest":
        for line in _suite_lines(result["suites"]):
            yield "    " + line


def _suite_lines(suites):
    for suite in suites:
        mark = "ok" if suite["pass"] else "FAIL"
        extra = ""
        if "max_residual" in suite:
            extra = f"  (max residual {suite['max_residual']:.3g})"
        elif "max_rel_gap" in suite:
            extra = f"  (max gap {suite['max_rel_gap']:.3g})"
        elif "cases" in suite:
            extra = f"  ({suite['cases']} cases)"
        yield f"[{mark}] criterion {suite['criterion']}: {suite['name']}{extra}"


def render_text(report):
    lines = [f"ncsurf {report['tool']['version']}"]
    if "scenario" in report:
        meta = report["scenario"]
        lines.append(f"scenario: {meta['name']}  order: {meta['order']}  "
                     f"tolerance: {meta['tolerance']:g}  seed: {meta['seed']}")
    for result in report.get("results", []):
        lines.extend(_result_lines(result))
    if "suites" in report:
        lines.extend(_suite_lines(report["suites"]))
    lines.append("overall: " + ("pass" if report["pass"] else "FAIL"))
    return "\n".join(lines) + "\n"


def _emit(report, fmt, out):
    rendered = canonical_json(report) if fmt == "json" else render_text(report)
    if out:
        with open(out, "w", encoding="utf-8") as handle:
            handle.write(rendered)
    else:
        click.echo(rendered, nl=False)


def _finish(response, fmt, out):
    if response.status_code in (400, 422):
        detail = response.json().get("detail", "invalid request")
        click.echo(f"input error: {detail}", err=True)
        sys.exit(1)
    if response.status_code != 200:
        click.echo(f"server error: HTTP {response.status_code}", err=True)
        sys.exit(1)
    data = response.json()
    _emit(data["report"], fmt, out)
    sys.exit(data["exit_code"])


@click.group()
@click.version_option(version=__version__, prog_name="ncsurf")
def main():
    """Arithmetic invariants of twisted bundles over a coordinate line."""


@main.command()
@click.option("--scenario", "scenario_path", required=True,
              type=click.Path(dir_okay=False), help="Scenario JSON file.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the report here instead of standard output.")
@click.option("--format", "fmt", type=click.Choice(["json", "text"]),
              default="json", show_default=True)
@click.option("--tolerance", type=float, default=None,
              help="Override the scenario tolerance.")
@click.option("--seed", type=int, default=None,
              help="Override the scenario seed.")
@click.option("--server", default=None,
              help="Base URL of a running service; default is in-process.")
def run(scenario_path, out, fmt, tolerance, seed, server):
    """Execute a scenario file and report per-task results."""
    try:
        scenario = load_scenario_file(scenario_path)
    except ParseError as exc:
        where = f" (line {exc.line}, column {exc.column})" if exc.line else ""
        click.echo(f"input error: {exc}{where}", err=True)
        sys.exit(1)
    payload = {"scenario": scenario.model_dump(mode="json"),
               "tolerance": tolerance, "seed": seed}
    try:
        response = _post(server, "/run", payload)
    except ParseError as exc:
        click.echo(f"input error: {exc}", err=True)
        sys.exit(1)
    _finish(response, fmt, out)


@main.command()
@click.option("--tolerance", type=float, default=1e-8, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--format", "fmt", type=click.Choice(["json", "text"]),
              default="json", show_default=True)
@click.option("--server", default=None,
              help="Base URL of a running service; default is in-process.")
def selftest(tolerance, seed, out, fmt, server):
    """Run the shipped verification suites and summarize pass/fail."""
    payload = {"tolerance": tolerance, "seed": seed}
    try:
        response = _post(server, "/selftest", payload)
    except ParseError as exc:
        click.echo(f"input error: {exc}", err=True)
        sys.exit(1)
    _finish(response, fmt, out)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Start the HTTP service."""
    import uvicorn

    from .service import app
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
