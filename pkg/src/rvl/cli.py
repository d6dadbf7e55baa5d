"""rv: command-line front end for sessions, runs, edits, branches, serving.

State between invocations lives in one small JSON cache
(`.rv-session.json` under $RV_ROOT, default the working directory): the
current script text, where it came from, and the next line to run.
Durable artifacts are only ever the branch files; `rv run` re-executes
the script from line 1 every time and shows the lines you asked for, so
what you see is always a fresh deterministic replay.
"""

from __future__ import annotations

import json
import os
import re
import sys
from pathlib import Path

import click

from . import dsl
from .branches import BranchError, BranchStore
from .engine import RunError, Session
from .audit import AuditConfig, audit_session

SESSION_FILE = ".rv-session.json"
_BRANCH_NAME_RE = re.compile(r"^(?P<base>.+)\.(?P<num>\d+)\.rvl$")

EXIT_ERROR = 1
EXIT_USAGE = 2


def _root() -> Path:
    return Path(os.environ.get("RV_ROOT", "."))


def _session_path() -> Path:
    return _root() / SESSION_FILE


def _save_cache(cache: dict) -> None:
    path = _session_path()
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(cache, indent=2) + "\n", encoding="utf-8")


def _load_cache() -> dict:
    path = _session_path()
    if not path.exists():
        click.echo("no session: run `rv load <file.rvl>` first", err=True)
        sys.exit(EXIT_USAGE)
    return json.loads(path.read_text(encoding="utf-8"))


def _parse_cached_script(cache: dict) -> dsl.Script:
    return dsl.parse_script(cache["script_text"], cache.get("source", "<session>"))


def _fail(message: str, code: int = EXIT_ERROR) -> None:
    click.echo(message, err=True)
    sys.exit(code)


@click.group()
def main() -> None:
    """Replayable analysis scripts with methodology audits."""


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
def load(file: Path) -> None:
    """Start a session from FILE (a plain .rvl script or a saved branch)."""
    file = file.resolve()
    m = _BRANCH_NAME_RE.match(file.name)
    origin = None
    if m and file.read_text(encoding="utf-8").startswith("#: "):
        base, number = m.group("base"), int(m.group("num"))
        store = BranchStore(file.parent)
        try:
            script, record = store.load_branch(base, number)
        except BranchError as exc:
            _fail(str(exc))
        origin = [base, number]
        text = dsl.format_script(script)
    else:
        base = file.stem
        text = file.read_text(encoding="utf-8")
        try:
            script = dsl.parse_script(text, str(file))
        except dsl.ParseError as exc:
            _fail(f"{file.name}: {exc}")
        origin = [base, 0]
    cache = {
        "base": base,
        "source": str(file),
        "script_dir": str(file.parent),
        "script_text": text,
        "origin": origin,
        "next_line": 1,
    }
    _save_cache(cache)
    click.echo(f"loaded {base}: {len(script)} lines from {file}")


@main.command()
@click.option("--from", "from_", type=int, default=None, help="Starting line to show/run from.")
@click.option("--through", type=int, default=None, help="Run through this line only.")
@click.option("--audit", is_flag=True, help="Print methodology advisories after the run.")
def run(from_: int | None, through: int | None, audit: bool) -> None:
    """Run the session script (a fresh deterministic replay every time)."""
    cache = _load_cache()
    try:
        script = _parse_cached_script(cache)
    except dsl.ParseError as exc:
        _fail(f"script: {exc}")
    n = len(script)
    if n == 0:
        _fail("script is empty")
    start = from_ if from_ is not None else int(cache.get("next_line", 1))
    stop = through if through is not None else n
    if from_ is None and start > n:
        _fail("nothing to run: session is at end of script")
    if not 1 <= start <= n or not start <= stop <= n:
        _fail(f"line range [{start}, {stop}] outside script of {n} lines", EXIT_USAGE)

    session = Session(script, data_root=cache["script_dir"])
    failed_at = None
    try:
        session.run_to_line(stop)
    except RunError as exc:
        failed_at = exc
    for line_no, text in session.output_log:
        if line_no >= start:
            click.echo(f"[L{line_no}] {text}")
    if failed_at is not None:
        cache["next_line"] = session.next_line
        _save_cache(cache)
        _fail(str(failed_at))
    if audit:
        for advisory in audit_session(session, AuditConfig()):
            click.echo(advisory.render())
    cache["next_line"] = stop + 1
    _save_cache(cache)


@main.command()
@click.argument("line_no", type=int, metavar="N")
@click.argument("text")
def edit(line_no: int, text: str) -> None:
    """Replace line N with TEXT (or append when N is one past the end)."""
    cache = _load_cache()
    lines = cache["script_text"].splitlines()
    n = len(lines)
    if not 1 <= line_no <= n + 1:
        _fail(f"line {line_no} outside [1, {n + 1}]", EXIT_USAGE)
    try:
        stmt = dsl.parse_statement(text, line_no)
    except dsl.ParseError as exc:
        _fail(str(exc))
    canonical = dsl.format_stmt(stmt)
    if line_no == n + 1:
        lines.append(canonical)
    else:
        lines[line_no - 1] = canonical
    cache["script_text"] = "\n".join(lines) + "\n"
    cache["next_line"] = min(int(cache.get("next_line", 1)), line_no)
    _save_cache(cache)
    click.echo(f"line {line_no}: {canonical}")


@main.group()
def branch() -> None:
    """Save and list numbered script versions."""


@branch.command("save")
@click.argument("description")
def branch_save(description: str) -> None:
    """Save the session script as the next numbered branch."""
    cache = _load_cache()
    try:
        script = _parse_cached_script(cache)
    except dsl.ParseError as exc:
        _fail(f"script: {exc}")
    store = BranchStore(os.environ.get("RV_ROOT", cache["script_dir"]))
    origin = cache.get("origin")
    parent = None
    if origin:
        pbase, pnum = origin
        ppath = (
            store.root / f"{pbase}.rvl" if pnum == 0 else store.root / f"{pbase}.{pnum}.rvl"
        )
        if ppath.exists():
            parent = (pbase, int(pnum))
    try:
        record = store.save_branch(script, cache["base"], description, parent)
    except BranchError as exc:
        _fail(str(exc))
    parent_note = f" (parent {record.parent[0]}.{record.parent[1]})" if record.parent else ""
    click.echo(f"saved {record.ref()}{parent_note}: {description}")


@branch.command("list")
def branch_list() -> None:
    """List all branches of the session's script."""
    cache = _load_cache()
    store = BranchStore(os.environ.get("RV_ROOT", cache["script_dir"]))
    try:
        records = store.list_branches(cache["base"])
    except BranchError as exc:
        _fail(str(exc))
    for rec in records:
        parent = f"{rec.parent[0]}.{rec.parent[1]}" if rec.parent else "-"
        click.echo(f"{rec.ref()}  {rec.created_at}  parent={parent}  {rec.description}")


@main.command()
@click.option("--port", type=int, default=7343, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option(
    "--root",
    type=click.Path(exists=True, file_okay=False, path_type=Path),
    default=None,
    help="Directory holding scripts, data, and branches (defaults to $RV_ROOT or cwd).",
)
def serve(port: int, host: str, root: Path | None) -> None:
    """Serve the HTTP API and the web UI."""
    import uvicorn

    from .server import create_app

    app = create_app(root or _root())
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
