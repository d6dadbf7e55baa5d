"""Deterministic RVL interpreter with run-to-line / continue / reset replay.

A Session owns one script plus the state a run builds up: the
environment, the next line to execute, and an append-only output log of
(line_no, text) pairs. Replaying the same script over the same data
files yields byte-identical output, which is what makes a script a
trustworthy record of an analysis.

Edits roll the session back by replaying lines 1..k-1 from scratch;
scripts are short, and replay-from-scratch needs no snapshot machinery
to stay consistent.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from . import audit as audit_mod
from . import dsl, stats
from .formatting import align_columns, fmt_num


class RunError(Exception):
    """Execution failure at a specific script line."""

    def __init__(self, message: str, line_no: int | None = None):
        super().__init__(message)
        self.message = message
        self.line_no = line_no

    def __str__(self) -> str:
        if self.line_no is None:
            return self.message
        return f"line {self.line_no}: {self.message}"


def load_csv(path: str | Path, name: str = "") -> stats.Table:
    """Read a numeric CSV into a Table; the token NA marks a missing cell.

    Header row is required; every other cell must be a finite number.
    """
    path = Path(path)
    tname = name or path.stem
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise RunError(f"{path.name}: empty file, header row required") from None
            header = [h.strip() for h in header]
            if any(not h for h in header):
                raise RunError(f"{path.name}: blank column name in header")
            if len(set(header)) != len(header):
                raise RunError(f"{path.name}: duplicate column names")
            ncol = len(header)
            values = [[] for _ in range(ncol)]
            missing = [[] for _ in range(ncol)]
            for rowno, row in enumerate(reader, start=1):
                if len(row) != ncol:
                    raise RunError(
                        f"{path.name}: row {rowno} has {len(row)} cells, expected {ncol}"
                    )
                for j, cell in enumerate(row):
                    cell = cell.strip()
                    if cell == "NA":
                        values[j].append(0.0)
                        missing[j].append(True)
                        continue
                    try:
                        v = float(cell)
                    except ValueError:
                        raise RunError(
                            f"{path.name}: invalid numeric value {cell!r}"
                            f" at row {rowno}, column {header[j]!r}"
                        ) from None
                    if not math.isfinite(v):
                        raise RunError(
                            f"{path.name}: non-finite value {cell!r}"
                            f" at row {rowno}, column {header[j]!r}"
                        )
                    values[j].append(v)
                    missing[j].append(False)
    except OSError as exc:
        raise RunError(f"cannot read {path}: {exc.strerror or exc}") from exc

    nrow = len(values[0]) if ncol else 0
    cols = {
        h: stats.Column(np.array(values[j], dtype=np.float64), np.array(missing[j], dtype=bool))
        for j, h in enumerate(header)
    }
    return stats.Table(tname, cols, nrow)


# --- value rendering -----------------------------------------------------------


def render_value(value) -> list[str]:
    """Render an environment value to output lines (pinned format)."""
    if isinstance(value, float):
        return [fmt_num(value)]
    if isinstance(value, str):
        return [value]
    if isinstance(value, stats.Column):
        cells = [
            "NA" if m else fmt_num(v) for v, m in zip(value.values, value.missing)
        ]
        return ["[" + ", ".join(cells) + "]"]
    if isinstance(value, stats.Table):
        cols = ", ".join(value.colnames)
        return [f"table {value.name}: {value.nrow} rows, {len(value.columns)} columns ({cols})"]
    if isinstance(value, stats.RangeTable):
        header = [""] + [name for name, _, _ in value.rows]
        mins = ["min"] + [fmt_num(lo) for _, lo, _ in value.rows]
        maxs = ["max"] + [fmt_num(hi) for _, _, hi in value.rows]
        return align_columns(header, [mins, maxs])
    if isinstance(value, stats.CiResult):
        return [render_ci(value)]
    if isinstance(value, stats.OlsFit):
        return render_fit(value)
    if isinstance(value, audit_mod.AuditTable):
        return audit_mod.render_audit_table(value.rows).splitlines()
    raise RunError(f"cannot render value of type {type(value).__name__}")


def render_ci(r: stats.CiResult) -> str:
    head = "ci_bonf" if r.k_comparisons > 1 else "ci"
    pct = fmt_num(r.level_nominal * 100)
    out = (
        f'{head} "{r.label}": estimate {fmt_num(r.estimate)}'
        f" [{fmt_num(r.lower)}, {fmt_num(r.upper)}] level {pct}%"
    )
    if r.k_comparisons > 1:
        out += f" k {r.k_comparisons}"
    out += f" df {fmt_num(r.df)} n ({r.n1}, {r.n2})"
    return out


def render_fit(fit: stats.OlsFit) -> list[str]:
    head = f"fit: n {fit.n}"
    if fit.n_dropped:
        head += f" ({fit.n_dropped} incomplete rows dropped)"
    head += f", df {fmt_num(fit.df_resid)}"
    header = ["term", "estimate", "std.error", "t.value", "p.value"]
    rows = []
    for i, cname in enumerate(fit.coef_names):
        tv = fit.t_stats[i]
        rows.append(
            [
                cname,
                fmt_num(fit.est[i]),
                fmt_num(fit.se[i]),
                "inf" if math.isinf(tv) else fmt_num(tv),
                fmt_num(fit.p_values[i]),
            ]
        )
    return [head] + align_columns(header, rows)


# --- session -----------------------------------------------------------------------


class Session:
    """Single-owner interpreter state for one script."""

    def __init__(self, script: dsl.Script, data_root: str | Path | None = None):
        self.script = script
        if data_root is not None:
            self.data_root = Path(data_root)
        elif script.source_name not in ("", "<script>") and "\n" not in script.source_name:
            self.data_root = Path(script.source_name).resolve().parent
        else:
            self.data_root = Path.cwd()
        self._clear_state()

    def _clear_state(self) -> None:
        self.env: dict[str, object] = {}
        self.next_line = 1
        self.output_log: list[tuple[int, str]] = []
        self.inference_count = 0
        self.correction_count = 0
        self.ci_results: list[stats.CiResult] = []
        self.inference_lines: list[int] = []
        self.model_lines: dict[str, int] = {}

    # -- queries

    def rendered_log(self) -> list[str]:
        return [f"[L{line}] {text}" for line, text in self.output_log]

    def tables(self) -> dict[str, stats.Table]:
        return {k: v for k, v in self.env.items() if isinstance(v, stats.Table)}

    def fits(self) -> dict[str, stats.OlsFit]:
        return {k: v for k, v in self.env.items() if isinstance(v, stats.OlsFit)}

    # -- replay controls

    def reset(self) -> "Session":
        self._clear_state()
        return self

    def run_to_line(self, through_line: int) -> "Session":
        """Execute statements next_line..through_line inclusive.

        On error the session keeps the outputs and bindings of the
        statements that completed, and next_line points at the failing
        statement.
        """
        n = len(self.script)
        if through_line < self.next_line - 1 or through_line > n:
            raise RunError(
                f"run-through line {through_line} outside [{self.next_line}, {n}]"
            )
        while self.next_line <= through_line:
            stmt = self.script.stmt(self.next_line)
            self._execute(stmt)
            self.next_line += 1
        return self

    def continue_run(self) -> "Session":
        if self.next_line > len(self.script):
            raise RunError("nothing to run: session is at end of script")
        return self.run_to_line(len(self.script))

    def edit_line(self, line_no: int, new_text: str) -> "Session":
        """Replace (or append, at len+1) one line; roll state back before it."""
        n = len(self.script)
        if not 1 <= line_no <= n + 1:
            raise RunError(f"line {line_no} outside [1, {n + 1}]")
        stmt = dsl.parse_statement(new_text, line_no)
        lines = list(self.script.lines)
        if line_no == n + 1:
            lines.append(stmt)
        else:
            lines[line_no - 1] = stmt
        self.script = dsl.Script(tuple(lines), self.script.source_name)
        target = min(self.next_line, line_no)
        self._clear_state()
        if target > 1:
            self.run_to_line(target - 1)
        return self

    # -- execution

    def _output(self, line_no: int, lines: list[str]) -> None:
        for text in lines:
            self.output_log.append((line_no, text))

    def _execute(self, stmt: dsl.Stmt) -> None:
        try:
            self._dispatch(stmt)
        except RunError as exc:
            if exc.line_no is None:
                raise RunError(exc.message, stmt.line_no) from None
            raise
        except stats.StatsError as exc:
            raise RunError(str(exc), stmt.line_no) from exc

    def _dispatch(self, stmt: dsl.Stmt) -> None:
        p = stmt.payload
        kind = stmt.kind
        if kind in ("Comment", "Blank"):
            return
        if kind == "Load":
            path = Path(p.path)
            if not path.is_absolute():
                path = self.data_root / path
            table = load_csv(path, name=p.name)
            table.load_line = stmt.line_no
            self.env[p.name] = table
            self._output(
                stmt.line_no,
                [
                    f'loaded {p.name}: {table.nrow} rows,'
                    f' {len(table.columns)} columns from "{p.path}"'
                ],
            )
            return
        if kind == "Let":
            self.env[p.name] = self.eval_expr(p.expr)
            return
        if kind == "Print":
            self._output(stmt.line_no, render_value(self.eval_expr(p.expr)))
            return
        if kind == "SetMissing":
            table = self._table(p.table)
            col = table.column(p.column)
            hits = (~col.missing) & (col.values == p.sentinel)
            count = int(hits.sum())
            col.missing[hits] = True
            col.values[hits] = 0.0
            self._output(
                stmt.line_no,
                [
                    f"set_missing {p.table}.{p.column}: {count} cells set to missing"
                    f" (== {dsl.format_number(p.sentinel)})"
                ],
            )
            return
        if kind in ("Ci", "CiBonf"):
            result = self._run_ci(p)
            self.ci_results.append(result)
            if p.bonferroni:
                self.correction_count += 1
            else:
                self.inference_count += 1
                self.inference_lines.append(stmt.line_no)
            self._output(stmt.line_no, [render_ci(result)])
            return
        if kind == "Model":
            fit = self._run_model(p)
            fit.source_line = stmt.line_no
            self.env[p.name] = fit
            self.model_lines[p.name] = stmt.line_no
            return
        raise RunError(f"unknown statement kind {kind!r}")

    def _table(self, name: str) -> stats.Table:
        value = self.env.get(name)
        if value is None:
            raise RunError(f"unknown identifier {name!r}")
        if not isinstance(value, stats.Table):
            raise RunError(f"{name!r} is not a table")
        return value

    def _column(self, ref: dsl.ColumnRef) -> stats.Column:
        table = self._table(ref.table)
        try:
            return table.column(ref.column)
        except stats.StatsError as exc:
            raise RunError(str(exc)) from exc

    def _run_ci(self, p: dsl.Ci) -> stats.CiResult:
        if p.value.table != p.group.table:
            raise RunError("diff_means value and group columns must come from one table")
        value = self._column(p.value)
        group = self._column(p.group)
        ok = ~group.missing
        levels = np.unique(group.values[ok])
        if len(levels) != 2:
            raise RunError(
                f"group column {p.group.table}.{p.group.column} must have exactly 2"
                f" distinct non-missing values, found {len(levels)}"
            )
        lo_level, hi_level = float(levels[0]), float(levels[1])
        hi_rows = ok & (group.values == hi_level)
        lo_rows = ok & (group.values == lo_level)
        x = stats.Column(value.values[hi_rows], value.missing[hi_rows])
        y = stats.Column(value.values[lo_rows], value.missing[lo_rows])
        label = p.label if p.label is not None else f"{p.value.table}.{p.value.column}"
        return stats.welch_ci(x, y, p.level, p.k, label)

    def _run_model(self, p: dsl.Model) -> stats.OlsFit:
        table = self._table(p.table)
        y = table.column(p.formula.response)
        xs = [table.column(name) for name in p.formula.predictors]
        return stats.ols_fit(y, xs, intercept=True, names=list(p.formula.predictors))

    # -- expression evaluation

    def eval_expr(self, expr: dsl.Expr):
        if isinstance(expr, dsl.NumberLit):
            return expr.value
        if isinstance(expr, dsl.StringLit):
            return expr.value
        if isinstance(expr, dsl.Ident):
            if expr.name not in self.env:
                raise RunError(f"unknown identifier {expr.name!r}")
            return self.env[expr.name]
        if isinstance(expr, dsl.ColumnRef):
            return self._column(expr)
        if isinstance(expr, dsl.Call):
            return self._call(expr)
        if isinstance(expr, dsl.Formula):
            raise RunError("a formula is only valid inside model ... = lm(...)")
        raise RunError(f"cannot evaluate {type(expr).__name__}")

    def _call(self, call: dsl.Call):
        name = call.name
        fn = _BUILTINS.get(name)
        if fn is None:
            raise RunError(f"unknown function {name!r}")
        arity, impl = fn
        if len(call.args) != arity:
            raise RunError(f"{name}() takes {arity} argument(s), got {len(call.args)}")
        args = [self.eval_expr(a) for a in call.args]
        return impl(self, *args)


def _builtin_ranges(session: Session, value) -> stats.RangeTable:
    if not isinstance(value, stats.Table):
        raise RunError("ranges() expects a table")
    return stats.column_ranges(value)


def _builtin_nrow(session: Session, value) -> float:
    if not isinstance(value, stats.Table):
        raise RunError("nrow() expects a table")
    return float(value.nrow)


def _builtin_mean(session: Session, value) -> float:
    if not isinstance(value, stats.Column):
        raise RunError("mean() expects a table column")
    return stats.mean_sd(value)[0]


def _builtin_sd(session: Session, value) -> float:
    if not isinstance(value, stats.Column):
        raise RunError("sd() expects a table column")
    m, s, n = stats.mean_sd(value)
    if n < 2:
        raise RunError("sd() needs at least 2 non-missing values")
    return s


def _builtin_coef_audit(session: Session, value) -> "audit_mod.AuditTable":
    if not isinstance(value, stats.OlsFit):
        raise RunError("coef_audit() expects a fitted model")
    session.correction_count += 1
    return audit_mod.AuditTable(tuple(audit_mod.coef_audit(value)))


_BUILTINS = {
    "ranges": (1, _builtin_ranges),
    "nrow": (1, _builtin_nrow),
    "mean": (1, _builtin_mean),
    "sd": (1, _builtin_sd),
    "coef_audit": (1, _builtin_coef_audit),
}


def new_session(script: dsl.Script, data_root: str | Path | None = None) -> Session:
    return Session(script, data_root)
