"""Pinned output formatting. Replay tests compare bytes, so nothing here
may depend on locale, platform, or dict ordering beyond insertion order."""

from __future__ import annotations


def fmt_num(x: float) -> str:
    """Scalar rendering: 10 significant digits, no negative zero."""
    if x == 0.0:
        x = 0.0
    return "%.10g" % x


def align_columns(header: list[str], rows: list[list[str]], right: bool = True) -> list[str]:
    """Fixed-width columns, single-space gutters, trailing space stripped."""
    table = [header] + rows
    widths = [max(len(r[i]) for r in table) for i in range(len(header))]
    out = []
    for r in table:
        cells = [c.rjust(w) if right else c.ljust(w) for c, w in zip(r, widths)]
        out.append(" ".join(cells).rstrip())
    return out
