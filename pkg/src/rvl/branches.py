"""Numbered, described, lineage-tracked saved versions of a script.

A branch is a single self-describing file `<base>.<n>.rvl`: metadata
header comments first, canonical script text after, so sharing the one
file (plus the data it references by relative path) is enough for
someone else to replay the analysis bit-for-bit.

    #: desc try bonferroni intervals
    #: parent pima.0
    #: created 2026-08-09T12:00:00Z
    #: hash 5f1c3a9d0b2e4c77

Number 0 is reserved for the loaded original `<base>.rvl`. The hash is
64-bit FNV-1a of the canonical body, integrity only.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from filelock import FileLock

from . import dsl

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3

_BRANCH_FILE_RE = re.compile(r"^(?P<base>.+)\.(?P<num>\d+)\.rvl$")
_HEADER_PREFIX = "#: "


class BranchError(Exception):
    pass


class IntegrityError(BranchError):
    """Stored hash does not match the branch file's script text."""


def fnv1a64(text: str) -> str:
    h = _FNV_OFFSET
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return "%016x" % h


@dataclass(frozen=True)
class BranchRecord:
    base: str
    number: int
    description: str
    parent: tuple[str, int] | None
    created_at: str  # ISO-8601 UTC
    content_hash: str
    path: Path

    def ref(self) -> str:
        return f"{self.base}.{self.number}"


def _now_utc() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


class BranchStore:
    """Branch files for any number of script bases inside one directory."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def _original_path(self, base: str) -> Path:
        return self.root / f"{base}.rvl"

    def _branch_path(self, base: str, number: int) -> Path:
        return self.root / f"{base}.{number}.rvl"

    def _numbers(self, base: str) -> list[int]:
        out = []
        for p in self.root.glob(f"{base}.*.rvl"):
            m = _BRANCH_FILE_RE.match(p.name)
            if m and m.group("base") == base:
                out.append(int(m.group("num")))
        return sorted(out)

    # -- save

    def save_branch(
        self,
        script: dsl.Script,
        base: str,
        description: str,
        parent: tuple[str, int] | None = None,
        created_at: str | None = None,
    ) -> BranchRecord:
        if not base:
            raise BranchError("branch base name must be nonempty")
        if not description:
            raise BranchError("branch description must be nonempty")
        if parent is not None:
            pbase, pnum = parent
            ppath = (
                self._original_path(pbase) if pnum == 0 else self._branch_path(pbase, pnum)
            )
            if not ppath.exists():
                raise BranchError(f"parent branch {pbase}.{pnum} does not exist")
        self.root.mkdir(parents=True, exist_ok=True)
        body = dsl.format_script(script)
        created = created_at or _now_utc()
        digest = fnv1a64(body)
        header = [f"{_HEADER_PREFIX}desc {description}"]
        if parent is not None:
            header.append(f"{_HEADER_PREFIX}parent {parent[0]}.{parent[1]}")
        header.append(f"{_HEADER_PREFIX}created {created}")
        header.append(f"{_HEADER_PREFIX}hash {digest}")
        content = "\n".join(header) + "\n" + body

        lock = FileLock(str(self.root / f"{base}.lock"))
        seq_path = self.root / f"{base}.seq"
        with lock:
            # high-water mark so numbers are never reused even if a
            # branch file was deleted out from under the store
            high = 0
            if seq_path.exists():
                try:
                    high = int(seq_path.read_text().strip() or 0)
                except ValueError:
                    high = 0
            number = max(max(self._numbers(base), default=0), high) + 1
            while True:
                path = self._branch_path(base, number)
                try:
                    with open(path, "x", encoding="utf-8", newline="\n") as fh:
                        fh.write(content)
                    break
                except FileExistsError:
                    number += 1
            seq_path.write_text(f"{number}\n")
        return BranchRecord(base, number, description, parent, created, digest, path)

    # -- load

    def load_branch(self, base: str, number: int) -> tuple[dsl.Script, BranchRecord]:
        if number == 0:
            path = self._original_path(base)
            if not path.exists():
                raise BranchError(f"no original script {path.name} in {self.root}")
            text = path.read_text(encoding="utf-8")
            script = dsl.parse_script(text, str(path))
            record = self._original_record(base, path, text)
            return script, record
        path = self._branch_path(base, number)
        if not path.exists():
            raise BranchError(f"no branch {base}.{number} in {self.root}")
        record, body = self._read_branch_file(path, base, number)
        if fnv1a64(body) != record.content_hash:
            raise IntegrityError(
                f"{path.name}: script text does not match stored hash"
                f" {record.content_hash} (file was modified after saving)"
            )
        script = dsl.parse_script(body, str(path))
        return script, record

    def _original_record(self, base: str, path: Path, text: str | None = None) -> BranchRecord:
        if text is None:
            text = path.read_text(encoding="utf-8")
        canonical = dsl.format_script(dsl.parse_script(text, str(path)))
        mtime = datetime.fromtimestamp(path.stat().st_mtime, tz=timezone.utc)
        return BranchRecord(
            base=base,
            number=0,
            description="original",
            parent=None,
            created_at=mtime.strftime("%Y-%m-%dT%H:%M:%SZ"),
            content_hash=fnv1a64(canonical),
            path=path,
        )

    def _read_branch_file(self, path: Path, base: str, number: int) -> tuple[BranchRecord, str]:
        text = path.read_text(encoding="utf-8")
        meta: dict[str, str] = {}
        body_lines = []
        in_header = True
        for line in text.splitlines():
            if in_header and line.startswith(_HEADER_PREFIX):
                key, _, value = line[len(_HEADER_PREFIX):].partition(" ")
                meta[key] = value
                continue
            in_header = False
            body_lines.append(line)
        body = "\n".join(body_lines)
        if body_lines:
            body += "\n"
        if "desc" not in meta or "hash" not in meta:
            raise BranchError(f"{path.name}: missing metadata header")
        parent = None
        if "parent" in meta:
            pbase, _, pnum = meta["parent"].rpartition(".")
            if not pbase or not pnum.isdigit():
                raise BranchError(f"{path.name}: malformed parent {meta['parent']!r}")
            parent = (pbase, int(pnum))
        record = BranchRecord(
            base=base,
            number=number,
            description=meta["desc"],
            parent=parent,
            created_at=meta.get("created", ""),
            content_hash=meta["hash"],
            path=path,
        )
        return record, body

    # -- listing and diff

    def list_branches(self, base: str) -> list[BranchRecord]:
        records = []
        original = self._original_path(base)
        if original.exists():
            records.append(self._original_record(base, original))
        for number in self._numbers(base):
            record, _ = self._read_branch_file(self._branch_path(base, number), base, number)
            records.append(record)
        return records

    def diff_branches(self, a: tuple[str, int], b: tuple[str, int]) -> list["DiffEntry"]:
        sa, _ = self.load_branch(*a)
        sb, _ = self.load_branch(*b)
        return diff_scripts(sa, sb)


@dataclass(frozen=True)
class DiffEntry:
    """One changed line; a side's text is None where that side has no line.

    Both sides' line numbers are carried so the diff of (b, a) is the
    exact mirror of the diff of (a, b).
    """

    left_no: int | None
    right_no: int | None
    left_text: str | None
    right_text: str | None

    @property
    def line_no(self) -> int:
        no = self.left_no if self.left_no is not None else self.right_no
        assert no is not None
        return no

    def mirror(self) -> "DiffEntry":
        return DiffEntry(self.right_no, self.left_no, self.right_text, self.left_text)


def _lcs_align(xs: list[str], ys: list[str]) -> list[tuple[int, int]]:
    n, m = len(xs), len(ys)
    L = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        for j in range(m - 1, -1, -1):
            if xs[i] == ys[j]:
                L[i][j] = L[i + 1][j + 1] + 1
            else:
                L[i][j] = max(L[i + 1][j], L[i][j + 1])
    pairs = []
    i = j = 0
    while i < n and j < m:
        if xs[i] == ys[j]:
            pairs.append((i, j))
            i += 1
            j += 1
        elif L[i + 1][j] >= L[i][j + 1]:
            i += 1
        else:
            j += 1
    return pairs


def diff_scripts(a: dsl.Script, b: dsl.Script) -> list[DiffEntry]:
    """Minimal line diff (longest common subsequence) of canonical text."""
    xs = [dsl.format_stmt(s) for s in a.lines]
    ys = [dsl.format_stmt(s) for s in b.lines]
    # canonical operand order keeps the alignment symmetric, so
    # diff(b, a) is exactly the mirror of diff(a, b)
    if (xs, ys) > (ys, xs):
        return [e.mirror() for e in diff_scripts(b, a)]
    entries = []
    i = j = 0
    for mi, mj in _lcs_align(xs, ys) + [(len(xs), len(ys))]:
        gap_left = list(range(i, mi))
        gap_right = list(range(j, mj))
        for gi, gj in zip(gap_left, gap_right):
            entries.append(DiffEntry(gi + 1, gj + 1, xs[gi], ys[gj]))
        for gi in gap_left[len(gap_right):]:
            entries.append(DiffEntry(gi + 1, None, xs[gi], None))
        for gj in gap_right[len(gap_left):]:
            entries.append(DiffEntry(None, gj + 1, None, ys[gj]))
        i, j = mi + 1, mj + 1
    return entries
