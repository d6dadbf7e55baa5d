import random

import pytest

from rvl import dsl
from rvl.branches import (
    BranchError,
    BranchStore,
    DiffEntry,
    IntegrityError,
    diff_scripts,
    fnv1a64,
)
from rvl.engine import new_session


def script(text: str) -> dsl.Script:
    return dsl.parse_script(text)


BASE_TEXT = 'load t = csv("d.csv")\nprint nrow(t)\n'


@pytest.fixture()
def store(tmp_path):
    (tmp_path / "t.rvl").write_text(BASE_TEXT)
    (tmp_path / "d.csv").write_text("a\n1\n2\n3\n")
    return BranchStore(tmp_path)


# --- save / load -------------------------------------------------------------------


def test_first_save_gets_number_one(store):
    rec = store.save_branch(script(BASE_TEXT), "t", "as published", parent=("t", 0))
    assert rec.number == 1
    assert rec.path.name == "t.1.rvl"
    assert rec.path.exists()


def test_two_saves_share_parent_zero(store):
    r1 = store.save_branch(script(BASE_TEXT), "t", "branch a", parent=("t", 0))
    r2 = store.save_branch(
        script(BASE_TEXT + "print ranges(t)\n"), "t", "branch b", parent=("t", 0)
    )
    assert (r1.number, r2.number) == (1, 2)
    assert r1.parent == r2.parent == ("t", 0)


def test_empty_description_rejected(store):
    with pytest.raises(BranchError):
        store.save_branch(script(BASE_TEXT), "t", "")


def test_missing_parent_rejected(store):
    with pytest.raises(BranchError, match="parent"):
        store.save_branch(script(BASE_TEXT), "t", "x", parent=("t", 7))


def test_save_load_roundtrip(store):
    sc = script(BASE_TEXT + "# note\n\nlet a = mean(t.a)\n")
    rec = store.save_branch(sc, "t", "with note", parent=("t", 0), created_at="2026-08-09T10:00:00Z")
    loaded, rec2 = store.load_branch("t", rec.number)
    assert loaded == sc
    assert rec2.description == "with note"
    assert rec2.parent == ("t", 0)
    assert rec2.created_at == "2026-08-09T10:00:00Z"
    assert rec2.content_hash == rec.content_hash


def test_load_original_as_number_zero(store):
    loaded, rec = store.load_branch("t", 0)
    assert rec.number == 0
    assert rec.description == "original"
    assert loaded == script(BASE_TEXT)


def test_tampered_body_raises_integrity_error(store):
    rec = store.save_branch(script(BASE_TEXT), "t", "legit", parent=("t", 0))
    content = rec.path.read_text()
    rec.path.write_text(content.replace("nrow(t)", "ranges(t)"))
    with pytest.raises(IntegrityError):
        store.load_branch("t", rec.number)


def test_load_missing_branch(store):
    with pytest.raises(BranchError, match="no branch"):
        store.load_branch("t", 9)


def test_branch_file_is_self_describing(store):
    rec = store.save_branch(script(BASE_TEXT), "t", "desc here", parent=("t", 0))
    lines = rec.path.read_text().splitlines()
    assert lines[0] == "#: desc desc here"
    assert lines[1] == "#: parent t.0"
    assert lines[2].startswith("#: created ")
    assert lines[3] == f"#: hash {rec.content_hash}"
    assert lines[4:] == BASE_TEXT.splitlines()


def test_replay_from_branch_matches_saving_session(store, tmp_path):
    sc = script(BASE_TEXT)
    s1 = new_session(sc, data_root=tmp_path).continue_run()
    rec = store.save_branch(sc, "t", "replayable", parent=("t", 0))
    loaded, _ = store.load_branch("t", rec.number)
    s2 = new_session(loaded, data_root=tmp_path).continue_run()
    assert s2.rendered_log() == s1.rendered_log()


# --- list -------------------------------------------------------------------------------


def test_list_unsaved_has_original_only(store):
    recs = store.list_branches("t")
    assert [r.number for r in recs] == [0]


def test_list_after_two_saves(store):
    store.save_branch(script(BASE_TEXT), "t", "a", parent=("t", 0))
    store.save_branch(script(BASE_TEXT), "t", "b", parent=("t", 1))
    recs = store.list_branches("t")
    assert [r.number for r in recs] == [0, 1, 2]
    assert [r.description for r in recs] == ["original", "a", "b"]


def test_numbering_never_reuses(store):
    r1 = store.save_branch(script(BASE_TEXT), "t", "a", parent=("t", 0))
    r2 = store.save_branch(script(BASE_TEXT), "t", "b", parent=("t", 0))
    r2.path.unlink()
    r3 = store.save_branch(script(BASE_TEXT), "t", "c", parent=("t", 0))
    assert (r1.number, r3.number) == (1, 3)


def test_lineage_acyclic_over_random_save_sequences(store):
    rng = random.Random(77)
    for _ in range(30):
        recs = store.list_branches("t")
        parent = rng.choice(recs)
        store.save_branch(
            script(BASE_TEXT), "t", f"from {parent.number}", parent=("t", parent.number)
        )
    by_num = {r.number: r for r in store.list_branches("t")}
    for rec in by_num.values():
        seen = set()
        cur = rec
        while cur.parent is not None:
            assert cur.number not in seen
            seen.add(cur.number)
            assert cur.parent[1] < cur.number  # parents strictly older
            cur = by_num[cur.parent[1]]


def test_bases_are_independent(store, tmp_path):
    (tmp_path / "u.rvl").write_text("# empty\n")
    ra = store.save_branch(script(BASE_TEXT), "t", "a", parent=("t", 0))
    rb = store.save_branch(script("# empty\n"), "u", "b", parent=("u", 0))
    assert ra.number == rb.number == 1
    assert {r.ref() for r in store.list_branches("u")} == {"u.0", "u.1"}


# --- diff --------------------------------------------------------------------------------


def test_diff_identical_is_empty(store):
    store.save_branch(script(BASE_TEXT), "t", "same", parent=("t", 0))
    assert store.diff_branches(("t", 0), ("t", 1)) == []


def test_diff_single_edited_line(store):
    lines = BASE_TEXT.splitlines()
    edited = "\n".join(lines[:1] + ["print ranges(t)"]) + "\n"
    store.save_branch(script(edited), "t", "edited", parent=("t", 0))
    d = store.diff_branches(("t", 0), ("t", 1))
    assert len(d) == 1
    e = d[0]
    assert (e.left_no, e.right_no) == (2, 2)
    assert e.left_text == "print nrow(t)"
    assert e.right_text == "print ranges(t)"
    assert e.line_no == 2


def test_diff_insert_and_delete():
    a = script("let a = 1\nlet b = 2\nlet c = 3\n")
    b = script("let a = 1\nlet c = 3\nlet d = 4\n")
    d = diff_scripts(a, b)
    assert DiffEntry(2, None, "let b = 2", None) in d
    assert DiffEntry(None, 3, None, "let d = 4") in d


def test_diff_mirror_property_random_edits():
    rng = random.Random(3)
    pool = [f"let v{i} = {i}" for i in range(10)] + ["# note", "print nrow(t)"]
    for _ in range(60):
        xa = [rng.choice(pool) for _ in range(rng.randint(0, 8))]
        xb = list(xa)
        for _ in range(rng.randint(0, 3)):
            op = rng.random()
            if op < 0.4 and xb:
                xb[rng.randrange(len(xb))] = rng.choice(pool)
            elif op < 0.7 and xb:
                del xb[rng.randrange(len(xb))]
            else:
                xb.insert(rng.randint(0, len(xb)), rng.choice(pool))
        a = script("\n".join(xa) + "\n" if xa else "")
        b = script("\n".join(xb) + "\n" if xb else "")
        fwd = diff_scripts(a, b)
        rev = diff_scripts(b, a)
        assert rev == [e.mirror() for e in fwd]


def test_fnv1a64_known_values():
    # standard FNV-1a test vectors
    assert fnv1a64("") == "cbf29ce484222325"
    assert fnv1a64("a") == "af63dc4c8601ec8c"
    assert fnv1a64("foobar") == "85944171f73967e8"
