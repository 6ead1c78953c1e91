import os
from pathlib import Path

import pytest

from core.rollback import RollbackManager


def test_files_appear_only_on_commit(tmp_path):
    manager = RollbackManager()
    target = manager.stage_text(tmp_path / "a.txt", "hello\n")
    assert not target.exists()
    assert len(list(tmp_path.iterdir())) == 1
    manager.commit()
    assert target.read_text() == "hello\n"
    assert [p.name for p in tmp_path.iterdir()] == ["a.txt"]


def test_context_manager_commits(tmp_path):
    with RollbackManager() as manager:
        manager.stage_bytes(tmp_path / "out" / "b.bin", b"\x00\x01")
    assert (tmp_path / "out" / "b.bin").read_bytes() == b"\x00\x01"


def test_exception_removes_everything(tmp_path):
    (tmp_path / "keep.txt").write_text("old")
    with pytest.raises(RuntimeError):
        with RollbackManager() as manager:
            manager.stage_text(tmp_path / "new" / "deep" / "a.txt", "x")
            manager.stage_text(tmp_path / "b.txt", "y")
            raise RuntimeError("boom")
    assert sorted(p.name for p in tmp_path.iterdir()) == ["keep.txt"]


def test_rollback_after_partial_commit(tmp_path):
    manager = RollbackManager()
    manager.stage_text(tmp_path / "a.txt", "a")
    manager.commit()
    manager.stage_text(tmp_path / "b.txt", "b")
    assert manager.rollback()
    assert list(tmp_path.iterdir()) == []


def test_existing_directories_are_kept(tmp_path):
    existing = tmp_path / "existing"
    existing.mkdir()
    manager = RollbackManager()
    manager.ensure_dir(existing / "child")
    manager.rollback()
    assert existing.is_dir()
    assert not (existing / "child").exists()


def test_commit_replaces_existing_file(tmp_path):
    target = tmp_path / "report.csv"
    target.write_text("stale")
    with RollbackManager() as manager:
        manager.stage_text(target, "fresh")
    assert target.read_text() == "fresh"


def test_failed_commit_restores_replaced_files(tmp_path, monkeypatch):
    (tmp_path / "a.txt").write_text("old a")
    (tmp_path / "b.txt").write_text("old b")
    real_replace = os.replace
    calls = []

    def flaky_replace(src, dst):
        calls.append(Path(dst).name)
        # backup a, publish a, backup b, publish b
        if len(calls) == 4:
            raise OSError("disk full")
        real_replace(src, dst)

    monkeypatch.setattr("core.rollback.os.replace", flaky_replace)
    with pytest.raises(OSError, match="disk full"):
        with RollbackManager() as manager:
            manager.stage_text(tmp_path / "a.txt", "new a")
            manager.stage_text(tmp_path / "b.txt", "new b")

    assert (tmp_path / "a.txt").read_text() == "old a"
    assert (tmp_path / "b.txt").read_text() == "old b"
    assert sorted(p.name for p in tmp_path.iterdir()) == ["a.txt", "b.txt"]


def test_completed_commit_drops_backups(tmp_path):
    (tmp_path / "a.txt").write_text("old")
    with RollbackManager() as manager:
        manager.stage_text(tmp_path / "a.txt", "new")
    assert [p.name for p in tmp_path.iterdir()] == ["a.txt"]
