"""
Staged file writes with rollback for sift-bench
"""

import logging
import os
import tempfile
from pathlib import Path
from typing import List, Tuple, Union


class RollbackManager:
    """
    Stages output files under temporary names and publishes them together

    Used as a context manager: files are renamed into place when the block
    exits normally; on an exception every staged file, every file already
    published and every directory created through the manager is removed.

    A file that a publish replaces is moved aside first and restored on
    rollback. The moved-aside copies are dropped once a commit completes,
    so a rollback after a completed commit only removes the new files.
    """

    def __init__(self):
        self.logger = logging.getLogger(__name__)
        self._staged: List[Tuple[Path, Path]] = []
        self._published: List[Path] = []
        self._backups: List[Tuple[Path, Path]] = []
        self._created_dirs: List[Path] = []

    def __enter__(self) -> "RollbackManager":
        return self

    def __exit__(self, exc_type, exc, tb) -> bool:
        if exc_type is None:
            try:
                self.commit()
            except OSError:
                self.rollback()
                raise
        else:
            self.rollback()
        return False

    def ensure_dir(self, path: Union[str, Path]) -> Path:
        """Create a directory (and parents), remembering which ones did not exist before"""
        path = Path(path)
        missing = []
        current = path
        while not current.exists():
            missing.append(current)
            if current.parent == current:
                break
            current = current.parent
        path.mkdir(parents=True, exist_ok=True)
        self._created_dirs.extend(reversed(missing))
        return path

    def stage_bytes(self, target: Union[str, Path], data: bytes) -> Path:
        """
        Write data next to target under a temporary name

        Args:
            target: Final file path
            data: File content

        Returns:
            The final path (not yet published)
        """
        target = Path(target)
        self.ensure_dir(target.parent)
        fd, temp_name = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=target.parent)
        temp_path = Path(temp_name)
        self._staged.append((temp_path, target))
        with os.fdopen(fd, "wb") as f:
            f.write(data)
            f.flush()
            os.fsync(f.fileno())
        return target

    def stage_text(self, target: Union[str, Path], text: str) -> Path:
        """UTF-8 text, LF line endings"""
        return self.stage_bytes(target, text.encode("utf-8"))

    def commit(self):
        """Rename every staged file into place, keeping replaced files until all are published"""
        while self._staged:
            temp_path, target = self._staged[0]
            if target.exists():
                self._backups.append((self._move_aside(target), target))
            os.replace(temp_path, target)
            self._staged.pop(0)
            self._published.append(target)

        for backup, _ in self._backups:
            self._remove_file(backup)
        self._backups.clear()
        self.logger.debug(f"Published {len(self._published)} files")

    def _move_aside(self, target: Path) -> Path:
        fd, backup_name = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".bak", dir=target.parent)
        os.close(fd)
        backup = Path(backup_name)
        try:
            os.replace(target, backup)
        except OSError:
            self._remove_file(backup)
            raise
        return backup

    def rollback(self) -> bool:
        """
        Remove staged and published files and the directories created for them,
        putting back any file a publish replaced

        Returns:
            True if everything was removed and restored
        """
        success = True
        for temp_path, _ in self._staged:
            success &= self._remove_file(temp_path)
        for target in self._published:
            success &= self._remove_file(target)
        for backup, target in reversed(self._backups):
            try:
                os.replace(backup, target)
            except OSError as e:
                self.logger.error(f"Error restoring {target}: {e}")
                success = False
        for directory in reversed(self._created_dirs):
            try:
                directory.rmdir()
            except OSError:
                # not empty or already gone
                pass

        self._staged.clear()
        self._published.clear()
        self._backups.clear()
        self._created_dirs.clear()
        if success:
            self.logger.info("Rolled back partial output")
        else:
            self.logger.error("Rollback completed with errors")
        return success

    def _remove_file(self, path: Path) -> bool:
        try:
            path.unlink()
            return True
        except FileNotFoundError:
            return True
        except OSError as e:
            self.logger.error(f"Error removing {path}: {e}")
            return False
