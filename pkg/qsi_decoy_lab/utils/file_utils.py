"""File utility functions for QSI Decoy Lab."""

import hashlib
from pathlib import Path
from typing import Union

from .error_handling import FileSystemError

PathLike = Union[str, Path]

_CHUNK = 1 << 16


class FileProcessor:
    """Handles output directories, file writes and content hashes."""

    @staticmethod
    def ensure_directory(path: PathLike) -> Path:
        """Create a directory (and parents) if needed.

        Args:
            path: Directory to create

        Returns:
            The directory as a Path

        Raises:
            FileSystemError: If the path exists as a file or cannot be created
        """
        directory = Path(path).expanduser()
        try:
            directory.mkdir(parents=True, exist_ok=True)
        except (FileExistsError, NotADirectoryError) as e:
            raise FileSystemError(f"Output path is not a directory: {directory}", details={"path": str(directory)}) from e
        except OSError as e:
            raise FileSystemError(f"Cannot create output directory {directory}: {e}", details={"path": str(directory)}) from e
        return directory

    @staticmethod
    def write_text(path: PathLike, text: str) -> Path:
        """Write UTF-8 text with '\\n' line endings."""
        target = Path(path)
        try:
            with open(target, "w", encoding="utf-8", newline="\n") as f:
                f.write(text)
        except OSError as e:
            raise FileSystemError(f"Cannot write {target}: {e}", details={"path": str(target)}) from e
        return target

    @staticmethod
    def sha256(path: PathLike) -> str:
        """Hex SHA-256 digest of a file's content."""
        digest = hashlib.sha256()
        with open(path, "rb") as f:
            for chunk in iter(lambda: f.read(_CHUNK), b""):
                digest.update(chunk)
        return digest.hexdigest()
