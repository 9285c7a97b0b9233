"""Storage adapters. The interface is get/set on string keys under the
"aesp:" namespace with read-your-writes; the file adapter keeps one
file per key under AESP_STORAGE_DIR (or an explicit directory)."""

from __future__ import annotations

import os
import pathlib
import threading
import urllib.parse
from typing import Optional

from ..review import InMemoryStorage, StorageAdapter

__all__ = ["StorageAdapter", "InMemoryStorage", "FileStorage", "storage_from_env"]


class FileStorage(StorageAdapter):
    def __init__(self, directory: Optional[str] = None):
        directory = directory or os.environ.get("AESP_STORAGE_DIR")
        if not directory:
            raise ValueError("directory or AESP_STORAGE_DIR required")
        self.directory = pathlib.Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _path(self, key: str) -> pathlib.Path:
        return self.directory / urllib.parse.quote(key, safe="")

    def get(self, key: str) -> Optional[str]:
        path = self._path(key)
        with self._lock:
            if not path.exists():
                return None
            return path.read_text()

    def set(self, key: str, value: str) -> None:
        path = self._path(key)
        with self._lock:
            tmp = path.with_suffix(".tmp")
            tmp.write_text(value)
            tmp.replace(path)


def storage_from_env() -> StorageAdapter:
    if os.environ.get("AESP_STORAGE_DIR"):
        return FileStorage()
    return InMemoryStorage()
