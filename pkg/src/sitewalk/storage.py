"""Date-indexed inspection record store.

One JSON line per upsert, appended and flushed; an in-memory index keyed by
(project_id, inspection_date, mission_id) gives the live view. On open the
log is replayed (later lines win) and compacted back to one line per key
when rewrites or torn tails are found.
"""

from __future__ import annotations

import json
import os
from typing import Any

from .errors import StorageError

RecordKey = tuple[str, str, str]


class CaptureStore:
    def __init__(self, path: str):
        self.path = path
        self._index: dict[RecordKey, dict[str, Any]] = {}
        self._load()

    def _load(self) -> None:
        if not os.path.exists(self.path):
            return
        rewrites = 0
        try:
            with open(self.path, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        record = json.loads(line)
                        key = self._key_of(record)
                    except (json.JSONDecodeError, KeyError, TypeError):
                        rewrites += 1  # torn or corrupt line: drop on compact
                        continue
                    if key in self._index:
                        rewrites += 1
                    self._index[key] = record
        except OSError as exc:
            raise StorageError(f"cannot read store {self.path}: {exc}") from exc
        if rewrites:
            self._compact()

    @staticmethod
    def _key_of(record: dict[str, Any]) -> RecordKey:
        return (str(record["project_id"]), str(record["inspection_date"]),
                str(record["mission_id"]))

    def _compact(self) -> None:
        tmp = self.path + ".tmp"
        try:
            with open(tmp, "w", encoding="utf-8") as fh:
                for record in self._index.values():
                    fh.write(json.dumps(record, separators=(",", ":")) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, self.path)
        except OSError as exc:
            raise StorageError(f"cannot compact store {self.path}: {exc}") from exc

    def upsert(self, record: dict[str, Any]) -> None:
        """Store or replace one inspection record and append it to the log."""
        key = self._key_of(record)
        self._index[key] = record
        try:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, separators=(",", ":")) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
        except OSError as exc:
            raise StorageError(f"cannot append to store {self.path}: {exc}") from exc

    def query(self, project_id: str, inspection_date: str) -> list[dict[str, Any]]:
        """All records for the project and date, in insertion order.

        An unknown date is an empty result, not an error.
        """
        return [dict(record) for (proj, date, _), record in self._index.items()
                if proj == project_id and date == inspection_date]

    def dates(self, project_id: str) -> list[str]:
        """Sorted distinct dates that have records for the project."""
        return sorted({date for (proj, date, _) in self._index
                       if proj == project_id})

    def record_count(self) -> int:
        return len(self._index)
