"""Row-oriented metric tables persisted as CSV."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Union

import pandas as pd

logger = logging.getLogger(__name__)


class MetricLog:
    """Collects rows with a fixed column schema and mirrors them to a CSV file."""

    def __init__(self, columns: Sequence[str], path: Optional[Union[str, Path]] = None) -> None:
        self.columns: List[str] = list(columns)
        self.path = Path(path) if path is not None else None
        self.rows: List[Dict[str, object]] = []
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            pd.DataFrame(columns=self.columns).to_csv(self.path, index=False)

    def append_rows(self, rows: Iterable[Dict[str, object]]) -> None:
        """Append rows, filling missing columns with blanks."""

        rows = list(rows)
        new = [{column: row.get(column) for column in self.columns} for row in rows]
        unknown = {key for row in rows for key in row} - set(self.columns)
        if unknown:
            logger.debug(f"Ignoring columns outside the schema: {sorted(unknown)}")
        self.rows.extend(new)
        if self.path is not None and new:
            pd.DataFrame(new, columns=self.columns).to_csv(self.path, mode="a", header=False, index=False)

    def add_row(self, **values: object) -> None:
        """Append a single row."""

        self.append_rows([values])

    def to_frame(self) -> pd.DataFrame:
        """The collected rows as a DataFrame."""

        return pd.DataFrame(self.rows, columns=self.columns)


__all__ = ["MetricLog"]
