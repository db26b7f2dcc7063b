"""Tabular datasets and CSV ingestion with complete-case filtering."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, EmptyDataError, FormatError, ParseError

__all__ = ["Dataset", "load_csv", "write_csv"]


@dataclass(frozen=True)
class Dataset:
    """Numeric sample matrix with variable names.

    ``values`` is n x p float64; categorical codes are stored as reals.
    ``dropped_rows`` records how many rows were removed during ingestion.
    """

    names: tuple[str, ...]
    values: np.ndarray = field(repr=False)
    dropped_rows: int = 0

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", arr)
        if arr.ndim != 2:
            raise DataError(f"values must be 2-dimensional, got shape {arr.shape}")
        if len(self.names) != arr.shape[1]:
            raise DataError(
                f"{len(self.names)} names for {arr.shape[1]} columns"
            )

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def column(self, i: int) -> np.ndarray:
        return self.values[:, i]


def load_csv(path: str, missing_token: str = "NA") -> Dataset:
    """Read a headered CSV; rows containing the missing token are dropped.

    Raises FormatError for ragged rows, ParseError (with the file location)
    for non-numeric cells, and EmptyDataError when nothing usable remains.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDataError(f"{path}: file is empty") from None
        names = tuple(cell.strip() for cell in header)
        rows: list[list[float]] = []
        dropped = 0
        for lineno, cells in enumerate(reader, start=2):
            if not cells:
                continue
            if len(cells) != len(names):
                raise FormatError(
                    f"{path}: line {lineno} has {len(cells)} cells, expected {len(names)}"
                )
            stripped = [cell.strip() for cell in cells]
            if any(cell == missing_token for cell in stripped):
                dropped += 1
                continue
            parsed = []
            for name, cell in zip(names, stripped):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise ParseError(
                        f"{path}: line {lineno}, column {name!r}: cannot parse {cell!r}"
                    ) from None
            rows.append(parsed)
    if not rows:
        raise EmptyDataError(f"{path}: no complete rows ({dropped} dropped)")
    return Dataset(names=names, values=np.array(rows, dtype=np.float64), dropped_rows=dropped)


def write_csv(dataset: Dataset, path: str) -> None:
    """Write with shortest round-tripping decimal formatting, so a reload
    reproduces the values bit for bit."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(dataset.names)
        for row in dataset.values:
            writer.writerow([repr(float(v)) for v in row])
