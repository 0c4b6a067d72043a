"""Reading Fama-French style CSV files and plain matrix CSVs.

Files from the Fama-French data library carry a few lines of free text, a
header row whose first cell is blank (or ``Date``), then rows keyed by an
integer ``YYYYMMDD`` date. A trailing block (copyright line, annual table)
ends the data section at the first line that does not start with a date.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatch, EmptyIntersection, MissingColumn, ParseError
from .estimators import FactorPanel, ReturnPanel

logger = logging.getLogger(__name__)

FACTOR_COLUMNS = ("Mkt-RF", "SMB", "HML")
RISK_FREE = "RF"
MISSING_MARKERS = (-99.99, -999.0)


@dataclass(frozen=True)
class DatedTable:
    dates: np.ndarray  # int64 YYYYMMDD, strictly increasing
    columns: dict[str, np.ndarray]

    def __post_init__(self):
        dates = np.asarray(self.dates, dtype=np.int64)
        object.__setattr__(self, "dates", dates)
        cols = {k: np.asarray(v, dtype=float) for k, v in self.columns.items()}
        for k, v in cols.items():
            if v.shape != dates.shape:
                raise DimensionMismatch(f"column {k!r} has {v.size} values for {dates.size} dates")
        if np.any(np.diff(dates) <= 0):
            raise ParseError("dates are not strictly increasing")
        object.__setattr__(self, "columns", cols)

    @property
    def names(self) -> list[str]:
        return list(self.columns)

    def __len__(self) -> int:
        return self.dates.size

    def matrix(self, names=None) -> np.ndarray:
        """Selected columns stacked as rows (variables x dates)."""
        names = self.names if names is None else list(names)
        for name in names:
            if name not in self.columns:
                raise MissingColumn(name)
        return np.vstack([self.columns[n] for n in names]) if names else np.empty((0, len(self)))

    def select(self, mask) -> "DatedTable":
        return DatedTable(self.dates[mask], {k: v[mask] for k, v in self.columns.items()})


def _is_date(cell: str) -> bool:
    cell = cell.strip()
    return len(cell) == 8 and cell.isdigit()


def _read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8-sig")
    except FileNotFoundError as exc:
        raise ParseError("file not found", path) from exc
    except OSError as exc:
        raise ParseError(str(exc), path) from exc


def _parse_dated_csv(path, missing: str = "reject") -> DatedTable:
    if missing not in ("reject", "drop"):
        raise ValueError(f"missing policy must be 'reject' or 'drop', got {missing!r}")
    rows = list(csv.reader(io.StringIO(_read_text(path))))

    # header is the last non-empty row before the first date-keyed row
    first = next((i for i, r in enumerate(rows) if r and _is_date(r[0])), None)
    if first is None:
        raise ParseError("no data rows (expected rows starting with a YYYYMMDD date)", path)
    header_idx = next((i for i in range(first - 1, -1, -1) if any(c.strip() for c in rows[i])), None)
    if header_idx is None:
        raise ParseError("no header row before the data", path, first + 1)
    header = [c.strip() for c in rows[header_idx]]
    names = header[1:]
    while names and not names[-1]:
        names.pop()
    if not names or any(not n for n in names):
        raise ParseError("header has empty column names", path, header_idx + 1)
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise ParseError(f"duplicate column names {dupes}", path, header_idx + 1)

    dates: list[int] = []
    values: list[list[float]] = []
    dropped = 0
    for i in range(first, len(rows)):
        row = rows[i]
        if not row or not _is_date(row[0]):
            break
        lineno = i + 1
        cells = [c.strip() for c in row[1:]]
        while len(cells) > len(names) and not cells[-1]:
            cells.pop()
        if len(cells) != len(names):
            raise ParseError(f"expected {len(names)} values, found {len(cells)}", path, lineno)
        try:
            vals = [float(c) for c in cells]
        except ValueError as exc:
            raise ParseError(f"non-numeric value: {exc}", path, lineno) from exc
        bad = [v for v in vals if not math.isfinite(v) or v in MISSING_MARKERS]
        if bad:
            if missing == "reject":
                raise ParseError(f"missing-value marker {bad[0]}", path, lineno)
            dropped += 1
            continue
        date = int(row[0])
        if dates and date <= dates[-1]:
            raise ParseError(f"date {date} does not follow {dates[-1]}", path, lineno)
        dates.append(date)
        values.append(vals)

    if dropped:
        logger.warning("%s: dropped %d rows with missing values", path, dropped)
    if not dates:
        raise ParseError("empty data section", path)
    arr = np.array(values, dtype=float)
    return DatedTable(np.array(dates), {n: arr[:, j] for j, n in enumerate(names)})


def load_factor_csv(path, *, missing: str = "reject") -> DatedTable:
    """Read a factor file; requires ``Mkt-RF``, ``SMB`` and ``HML`` (``RF`` optional)."""
    table = _parse_dated_csv(path, missing)
    for name in FACTOR_COLUMNS:
        if name not in table.columns:
            raise MissingColumn(name, path)
    return table


def load_returns_csv(path, *, missing: str = "reject") -> DatedTable:
    """Read an asset-return file with arbitrary column names."""
    return _parse_dated_csv(path, missing)


class AlignedPanels(NamedTuple):
    factors: FactorPanel
    returns: ReturnPanel
    dropped_factor_dates: int
    dropped_return_dates: int


def align_and_excess(
    factors: DatedTable,
    returns: DatedTable,
    *,
    subtract_rf: bool = True,
    factor_names=FACTOR_COLUMNS,
) -> AlignedPanels:
    """Inner-join two tables on date and build factor and excess-return panels.

    With ``subtract_rf`` the ``RF`` column of ``factors`` is subtracted from
    every asset return. Dates present in only one table are dropped and
    counted in the result.
    """
    if len(factors) == 0 or len(returns) == 0:
        raise EmptyIntersection("one of the tables is empty")
    if subtract_rf and RISK_FREE not in factors.columns:
        raise MissingColumn(RISK_FREE)
    common, fi, ri = np.intersect1d(factors.dates, returns.dates, assume_unique=True, return_indices=True)
    if common.size == 0:
        raise EmptyIntersection("factor and return tables share no dates")
    n_drop_f = len(factors) - common.size
    n_drop_r = len(returns) - common.size
    if n_drop_f or n_drop_r:
        logger.info("alignment dropped %d factor dates and %d return dates", n_drop_f, n_drop_r)

    labels = common.tolist()
    X = factors.matrix(factor_names)[:, fi]
    Y = returns.matrix()[:, ri]
    if subtract_rf:
        Y = Y - factors.columns[RISK_FREE][fi][None, :]
    return AlignedPanels(FactorPanel(X, labels), ReturnPanel(Y, labels), n_drop_f, n_drop_r)


def write_dated_csv(table: DatedTable, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["Date"] + table.names)
        for t, d in enumerate(table.dates):
            w.writerow([str(int(d))] + [format(table.columns[n][t], ".17g") for n in table.names])


def write_matrix_csv(M, path) -> None:
    """Write a 2-D array with a ``# rows=R cols=C`` comment line first."""
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    if M.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got {M.ndim} dimensions")
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(f"# rows={M.shape[0]} cols={M.shape[1]}\r\n")
            w = csv.writer(fh)
            for row in M:
                w.writerow([format(x, ".17g") for x in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def read_matrix_csv(path) -> np.ndarray:
    text = _read_text(path)
    shape = None
    rows: list[list[float]] = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), 1):
        if not row:
            continue
        if row[0].startswith("#"):
            line = ",".join(row)
            if "rows=" in line and "cols=" in line:
                try:
                    parts = dict(kv.split("=") for kv in line.lstrip("#").split())
                    shape = (int(parts["rows"]), int(parts["cols"]))
                except (ValueError, KeyError) as exc:
                    raise ParseError("malformed dimension comment", path, lineno) from exc
            continue
        try:
            vals = [float(c) for c in row]
        except ValueError as exc:
            raise ParseError(f"non-numeric value: {exc}", path, lineno) from exc
        if rows and len(vals) != len(rows[0]):
            raise ParseError(f"ragged row: {len(vals)} values, expected {len(rows[0])}", path, lineno)
        rows.append(vals)
    M = np.array(rows, dtype=float) if rows else np.empty((0, 0))
    if shape is not None:
        if shape == (0, 0) or 0 in shape:
            if rows:
                raise ParseError(f"dimension comment says {shape} but data rows follow", path)
            return np.empty(shape)
        if M.shape != shape:
            raise ParseError(f"dimension comment says {shape}, data is {M.shape}", path)
    return M
