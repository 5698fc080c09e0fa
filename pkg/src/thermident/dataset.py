"""Aligned building time series and their CSV persistence.

CSV layout: optional ``# key: value`` metadata lines, a mandatory header
row, then one comma-separated row per sample. ``t_s`` is always written to
the metadata block.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from .exceptions import DatasetFormatError, IrregularSpacingError, MissingCellError

COLUMNS = ("timestamp", "t_z", "q_hvac", "p_c", "p_h", "t_am", "q_int", "q_solar")
SERIES = COLUMNS[1:]
DEFAULT_START = datetime(2023, 6, 1)


def fmt(value: float) -> str:
    """Shortest round-tripping text for a float (stable across runs)."""
    if value == 0:
        return "0"
    return repr(float(value))


@dataclass(frozen=True, eq=False)
class Dataset:
    """Equally spaced samples of control, disturbances and zone temperature.

    ``q_hvac`` is the HVAC heat rate (W, negative when cooling); ``p_c`` and
    ``p_h`` are the electrical power drawn while cooling and heating.
    """

    t_s: float
    t_z: np.ndarray
    q_hvac: np.ndarray
    p_c: np.ndarray
    p_h: np.ndarray
    t_am: np.ndarray
    q_int: np.ndarray
    q_solar: np.ndarray
    start: datetime = DEFAULT_START
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.t_s > 0:
            raise DatasetFormatError(f"t_s must be positive, got {self.t_s}")
        n = None
        for name in SERIES:
            arr = np.array(getattr(self, name), dtype=float).reshape(-1)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
            if n is None:
                n = arr.size
            elif arr.size != n:
                raise DatasetFormatError(f"series {name} has {arr.size} samples, expected {n}")
            bad = np.flatnonzero(~np.isfinite(arr))
            if bad.size:
                raise MissingCellError("non-finite value", row=int(bad[0]), column=name)
        both = np.flatnonzero((self.p_c != 0) & (self.p_h != 0))
        if both.size:
            raise DatasetFormatError("p_c and p_h both nonzero", row=int(both[0]))

    def __len__(self) -> int:
        return self.t_z.size

    @property
    def w(self) -> np.ndarray:
        """Disturbances ``[t_am, q_int, q_solar]`` as a (T, 3) array."""
        return np.column_stack([self.t_am, self.q_int, self.q_solar])

    @property
    def samples_per_day(self) -> int:
        return int(round(86400.0 / self.t_s))

    def timestamps(self) -> list[datetime]:
        step = timedelta(seconds=self.t_s)
        return [self.start + k * step for k in range(len(self))]

    def rc_inputs(self) -> np.ndarray:
        """Inputs for RC models: columns ``[q_hvac, t_am, q_int, q_solar]``."""
        return np.column_stack([self.q_hvac, self.t_am, self.q_int, self.q_solar])

    def als_inputs(self) -> np.ndarray:
        """Inputs for lag regressions: columns ``[p_c, p_h, t_am]``."""
        return np.column_stack([self.p_c, self.p_h, self.t_am])

    def __getitem__(self, item) -> "Dataset":
        if not isinstance(item, slice) or item.step not in (None, 1):
            raise TypeError("datasets support contiguous slicing only")
        start, stop, _ = item.indices(len(self))
        if stop <= start:
            raise ValueError("empty dataset slice")
        return Dataset(
            t_s=self.t_s,
            start=self.start + timedelta(seconds=self.t_s * start),
            metadata=dict(self.metadata),
            **{name: getattr(self, name)[start:stop] for name in SERIES},
        )

    def last_days(self, n_days: float) -> "Dataset":
        return self[len(self) - int(round(n_days * self.samples_per_day)):]

    def equals(self, other: "Dataset", tol: float = 0.0) -> bool:
        if len(self) != len(other) or self.t_s != other.t_s or self.start != other.start:
            return False
        return all(
            np.allclose(getattr(self, c), getattr(other, c), rtol=0, atol=tol) for c in SERIES
        )


def concat(first: Dataset, second: Dataset) -> Dataset:
    """Join two datasets that are contiguous in time."""
    if first.t_s != second.t_s:
        raise ValueError("datasets have different sample periods")
    expected = first.start + timedelta(seconds=first.t_s * len(first))
    if second.start != expected:
        raise ValueError("datasets are not contiguous")
    return Dataset(
        t_s=first.t_s,
        start=first.start,
        metadata=dict(first.metadata),
        **{c: np.concatenate([getattr(first, c), getattr(second, c)]) for c in SERIES},
    )


def write_comment_header(fh, metadata: dict) -> None:
    for key in sorted(metadata):
        fh.write(f"# {key}: {metadata[key]}\n")


def read_comment_header(lines) -> tuple[dict, int]:
    """Parse leading ``# key: value`` lines; returns (metadata, n_lines)."""
    meta = {}
    n = 0
    for line in lines:
        if not line.startswith("#"):
            break
        n += 1
        body = line[1:].strip()
        if ":" in body:
            key, value = body.split(":", 1)
            meta[key.strip()] = value.strip()
    return meta, n


def write_dataset(ds: Dataset, path, metadata: dict | None = None) -> None:
    meta = dict(ds.metadata)
    meta.update(metadata or {})
    meta["t_s"] = fmt(ds.t_s)
    buf = io.StringIO()
    write_comment_header(buf, meta)
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    cols = [getattr(ds, c) for c in SERIES]
    for k, ts in enumerate(ds.timestamps()):
        writer.writerow([ts.isoformat()] + [fmt(col[k]) for col in cols])
    Path(path).write_text(buf.getvalue())


def read_dataset(path) -> Dataset:
    """Load a dataset CSV, validating header, cells and time spacing."""
    text = Path(path).read_text()
    lines = text.splitlines()
    meta, n_comment = read_comment_header(lines)
    rows = list(csv.reader(lines[n_comment:]))
    if not rows:
        raise DatasetFormatError("missing header row", row=n_comment + 1)
    header = [h.strip() for h in rows[0]]
    if tuple(header) != COLUMNS:
        raise DatasetFormatError(
            f"malformed header {header}; expected {list(COLUMNS)}", row=n_comment + 1
        )
    data = {c: [] for c in COLUMNS}
    for offset, row in enumerate(rows[1:]):
        line_no = n_comment + 2 + offset
        if not row:
            continue
        if len(row) != len(COLUMNS):
            raise MissingCellError(
                f"expected {len(COLUMNS)} cells, found {len(row)}", row=line_no
            )
        for col, cell in zip(COLUMNS, row):
            cell = cell.strip()
            if cell == "":
                raise MissingCellError("empty cell", row=line_no, column=col)
            try:
                value = datetime.fromisoformat(cell) if col == "timestamp" else float(cell)
            except ValueError:
                raise MissingCellError(f"unparsable value {cell!r}", row=line_no, column=col) from None
            if col != "timestamp" and not math.isfinite(value):
                raise MissingCellError("non-finite value", row=line_no, column=col)
            data[col].append(value)
    stamps = data["timestamp"]
    if not stamps:
        raise DatasetFormatError("dataset has no samples")
    if "t_s" in meta:
        t_s = float(meta["t_s"])
    elif len(stamps) > 1:
        t_s = (stamps[1] - stamps[0]).total_seconds()
    else:
        raise DatasetFormatError("cannot infer t_s from a single sample without metadata")
    first_line = n_comment + 2
    for k in range(1, len(stamps)):
        gap = (stamps[k] - stamps[k - 1]).total_seconds()
        if gap != t_s:
            raise IrregularSpacingError(
                f"timestamp spacing {gap:g} s differs from t_s={t_s:g} s", row=first_line + k
            )
    meta.pop("t_s", None)
    return Dataset(
        t_s=t_s,
        start=stamps[0],
        metadata=meta,
        **{c: np.array(data[c]) for c in SERIES},
    )
