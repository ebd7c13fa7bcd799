"""Dataset ingestion and the tcode stationarity transformations.

tcodes: 1 level, 2 first difference, 3 second difference, 4 log,
5 log difference, 6 second log difference, 7 change in the growth rate
``x_t/x_{t-1} - 1``.
"""
import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DivisionByZero,
    NonMonotoneDates,
    NonPositiveForLog,
    ParseError,
    SchemaMismatch,
    TooShort,
    UnknownSeries,
)
from .numerics import standardize_rows

GROUPS = ("OUT", "SM", "PR", "IER", "MC", "CON", "INV")
TCODE_LOSS = {1: 0, 2: 1, 3: 2, 4: 0, 5: 1, 6: 2, 7: 2}


@dataclass(frozen=True)
class SeriesSpec:
    id: int
    name: str
    tcode: int
    group: str

    def __post_init__(self):
        if self.tcode not in TCODE_LOSS:
            raise SchemaMismatch(f"series {self.name!r}: tcode {self.tcode} not in 1..7")
        if self.group not in GROUPS:
            raise SchemaMismatch(f"series {self.name!r}: unknown group {self.group!r}")

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(int(d["id"]), str(d["name"]), int(d["tcode"]), str(d["group"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaMismatch(f"bad series spec entry {d!r}: {exc}") from exc


@dataclass(frozen=True)
class Dataset:
    """Transformed panel. ``panel`` is standardised over the full sample,
    ``raw`` holds the same rows before standardisation."""

    dates: tuple
    panel: np.ndarray
    raw: np.ndarray
    specs: tuple
    drop_offset: int
    warnings: tuple = field(default=())

    @property
    def names(self):
        return [s.name for s in self.specs]

    def index_of(self, name):
        for i, s in enumerate(self.specs):
            if s.name == name:
                return i
        raise UnknownSeries(f"unknown series {name!r}")


def apply_tcode(series, tcode):
    """Transform ``series`` by its tcode, dropping the leading undefined values."""
    x = np.asarray(series, dtype=np.float64)
    if tcode not in TCODE_LOSS:
        raise ValueError(f"tcode must be in 1..7, got {tcode}")
    loss = TCODE_LOSS[tcode]
    if x.size < loss + 1:
        raise TooShort(f"tcode {tcode} needs at least {loss + 1} observations, got {x.size}")
    if tcode in (4, 5, 6):
        if np.any(x <= 0):
            raise NonPositiveForLog(f"tcode {tcode} requires strictly positive values")
        x = np.log(x)
    if tcode == 1 or tcode == 4:
        return x.copy()
    if tcode in (2, 5):
        return np.diff(x)
    if tcode in (3, 6):
        return np.diff(x, n=2)
    if np.any(x[:-1] == 0):
        raise DivisionByZero("tcode 7 divides by a zero observation")
    growth = x[1:] / x[:-1] - 1.0
    return np.diff(growth)


def _parse_month(text, lineno):
    text = text.strip()
    try:
        year, month = text.split("-")[:2]
        y, m = int(year), int(month)
    except ValueError as exc:
        raise ParseError(f"line {lineno}: cannot parse date {text!r}") from exc
    if not 1 <= m <= 12:
        raise ParseError(f"line {lineno}: month out of range in {text!r}")
    return y, m


def load_specs(spec_path):
    try:
        with open(spec_path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{spec_path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, list):
        raise SchemaMismatch("series spec must be a JSON array")
    return [SeriesSpec.from_dict(d) for d in raw]


def load_dataset(data_path, spec_path):
    """Read a monthly CSV panel plus its series spec and transform every series.

    Columns are matched to specs by name (or by the id as text). Series that
    turn out constant after transformation are dropped and listed in
    ``Dataset.warnings``.
    """
    specs = load_specs(spec_path)
    with open(data_path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"{data_path}: empty file")
    header = [h.strip() for h in rows[0]]
    if not header or header[0].lower() != "date":
        raise ParseError(f"{data_path}: first column must be 'date'")
    columns = {h: j for j, h in enumerate(header[1:], start=1)}
    col_of = {}
    for s in specs:
        j = columns.get(s.name, columns.get(str(s.id)))
        if j is None:
            raise SchemaMismatch(f"series {s.name!r} (id {s.id}) has no column in {data_path}")
        col_of[s.name] = j
    claimed = set(col_of.values())
    extra = [header[j] for j in range(1, len(header)) if j not in claimed]
    if extra:
        raise SchemaMismatch(f"columns without a series spec: {', '.join(extra)}")

    body = [r for r in rows[1:] if any(c.strip() for c in r)]
    dates = []
    values = np.empty((len(specs), len(body)))
    for t, r in enumerate(body):
        lineno = t + 2
        if len(r) != len(header):
            raise ParseError(f"line {lineno}: expected {len(header)} fields, got {len(r)}")
        dates.append(_parse_month(r[0], lineno))
        for i, s in enumerate(specs):
            cell = r[col_of[s.name]].strip()
            try:
                values[i, t] = float(cell)
            except ValueError as exc:
                raise ParseError(f"line {lineno}: bad value {cell!r} for {s.name}") from exc
            if not np.isfinite(values[i, t]):
                raise ParseError(f"line {lineno}: missing value for {s.name}")
    months = [12 * y + m for y, m in dates]
    if any(b - a != 1 for a, b in zip(months, months[1:])):
        raise NonMonotoneDates("dates must be strictly increasing at monthly spacing")

    offset = max(TCODE_LOSS[s.tcode] for s in specs) if specs else 0
    T = len(body) - offset
    if T < 2:
        raise TooShort("not enough observations after transformation")
    transformed = np.empty((len(specs), T))
    for i, s in enumerate(specs):
        out = apply_tcode(values[i], s.tcode)
        transformed[i] = out[out.size - T:]
    panel, keep = standardize_rows(transformed)
    warnings = tuple(f"constant series dropped: {s.name}" for s, k in zip(specs, keep) if not k)
    kept_specs = tuple(s for s, k in zip(specs, keep) if k)
    iso = tuple(f"{y:04d}-{m:02d}" for y, m in dates[offset:])
    return Dataset(iso, panel, transformed[keep], kept_specs, offset, warnings)


def target_series(dataset, name):
    """Standardised transformed series ``name``; predictors are not filtered."""
    return dataset.panel[dataset.index_of(name)].copy()
