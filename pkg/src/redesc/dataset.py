"""Two-view tabular data with missing values.

A dataset is a pair of views over a shared instance set: each view holds its
own attributes and an instances-by-attributes cell matrix. Cells are numeric,
boolean, or categorical, and any cell may be missing. Views are immutable
after construction and safe to share across workers.

Storage is columnar: numeric and boolean columns are float64 arrays (missing
cells are NaN; booleans are 0.0/1.0), categorical columns are int32 code
arrays (missing cells are -1).
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

NUMERIC = "numeric"
BOOLEAN = "boolean"
CATEGORICAL = "categorical"
KINDS = (NUMERIC, BOOLEAN, CATEGORICAL)

# names must stay parseable in the query grammar ("inf" is a number there)
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_./]*\Z")
_RESERVED_NAMES = frozenset({"inf", "infinity", "nan"})

MISSING_TOKENS = frozenset({"?", ""})
_TRUE_TOKENS = frozenset({"1", "true", "t", "yes"})
_FALSE_TOKENS = frozenset({"0", "false", "f", "no"})


class _Missing:
    """Singleton marker for a missing cell value."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "MISSING"


MISSING = _Missing()


class SchemaError(ValueError):
    """Schema file or column declaration problem."""


class DataError(ValueError):
    """Malformed data file content."""


@dataclass(frozen=True)
class Attribute:
    """One column of a view: dense id, unique name, and value kind."""

    id: int
    name: str
    kind: str
    categories: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise SchemaError(f"unknown attribute kind {self.kind!r} for {self.name!r}")
        if not _NAME_RE.match(self.name) or self.name.lower() in _RESERVED_NAMES:
            raise SchemaError(
                f"attribute name {self.name!r} is not usable in queries; use "
                "letters, digits, '_', '.', '/' and start with a letter or '_'"
            )
        if self.kind == CATEGORICAL and not self.categories:
            raise SchemaError(f"categorical attribute {self.name!r} has no categories")
        if self.kind != CATEGORICAL and self.categories:
            raise SchemaError(f"attribute {self.name!r} of kind {self.kind} cannot carry categories")

    def category_code(self, label: str) -> int:
        try:
            return self.categories.index(label)
        except ValueError:
            raise DataError(f"unknown category {label!r} for attribute {self.name!r}") from None


class View:
    """Immutable columnar matrix of one attribute set over the instance rows."""

    def __init__(self, attributes: Sequence[Attribute], columns: Sequence[np.ndarray]):
        if len(attributes) != len(columns):
            raise SchemaError("attribute list and column list differ in length")
        names = [a.name for a in attributes]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate attribute names in view")
        for i, attr in enumerate(attributes):
            if attr.id != i:
                raise SchemaError(f"attribute ids must be dense; got {attr.id} at position {i}")
        lengths = {len(c) for c in columns}
        if len(lengths) > 1:
            raise DataError("columns differ in row count")
        self.attributes = tuple(attributes)
        self.columns = [np.asarray(c) for c in columns]
        for attr, col in zip(self.attributes, self.columns):
            col.setflags(write=False)
            if attr.kind == CATEGORICAL and col.dtype.kind not in "i":
                raise DataError(f"categorical column {attr.name!r} must hold integer codes")
        self.n_rows = len(self.columns[0]) if self.columns else 0
        self._index = {a.name: a.id for a in self.attributes}

    @property
    def n_cols(self) -> int:
        return len(self.attributes)

    def attribute_id(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise DataError(f"unknown attribute name {name!r}") from None

    def missing_mask(self, col: int) -> np.ndarray:
        attr = self.attributes[col]
        if attr.kind == CATEGORICAL:
            return self.columns[col] < 0
        return np.isnan(self.columns[col])

    def value_at(self, row: int, col: int):
        """Cell value as a Python object, or MISSING."""
        attr = self.attributes[col]
        raw = self.columns[col][row]
        if attr.kind == CATEGORICAL:
            return MISSING if raw < 0 else attr.categories[int(raw)]
        if np.isnan(raw):
            return MISSING
        if attr.kind == BOOLEAN:
            return bool(raw == 1.0)
        return float(raw)

    def equals(self, other: "View") -> bool:
        if self.attributes != other.attributes or self.n_rows != other.n_rows:
            return False
        for a, b in zip(self.columns, other.columns):
            if a.dtype.kind == "f":
                if not np.array_equal(a, b, equal_nan=True):
                    return False
            elif not np.array_equal(a, b):
                return False
        return True


@dataclass(frozen=True)
class Dataset:
    """Two views over one shared, ordered instance set."""

    view1: View
    view2: View
    element_names: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.view1.n_rows != self.view2.n_rows:
            raise DataError(
                f"views disagree on row count: {self.view1.n_rows} vs {self.view2.n_rows}"
            )
        if len(self.element_names) != self.view1.n_rows:
            raise DataError("element name count differs from view row count")
        if len(set(self.element_names)) != len(self.element_names):
            raise DataError("element names are not unique")

    @property
    def n_elements(self) -> int:
        return self.view1.n_rows

    def view(self, view_id: int) -> View:
        if view_id == 1:
            return self.view1
        if view_id == 2:
            return self.view2
        raise ValueError(f"view_id must be 1 or 2, got {view_id}")


def read_schema(path: str | Path) -> dict[str, str]:
    """Parse a sidecar schema file.

    Grammar: one `column_name = kind` pair per line, where kind is one of
    numeric, boolean, categorical. Blank lines and `#` comments are ignored.
    """
    out: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise SchemaError(f"{path}:{lineno}: expected 'name = kind', got {line!r}")
        name, _, kind = line.partition("=")
        name, kind = name.strip(), kind.strip()
        if kind not in KINDS:
            raise SchemaError(f"{path}:{lineno}: unknown kind {kind!r} for column {name!r}")
        if name in out:
            raise SchemaError(f"{path}:{lineno}: duplicate declaration for column {name!r}")
        out[name] = kind
    return out


def _parse_numeric(token: str, path, lineno: int, name: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise DataError(
            f"{path}:{lineno}: non-numeric token {token!r} in numeric column {name!r}"
        ) from None
    if np.isnan(value):
        raise DataError(f"{path}:{lineno}: 'nan' is not a value; use the missing marker '?'")
    return value


def _parse_boolean(token: str, path, lineno: int, name: str) -> float:
    low = token.lower()
    if low in _TRUE_TOKENS:
        return 1.0
    if low in _FALSE_TOKENS:
        return 0.0
    raise DataError(f"{path}:{lineno}: non-boolean token {token!r} in boolean column {name!r}")


def load_view(path: str | Path, schema: Mapping[str, str]) -> View:
    """Load a CSV file (header row, comma separated) into a View.

    Every column must be declared in `schema`; the missing markers '?' and ''
    parse as MISSING. Categorical categories are inferred from the data and
    ordered lexicographically.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            raise SchemaError(f"{path}: duplicate column names in header")
        for name in header:
            if name not in schema:
                raise SchemaError(f"{path}: column {name!r} not declared in schema")
        rows: list[list[str]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
                )
            rows.append([tok.strip() for tok in row])

    attributes: list[Attribute] = []
    columns: list[np.ndarray] = []
    for j, name in enumerate(header):
        kind = schema[name]
        tokens = [r[j] for r in rows]
        if kind == CATEGORICAL:
            labels = sorted({t for t in tokens if t not in MISSING_TOKENS})
            if not labels:
                raise SchemaError(f"{path}: categorical column {name!r} has no observed categories")
            code = {lab: i for i, lab in enumerate(labels)}
            col = np.array(
                [-1 if t in MISSING_TOKENS else code[t] for t in tokens], dtype=np.int32
            )
            attributes.append(Attribute(j, name, CATEGORICAL, tuple(labels)))
        else:
            parse = _parse_numeric if kind == NUMERIC else _parse_boolean
            vals = np.empty(len(tokens), dtype=np.float64)
            for i, t in enumerate(tokens):
                vals[i] = np.nan if t in MISSING_TOKENS else parse(t, path, i + 2, name)
            col = vals
            attributes.append(Attribute(j, name, kind))
        columns.append(col)
    return View(attributes, columns)


def write_view(view: View, path: str | Path) -> None:
    """Write a View back to the native CSV format (missing cells as '?')."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([a.name for a in view.attributes])
        for i in range(view.n_rows):
            row = []
            for j, attr in enumerate(view.attributes):
                v = view.value_at(i, j)
                if v is MISSING:
                    row.append("?")
                elif attr.kind == BOOLEAN:
                    row.append("1" if v else "0")
                elif attr.kind == NUMERIC:
                    row.append(repr(v))
                else:
                    row.append(v)
            writer.writerow(row)


def write_schema(view: View, path: str | Path) -> None:
    lines = [f"{a.name} = {a.kind}" for a in view.attributes]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_dataset(
    view1_path: str | Path,
    schema1_path: str | Path,
    view2_path: str | Path,
    schema2_path: str | Path,
) -> Dataset:
    """Load both views and pair them; element names are generated as e0..eN-1."""
    v1 = load_view(view1_path, read_schema(schema1_path))
    v2 = load_view(view2_path, read_schema(schema2_path))
    names = tuple(f"e{i}" for i in range(v1.n_rows))
    return Dataset(v1, v2, names)


def make_artificial(view: View, seed) -> View:
    """Shuffled twin of a view: each column independently permuted over rows.

    Per-column value multisets (missing cells included) are preserved exactly;
    output is deterministic for a fixed seed.
    """
    if view.n_rows == 0:
        raise DataError("cannot shuffle an empty view")
    rng = np.random.default_rng(seed)
    cols = [col[rng.permutation(view.n_rows)] for col in view.columns]
    return View(view.attributes, cols)


def concat_rows(a: View, b: View) -> View:
    """Row-wise stack of two views over identical attributes."""
    if a.attributes != b.attributes:
        raise SchemaError("cannot stack views with different attributes")
    return View(a.attributes, [np.concatenate([x, y]) for x, y in zip(a.columns, b.columns)])
