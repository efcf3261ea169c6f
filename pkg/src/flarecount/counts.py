"""Count data: frequency-of-frequencies tables, event logs and estimates."""

from __future__ import annotations

import csv
import io
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Optional, Union

from .errors import DomainError, ParseError

Number = Union[int, float]


def _check_count(k, v):
    if isinstance(k, bool) or not isinstance(k, int) or k < 1:
        raise DomainError(f"multiplicity must be a positive integer, got {k!r}")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise DomainError(f"count for k={k} must be a number, got {v!r}")
    if not math.isfinite(v) or v < 0:
        raise DomainError(f"count for k={k} must be finite and non-negative, got {v!r}")


class FrequencyTable(Mapping[int, Number]):
    """Sparse map from multiplicity k >= 1 to the number of subjects n_k.

    Counts are normally integers, but real-valued expected tables are
    accepted too.  Explicit zero entries are kept in memory (they mark the
    observed support) but ignored by equality and dropped on serialization.
    Looking up an absent k returns 0.
    """

    __slots__ = ("_data",)

    def __init__(self, entries: Optional[Mapping[int, Number] | Iterable] = None):
        data = dict(entries or {})
        for k, v in data.items():
            _check_count(k, v)
        self._data = dict(sorted(data.items()))

    def __getitem__(self, k: int) -> Number:
        return self._data.get(k, 0)

    def __contains__(self, k) -> bool:
        return k in self._data

    def __iter__(self) -> Iterator[int]:
        return iter(self._data)

    def __len__(self) -> int:
        return len(self._data)

    def nonzero(self) -> dict:
        return {k: v for k, v in self._data.items() if v != 0}

    def __eq__(self, other) -> bool:
        if isinstance(other, FrequencyTable):
            return self.nonzero() == other.nonzero()
        if isinstance(other, Mapping):
            return self.nonzero() == {k: v for k, v in other.items() if v != 0}
        return NotImplemented

    def __hash__(self):
        return hash(tuple(self.nonzero().items()))

    def __repr__(self) -> str:
        return f"FrequencyTable({self._data!r})"

    @property
    def max_k(self) -> int:
        """Largest stored multiplicity (0 for an empty table)."""
        return max(self._data, default=0)

    @property
    def is_integral(self) -> bool:
        return all(float(v).is_integer() for v in self._data.values())

    def scaled(self, c: Number) -> "FrequencyTable":
        return FrequencyTable({k: v * c for k, v in self._data.items()})


@dataclass(frozen=True)
class EventLog:
    """Per-subject sorted event times observed over ``[0, horizon]``.

    Subjects with no events are never stored.
    """

    horizon: float
    records: Mapping[str, tuple] = field(default_factory=dict)

    def __post_init__(self):
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise DomainError(f"horizon must be positive, got {self.horizon!r}")
        clean = {}
        for sid, times in self.records.items():
            times = tuple(sorted(float(x) for x in times))
            if not times:
                continue
            if times[0] < 0 or times[-1] > self.horizon:
                raise DomainError(
                    f"subject {sid!r} has an event outside [0, {self.horizon}]")
            clean[str(sid)] = times
        object.__setattr__(self, "records", MappingProxyType(clean))

    def __eq__(self, other):
        if not isinstance(other, EventLog):
            return NotImplemented
        return self.horizon == other.horizon and dict(self.records) == dict(other.records)

    @property
    def n_events(self) -> int:
        return sum(len(v) for v in self.records.values())


class Target(str, Enum):
    UNSEEN = "n0"
    TOTAL = "N"
    RATE = "nu_t"
    PROBABILITY = "probability"


class Bound(str, Enum):
    LOWER = "lower"
    UPPER = "upper"
    POINT = "point"


@dataclass(frozen=True)
class Estimate:
    estimator: str
    value: float
    target: Target
    bound: Bound
    variance: Optional[float] = None
    notes: tuple = ()

    def __post_init__(self):
        if not self.value >= 0:
            raise DomainError(f"{self.estimator}: negative estimate {self.value!r}")
        if self.variance is not None and not self.variance >= 0:
            raise DomainError(f"{self.estimator}: negative variance {self.variance!r}")

    def to_dict(self) -> dict:
        return {
            "estimator": self.estimator,
            "value": self.value,
            "target": self.target.value,
            "bound": self.bound.value,
            "variance": self.variance,
            "notes": list(self.notes),
        }


def from_events(log: EventLog, t: Optional[float] = None) -> FrequencyTable:
    """Tabulate how many subjects had exactly k events in ``[0, t]``.

    ``t`` defaults to the log's horizon.  Events at exactly ``t`` count.
    """
    if t is None:
        t = log.horizon
    if not t > 0 or t > log.horizon:
        raise DomainError(f"t must lie in (0, {log.horizon}], got {t!r}")
    table: dict = {}
    for times in log.records.values():
        k = bisect_right(times, t)
        if k:
            table[k] = table.get(k, 0) + 1
    return FrequencyTable(table)


def totals(table: Mapping[int, Number]) -> tuple:
    """Return ``(N1, n)``: subjects seen at least once and total events."""
    n_subjects = sum(table.values())
    n_events = sum(k * v for k, v in table.items())
    return n_subjects, n_events


@dataclass(frozen=True)
class Diagnostics:
    blocked: Mapping[str, str]
    warnings: tuple

    @property
    def applicable(self) -> tuple:
        from .estimators import ESTIMATORS

        return tuple(e for e in ESTIMATORS if e not in self.blocked)


def validate(table: Mapping[int, Number]) -> Diagnostics:
    """Report which catalogue estimators the table blocks, and why.

    Nothing is estimated; only the preconditions are inspected.
    """
    table = as_table(table)
    N1, n = totals(table)
    n1, n2, n3 = table[1], table[2], table[3]
    blocked = {}
    if N1 == 0:
        for name in ("ambartsumian", "ambartsumian-upper", "chao-total",
                     "ambartsumian-upper-total", "robust-1-2", "mean-rate",
                     "mle-rate", "mle-total", "plackett", "plackett-total",
                     "stirling-total", "zelterman-total", "good-turing"):
            blocked[name] = "empty table"
        return Diagnostics(MappingProxyType(blocked), ())
    if n2 == 0:
        for name in ("ambartsumian", "ambartsumian-upper", "chao-total",
                     "ambartsumian-upper-total"):
            blocked[name] = "n_2 = 0"
    if n3 == 0:
        blocked["robust-1-2"] = "n_3 = 0"
    if n1 == 0:
        blocked["mean-rate"] = "n_1 = 0"
    if n <= N1:
        blocked["mle-rate"] = blocked["mle-total"] = "n = N1 (all singletons)"
    if n - n1 <= 0:
        blocked["plackett"] = blocked["plackett-total"] = "n - n_1 = 0"
    if not table.is_integral:
        blocked["stirling-total"] = "non-integer counts"
    elif n <= N1:
        blocked["stirling-total"] = "n = N1"
    if n1 == 0 or n2 == 0:
        blocked["zelterman-total"] = "n_1 = 0" if n1 == 0 else "n_2 = 0"
    warnings = []
    if n1 == 0:
        warnings.append("good-turing: p0 = 0 is degenerate (n_1 = 0)")
    return Diagnostics(MappingProxyType(blocked), tuple(warnings))


def as_table(obj) -> FrequencyTable:
    return obj if isinstance(obj, FrequencyTable) else FrequencyTable(obj)


# -- CSV ---------------------------------------------------------------------

def _fmt_count(v: Number) -> str:
    if float(v).is_integer():
        return str(int(v))
    return repr(float(v))


def write_table(table: FrequencyTable, fh=None) -> Optional[str]:
    """Write ``k,count`` CSV; zero counts are omitted.  Returns text if no ``fh``."""
    buf = fh if fh is not None else io.StringIO()
    buf.write("k,count\n")
    for k, v in table.nonzero().items():
        buf.write(f"{k},{_fmt_count(v)}\n")
    if fh is None:
        return buf.getvalue()
    return None


def _parse_number(text, line, what):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"{what} {text!r} is not a number", line) from None
    if not math.isfinite(value):
        raise ParseError(f"{what} {text!r} is not finite", line)
    return value


def read_table(source) -> FrequencyTable:
    """Parse a ``k,count`` CSV from a path, file object or string."""
    rows = _rows(source)
    _expect_header(rows, ("k", "count"))
    data: dict = {}
    last = 0
    for line, row in rows:
        if len(row) != 2:
            raise ParseError(f"expected 2 fields, got {len(row)}", line)
        try:
            k = int(row[0])
        except ValueError:
            raise ParseError(f"k {row[0]!r} is not an integer", line) from None
        if k < 1:
            raise ParseError(f"k must be >= 1, got {k}", line)
        if k <= last:
            raise ParseError("k values must be strictly ascending", line)
        last = k
        v = _parse_number(row[1], line, "count")
        if v < 0:
            raise ParseError(f"count must be non-negative, got {v}", line)
        data[k] = v
    return FrequencyTable(data)


def write_events(log: EventLog, fh=None) -> Optional[str]:
    buf = fh if fh is not None else io.StringIO()
    buf.write("id,time\n")
    for sid, times in log.records.items():
        for x in times:
            buf.write(f"{sid},{x!r}\n")
    if fh is None:
        return buf.getvalue()
    return None


def read_events(source, horizon: Optional[float] = None) -> EventLog:
    """Parse an ``id,time`` CSV.  ``horizon`` defaults to the latest time."""
    rows = _rows(source)
    _expect_header(rows, ("id", "time"))
    records: dict = {}
    for line, row in rows:
        if len(row) != 2:
            raise ParseError(f"expected 2 fields, got {len(row)}", line)
        sid = row[0].strip()
        if not sid:
            raise ParseError("empty subject id", line)
        x = float(_parse_number(row[1], line, "time"))
        if x < 0:
            raise ParseError(f"negative time {x}", line)
        if horizon is not None and x > horizon:
            raise ParseError(f"time {x} exceeds horizon {horizon}", line)
        records.setdefault(sid, []).append(x)
    if horizon is None:
        horizon = max((max(v) for v in records.values()), default=0.0)
        if horizon <= 0:
            raise ParseError("cannot infer a positive horizon from the events")
    return EventLog(float(horizon), records)


def _rows(source):
    if hasattr(source, "read"):
        text = source.read()
    elif isinstance(source, str) and "\n" in source:
        text = source
    else:
        with open(source, encoding="utf-8", newline="") as fh:
            text = fh.read()
    out = []
    for i, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        out.append((i, [c.strip() for c in row]))
    return out


def _expect_header(rows, header):
    if not rows or tuple(rows[0][1]) != header:
        line = rows[0][0] if rows else 1
        raise ParseError(f"expected header {','.join(header)!r}", line)
    del rows[0]
