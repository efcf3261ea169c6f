"""Estimate how many randomly flaring subjects were never seen.

Input is a frequency-of-frequencies table ``{k: n_k}``: the number of
subjects observed exactly ``k`` times.  See :mod:`flarecount.estimators`,
:mod:`flarecount.predictors` and :mod:`flarecount.simulator`.
"""

__version__ = "0.1.0"

from .counts import (Bound, Estimate, EventLog, FrequencyTable, Target, from_events,
                     read_events, read_table, totals, validate, write_events, write_table)
from .errors import (DegenerateInputError, DomainError, EmptyTableError, InapplicableError,
                     NumericalError, ParseError)

__all__ = [
    "Bound", "Estimate", "EventLog", "FrequencyTable", "Target", "from_events", "read_events",
    "read_table", "totals", "validate", "write_events", "write_table", "DegenerateInputError",
    "DomainError", "EmptyTableError", "InapplicableError", "NumericalError", "ParseError",
]
