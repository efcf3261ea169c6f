"""Numerical kernels: truncated-Poisson rate solver, Stirling numbers, quadrature."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate as _integrate
from scipy import optimize

from .errors import BracketError, DegenerateInputError, LogOfZeroError, QuadratureError

EXACT_STIRLING_LIMIT = 500


@dataclass(frozen=True)
class RootConfig:
    tol: float = 1e-12
    max_iter: int = 200
    bracket: tuple = (1e-9, 50.0)
    max_widenings: int = 8

    def __post_init__(self):
        lo, hi = self.bracket
        if not 0 < lo < hi:
            raise ValueError(f"bracket must satisfy 0 < lo < hi, got {self.bracket}")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")


def truncated_mean(x: float) -> float:
    """Mean of a zero-truncated Poisson with parameter ``x``: x / (1 - e^-x)."""
    return x / -math.expm1(-x)


def solve_truncated_rate(ratio: float, config: RootConfig = RootConfig()) -> float:
    """Solve ``x / (1 - exp(-x)) = ratio`` for x > 0.

    The left side rises monotonically from 1, so a root exists for every
    ratio > 1.  Ratios so close to 1 that the root falls below the lower
    bracket are reported as degenerate (the implied total diverges).  The
    upper end of the bracket is doubled up to ``config.max_widenings`` times.
    """
    lo, hi = config.bracket
    if not ratio > truncated_mean(lo):
        raise DegenerateInputError(
            "truncated-rate", f"ratio {ratio!r} is not above 1 (rate -> 0, total diverges)")

    def f(x):
        return truncated_mean(x) - ratio

    for _ in range(config.max_widenings + 1):
        if f(hi) >= 0:
            break
        lo, hi = hi, hi * 2.0
    else:
        raise BracketError(f"no root below {hi} for ratio {ratio!r}; widen the bracket")
    try:
        return optimize.brentq(f, lo, hi, xtol=config.tol, rtol=4 * np.finfo(float).eps,
                               maxiter=config.max_iter)
    except RuntimeError as exc:
        raise BracketError(str(exc)) from exc


# -- Stirling numbers of the second kind ------------------------------------

@lru_cache(maxsize=64)
def _exact_row(x: int) -> tuple:
    # row[y] = S(x, y) for y = 0..x
    row = [1]
    for i in range(1, x + 1):
        nxt = [0] * (i + 1)
        for y in range(1, i + 1):
            nxt[y] = (y * row[y] if y < i else 0) + row[y - 1]
        row = nxt
    return tuple(row)


def stirling2(x: int, y: int) -> int:
    """Exact Stirling number of the second kind S(x, y)."""
    if x < 0 or y < 0:
        raise ValueError("arguments must be non-negative")
    if y > x:
        return 0
    return _exact_row(x)[y]


def stirling2_log_rows(x: int, y_max: int | None = None):
    """Yield ``(i, log S(i, .))`` for i = 0..x as numpy rows truncated at y_max.

    Zero entries are ``-inf``.  Built with the recurrence in log space,
    so values far beyond float range stay representable.
    """
    if y_max is None:
        y_max = x
    width = y_max + 1
    row = np.full(width, -np.inf)
    row[0] = 0.0
    yield 0, row
    with np.errstate(divide="ignore"):
        logy = np.log(np.arange(width, dtype=float))
    for i in range(1, x + 1):
        nxt = np.full(width, -np.inf)
        upto = min(i, y_max)
        ys = slice(1, upto + 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            nxt[ys] = np.logaddexp(logy[ys] + row[ys], row[0:upto])
        row = nxt
        yield i, row


def stirling2_log_row(x: int, y_max: int | None = None) -> np.ndarray:
    for _, row in stirling2_log_rows(x, y_max):
        pass
    return row


def stirling2_log(x: int, y: int) -> float:
    """Natural log of S(x, y); raises LogOfZeroError where S(x, y) = 0."""
    if x < 0 or y < 0:
        raise ValueError("arguments must be non-negative")
    if y > x or (y == 0 and x > 0):
        raise LogOfZeroError(f"S({x}, {y}) = 0")
    return float(stirling2_log_row(x, y)[y])


def stirling2_ratio(x: int, y: int) -> float:
    """S(x, y) / S(x - 1, y), exactly for x <= 500 and in log space above."""
    if y < 1 or x - 1 < y:
        raise DegenerateInputError("stirling-total", f"S({x - 1}, {y}) = 0")
    if x <= EXACT_STIRLING_LIMIT:
        num, den = stirling2(x, y), stirling2(x - 1, y)
        return num / den
    prev = None
    for i, row in stirling2_log_rows(x, y):
        if i == x - 1:
            prev = row[y]
    return math.exp(row[y] - prev)


# -- quadrature -------------------------------------------------------------

def integrate(f, lower: float, upper: float = math.inf, tol: float = 1e-10,
              limit: int = 200) -> float:
    """Adaptive integral of ``f`` over ``[lower, upper]``.

    A semi-infinite range is mapped onto [0, 1) with v = lower + u / (1 - u)
    before handing off to QUADPACK.  Raises QuadratureError carrying the
    best estimate when the reported error exceeds ``tol``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if math.isinf(upper):
        def g(u):
            if u >= 1.0:
                return 0.0
            w = 1.0 - u
            return f(lower + u / w) / (w * w)
        a, b, func = 0.0, 1.0, g
    else:
        a, b, func = lower, upper, f
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", _integrate.IntegrationWarning)
        value, err = _integrate.quad(func, a, b, epsabs=tol, epsrel=0.0, limit=limit)
    if not err <= tol:
        raise QuadratureError("quadrature did not converge", value, err)
    return value
