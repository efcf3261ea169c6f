"""Estimators of the unseen count, the total population and the mean rate.

Every estimator takes a frequency table ``{k: n_k}`` and returns an
:class:`~flarecount.counts.Estimate` (or a pair of them).  Preconditions that
the table does not meet raise :class:`InapplicableError`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np

from .counts import Bound, Estimate, FrequencyTable, Target, as_table, totals
from .errors import DegenerateInputError, EmptyTableError, InapplicableError
from .numerics import solve_truncated_rate, stirling2_ratio


# -- Ambartsumian / Chao -----------------------------------------------------

def _ambartsumian_core(table, name):
    n1, n2 = table[1], table[2]
    if n2 <= 0:
        raise InapplicableError(name, "requires n_2 > 0")
    return n1 * n1 / (2.0 * n2)


def chao_variance_unseen(table) -> float:
    """Variance of the unseen-count estimate n_1^2 / (2 n_2).

    ``(n1^3/n2^2) * (1 + (n1/n2)(1 - n2/N1)/4)``, evaluated as printed.
    """
    table = as_table(table)
    n1, n2 = table[1], table[2]
    N1, _ = totals(table)
    if n2 <= 0 or N1 <= 0:
        raise InapplicableError("chao-variance", "requires n_2 > 0 and N1 > 0")
    r = n1 / n2
    return n1 ** 3 / n2 ** 2 * (1.0 + 0.25 * r * (1.0 - n2 / N1))


def chao_variance_total(table) -> float:
    """Variance of the total N = n_1^2/(2 n_2) + N1, evaluated as printed.

    The expression subtracts two correction terms, so extreme tables can
    produce a negative value; callers decide how to flag that.
    """
    table = as_table(table)
    n1, n2 = table[1], table[2]
    N1, _ = totals(table)
    if n2 <= 0 or N1 <= 0:
        raise InapplicableError("chao-variance", "requires n_2 > 0 and N1 > 0")
    r = n1 / n2
    n1_4 = n1 ** 4
    return n2 * (
        0.5 * r ** 2 + r ** 3 + 0.25 * r ** 4
        - 0.25 * n1_4 / (N1 * n2 ** 3)
        - 0.5 * n1_4 / (n2 ** 2 * (2.0 * n2 * N1 + n1 ** 2))
    )


def _with_variance(name, value, target, bound, variance):
    if variance >= 0:
        return Estimate(name, value, target, bound, variance)
    return Estimate(name, value, target, bound, None,
                    (f"variance formula-out-of-range ({variance:.6g})",))


def ambartsumian_unseen(table) -> Estimate:
    """Unseen count n_1^2 / (2 n_2); a lower bound when rates differ."""
    table = as_table(table)
    value = _ambartsumian_core(table, "ambartsumian")
    return _with_variance("ambartsumian", value, Target.UNSEEN, Bound.LOWER,
                          chao_variance_unseen(table))


def ambartsumian_bounds(table) -> tuple:
    """Return ``(lower, upper)`` unseen-count bounds ``n1^2/(2 n2)`` and ``n1^2/n2``."""
    table = as_table(table)
    lower = ambartsumian_unseen(table)
    upper = Estimate("ambartsumian-upper", 2.0 * lower.value, Target.UNSEEN, Bound.UPPER)
    return lower, upper


def chao_total(table) -> Estimate:
    table = as_table(table)
    N1, _ = totals(table)
    value = N1 + _ambartsumian_core(table, "chao-total")
    return _with_variance("chao-total", value, Target.TOTAL, Bound.LOWER,
                          chao_variance_total(table))


def ambartsumian_upper_total(table) -> Estimate:
    table = as_table(table)
    N1, _ = totals(table)
    value = N1 + 2.0 * _ambartsumian_core(table, "ambartsumian-upper-total")
    return Estimate("ambartsumian-upper-total", value, Target.TOTAL, Bound.UPPER)


def robust_pair(table, k: int = 1, l: int = 2) -> Estimate:
    """Ratio estimator ``n_k n_l / (C(k+l, k) n_{k+l})`` of the unseen count.

    The binomial constant makes it exact for a single shared Poisson rate;
    ``(1, 1)`` is the Ambartsumian estimator.
    """
    if k < 1 or l < 1:
        raise ValueError("k and l must be positive")
    table = as_table(table)
    name = f"robust-{k}-{l}"
    m = k + l
    if table[m] <= 0:
        raise InapplicableError(name, f"requires n_{m} > 0")
    value = table[k] * table[l] / (math.comb(m, k) * table[m])
    return Estimate(name, value, Target.UNSEEN, Bound.POINT)


def mean_rate(table) -> Estimate:
    """Mean expected events per subject, ``2 n_2 / n_1``."""
    table = as_table(table)
    n1 = table[1]
    if n1 <= 0:
        raise InapplicableError("mean-rate", "requires n_1 > 0")
    return Estimate("mean-rate", 2.0 * table[2] / n1, Target.RATE, Bound.POINT)


# -- zero-truncated Poisson family -------------------------------------------

def mle_total(table) -> tuple:
    """Maximum-likelihood rate and total under a zero-truncated Poisson.

    Solves ``x / (1 - e^-x) = n / N1`` and returns ``(rate, total)``
    estimates with ``total = N1 / (1 - e^-x)``.
    """
    table = as_table(table)
    N1, n = totals(table)
    if N1 <= 0:
        raise EmptyTableError("mle-total", "empty table")
    if n <= N1:
        raise DegenerateInputError("mle-total", "n = N1: every subject seen once, total diverges")
    try:
        x = solve_truncated_rate(n / N1)
    except DegenerateInputError as exc:
        raise DegenerateInputError("mle-total", exc.reason) from exc
    rate = Estimate("mle-rate", x, Target.RATE, Bound.POINT)
    total = Estimate("mle-total", N1 / -math.expm1(-x), Target.TOTAL, Bound.POINT)
    return rate, total


def plackett_unseen(table, a: int = 0) -> Estimate:
    """Unseen count from Plackett's rate estimator truncated at ``a``.

    ``n_1 * sum_{k>a} n_k / sum_{k>a+1} k n_k``.  Lower bound under rate
    heterogeneity for ``a = 0``.
    """
    if a < 0:
        raise ValueError("a must be non-negative")
    table = as_table(table)
    num = sum(v for k, v in table.items() if k >= a + 1)
    den = sum(k * v for k, v in table.items() if k >= a + 2)
    name = "plackett" if a == 0 else f"plackett-{a}"
    if den <= 0:
        raise InapplicableError(name, f"requires sum of k n_k over k >= {a + 2} > 0")
    return Estimate(name, table[1] * num / den, Target.UNSEEN, Bound.LOWER)


def plackett_total(table) -> Estimate:
    """Total ``N1 n / (n - n_1)`` paired with :func:`plackett_unseen` at a = 0."""
    table = as_table(table)
    N1, n = totals(table)
    den = n - table[1]
    if den <= 0:
        raise InapplicableError("plackett-total", "requires n - n_1 > 0")
    return Estimate("plackett-total", N1 * n / den, Target.TOTAL, Bound.LOWER)


def stirling_total(table) -> Estimate:
    """Total ``S(n, N1) / S(n - 1, N1)`` with S the Stirling numbers of the second kind."""
    table = as_table(table)
    if not table.is_integral:
        raise InapplicableError("stirling-total", "requires integer counts")
    N1, n = (int(v) for v in totals(table))
    if N1 < 1:
        raise EmptyTableError("stirling-total", "empty table")
    if n <= N1:
        raise DegenerateInputError("stirling-total", f"n = N1 so S({n - 1}, {N1}) = 0")
    return Estimate("stirling-total", stirling2_ratio(n, N1), Target.TOTAL, Bound.POINT)


def zelterman_rate(table, l: int = 1) -> float:
    """``sum_{k=1..l} (k+1) n_{k+1} / sum_{k=1..l} n_k``; ``l = 1`` gives 2 n_2 / n_1."""
    if l < 1:
        raise ValueError("l must be >= 1")
    table = as_table(table)
    num = sum((k + 1) * table[k + 1] for k in range(1, l + 1))
    den = sum(table[k] for k in range(1, l + 1))
    name = "zelterman-total"
    if den <= 0:
        raise InapplicableError(name, f"requires n_1 + ... + n_{l} > 0")
    if num <= 0:
        raise DegenerateInputError(name, "rate estimate is 0, total diverges")
    return num / den


def zelterman_total(table, l: int = 1) -> Estimate:
    """Zelterman total ``N1 / (1 - exp(-rate))``; possibly an upper bound."""
    table = as_table(table)
    N1, _ = totals(table)
    rate = zelterman_rate(table, l)
    name = "zelterman-total" if l == 1 else f"zelterman-total-{l}"
    return Estimate(name, N1 / -math.expm1(-rate), Target.TOTAL, Bound.UPPER)


# -- Good-Turing and heterogeneity --------------------------------------------

def good_turing(table) -> tuple:
    """Good-Turing unseen mass ``p0 = n_1 / n`` and adjusted probabilities.

    ``pi[k] = (k + 1) n_{k+1} / (n n_k)`` for every k with ``n_k > 0``
    (zero when ``n_{k+1}`` is absent).
    """
    table = as_table(table)
    _, n = totals(table)
    if n <= 0:
        raise EmptyTableError("good-turing", "empty table")
    pi = {k: (k + 1) * table[k + 1] / (n * v) for k, v in table.items() if v > 0}
    return table[1] / n, pi


def good_turing_class_mass(table) -> dict:
    """Probability mass ``(k + 1) n_{k+1} / n`` reassigned to each class k >= 1.

    Equals ``n_k * pi[k]`` where ``n_k > 0`` and stays defined across gaps
    in the support, so ``p0 + sum(mass.values()) == 1`` for every table.
    """
    table = as_table(table)
    _, n = totals(table)
    if n <= 0:
        raise EmptyTableError("good-turing", "empty table")
    return {k: (k + 1) * table[k + 1] / n for k in range(1, table.max_k + 1)}


def good_turing_estimate(table) -> Estimate:
    p0, _ = good_turing(table)
    notes = ("p0 = 0: no singletons",) if p0 == 0 else ()
    return Estimate("good-turing", p0, Target.PROBABILITY, Bound.POINT, notes=notes)


@dataclass(frozen=True)
class Heterogeneity:
    ks: tuple
    sequence: tuple
    trend: float


def heterogeneity_sequence(table) -> Heterogeneity:
    """Ratios ``k n_k / n_{k-1}`` and their least-squares slope against k.

    Each ratio estimates the same rate when all subjects share one; an
    upward trend points to rate heterogeneity.  Elements run over
    ``k = 2..max_k`` wherever ``n_{k-1} > 0``.
    """
    table = as_table(table)
    ks, seq = [], []
    for k in range(2, table.max_k + 1):
        prev = table[k - 1]
        if prev > 0:
            ks.append(k)
            seq.append(k * table[k] / prev)
    if len(seq) < 2:
        raise InapplicableError("heterogeneity", "needs two computable ratios")
    x = np.asarray(ks, dtype=float)
    y = np.asarray(seq, dtype=float)
    xc = x - x.mean()
    trend = float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))
    return Heterogeneity(tuple(ks), tuple(seq), trend)


# -- catalogue -----------------------------------------------------------------

def _first(fn):
    return lambda t: fn(t)[0]


def _second(fn):
    return lambda t: fn(t)[1]


ESTIMATORS: Mapping[str, Callable[[FrequencyTable], Estimate]] = {
    "ambartsumian": ambartsumian_unseen,
    "ambartsumian-upper": _second(ambartsumian_bounds),
    "ambartsumian-upper-total": ambartsumian_upper_total,
    "chao-total": chao_total,
    "good-turing": good_turing_estimate,
    "mean-rate": mean_rate,
    "mle-rate": _first(mle_total),
    "mle-total": _second(mle_total),
    "plackett": plackett_unseen,
    "plackett-total": plackett_total,
    "robust-1-2": lambda t: robust_pair(t, 1, 2),
    "stirling-total": stirling_total,
    "zelterman-total": zelterman_total,
}

ALIASES = {"chao": "ambartsumian", "mle": "mle-total", "zelterman": "zelterman-total"}


def resolve(name: str) -> str:
    name = ALIASES.get(name, name)
    if name not in ESTIMATORS:
        raise KeyError(name)
    return name


def evaluate(name: str, table) -> Estimate:
    return ESTIMATORS[resolve(name)](as_table(table))


@dataclass(frozen=True)
class EstimatorReport:
    estimates: tuple
    inapplicable: Mapping[str, str]
    echo: Mapping[str, float]
    heterogeneity: Optional[Heterogeneity] = None
    notes: tuple = field(default=())

    def get(self, name: str) -> Optional[Estimate]:
        for e in self.estimates:
            if e.estimator == name:
                return e
        return None

    def to_dict(self) -> dict:
        het = None
        if self.heterogeneity is not None:
            het = {"k": list(self.heterogeneity.ks),
                   "sequence": list(self.heterogeneity.sequence),
                   "trend": self.heterogeneity.trend}
        return {
            "input": dict(self.echo),
            "estimates": [e.to_dict() for e in self.estimates],
            "inapplicable": dict(self.inapplicable),
            "heterogeneity": het,
        }


def estimate_all(table, names=None, a: int = 0, l: int = 1) -> EstimatorReport:
    """Run every catalogue estimator (or ``names``) that the table admits.

    A non-default Plackett truncation ``a`` or Zelterman limit ``l`` adds
    that variant alongside the catalogue entries.
    """
    table = as_table(table)
    selected = sorted({resolve(n) for n in names}) if names else sorted(ESTIMATORS)
    extra = {}
    if a:
        extra[f"plackett-{a}"] = lambda t: plackett_unseen(t, a)
    if l != 1:
        extra[f"zelterman-total-{l}"] = lambda t: zelterman_total(t, l)
    N1, n = totals(table)
    echo = {"N1": N1, "n": n, "n1": table[1], "n2": table[2], "n3": table[3]}
    estimates, blocked = [], {}
    funcs = {**{name: ESTIMATORS[name] for name in selected}, **extra}
    for name in sorted(funcs):
        if N1 == 0:
            blocked[name] = "empty table"
            continue
        try:
            estimates.append(funcs[name](table))
        except InapplicableError as exc:
            blocked[name] = exc.reason
    try:
        het = heterogeneity_sequence(table)
    except InapplicableError:
        het = None
    return EstimatorReport(tuple(estimates), blocked, echo, het)
