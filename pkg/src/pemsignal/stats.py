"""Per-event Student's t-tests on grouped counts, t tail probabilities, ratios."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import (InvalidDf, InvalidPopulation, LengthMismatch, PemError, ShapeMismatch,
                     TooFewSamples)
from .featmat import GroupedMatrix
from .readcode import UNKNOWN_TERM, TermDictionary

_EPS = 1e-16
_FPMIN = 1e-300
_MAXIT = 20000


class Variant(str, Enum):
    POOLED_UNPAIRED = "pooled_unpaired"
    PAIRED = "paired"


@dataclass(frozen=True)
class TestResult:
    t: float
    df: float
    p: float
    degenerate: bool = False

    __test__ = False  # not a pytest class


@dataclass(frozen=True)
class EventStats:
    event_key: str
    description: str
    n_before: int
    n_after: int
    n_total: int
    r1: float
    r2: float
    test: TestResult

    @property
    def p(self) -> float:
        return self.test.p


def ratios(n_before: int, n_after: int, n_total: int) -> tuple[float, float]:
    """Return ``(R1, R2)``.

    R1 is the after/before patient-count ratio, falling back to the after
    count when nobody had the event before.  R2 is the after count as a
    percentage of the exposed cohort.
    """
    if n_total <= 0:
        raise InvalidPopulation(f"population size must be positive, got {n_total}")
    if n_before < 0 or n_after < 0:
        raise InvalidPopulation("patient counts must be non-negative")
    r1 = n_after / n_before if n_before else float(n_after)
    r2 = 100.0 * n_after / n_total
    return r1, r2


def _betacf(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the incomplete beta continued fraction
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise PemError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def regularized_incomplete_beta(a: float, b: float, x: float, y: float | None = None) -> float:
    """I_x(a, b) for a, b > 0 and 0 <= x <= 1.

    ``y`` may carry ``1 - x`` computed without cancellation by the caller.
    """
    if y is None:
        y = 1.0 - x
    if x <= 0.0:
        return 0.0
    if y <= 0.0:
        return 1.0
    log_front = (a * math.log(x) + b * math.log(y)
                 + math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, y) / b


def two_sided_p(t: float, df: float) -> float:
    """Two-sided tail probability P(|T| >= |t|) of Student's t with ``df`` dof."""
    if not (df > 0) or math.isinf(df):
        raise InvalidDf(f"degrees of freedom must be positive and finite, got {df}")
    if math.isnan(t):
        raise ValueError("t statistic is NaN")
    if math.isinf(t):
        return 0.0
    t2 = t * t
    if t2 == 0.0:
        return 1.0
    denom = df + t2
    p = regularized_incomplete_beta(0.5 * df, 0.5, df / denom, t2 / denom)
    return min(1.0, max(0.0, p))


def students_t(x: Sequence[float], y: Sequence[float],
               variant: Variant | str = Variant.POOLED_UNPAIRED) -> TestResult:
    """Student's t-test of ``x`` against ``y``; ``t > 0`` when mean(x) > mean(y).

    Zero-variance inputs are flagged ``degenerate``: equal means give
    ``t = 0, p = 1``; unequal means give ``t = +-inf, p = 0``.
    """
    variant = Variant(variant)
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.size < 2 or ya.size < 2:
        raise TooFewSamples(f"need at least 2 observations per sample, got {xa.size} and {ya.size}")

    if variant is Variant.PAIRED:
        if xa.size != ya.size:
            raise LengthMismatch(f"paired test needs equal lengths, got {xa.size} and {ya.size}")
        diff = xa - ya
        n = diff.size
        df = float(n - 1)
        centre = float(diff.mean())
        ss = float(np.sum((diff - centre) ** 2))
        se = math.sqrt(ss / df / n)
    else:
        nx, ny = xa.size, ya.size
        df = float(nx + ny - 2)
        mx, my = float(xa.mean()), float(ya.mean())
        centre = mx - my
        ss = float(np.sum((xa - mx) ** 2)) + float(np.sum((ya - my) ** 2))
        se = math.sqrt(ss / df * (1.0 / nx + 1.0 / ny))

    if se == 0.0:
        if centre == 0.0:
            return TestResult(0.0, df, 1.0, True)
        return TestResult(math.copysign(math.inf, centre), df, 0.0, True)
    t = centre / se
    return TestResult(t, df, two_sided_p(t, df), False)


def per_event_tests(x: GroupedMatrix, y: GroupedMatrix,
                    counts_before: Sequence[int] | Sequence[tuple[str, int]],
                    counts_after: Sequence[int] | Sequence[tuple[str, int]],
                    n_total: int,
                    variant: Variant | str = Variant.POOLED_UNPAIRED,
                    dictionary: TermDictionary | None = None) -> list[EventStats]:
    """One :class:`EventStats` per universe column, in column order."""
    if x.counts.shape != y.counts.shape:
        raise ShapeMismatch(f"X is {x.counts.shape} but Y is {y.counts.shape}")
    if x.universe.keys != y.universe.keys:
        raise ShapeMismatch("X and Y have different event universes")
    if x.group_sizes != y.group_sizes:
        raise ShapeMismatch("X and Y have different group structure")
    before = _plain_counts(counts_before, x.universe.keys)
    after = _plain_counts(counts_after, x.universe.keys)

    out = []
    for col, key in enumerate(x.universe.keys):
        r1, r2 = ratios(before[col], after[col], n_total)
        test = students_t(x.counts[:, col], y.counts[:, col], variant)
        description = dictionary.lookup(key) if dictionary is not None else UNKNOWN_TERM
        out.append(EventStats(key, description, before[col], after[col], n_total, r1, r2, test))
    return out


def _plain_counts(counts, keys: Sequence[str]) -> list[int]:
    counts = list(counts)
    if len(counts) != len(keys):
        raise ShapeMismatch(f"expected {len(keys)} counts, got {len(counts)}")
    if counts and isinstance(counts[0], tuple):
        if [k for k, _ in counts] != list(keys):
            raise ShapeMismatch("count keys do not match the universe order")
        return [int(c) for _, c in counts]
    return [int(c) for c in counts]
