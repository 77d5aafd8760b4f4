"""Shared numeric helpers: uniform-norm geometry, dyadic ladders, scale integrals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ConfigError",
    "NumericalFailure",
    "OutOfDomainError",
    "chebyshev",
    "dyadic_ladder",
    "lex_argmin",
    "lex_order",
    "IntegralBracket",
    "sup_quotient",
    "power_scale_integral",
    "besov_scale_integral",
    "check_finite",
    "json_default",
]


class ConfigError(ValueError):
    """Invalid configuration or parameters outside a documented range."""


class NumericalFailure(RuntimeError):
    """A computation produced NaN/inf where a finite value was required."""


class OutOfDomainError(ValueError):
    """A query point lies outside the domain a structure was built for."""


def chebyshev(a, b):
    """Uniform-norm (max) distance between points; broadcasts over leading axes."""
    return np.max(np.abs(np.asarray(a, float) - np.asarray(b, float)), axis=-1)


def dyadic_ladder(lo: float, hi: float) -> np.ndarray:
    """Ascending scales hi, hi/2, hi/4, ... down to the last value >= lo."""
    if not (0 < lo <= hi):
        raise ConfigError(f"need 0 < lo <= hi, got lo={lo}, hi={hi}")
    out = []
    t = float(hi)
    # tiny slack so lo itself survives float division
    while t >= lo * (1 - 1e-12):
        out.append(t)
        t *= 0.5
    return np.array(out[::-1])


def lex_order(points: np.ndarray) -> np.ndarray:
    """Indices sorting rows lexicographically (first coordinate primary)."""
    pts = np.atleast_2d(np.asarray(points, float))
    return np.lexsort(pts.T[::-1])


def lex_argmin(points: np.ndarray) -> int:
    """Index of the lexicographically smallest row."""
    return int(lex_order(points)[0])


@dataclass(frozen=True)
class IntegralBracket:
    """Lower/upper Riemann brackets of a scale integral over the resolved range.

    The unresolved tail below the finest scale is not included; divergence is
    judged by callers from growth of the lower bracket under grid refinement.
    """

    lower: float
    upper: float
    t_min: float
    t_max: float

    @property
    def value(self) -> float:
        return self.lower


def sup_quotient(ts: np.ndarray, gs: np.ndarray) -> float:
    """max over the ladder of G(t)/t."""
    ts = np.asarray(ts, float)
    gs = np.asarray(gs, float)
    if ts.size == 0:
        return 0.0
    return float(np.max(gs / ts))


def _bracket(ts, lower_vals, upper_vals, weights) -> IntegralBracket:
    lo = float(np.sum(lower_vals * weights))
    hi = float(np.sum(upper_vals * weights))
    return IntegralBracket(lo, hi, float(ts[0]), float(ts[-1]))


def power_scale_integral(ts: np.ndarray, gs: np.ndarray, p: float) -> IntegralBracket:
    """Brackets of integral of G(t)^p * t^(-p-1) dt over [ts[0], ts[-1]].

    ts must be ascending; G is treated as nondecreasing, so on each cell the
    left value gives the lower bracket and the right value the upper one.
    """
    ts = np.asarray(ts, float)
    gs = np.asarray(gs, float)
    if ts.size < 2:
        return IntegralBracket(0.0, 0.0, float(ts[0]) if ts.size else 0.0,
                               float(ts[-1]) if ts.size else 0.0)
    t0, t1 = ts[:-1], ts[1:]
    weights = (t0 ** (-p) - t1 ** (-p)) / p
    return _bracket(ts, gs[:-1] ** p, gs[1:] ** p, weights)


def besov_scale_integral(ts: np.ndarray, gs: np.ndarray, s: float, q: float) -> IntegralBracket:
    """Brackets of integral of (G(t)/t^s)^q dt/t, i.e. G^q * t^(-sq-1) dt."""
    ts = np.asarray(ts, float)
    gs = np.asarray(gs, float)
    if ts.size < 2:
        return IntegralBracket(0.0, 0.0, float(ts[0]) if ts.size else 0.0,
                               float(ts[-1]) if ts.size else 0.0)
    sq = s * q
    t0, t1 = ts[:-1], ts[1:]
    weights = (t0 ** (-sq) - t1 ** (-sq)) / sq
    return _bracket(ts, gs[:-1] ** q, gs[1:] ** q, weights)


def check_finite(value, what: str):
    """Raise NumericalFailure when a result that must be finite is not."""
    arr = np.asarray(value, float)
    if not np.all(np.isfinite(arr)):
        raise NumericalFailure(f"non-finite value in {what}")
    return value


def json_default(obj):
    """json.dumps default hook for numpy scalars/arrays and to_json objects."""
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "to_json"):
        return obj.to_json()
    raise TypeError(f"not JSON-serializable: {type(obj).__name__}")
