"""Renyi entropies and mutual-information combinations of them.

All entropies are reported in nats. The convention 0*log(0) = 0 is used
for vanishing weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NormalizationError

# Distributions renormalize silently below this deviation and fail above it.
RENORM_TOL = 1e-8
NORM_TOL = 1e-10


@dataclass(frozen=True)
class RenyiOrder:
    """Renyi index n >= 0; n = 1 is handled as the Shannon limit."""

    n: float

    def __post_init__(self):
        if not np.isfinite(self.n) or self.n < 0:
            raise DomainError(f"Renyi order must be a finite real >= 0, got {self.n}")


@dataclass(frozen=True)
class EntropyValue:
    """An entropy in nats."""

    value: float
    base_note: str = "nats"

    def __float__(self) -> float:
        return float(self.value)


class ProbDist:
    """A normalized distribution over an abstract finite label space."""

    def __init__(self, weights, label_space: int | None = None):
        w = np.asarray(weights, dtype=float).ravel()
        if w.size == 0:
            raise DomainError("empty distribution")
        if np.any(w < 0):
            if np.min(w) < -NORM_TOL:
                raise DomainError(f"negative weight {np.min(w)}")
            w = np.clip(w, 0.0, None)
        total = w.sum()
        if abs(total - 1.0) > RENORM_TOL:
            raise NormalizationError(f"weights sum to {total}, not 1")
        if abs(total - 1.0) > NORM_TOL:
            w = w / total
        self.weights = w
        self.label_space = int(label_space if label_space is not None else w.size)

    def __len__(self) -> int:
        return self.weights.size


def _coerce_order(order) -> float:
    n = order.n if isinstance(order, RenyiOrder) else float(order)
    if not np.isfinite(n) or n < 0:
        raise DomainError(f"Renyi order must be a finite real >= 0, got {n}")
    return n


def renyi_entropy(dist: ProbDist, order) -> EntropyValue:
    """S_n of a distribution: Shannon entropy at n = 1, the usual
    (1/(1-n)) log sum q^n branch otherwise. Zero weights contribute 0."""
    if not isinstance(dist, ProbDist):
        dist = ProbDist(dist)
    n = _coerce_order(order)
    q = dist.weights[dist.weights > 0]
    if n == 1.0:
        s = -float(np.dot(q, np.log(q)))
    elif n == 0.0:
        s = float(np.log(q.size))
    else:
        # log-sum-exp keeps q^n finite for strongly peaked distributions
        logq = np.log(q)
        m = np.max(n * logq)
        s = float((m + np.log(np.sum(np.exp(n * logq - m)))) / (1.0 - n))
    return EntropyValue(max(s, 0.0))


def mutual_information(s_a, s_b, s_ab) -> EntropyValue:
    """S(A) + S(B) - S(AB); may be negative for sampled estimates."""
    vals = [float(s) for s in (s_a, s_b, s_ab)]
    if not all(np.isfinite(v) for v in vals):
        raise DomainError("mutual information requires finite entropies")
    return EntropyValue(vals[0] + vals[1] - vals[2])
