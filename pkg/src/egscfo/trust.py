"""Per-node evidence ledgers and trust bookkeeping.

Every node keeps, for each peer it has watched, cumulative counters of
overheard forwarding outcomes.  The dropping and delaying rates derived
from the counters feed the fuzzy evaluator; trust learned second-hand
arrives through recommendation merging.  A trust value of exactly 0
means "never heard anything about this node" and keeps the peer out of
the trust set.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

OUTCOMES = ("delivered", "dropped", "delayed", "unobserved")


class NoEvidenceError(ValueError):
    """Rates were requested for a peer that was never observed."""


@dataclass
class EvidenceCounters:
    """Cumulative monitoring counters for one watched peer."""

    observed: int = 0
    dropped: int = 0
    delayed: int = 0

    def record(self, outcome: str) -> None:
        """Fold one monitoring outcome in; 'unobserved' is a no-op."""
        if outcome == "delivered":
            self.observed += 1
        elif outcome == "dropped":
            self.observed += 1
            self.dropped += 1
        elif outcome == "delayed":
            self.observed += 1
            self.delayed += 1
        elif outcome != "unobserved":
            raise ValueError(f"unknown outcome {outcome!r}")

    def rates(self) -> tuple[float, float]:
        """(dropping rate, delaying rate); requires at least one observation."""
        if self.observed == 0:
            raise NoEvidenceError("no observations recorded")
        return self.dropped / self.observed, self.delayed / self.observed


@dataclass
class TrustRecord:
    """One observer->target trust entry."""

    target: int
    trust: float = 0.0
    counters: EvidenceCounters = field(default_factory=EvidenceCounters)
    last_update_round: int = -1


def merge_recommendation(t_ij: float, t_ik: float, t_kj: float) -> float:
    """Blend a recommendation t_kj from head k into i's trust of j.

    With prior direct knowledge the recommendation enters as a
    recommender-trust-weighted average; without it the discounted
    product stands alone.
    """
    if t_ik <= 0.0:
        raise ValueError("recommendations are only taken from trusted heads")
    if not 0.0 <= t_ij <= 1.0 or not 0.0 <= t_kj <= 1.0 or t_ik > 1.0:
        raise ValueError("trust values must lie in [0, 1]")
    if t_ij > 0.0:
        return (t_ij + t_ik * t_kj) / (1.0 + t_ik)
    return t_ik * t_kj


class TrustLedger:
    """All trust state one observer holds about ``size`` peers.

    Array-backed so per-round recommendation merges over the whole
    population stay cheap; the ``record`` accessor materializes a
    TrustRecord view for inspection and tests.
    """

    def __init__(self, size: int):
        self.size = size
        self.observed = np.zeros(size, dtype=np.int64)
        self.dropped = np.zeros(size, dtype=np.int64)
        self.delayed = np.zeros(size, dtype=np.int64)
        self.trust = np.zeros(size, dtype=np.float64)
        self.direct = np.zeros(size, dtype=np.float64)
        self.last_update = np.full(size, -1, dtype=np.int64)

    @classmethod
    def from_views(cls, observed, dropped, delayed, trust, direct, last_update) -> "TrustLedger":
        """Wrap externally owned arrays (rows of a shared matrix)."""
        ledger = cls.__new__(cls)
        ledger.size = len(trust)
        ledger.observed = observed
        ledger.dropped = dropped
        ledger.delayed = delayed
        ledger.trust = trust
        ledger.direct = direct
        ledger.last_update = last_update
        return ledger

    def record(self, target: int) -> TrustRecord:
        return TrustRecord(
            target=target,
            trust=float(self.trust[target]),
            counters=EvidenceCounters(
                observed=int(self.observed[target]),
                dropped=int(self.dropped[target]),
                delayed=int(self.delayed[target]),
            ),
            last_update_round=int(self.last_update[target]),
        )

    def record_observation(self, target: int, outcome: str) -> None:
        if outcome == "delivered":
            self.observed[target] += 1
        elif outcome == "dropped":
            self.observed[target] += 1
            self.dropped[target] += 1
        elif outcome == "delayed":
            self.observed[target] += 1
            self.delayed[target] += 1
        elif outcome != "unobserved":
            raise ValueError(f"unknown outcome {outcome!r}")

    def evidence_rates(self, target: int) -> tuple[float, float]:
        obs = self.observed[target]
        if obs == 0:
            raise NoEvidenceError(f"no observations of node {target}")
        return self.dropped[target] / obs, self.delayed[target] / obs

    def refresh_direct_trust(self, target: int, evaluator, round_index: int) -> float:
        """Re-infer trust of ``target`` from its counters."""
        dpr, dlr = self.evidence_rates(target)
        value = evaluator.evaluate_trust(dpr, dlr)
        self.trust[target] = value
        self.direct[target] = value
        self.last_update[target] = round_index
        return value

    def expire_stale_evidence(self, round_index: int, horizon: int) -> None:
        """Drop counters of pairs not observed for ``horizon`` rounds.

        The stored trust value survives (the peer is not forgotten, just
        no longer pinned by first-hand history), so recommendations take
        over maintaining it.  Without expiry, a handful of early clean
        observations anchors a peer at full trust forever.
        """
        stale = (self.observed > 0) & (self.last_update < round_index - horizon)
        if stale.any():
            self.observed[stale] = 0
            self.dropped[stale] = 0
            self.delayed[stale] = 0
            self.direct[stale] = 0.0

    def merge_recommendations(self, head: int, head_trust_row: np.ndarray,
                              self_index: int, round_index: int,
                              firsthand_obs: int = 5) -> None:
        """Fold the head's trust row into this ledger.

        Only targets the head actually knows (positive trust) arrive;
        the head itself and the observer are excluded, as is any target
        this observer has watched at least ``firsthand_obs`` times:
        recommendations spread coverage and smooth out thin first-hand
        samples, but substantial first-hand inference stands on its own.
        Per-target blending follows ``merge_recommendation``.
        """
        t_ik = self.trust[head]
        if t_ik <= 0.0:
            raise ValueError("recommendations are only taken from trusted heads")
        mask = head_trust_row > 0.0
        mask[head] = False
        mask[self_index] = False
        mask &= self.observed < firsthand_obs
        if not mask.any():
            return
        t_kj = head_trust_row[mask]
        t_ij = self.trust[mask]
        merged = np.where(
            t_ij > 0.0,
            (t_ij + t_ik * t_kj) / (1.0 + t_ik),
            t_ik * t_kj,
        )
        self.trust[mask] = merged
        self.last_update[mask] = round_index

    def trust_set(self, exclude=None) -> np.ndarray:
        """All positive trust values (optionally masking some targets)."""
        if exclude is None:
            return self.trust[self.trust > 0.0]
        mask = self.trust > 0.0
        mask[exclude] = False
        return self.trust[mask]

    def known_targets(self) -> np.ndarray:
        return np.nonzero(self.trust > 0.0)[0]
