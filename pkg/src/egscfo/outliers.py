"""Two-group trust clustering and the outlier convergence test.

Each node splits its positive trust values into a high and a low group
with one-dimensional 2-means, re-seeded every round from the previous
round's means.  Once both means stay put (within d_m) for enough
consecutive member rounds while keeping a clear gap (d_mbg), the split
is declared converged and peers can be classified as trusted or
suspicious by nearest mean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_LLOYD_ITERATIONS = 100


class DetectorNotReady(RuntimeError):
    """Too little trust information to seed the detector."""


@dataclass(frozen=True)
class OutlierThresholds:
    """Convergence knobs: mean-shift tolerance, group gap, streak length."""

    d_m: float = 0.05
    d_mbg: float = 0.1
    t_s: int = 60

    def __post_init__(self):
        if self.d_m <= 0.0:
            raise ValueError("d_m must be positive")
        if self.d_mbg <= self.d_m:
            raise ValueError("d_mbg must exceed d_m")
        if self.t_s <= 1:
            raise ValueError("t_s must be much bigger than 1")


@dataclass
class OutlierState:
    """Evolving group means and convergence bookkeeping for one node."""

    av_htg: float
    av_ltg: float
    active: bool = True
    converged: bool = False
    streak: int = 0
    last_av_htg: float = 0.0
    last_av_ltg: float = 0.0


@dataclass
class TrustPartition:
    """One round's final high/low split of the trust set."""

    htg: np.ndarray
    ltg: np.ndarray


def activate(trust_set, rng) -> OutlierState:
    """Seed the detector from two randomly drawn trust values.

    The larger seeds the high group (first drawn wins ties).  Raises
    DetectorNotReady with fewer than two values; the caller simply tries
    again next round.
    """
    values = np.asarray(trust_set, dtype=float)
    if values.size < 2:
        raise DetectorNotReady("need more than one trust value")
    i, j = rng.choice(values.size, size=2, replace=False)
    t_a, t_b = float(values[i]), float(values[j])
    if t_a >= t_b:
        return OutlierState(av_htg=t_a, av_ltg=t_b)
    return OutlierState(av_htg=t_b, av_ltg=t_a)


def iterate_round(state: OutlierState, trust_set, thresholds: OutlierThresholds) -> TrustPartition:
    """One round of 2-means over the trust set.

    Values go to the nearer mean (ties high); a group left empty keeps
    its previous mean for the round.  The loop ends when both fresh
    group means sit within d_m of the current ones; the means standing
    at that point seed the next round.
    """
    if not state.active:
        raise DetectorNotReady("detector was never activated")
    values = np.asarray(trust_set, dtype=float)
    if values.size == 0:
        raise ValueError("trust set is empty")

    state.last_av_htg = state.av_htg
    state.last_av_ltg = state.av_ltg

    av_h, av_l = state.av_htg, state.av_ltg
    for _ in range(MAX_LLOYD_ITERATIONS):
        to_high = np.abs(values - av_h) <= np.abs(values - av_l)
        htg = values[to_high]
        ltg = values[~to_high]
        mean_h = float(htg.mean()) if htg.size else av_h
        mean_l = float(ltg.mean()) if ltg.size else av_l
        settled = (abs(mean_h - av_h) < thresholds.d_m
                   and abs(mean_l - av_l) < thresholds.d_m)
        av_h, av_l = mean_h, mean_l
        if settled:
            break
    else:
        raise RuntimeError("2-means failed to settle within the iteration cap")

    if av_h < av_l:
        # Only an empty-group hold can invert the means; restore order.
        av_h, av_l = av_l, av_h
        htg, ltg = ltg, htg
    state.av_htg = av_h
    state.av_ltg = av_l
    return TrustPartition(htg=htg, ltg=ltg)


def check_convergence(state: OutlierState, thresholds: OutlierThresholds) -> OutlierState:
    """Update the convergence streak after a round's clustering.

    c1: both means moved less than d_m since the previous round.
    c2: the groups stay separated by more than d_mbg.
    The converged flag latches once c1 and c2 hold for more than t_s
    consecutive member rounds.
    """
    if not state.active:
        raise DetectorNotReady("detector was never activated")
    c1 = (abs(state.av_htg - state.last_av_htg) < thresholds.d_m
          and abs(state.av_ltg - state.last_av_ltg) < thresholds.d_m)
    c2 = state.av_htg - state.av_ltg > thresholds.d_mbg
    if c1 and c2:
        state.streak += 1
    else:
        state.streak = 0
    if state.streak > thresholds.t_s:
        state.converged = True
    return state


def classify(trust: float, state: OutlierState | None) -> str:
    """'trusted' / 'suspicious' by nearest converged mean, else 'unknown'.

    Zero trust means no information at all, never an accusation.
    """
    if trust == 0.0 or state is None or not state.converged:
        return "unknown"
    if abs(trust - state.av_htg) <= abs(trust - state.av_ltg):
        return "trusted"
    return "suspicious"
