"""Cluster-head election as an evolutionary game.

Each node plays declare (D) / not-declare (ND) against the players it
considers relevant: itself plus its past heads not currently flagged
suspicious.  Declaring costs energy but guarantees a trustworthy head;
universal silence hands the role to whoever grabs it, risking a
population-wide loss proportional to the known malice around.

The mixed-strategy equilibrium of the replicator dynamics gives each
node its declaration probability; the round-robin threshold rule then
spreads actual declarations over an eligibility window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

P_CH_MIN = 0.01
P_CH_MAX = 0.99


class IneligibleError(RuntimeError):
    """The node served as head too recently to declare again."""


@dataclass(frozen=True)
class GameContext:
    """Inputs of one node's election game for one round.

    n_players: the node plus its relevant past heads.
    w: energy spent by a head relative to a member (> 1).
    t_avr: mean trust held over neighbours flagged malicious; 1.0 when
        none are flagged (no known malice, no modelled loss).
    """

    n_players: int
    w: float
    t_avr: float

    def __post_init__(self):
        if self.n_players < 1:
            raise ValueError("a game needs at least the node itself")
        if self.w <= 1.0:
            raise ValueError("head/member energy ratio w must exceed 1")
        if not 0.0 <= self.t_avr <= 1.0:
            raise ValueError("t_avr must lie in [0, 1]")


@dataclass(frozen=True)
class PayoffParameters:
    """Payoff matrix entries: service value v, serving cost c, idle loss z."""

    v: float
    c: float
    z: float


@dataclass
class ElectionPolicy:
    """A node's evolving declaration probability and head history."""

    p_ch: float
    p_int: float
    last_head_round: int | None = None


def payoff_parameters(ctx: GameContext) -> PayoffParameters:
    """Derive (v, c, z) from the energy ratio and known malice.

    Serving costs the lifetime lost to the extra spend (w - 1); being
    served is worth the full ratio w; a round with no declared head
    loses the population |N| scaled by how distrusted the known
    malicious neighbours are.
    """
    return PayoffParameters(
        v=ctx.w,
        c=ctx.w - 1.0,
        z=ctx.n_players * (1.0 - ctx.t_avr),
    )


def expected_payoffs(p: float, params: PayoffParameters, n: int):
    """Expected payoffs (declare, not-declare, population) at mixed strategy p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if n < 2:
        raise ValueError("expected payoffs need at least two players")
    silent = (1.0 - p) ** (n - 1)
    e_d = params.v - params.c
    e_nd = (1.0 - silent) * params.v - silent * params.z
    e_pop = p * e_d + (1.0 - p) * e_nd
    return e_d, e_nd, e_pop


def replicator_derivative(p: float, params: PayoffParameters, n: int) -> float:
    """Growth rate of the declaring share: dp/dt = p(1-p)((1-p)^(n-1)(v+z) - c)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if n < 2:
        raise ValueError("replicator dynamics need at least two players")
    return p * (1.0 - p) * ((1.0 - p) ** (n - 1) * (params.v + params.z) - params.c)


def ess_probability(ctx: GameContext, clamp: bool = True) -> float | None:
    """Interior fixed point of the replicator dynamics.

    p2 = 1 - ((w-1) / (w + |N|(1 - t_avr)))^(1/(|N|-1))

    Returns None for a single-player context (the exponent is undefined;
    callers keep their current probability).  With ``clamp`` the result
    is kept inside [P_CH_MIN, P_CH_MAX] so the threshold window below
    stays well-defined and nobody is excluded forever.
    """
    if ctx.n_players < 2:
        return None
    params = payoff_parameters(ctx)
    base = params.c / (params.v + params.z)
    p2 = 1.0 - base ** (1.0 / (ctx.n_players - 1))
    if clamp:
        p2 = min(max(p2, P_CH_MIN), P_CH_MAX)
    return p2


def election_window(p_ch: float) -> int:
    """Rounds a fresh head stays ineligible: floor(1 / p_ch)."""
    return int(math.floor(1.0 / p_ch))


def is_eligible(policy: ElectionPolicy, current_round: int) -> bool:
    """Whether the node may declare: not a head within the last window rounds."""
    if policy.last_head_round is None:
        return True
    return current_round - policy.last_head_round > election_window(policy.p_ch)


def election_threshold(policy: ElectionPolicy, current_round: int) -> float:
    """Round-robin declaration threshold.

    Th = p_ch / (1 - p_ch * (r mod floor(1/p_ch))); rises over the
    window so late rounds force the remaining candidates out.
    """
    if not is_eligible(policy, current_round):
        raise IneligibleError(
            f"headed at round {policy.last_head_round}, still inside the window")
    window = election_window(policy.p_ch)
    return policy.p_ch / (1.0 - policy.p_ch * (current_round % window))
