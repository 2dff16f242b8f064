"""Secure-clustering simulator for wireless sensor networks.

Library layout:

- ``fuzzy``: interval type-2 fuzzy trust inference (evidence -> trust).
- ``trust``: per-node evidence ledgers and recommendation merging.
- ``outliers``: per-node two-group trust clustering and convergence.
- ``game``: cluster-head election game, replicator dynamics, thresholds.
- ``radio``: radio energy accounting and the two-state channel model.
- ``config``: scenario parameters and their text-file format.
- ``simulation``: the round-based protocol engine and its metrics.
- ``experiments``: batch runner, aggregation, and plot-data emission.
"""

from .fuzzy import (
    IT2FuzzySet,
    MembershipFunction,
    Rule,
    TrustEvaluator,
    TrustPair,
    TypeReducedInterval,
    default_evaluator,
)
from .trust import TrustLedger, merge_recommendation
from .outliers import OutlierState, OutlierThresholds, TrustPartition, classify
from .game import (
    ElectionPolicy,
    GameContext,
    PayoffParameters,
    election_threshold,
    ess_probability,
    expected_payoffs,
    payoff_parameters,
    replicator_derivative,
)
from .radio import ChannelModel, Position, RadioParams
from .config import AttackProfile, NoiseProfile, ScenarioConfig
from .simulation import RoundMetrics, RunRecord, Simulation, run_scenario

__all__ = [
    "AttackProfile",
    "ChannelModel",
    "ElectionPolicy",
    "GameContext",
    "IT2FuzzySet",
    "MembershipFunction",
    "NoiseProfile",
    "OutlierState",
    "OutlierThresholds",
    "PayoffParameters",
    "Position",
    "RadioParams",
    "RoundMetrics",
    "Rule",
    "RunRecord",
    "ScenarioConfig",
    "Simulation",
    "TrustEvaluator",
    "TrustLedger",
    "TrustPair",
    "TrustPartition",
    "TypeReducedInterval",
    "classify",
    "default_evaluator",
    "election_threshold",
    "ess_probability",
    "expected_payoffs",
    "merge_recommendation",
    "payoff_parameters",
    "replicator_derivative",
    "run_scenario",
]
