"""Round-based protocol engine.

Each round runs four phases: head election (game-driven declaration
thresholds), cluster joining (trust-aware candidate choice), data
transfer (member packets to heads, fused forwards to the base station,
with malicious drops/delays and channel noise), and the trust update
(evidence recording, fuzzy refresh, recommendations, outlier
detection).  The engine is a pure function of (config, seed, mode): one
random stream per node plus one for setup, so instrumentation never
perturbs the draws.

Modes:

- ``egscfo``: the full protocol.
- ``fuzzy-only``: trust is evaluated and used for joining, but the
  outlier detector stays off (no classification, no recommendations).
- ``baseline``: trust-agnostic rotation - fixed declaration
  probability, distance-only joining, no monitoring.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from . import game, outliers
from .config import ScenarioConfig
from .fuzzy import TrustEvaluator, default_evaluator, evaluator_from_text
from .trust import TrustLedger

MODES = ("egscfo", "fuzzy-only", "baseline")

ROLE_IDLE = 0
ROLE_MEMBER = 1
ROLE_HEAD = 2

PAST_HEAD_CAP = 20

_shared_default_evaluator = None


def _get_evaluator(config: ScenarioConfig) -> TrustEvaluator:
    global _shared_default_evaluator
    if config.fuzzy_sets:
        return evaluator_from_text(config.fuzzy_sets)
    if _shared_default_evaluator is None:
        _shared_default_evaluator = default_evaluator()
    return _shared_default_evaluator


@dataclass(slots=True)
class RoundMetrics:
    """Per-round counters; energies in joules."""

    round: int
    malicious_cluster_count: int
    drop_attacks: int
    delay_attacks: int
    packets_delivered_timely: int
    packets_generated: int
    energy_spent_total: float
    energy_spent_effective: float
    alive_benign_count: int
    # diagnostics beyond the core set
    malicious_head_count: int
    head_count: int
    packets_delivered: int
    attack_opportunities: int
    fallback_idle_count: int
    converged_count: int


METRIC_FIELDS = [f for f in RoundMetrics.__dataclass_fields__]


@dataclass
class RunRecord:
    """Everything a finished run reports."""

    label: str
    mode: str
    seed: int
    config: ScenarioConfig
    rounds: list
    summary: dict
    cycle_malicious_clusters: list
    initial_energy: np.ndarray
    energy_spent: np.ndarray
    energy_remaining: np.ndarray
    malicious: np.ndarray


def sample_malicious_action(attack, rng):
    """Decide a malicious head's move on one forward.

    Draw order: drop with p_dp; else delay (uniform in (0, d_max]) with
    p_dl; else forward cleanly.  Returns ('drop', None), ('delay', t),
    or ('forward', None).
    """
    if rng.random() < attack.p_dp:
        return "drop", None
    if rng.random() < attack.p_dl:
        return "delay", attack.d_max * (1.0 - rng.random())
    return "forward", None


class Simulation:
    """One network instance advancing round by round."""

    def __init__(self, config: ScenarioConfig, seed: int | None = None,
                 mode: str = "egscfo", trace_dir=None, label: str = "run"):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        config.check()
        self.config = config
        self.mode = mode
        self.seed = config.seed if seed is None else seed
        self.label = label
        self.evaluator = _get_evaluator(config)

        n = config.node_count
        streams = np.random.SeedSequence(self.seed).spawn(n + 1)
        setup_rng = np.random.Generator(np.random.PCG64(streams[0]))
        self.node_rng = [np.random.Generator(np.random.PCG64(s)) for s in streams[1:]]

        self.positions = np.column_stack([
            setup_rng.uniform(0.0, config.area_width, n),
            setup_rng.uniform(0.0, config.area_height, n),
        ])
        self.malicious = np.zeros(n, dtype=bool)
        m_count = int(config.malicious_fraction * n)
        if m_count:
            self.malicious[setup_rng.choice(n, size=m_count, replace=False)] = True

        diff = self.positions[:, None, :] - self.positions[None, :, :]
        self.distance = np.sqrt((diff ** 2).sum(axis=2))
        bs = config.bs_position
        self.bs_distance = np.hypot(self.positions[:, 0] - bs.x,
                                    self.positions[:, 1] - bs.y)

        self.energy = np.full(n, config.initial_energy, dtype=np.float64)
        self.spent = np.zeros(n, dtype=np.float64)
        self.alive = np.ones(n, dtype=bool)
        self.role = np.full(n, ROLE_IDLE, dtype=np.int8)

        self.policies = [game.ElectionPolicy(p_ch=config.p_int, p_int=config.p_int)
                         for _ in range(n)]

        # trust state lives in shared matrices; each node's ledger works on views
        self.trust_matrix = np.zeros((n, n), dtype=np.float64)
        self._direct = np.zeros((n, n), dtype=np.float64)
        self._observed = np.zeros((n, n), dtype=np.int64)
        self._dropped = np.zeros((n, n), dtype=np.int64)
        self._delayed = np.zeros((n, n), dtype=np.int64)
        self._last_update = np.full((n, n), -1, dtype=np.int64)
        self.ledgers = [
            TrustLedger.from_views(self._observed[i], self._dropped[i],
                                   self._delayed[i], self.trust_matrix[i],
                                   self._direct[i], self._last_update[i])
            for i in range(n)
        ]
        self.outlier_states: list = [None] * n
        self.past_heads = [dict() for _ in range(n)]  # head id -> last joined round
        # isolation verdicts: once a converged detector calls a peer
        # suspicious, this observer never accepts it as head again
        self.isolated = np.zeros((n, n), dtype=bool)

        self.round_index = 0
        self.rounds: list[RoundMetrics] = []
        self.first_benign_death_round: int | None = None

        self._trace_dir = trace_dir
        self._trace_files = {}
        if trace_dir is not None:
            self._open_traces()

    # -- energy ----------------------------------------------------------

    def _charge(self, node: int, cost: float) -> float:
        """Charge a node up to its remaining energy; kills it at zero.

        The action completes while the battery empties, so the charged
        amount (possibly clipped) is what the ledger records.
        """
        actual = cost if cost < self.energy[node] else self.energy[node]
        self.energy[node] -= actual
        self.spent[node] += actual
        if self.energy[node] <= 0.0:
            self.energy[node] = 0.0
            self.alive[node] = False
        return actual

    # -- phase 1: election -------------------------------------------------

    def elect_heads(self) -> list[int]:
        cfg = self.config
        r = self.round_index
        self.role[:] = ROLE_IDLE
        use_game = self.mode != "baseline"
        if use_game:
            t_avr, suspicious, flagged_any = self._malice_view()
        declared = []
        for i in range(cfg.node_count):
            if not self.alive[i]:
                continue
            policy = self.policies[i]
            if use_game and flagged_any[i]:
                # The game needs co-players and a measured malice level;
                # with either missing the probability stays where it is.
                players = 1 + sum(
                    1 for h in self.past_heads[i]
                    if self.alive[h] and not suspicious[i, h])
                if players >= 2:
                    ctx = game.GameContext(players, cfg.w, t_avr[i])
                    policy.p_ch = game.ess_probability(ctx)
            if game.is_eligible(policy, r):
                threshold = game.election_threshold(policy, r)
                if self.node_rng[i].random() < threshold:
                    declared.append(i)
        heads = []
        for i in declared:
            self._become_head(i)
            if self.alive[i]:
                heads.append(i)
        return heads

    def _become_head(self, i: int) -> None:
        self.role[i] = ROLE_HEAD
        self.policies[i].last_head_round = self.round_index
        self._charge(i, self.config.radio.tx_energy(
            self.config.control_bits, self.config.effective_broadcast_distance))
        if not self.alive[i]:
            self.role[i] = ROLE_IDLE

    def _malice_view(self):
        """Per-node mean trust over flagged neighbours, and the flag matrix."""
        n = self.config.node_count
        av_h = np.zeros(n)
        av_l = np.zeros(n)
        converged = np.zeros(n, dtype=bool)
        for i, state in enumerate(self.outlier_states):
            if state is not None and state.converged:
                converged[i] = True
                av_h[i] = state.av_htg
                av_l[i] = state.av_ltg
        t = self.trust_matrix
        suspicious = (
            converged[:, None]
            & (t > 0.0)
            & (np.abs(t - av_h[:, None]) > np.abs(t - av_l[:, None]))
        )
        suspicious |= self.isolated
        suspicious &= self.alive[None, :]
        counts = suspicious.sum(axis=1)
        sums = (t * suspicious).sum(axis=1)
        t_avr = np.where(counts > 0, sums / np.maximum(counts, 1), 1.0)
        return t_avr, suspicious, counts > 0

    # -- phase 2: joining ---------------------------------------------------

    def join_clusters(self, heads: list[int]):
        """Assign every alive non-head to a cluster, or let it fall through.

        Returns (clusters, fallback_idle_count): clusters maps head id to
        member list.  A node cornered with nothing joinable self-declares
        when eligible, otherwise it sits the round out.
        """
        cfg = self.config
        clusters = {h: [] for h in heads}
        fallback_idle = 0
        head_arr = np.array(heads, dtype=int) if heads else np.empty(0, dtype=int)
        for i in range(cfg.node_count):
            if not self.alive[i] or self.role[i] == ROLE_HEAD:
                continue
            live_heads = head_arr[self.alive[head_arr]] if head_arr.size else head_arr
            choice = None
            if live_heads.size:
                dists = self.distance[i, live_heads]
                order = np.argsort(dists, kind="stable")
                candidates = [int(live_heads[k]) for k in order[:cfg.n_nch]]
                choice = self._pick_head(i, candidates)
            if choice is None:
                if game.is_eligible(self.policies[i], self.round_index):
                    self._become_head(i)
                    if self.alive[i]:
                        clusters[i] = []
                else:
                    fallback_idle += 1
                continue
            self.role[i] = ROLE_MEMBER
            self._charge(i, cfg.radio.tx_energy(cfg.control_bits, self.distance[i, choice]))
            if self.alive[choice]:
                self._charge(choice, cfg.radio.rx_energy(cfg.control_bits))
            clusters[choice].append(i)
        return clusters, fallback_idle

    def _pick_head(self, i: int, candidates: list[int]):
        """Apply the joining rules over the nearest candidates.

        Baseline joins the nearest head outright.  Before the node's
        detector converges: the nearest zero-trust candidate, else the
        most trusted.  After convergence: the nearest trusted-classified
        candidate, else the nearest zero-trust one, else nothing.
        """
        if self.mode == "baseline":
            return candidates[0]
        trust = self.trust_matrix[i]
        state = self.outlier_states[i]
        if state is None or not state.converged:
            for c in candidates:
                if trust[c] == 0.0:
                    return c
            return max(candidates, key=lambda c: trust[c])
        for c in candidates:
            if self.isolated[i, c]:
                continue
            if outliers.classify(trust[c], state) == "trusted":
                return c
        for c in candidates:
            if trust[c] == 0.0:
                return c
        return None

    # -- phase 3: transfer ----------------------------------------------------

    def transfer_phase(self, clusters) -> dict:
        cfg = self.config
        stats = {
            "drop_attacks": 0, "delay_attacks": 0, "attack_opportunities": 0,
            "packets_generated": 0, "packets_delivered": 0,
            "packets_delivered_timely": 0, "malicious_clusters": 0,
            "effective": 0.0,
        }
        observations = []
        for head in sorted(clusters):
            members = clusters[head]
            path_energy = 0.0
            live_members = []
            for m in members:
                if not self.alive[m]:
                    continue
                live_members.append(m)
                tx = self._charge(m, cfg.radio.tx_energy(
                    cfg.packet_bits, self.distance[m, head]))
                rx = 0.0
                if self.alive[head]:
                    rx = self._charge(head, cfg.radio.rx_energy(cfg.packet_bits))
                if not self.malicious[m]:
                    path_energy += tx + rx

            benign_sources = sum(1 for m in live_members if not self.malicious[m])
            if self.alive[head]:
                benign_sources += 0 if self.malicious[head] else 1
            stats["packets_generated"] += benign_sources

            if not self.alive[head]:
                # died receiving; nothing reaches the base station
                for m in live_members:
                    observations.append((m, head, "dropped", None))
                continue

            if self.malicious[head] and live_members:
                stats["malicious_clusters"] += 1
                stats["attack_opportunities"] += 1
                action, delay = sample_malicious_action(cfg.attack, self.node_rng[head])
            else:
                action, delay = "forward", None

            if action == "drop":
                stats["drop_attacks"] += 1
                for m in live_members:
                    observations.append((m, head, "dropped", None))
                continue

            forward_energy = self._charge(head, cfg.radio.tx_energy(
                cfg.packet_bits, self.bs_distance[head]))
            path_energy += forward_energy

            if action == "delay":
                stats["delay_attacks"] += 1
                stats["packets_delivered"] += benign_sources
                for m in live_members:
                    observations.append((m, head, "delayed", delay))
                continue

            # honest forward: channel noise may force a retransmission
            channel_state, _holding = cfg.channel.sample(self.node_rng[head])
            retransmitted = False
            if channel_state == "bad" and self.node_rng[head].random() < cfg.noise.p_del:
                retransmitted = True
                path_energy += self._charge(head, cfg.radio.tx_energy(
                    cfg.packet_bits, self.bs_distance[head]))
            stats["packets_delivered"] += benign_sources
            stats["packets_delivered_timely"] += benign_sources
            stats["effective"] += path_energy
            for m in live_members:
                if retransmitted:
                    observations.append((m, head, "delayed", 0.5 * cfg.attack.d_max))
                elif channel_state == "bad" and self.node_rng[m].random() < cfg.noise.p_los:
                    observations.append((m, head, "unobserved", None))
                else:
                    observations.append((m, head, "delivered", 0.0))
        return stats | {"observations": observations}

    # -- phase 4: trust update ---------------------------------------------------

    def trust_update_phase(self, clusters, observations) -> None:
        cfg = self.config
        monitoring = self.mode != "baseline"
        if monitoring:
            for m, head, outcome, wait in observations:
                if not self.alive[m]:
                    continue
                duration = None if outcome in ("dropped", "unobserved") else wait
                self._charge(m, cfg.radio.monitor_energy(duration, cfg.packet_bits))
                if not self.alive[m]:
                    continue
                self.ledgers[m].record_observation(head, outcome)
                if outcome != "unobserved":
                    value = self.ledgers[m].refresh_direct_trust(
                        head, self.evaluator, self.round_index)
                    # A suspicious verdict backed by a first-hand drop is
                    # final: drops are unambiguous (channel noise only
                    # masks or delays, it never fakes a drop).
                    state = self.outlier_states[m]
                    if (state is not None and state.converged
                            and self._dropped[m, head] > 0
                            and outliers.classify(value, state) == "suspicious"):
                        self.isolated[m, head] = True

        for head in sorted(clusters):
            for m in clusters[head]:
                if not self.alive[m]:
                    continue
                ph = self.past_heads[m]
                ph[head] = self.round_index
                if len(ph) > PAST_HEAD_CAP:
                    oldest = min(ph, key=ph.get)
                    del ph[oldest]

        if self.mode != "egscfo":
            return

        for head in sorted(clusters):
            members = clusters[head]
            if not self.alive[head]:
                continue
            head_row = self.trust_matrix[head]
            for m in members:
                if not self.alive[m]:
                    continue
                state = self.outlier_states[m]
                if state is None or not state.converged:
                    continue
                if (not self.isolated[m, head]
                        and outliers.classify(self.trust_matrix[m, head], state) == "trusted"):
                    self.ledgers[m].merge_recommendations(
                        head, head_row, m, self.round_index)
                    # isolation verdicts ride along with the trust row
                    self.isolated[m] |= self.isolated[head]

        for head in sorted(clusters):
            for m in clusters[head]:
                if not self.alive[m]:
                    continue
                if cfg.evidence_horizon:
                    self.ledgers[m].expire_stale_evidence(
                        self.round_index, cfg.evidence_horizon)
                state = self.outlier_states[m]
                if state is not None and state.converged:
                    # Standing verdicts: any unresolved peer with a
                    # witnessed drop is re-judged on first-hand evidence,
                    # so old catches cannot linger as midpoint anchors.
                    led = self.ledgers[m]
                    pending = (led.dropped > 0) & ~self.isolated[m]
                    if pending.any():
                        d = led.direct
                        self.isolated[m] |= pending & (
                            np.abs(d - state.av_htg) > np.abs(d - state.av_ltg))
                # resolved (isolated) peers no longer shape the landscape
                ts = self.ledgers[m].trust_set(exclude=self.isolated[m])
                if state is None:
                    if ts.size > 2:
                        self.outlier_states[m] = state = outliers.activate(
                            ts, self.node_rng[m])
                    else:
                        continue
                outliers.iterate_round(state, ts, cfg.thresholds)
                outliers.check_convergence(state, cfg.thresholds)

    # -- metrics and the loop -----------------------------------------------------

    def step(self) -> RoundMetrics:
        spent_before = self.spent.sum()
        heads = self.elect_heads()
        clusters, fallback_idle = self.join_clusters(heads)
        stats = self.transfer_phase(clusters)
        self.trust_update_phase(clusters, stats["observations"])

        benign_alive = int((self.alive & ~self.malicious).sum())
        if self.first_benign_death_round is None:
            if benign_alive < int((~self.malicious).sum()):
                self.first_benign_death_round = self.round_index

        all_heads = [h for h in clusters if self.role[h] == ROLE_HEAD]
        metrics = RoundMetrics(
            round=self.round_index,
            malicious_cluster_count=stats["malicious_clusters"],
            drop_attacks=stats["drop_attacks"],
            delay_attacks=stats["delay_attacks"],
            packets_delivered_timely=stats["packets_delivered_timely"],
            packets_generated=stats["packets_generated"],
            energy_spent_total=float(self.spent.sum() - spent_before),
            energy_spent_effective=stats["effective"],
            alive_benign_count=benign_alive,
            malicious_head_count=int(sum(1 for h in all_heads if self.malicious[h])),
            head_count=len(all_heads),
            packets_delivered=stats["packets_delivered"],
            attack_opportunities=stats["attack_opportunities"],
            fallback_idle_count=fallback_idle,
            converged_count=sum(1 for s in self.outlier_states
                                if s is not None and s.converged),
        )
        self.rounds.append(metrics)
        self._write_traces(heads)
        self.round_index += 1
        return metrics

    def run(self) -> RunRecord:
        """Advance rounds until every benign node is dead, then summarize."""
        benign = ~self.malicious
        termination = "exhausted"
        while self.round_index < self.config.max_rounds:
            if not (self.alive & benign).any():
                break
            self.step()
        else:
            termination = "round_cap"
        return self._build_record(termination)

    def _build_record(self, termination: str) -> RunRecord:
        cfg = self.config
        per_cycle = []
        rpc = cfg.rounds_per_cycle
        for start in range(0, len(self.rounds), rpc):
            chunk = self.rounds[start:start + rpc]
            if len(chunk) < rpc:
                break
            per_cycle.append(sum(m.malicious_cluster_count for m in chunk) / rpc)
        generated = sum(m.packets_generated for m in self.rounds)
        timely = sum(m.packets_delivered_timely for m in self.rounds)
        delivered = sum(m.packets_delivered for m in self.rounds)
        total_energy = float(self.spent.sum())
        effective = sum(m.energy_spent_effective for m in self.rounds)
        summary = {
            "label": self.label,
            "mode": self.mode,
            "seed": self.seed,
            "termination": termination,
            "total_rounds": len(self.rounds),
            "lifetime": (self.first_benign_death_round + 1
                         if self.first_benign_death_round is not None
                         else len(self.rounds)),
            "throughput": delivered,
            "drop_attacks": sum(m.drop_attacks for m in self.rounds),
            "delay_attacks": sum(m.delay_attacks for m in self.rounds),
            "attacks_total": sum(m.drop_attacks + m.delay_attacks
                                 for m in self.rounds),
            "packets_generated": generated,
            "packets_delivered_timely": timely,
            "timely_rate": timely / generated if generated else 0.0,
            "energy_total": total_energy,
            "energy_effective": effective,
            "effective_energy_rate": effective / total_energy if total_energy else 0.0,
        }
        record = RunRecord(
            label=self.label,
            mode=self.mode,
            seed=self.seed,
            config=cfg,
            rounds=self.rounds,
            summary=summary,
            cycle_malicious_clusters=per_cycle,
            initial_energy=np.full(cfg.node_count, cfg.initial_energy),
            energy_spent=self.spent.copy(),
            energy_remaining=self.energy.copy(),
            malicious=self.malicious.copy(),
        )
        self._close_traces()
        return record

    # -- traces ------------------------------------------------------------------

    def _open_traces(self):
        import pathlib

        base = pathlib.Path(self._trace_dir)
        base.mkdir(parents=True, exist_ok=True)
        prefix = f"{self.label}-{self.seed}"
        for name, header in (
            ("trust", ["round", "observer", "target", "trust", "dpr", "dlr"]),
            ("outlier", ["round", "node", "av_htg", "av_ltg", "streak", "converged"]),
            ("election", ["round", "node", "players", "t_avr", "p_ch", "declared"]),
        ):
            fh = open(base / f"{prefix}-{name}.csv", "w", newline="")
            writer = csv.writer(fh)
            writer.writerow(header)
            self._trace_files[name] = (fh, writer)

    def _write_traces(self, heads):
        if not self._trace_files:
            return
        r = self.round_index
        n = self.config.node_count
        head_set = set(heads)
        _, trust_w = self._trace_files["trust"]
        for i in range(n):
            if not self.alive[i]:
                continue
            for j in self.ledgers[i].known_targets():
                obs = self._observed[i, j]
                dpr = self._dropped[i, j] / obs if obs else ""
                dlr = self._delayed[i, j] / obs if obs else ""
                trust_w.writerow([r, i, int(j), repr(self.trust_matrix[i, j]), dpr, dlr])
        _, outlier_w = self._trace_files["outlier"]
        for i, state in enumerate(self.outlier_states):
            if state is not None:
                outlier_w.writerow([r, i, repr(state.av_htg), repr(state.av_ltg),
                                    state.streak, int(state.converged)])
        _, election_w = self._trace_files["election"]
        for i in range(n):
            if self.alive[i] or i in head_set:
                election_w.writerow([r, i, "", "", repr(self.policies[i].p_ch),
                                     int(i in head_set)])

    def _close_traces(self):
        for fh, _ in self._trace_files.values():
            fh.close()
        self._trace_files = {}


def run_scenario(config: ScenarioConfig, seed: int | None = None,
                 mode: str = "egscfo", trace_dir=None, label: str = "run") -> RunRecord:
    """Build a simulation and run it to completion."""
    return Simulation(config, seed=seed, mode=mode,
                      trace_dir=trace_dir, label=label).run()


# -- CSV / summary emission -----------------------------------------------------


def write_rounds_csv(record: RunRecord, path) -> None:
    """One row per round; floats written in shortest round-trip form."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRIC_FIELDS)
        for m in record.rounds:
            writer.writerow([
                getattr(m, name) if isinstance(getattr(m, name), int)
                else repr(getattr(m, name))
                for name in METRIC_FIELDS
            ])


def write_summary(record: RunRecord, path) -> None:
    with open(path, "w") as fh:
        json.dump(record.summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_run_outputs(record: RunRecord, out_dir) -> list:
    """Emit the per-run file set; returns the paths written."""
    import pathlib

    base = pathlib.Path(out_dir)
    base.mkdir(parents=True, exist_ok=True)
    prefix = f"{record.label}-{record.seed}"
    rounds_path = base / f"{prefix}-rounds.csv"
    summary_path = base / f"{prefix}-summary.json"
    write_rounds_csv(record, rounds_path)
    write_summary(record, summary_path)
    return [rounds_path, summary_path]
