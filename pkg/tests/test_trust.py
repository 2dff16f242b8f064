"""Evidence counters, ledgers, and recommendation merging."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from egscfo.fuzzy import default_evaluator
from egscfo.trust import (
    EvidenceCounters,
    NoEvidenceError,
    TrustLedger,
    merge_recommendation,
)

unit = st.floats(0.0, 1.0, allow_nan=False)


@pytest.fixture(scope="module")
def ev():
    return default_evaluator()


# -- counters --------------------------------------------------------------


def test_record_delivered():
    c = EvidenceCounters()
    c.record("delivered")
    assert (c.observed, c.dropped, c.delayed) == (1, 0, 0)


def test_record_dropped_updates_rate():
    c = EvidenceCounters(observed=4, dropped=1)
    c.record("dropped")
    assert (c.observed, c.dropped) == (5, 2)
    assert c.rates()[0] == pytest.approx(0.4)


def test_record_unobserved_is_noop():
    c = EvidenceCounters(observed=3, dropped=1, delayed=1)
    c.record("unobserved")
    assert (c.observed, c.dropped, c.delayed) == (3, 1, 1)


def test_record_unknown_outcome():
    with pytest.raises(ValueError):
        EvidenceCounters().record("mangled")


def test_rates_examples():
    assert EvidenceCounters(10, 2, 3).rates() == (0.2, 0.3)
    assert EvidenceCounters(5, 0, 0).rates() == (0.0, 0.0)
    assert EvidenceCounters(1, 1, 0).rates() == (1.0, 0.0)


def test_rates_require_evidence():
    with pytest.raises(NoEvidenceError):
        EvidenceCounters().rates()


# -- recommendation merging ------------------------------------------------------


def test_merge_with_prior():
    assert merge_recommendation(0.8, 0.9, 0.6) == pytest.approx((0.8 + 0.54) / 1.9)


def test_merge_without_prior():
    assert merge_recommendation(0.0, 0.9, 0.6) == pytest.approx(0.54)


def test_merge_fixed_point():
    assert merge_recommendation(0.8, 1.0, 0.8) == pytest.approx(0.8)


def test_merge_requires_trusted_recommender():
    with pytest.raises(ValueError):
        merge_recommendation(0.5, 0.0, 0.5)


@settings(max_examples=300, deadline=None)
@given(unit, st.floats(1e-9, 1.0, allow_nan=False), unit)
def test_merge_stays_in_unit_interval(t_ij, t_ik, t_kj):
    assert 0.0 <= merge_recommendation(t_ij, t_ik, t_kj) <= 1.0


@settings(max_examples=300, deadline=None)
@given(unit, st.floats(1e-9, 1.0, allow_nan=False), unit, unit)
def test_merge_monotone_in_recommendation(t_ij, t_ik, a, b):
    lo, hi = min(a, b), max(a, b)
    assert merge_recommendation(t_ij, t_ik, lo) <= merge_recommendation(t_ij, t_ik, hi) + 1e-12


# -- ledger ------------------------------------------------------------------------


def test_ledger_refresh_composes_with_evaluator(ev):
    ledger = TrustLedger(4)
    for _ in range(10):
        ledger.record_observation(2, "delivered")
    value = ledger.refresh_direct_trust(2, ev, round_index=5)
    assert value == ev.evaluate_trust(0.0, 0.0)
    assert ledger.record(2).trust == value
    assert ledger.record(2).last_update_round == 5


def test_ledger_all_dropped(ev):
    ledger = TrustLedger(4)
    for _ in range(10):
        ledger.record_observation(1, "dropped")
    assert ledger.refresh_direct_trust(1, ev, 0) == ev.evaluate_trust(1.0, 0.0)
    assert ledger.direct[1] == ev.evaluate_trust(1.0, 0.0)


def test_drop_strictly_decreases_trust(ev):
    ledger = TrustLedger(4)
    for _ in range(10):
        ledger.record_observation(3, "delivered")
    clean = ledger.refresh_direct_trust(3, ev, 0)
    ledger.record_observation(3, "dropped")
    tainted = ledger.refresh_direct_trust(3, ev, 1)
    assert tainted < clean


def test_trust_set_holds_positive_values(ev):
    ledger = TrustLedger(5)
    ledger.trust[:] = [0.0, 0.4, 0.0, 0.9, 0.2]
    assert sorted(ledger.trust_set()) == pytest.approx([0.2, 0.4, 0.9])
    mask = np.zeros(5, dtype=bool)
    mask[3] = True
    assert sorted(ledger.trust_set(exclude=mask)) == pytest.approx([0.2, 0.4])


def test_counters_never_decrease():
    ledger = TrustLedger(3)
    rng = np.random.default_rng(0)
    prev = (0, 0, 0)
    for _ in range(200):
        outcome = ("delivered", "dropped", "delayed", "unobserved")[rng.integers(4)]
        ledger.record_observation(1, outcome)
        now = (ledger.observed[1], ledger.dropped[1], ledger.delayed[1])
        assert all(a >= b for a, b in zip(now, prev))
        assert ledger.dropped[1] + ledger.delayed[1] <= ledger.observed[1]
        prev = now


def test_vector_merge_matches_scalar():
    rng = np.random.default_rng(42)
    n = 30
    for trial in range(20):
        ledger = TrustLedger(n)
        ledger.trust[:] = rng.uniform(0, 1, n) * (rng.random(n) < 0.7)
        head = 4
        ledger.trust[head] = rng.uniform(0.1, 1.0)
        head_row = rng.uniform(0, 1, n) * (rng.random(n) < 0.8)
        # a few targets have enough first-hand evidence to be skipped
        ledger.observed[:] = rng.integers(0, 10, n)
        expected = ledger.trust.copy()
        t_ik = ledger.trust[head]
        for j in range(n):
            if j in (head, 7) or head_row[j] <= 0 or ledger.observed[j] >= 5:
                continue
            expected[j] = merge_recommendation(float(expected[j]), float(t_ik),
                                               float(head_row[j]))
        ledger.merge_recommendations(head, head_row, self_index=7, round_index=3)
        assert np.allclose(ledger.trust, expected, atol=1e-12)


def test_merge_requires_positive_head_trust():
    ledger = TrustLedger(3)
    with pytest.raises(ValueError):
        ledger.merge_recommendations(1, np.array([0.5, 0.0, 0.5]), 0, 0)


def test_from_views_shares_storage():
    observed = np.zeros((2, 3), dtype=np.int64)
    dropped = np.zeros((2, 3), dtype=np.int64)
    delayed = np.zeros((2, 3), dtype=np.int64)
    trust = np.zeros((2, 3))
    direct = np.zeros((2, 3))
    last = np.full((2, 3), -1, dtype=np.int64)
    ledger = TrustLedger.from_views(observed[0], dropped[0], delayed[0],
                                    trust[0], direct[0], last[0])
    ledger.record_observation(1, "dropped")
    assert observed[0, 1] == 1 and dropped[0, 1] == 1


def test_expire_stale_evidence():
    ledger = TrustLedger(3)
    for _ in range(4):
        ledger.record_observation(1, "delivered")
    ledger.trust[1] = 0.9
    ledger.direct[1] = 0.9
    ledger.last_update[1] = 10
    ledger.expire_stale_evidence(round_index=100, horizon=50)
    assert ledger.observed[1] == 0
    assert ledger.trust[1] == 0.9  # value survives, counters do not
