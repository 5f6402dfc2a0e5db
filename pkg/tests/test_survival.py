import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import km_survival_at, naive_pseudo_observations
from valsize.errors import PreconditionError, SimulationDegeneracyError
from valsize.measures import MeasureKind
from valsize.survival import (
    SurvivalRecord,
    SurvivalScenario,
    Weibull,
    as_arrays,
    builtin_scenario,
    km_cumulative_incidence,
    km_curve,
    predicted_risk,
    pseudo_confusion,
    pseudo_observations,
    simulate_ciw,
)

records = st.lists(
    st.tuples(st.integers(1, 12).map(lambda k: k / 2), st.integers(0, 1)),
    min_size=2, max_size=40,
)


@settings(max_examples=1000, deadline=None)
@given(records, st.floats(0.25, 7.0))
def test_pseudo_values_match_naive_jackknife(recs, horizon):
    t = np.array([r[0] for r in recs])
    e = np.array([r[1] for r in recs])
    fast = pseudo_observations((t, e), horizon)
    assert np.allclose(fast, naive_pseudo_observations(t, e, horizon), atol=1e-10, rtol=0)
    cif = km_cumulative_incidence((t, e), horizon)
    if cif < 1.0:
        # the mean identity needs the full-sample curve to stay above zero
        assert fast.mean() == pytest.approx(cif, abs=1e-12)


def test_mean_identity_breaks_when_curve_reaches_zero():
    t, e = np.array([0.5, 1.0]), np.array([0, 1])
    assert km_cumulative_incidence((t, e), 1.0) == 1.0
    assert list(pseudo_observations((t, e), 1.0)) == [1.0, 2.0]


def test_tied_event_precedes_censoring():
    t = np.array([2.0, 2.0, 3.0, 5.0])
    e = np.array([1, 0, 1, 0])
    # all four at risk at t=2, then two at t=3
    assert km_cumulative_incidence((t, e), 4.0) == pytest.approx(1 - (3 / 4) * (1 / 2))
    assert km_survival_at(t, e, 4.0) == pytest.approx((3 / 4) * (1 / 2))


def test_km_curve_matches_oracle():
    rng = np.random.default_rng(4)
    t = np.round(rng.exponential(3.0, 200), 1) + 0.1
    e = (rng.random(200) < 0.7).astype(int)
    curve = km_curve((t, e))
    for h in (0.05, 0.5, 1.0, 2.5, 6.0, 30.0):
        assert curve.at(h) == pytest.approx(km_survival_at(t, e, h), abs=1e-13)
        assert 1 - curve.at(h) == pytest.approx(km_cumulative_incidence((t, e), h), abs=1e-13)


def test_no_censoring_gives_indicators():
    rng = np.random.default_rng(5)
    t = rng.exponential(2.0, 500)
    ps = pseudo_observations((t, np.ones(500, dtype=int)), 1.5)
    assert np.max(np.abs(ps - (t <= 1.5))) < 1e-12


def test_records_and_arrays_agree():
    recs = [SurvivalRecord(1.0, 1), SurvivalRecord(2.0, 0), SurvivalRecord(3.0, 1)]
    t, e = as_arrays(recs)
    assert list(t) == [1.0, 2.0, 3.0] and list(e) == [1, 0, 1]
    assert np.array_equal(pseudo_observations(recs, 2.5), pseudo_observations((t, e), 2.5))


@pytest.mark.parametrize("times, events", [
    ([1.0, -2.0], [1, 0]),
    ([1.0, float("inf")], [1, 0]),
    ([1.0, 2.0], [1, 2]),
    ([1.0, 2.0], [1]),
])
def test_invalid_records(times, events):
    with pytest.raises(PreconditionError):
        as_arrays((np.array(times), np.array(events)))


def test_single_record_rejected():
    with pytest.raises(PreconditionError):
        pseudo_observations([(1.0, 1)], 2.0)


def test_horizon_before_first_event():
    ps = pseudo_observations([(3.0, 1), (4.0, 0), (5.0, 1)], 1.0)
    assert np.allclose(ps, 0.0)


def test_predicted_risk():
    assert predicted_risk(0.9, 0.0) == pytest.approx(0.1)
    assert predicted_risk(0.9, math.log(2.0)) == pytest.approx(1 - 0.81)
    assert predicted_risk(0.9, np.array([0.0, 1.0])).shape == (2,)
    with pytest.raises(PreconditionError):
        predicted_risk(0.0, 0.0)


def test_weibull_draws_follow_survival():
    w = Weibull(1.5, 4.0)
    rng = np.random.default_rng(8)
    t = w.draw(rng, 200_000)
    for x in (1.0, 4.0, 8.0):
        assert np.mean(t > x) == pytest.approx(w.survival(x), abs=3e-3)
    # proportional hazards: S(t | lp) = S0(t) ** exp(lp)
    t2 = w.draw(rng, 200_000, lp=np.full(200_000, 0.7))
    assert np.mean(t2 > 4.0) == pytest.approx(w.survival(4.0) ** math.exp(0.7), abs=3e-3)
    assert Weibull.exponential(0.5).survival(2.0) == pytest.approx(math.exp(-1.0))


def test_pseudo_confusion_clamps_negative_cells(caplog):
    with caplog.at_level(logging.WARNING, logger="valsize.survival"):
        cm = pseudo_confusion(np.array([-0.4, 0.2, 1.0]), np.array([0.9, 0.1, 0.05]), 0.5)
    assert cm.tp == 0.0
    assert "clamped" in caplog.text
    with pytest.raises(PreconditionError):
        pseudo_confusion(np.zeros(3), np.zeros(2), 0.5)


def _small(seed=1, **kw):
    args = dict(repetitions=20, seed=seed, sample_sizes=(800, 400))
    args.update(kw)
    sc = builtin_scenario(**{k: args.pop(k) for k in ("repetitions", "seed", "sample_sizes")})
    for k, v in args.items():
        setattr(sc, k, v)
    return sc


def test_simulation_is_deterministic_and_worker_invariant():
    a = simulate_ciw(_small())
    b = simulate_ciw(_small(), workers=4)
    assert a.to_dict() == b.to_dict()
    c = simulate_ciw(_small(seed=2))
    assert a.to_dict() != c.to_dict()


def test_candidate_sizes_use_their_own_streams():
    one = simulate_ciw(_small(sample_sizes=(800,)))
    two = simulate_ciw(_small(sample_sizes=(800, 400)))
    assert one.summary(800).to_dict() == two.summary(800).to_dict()


def test_raw_export_rows():
    sim = simulate_ciw(_small(repetitions=5), keep_raw=True)
    assert len(sim.raw) == 2 * 5 * len(MeasureKind)
    assert {r["degenerate"] for r in sim.raw} == {0}


def test_all_degenerate_raises():
    sc = SurvivalScenario(horizon=1e-6, threshold=0.1, event=Weibull(1.0, 100.0),
                          sample_sizes=(20,), repetitions=3)
    with pytest.raises(SimulationDegeneracyError):
        simulate_ciw(sc)


def test_scenario_validation():
    with pytest.raises(PreconditionError):
        SurvivalScenario(horizon=0, threshold=0.1, event=Weibull(1, 1), sample_sizes=(10,))
    with pytest.raises(PreconditionError):
        SurvivalScenario(horizon=1, threshold=0.1, event=Weibull(1, 1), sample_sizes=(1,))
    with pytest.raises(PreconditionError):
        Weibull(0, 1)
