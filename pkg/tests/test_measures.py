import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import loop_confusion
from valsize.errors import DegenerateInputError, PreconditionError, UndefinedMeasureError
from valsize.measures import (
    Z,
    CIMethod,
    ConfusionMatrix,
    MeasureKind,
    PerformanceAnticipation,
    agresti_coull_interval,
    build_confusion,
    confidence_interval,
    cov_precision_recall,
    cov_precision_recall_counts,
    estimate,
    estimate_all,
    measure_se,
    measure_se_counts,
    measure_value,
    wald_interval,
)

ACC, SPEC, SENS, PPV, NPV, F1 = MeasureKind
cells = st.integers(min_value=1, max_value=10_000).map(float)


def test_build_confusion_matches_loop():
    rng = np.random.default_rng(1)
    p = rng.random(5000)
    y = (rng.random(5000) < p).astype(int)
    for t in (0.05, 0.3, 0.5, 0.9):
        cm = build_confusion(p, y, t)
        assert (cm.tp, cm.fp, cm.fn, cm.tn) == loop_confusion(p, y, t)


def test_ties_at_threshold_are_negative():
    cm = build_confusion([0.3, 0.3, 0.31], [1, 0, 1], 0.3)
    assert (cm.tp, cm.fp, cm.fn, cm.tn) == (1, 0, 1, 1)


@pytest.mark.parametrize("probs, outcomes, t", [
    ([0.1, float("nan")], [0, 1], 0.5),
    ([0.1, 1.2], [0, 1], 0.5),
    ([0.1, 0.2], [0, 2], 0.5),
    ([0.1, 0.2], [0], 0.5),
    ([], [], 0.5),
    ([0.1, 0.2], [0, 1], 1.0),
    ([0.1, 0.2], [0, 1], 0.0),
])
def test_build_confusion_rejects(probs, outcomes, t):
    with pytest.raises(PreconditionError):
        build_confusion(probs, outcomes, t)


def test_undefined_measure_names_empty_cells():
    cm = ConfusionMatrix(tp=0, fp=3, tn=5, fn=0)
    with pytest.raises(UndefinedMeasureError) as exc:
        measure_value(cm, SENS)
    assert exc.value.empty_cells == ("tp", "fn")
    assert measure_value(cm, SPEC) == 5 / 8


def test_negative_cell_rejected():
    with pytest.raises(PreconditionError):
        ConfusionMatrix(tp=-1, fp=0, tn=0, fn=0)


def test_values_by_hand():
    cm = ConfusionMatrix(tp=40, fp=10, tn=30, fn=20)
    assert measure_value(cm, ACC) == 0.7
    assert measure_value(cm, SPEC) == 0.75
    assert measure_value(cm, SENS) == 40 / 60
    assert measure_value(cm, PPV) == 0.8
    assert measure_value(cm, NPV) == 0.6
    assert measure_value(cm, F1) == pytest.approx(80 / 110)


@settings(max_examples=1000, deadline=None)
@given(cells, cells, cells, cells)
def test_rate_and_count_forms_agree(tp, fp, tn, fn):
    cm = ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn)
    a = PerformanceAnticipation.from_confusion(cm)
    for kind in MeasureKind:
        assert measure_se(kind, a, cm.n) == pytest.approx(measure_se_counts(cm, kind), rel=1e-9)
    P, R = measure_value(cm, PPV), measure_value(cm, SENS)
    spec = measure_value(cm, SPEC)
    assert cov_precision_recall(P, R, spec, cm.prevalence, cm.n) == pytest.approx(
        cov_precision_recall_counts(cm), rel=1e-9)


@settings(max_examples=1000, deadline=None)
@given(cells, cells, cells, cells)
def test_accuracy_decomposition_and_f1_harmonic(tp, fp, tn, fn):
    cm = ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn)
    phi = cm.prevalence
    acc = measure_value(cm, SENS) * phi + measure_value(cm, SPEC) * (1 - phi)
    assert measure_value(cm, ACC) == pytest.approx(acc, rel=1e-12)
    P, R = measure_value(cm, PPV), measure_value(cm, SENS)
    assert measure_value(cm, F1) == pytest.approx(2 / (1 / P + 1 / R), rel=1e-12)


def test_anticipation_derives_missing_values():
    a = PerformanceAnticipation(prevalence=0.4, sensitivity=0.8, specificity=0.7)
    assert a.value(ACC) == pytest.approx(0.8 * 0.4 + 0.7 * 0.6)
    ppv = 0.32 / (0.32 + 0.18)
    assert a.value(PPV) == pytest.approx(ppv)
    assert a.value(NPV) == pytest.approx(0.42 / (0.42 + 0.08))
    assert a.value(F1) == pytest.approx(2 * ppv * 0.8 / (ppv + 0.8))


def test_anticipation_guards():
    with pytest.raises(DegenerateInputError):
        PerformanceAnticipation(prevalence=0.0, sensitivity=0.5, specificity=0.5)
    with pytest.raises(DegenerateInputError):
        PerformanceAnticipation(prevalence=0.3, sensitivity=1.0, specificity=0.5)
    with pytest.raises(PreconditionError, match="inconsistent"):
        PerformanceAnticipation(prevalence=0.5, sensitivity=0.8, specificity=0.8, accuracy=0.5)
    with pytest.raises(PreconditionError):
        PerformanceAnticipation(prevalence=0.5, specificity=0.8).value(ACC)


def test_wald_interval_clamps():
    assert wald_interval(0.99, 0.05) == (pytest.approx(0.99 - Z * 0.05), 1.0)
    assert wald_interval(0.01, 0.05)[0] == 0.0
    with pytest.raises(PreconditionError):
        wald_interval(0.5, -0.1)


def test_agresti_coull_by_hand():
    lo, hi = agresti_coull_interval(0, 10)
    c = 2 / 14
    half = Z * math.sqrt(c * (1 - c) / 10)
    assert lo == 0.0
    assert hi == pytest.approx(c + half)
    assert confidence_interval(method="agresti_coull", x=5, n=10) == agresti_coull_interval(5, 10)
    with pytest.raises(PreconditionError):
        agresti_coull_interval(11, 10)
    with pytest.raises(PreconditionError):
        confidence_interval(method="agresti_coull", x=1)


def test_estimate_records_method_and_width():
    cm = ConfusionMatrix(tp=40, fp=10, tn=30, fn=20)
    e = estimate(cm, SENS)
    assert e.ci_method is CIMethod.WALD
    assert e.raw_width == pytest.approx(2 * Z * e.se)
    ac = estimate(cm, SENS, "agresti_coull")
    assert (ac.ci_low, ac.ci_high) == agresti_coull_interval(40, 60)
    with pytest.raises(PreconditionError):
        estimate(cm, F1, "agresti_coull")
    assert [x.kind for x in estimate_all(cm)] == list(MeasureKind)


def test_estimate_round_trips_through_dict():
    e = estimate(ConfusionMatrix(tp=4, fp=1, tn=3, fn=2), NPV)
    assert type(e).from_dict(e.to_dict()) == e


def test_fractional_cells_accepted():
    cm = ConfusionMatrix(tp=10.5, fp=3.25, tn=20.0, fn=1.75)
    assert measure_value(cm, SENS) == pytest.approx(10.5 / 12.25)
    assert measure_se_counts(cm, F1) > 0
