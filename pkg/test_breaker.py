# OntoGuard, GPL-3.0 license
"""
Feedback-loop circuit breaker, influence tagging and the toy risk model it gates
"""

import pytest

from breaker.influence import (AcceptanceModel, Breaker, InfluenceStats, Refusal, State, compute_stats,
                               dashboard_row, evaluate, retrain_gate, save_dashboard, save_refusal, sweep,
                               tag_outputs, trend_projection)
from core.records import Layer
from models.risk import ToyRiskModel, bump_version, version_number
from utils import ValidationError
from utils.general import json_load
from utils.plots import plot_influence

OUTCOMES = ('CX-NEPHRO', 'CX-RETINO')


@pytest.fixture
def cohort(record):
    # 100 records, k of them AI-influenced
    def make(k, n=100):
        tag = {'model_version': 'risk-v0000', 'model_confidence': 0.8}
        return [record(f'R-{i}', 'SE11.69' if i % 2 else 'SE11.9', co_codes=['CX-NEPHRO'] if i % 4 == 1 else [],
                       influence_tag=tag if i < k else None) for i in range(n)]

    return make


def stats_of(*ratios):
    # Cohort c whose ratio history is `ratios`, current period last
    history = tuple((f'P{i + 1}', r) for i, r in enumerate(ratios))
    return InfluenceStats('c', ratios[-1], int(round(ratios[-1] * 100)), 100, history)


def test_compute_stats(cohort):
    s = compute_stats(cohort(12), [('2025Q1', 0.04), ('2025Q2', 0.08)], cohort_id='2025Q3', period='2025Q3')
    assert (s.ratio, s.tagged_count, s.total_count) == (0.12, 12, 100)
    assert s.history == (('2025Q1', 0.04), ('2025Q2', 0.08), ('2025Q3', 0.12))
    assert compute_stats([]).ratio == 0.0


def test_trend_projection():
    assert trend_projection([0.04, 0.08, 0.12]) == pytest.approx(0.16)
    assert trend_projection([0.08, 0.12]) is None  # too short
    assert trend_projection([0.04, 0.12, 0.08]) is None  # not strictly increasing
    assert trend_projection([0.01, 0.02, 0.04, 0.08], periods=4) == pytest.approx(0.08 + (0.02 + 0.04) / 2)


@pytest.mark.parametrize('ratios, state', [
    ((0.16,), State.OPEN),
    ((0.15,), State.CLOSED),  # strictly greater opens
    ((0.04, 0.08, 0.12), State.WARNING),
    ((0.10, 0.12, 0.13), State.CLOSED),
    ((0.14, 0.12, 0.13), State.CLOSED),
    ((0.0,), State.CLOSED),])
def test_evaluate(cfg, ratios, state):
    assert evaluate(stats_of(*ratios), cfg).state is state


def test_warning_reason(cfg):
    s = evaluate(stats_of(0.04, 0.08, 0.12), cfg)
    assert s.reason == 'ratio increased from 4% to 12% over 3 periods, may breach the threshold 15% by the next cycle'
    assert s.threshold_used == 0.15


def test_breaker_keeps_latest_state(cfg):
    b = Breaker(cfg)
    b.update(stats_of(0.2))
    b.update(stats_of(0.04, 0.08, 0.12))
    assert b.states == {'c': evaluate(stats_of(0.04, 0.08, 0.12), cfg)}


def test_retrain_gate(tmp_path, cfg, cohort):
    model = ToyRiskModel.fit(cohort(0), OUTCOMES, cohort_id='2025Q1', layer=Layer.ADMINISTRATIVE)
    closed = compute_stats(cohort(4), cohort_id='2025Q2')
    new = retrain_gate(evaluate(closed, cfg), cohort(4), model, closed)
    assert isinstance(new, ToyRiskModel)
    assert (new.model_version, new.training_cohort_id, new.layer) == ('risk-v0001', '2025Q2', Layer.ADMINISTRATIVE)
    opened = compute_stats(cohort(20), cohort_id='2025Q3')
    refusal = retrain_gate(evaluate(opened, cfg), cohort(20), new, opened, notes=['SE11.65 TypeB'])
    assert isinstance(refusal, Refusal)
    assert (refusal.model_version, refusal.cohort_id, refusal.stats.ratio) == ('risk-v0001', '2025Q3', 0.2)
    d = json_load(save_refusal(tmp_path / 'refusal.json', refusal))
    assert d['decision'] == 'retraining refused' and d['state'] == 'Open' and d['notes'] == ['SE11.65 TypeB']
    with pytest.raises(ValidationError, match='empty cohort'):
        retrain_gate(evaluate(closed, cfg), [], model)


def test_tag_outputs(cohort):
    model = ToyRiskModel.fit(cohort(0), OUTCOMES, layer=Layer.ADMINISTRATIVE)
    preds = model.predict(cohort(0))
    out = tag_outputs(preds, AcceptanceModel(0.5, 0.2), seed=0)
    assert len(out) == 50
    assert sum(r.influence_tag.clinician_modified for r in out) == 10
    assert all(r.record_id.endswith('-AI') and r.influence_tag.model_version == 'risk-v0000' for r in out)
    assert out == tag_outputs(preds, AcceptanceModel(0.5, 0.2), seed=0)
    assert tag_outputs(preds, AcceptanceModel(0.0, 0.2), seed=0) == []
    with pytest.raises(ValidationError):
        AcceptanceModel(1.5)


def test_risk_model(cohort, record):
    model = ToyRiskModel.fit(cohort(0), OUTCOMES, layer=Layer.ADMINISTRATIVE)
    assert model.weights == {'SE11.69': 0.5, 'SE11.9': 0.0}
    assert model.prior == 0.25
    assert model.score(record(primary_code='SI10')) == 0.25
    assert bump_version('risk-v0009') == 'risk-v0010'
    assert version_number('risk-v0012') == 12 and version_number('baseline') == -1
    with pytest.raises(ValidationError):
        bump_version('baseline')


def test_risk_model_layer(cohort, record):
    # 50 extra SE11.9 records clinically coded SE11.69 carry the outcome, visible on the clinical layer only
    rows = [record(r.record_id, r.primary_code, co_codes=r.co_codes, clinical_code=r.primary_code) for r in cohort(0)]
    rows += [record(f'X-{i}', 'SE11.9', co_codes=['CX-NEPHRO'], clinical_code='SE11.69') for i in range(50)]
    admin = ToyRiskModel.fit(rows, OUTCOMES, layer=Layer.ADMINISTRATIVE)
    clinical = ToyRiskModel.fit(rows, OUTCOMES, layer='Clinical')
    assert admin.weights == {'SE11.69': 0.5, 'SE11.9': 0.5}
    assert clinical.weights == {'SE11.69': 0.75, 'SE11.9': 0.0}
    assert admin.score(rows[-1]) == 0.5 and clinical.score(rows[-1]) == 0.75
    assert clinical.to_dict()['layer'] == 'Clinical' and clinical.retrain(rows).layer is Layer.CLINICAL
    with pytest.raises(ValidationError, match='clinical layer not populated'):
        clinical.score(record('R-bare'))
    with pytest.raises(TypeError):
        ToyRiskModel.fit(rows, OUTCOMES)


def test_dashboard_and_sweep(tmp_path, cfg):
    s = stats_of(0.04, 0.08, 0.12)
    row = dashboard_row(s, evaluate(s, cfg))
    assert row == {'period': 'P3', 'cohort': 'c', 'ratio': 0.12, 'state': 'Warning'}
    assert save_dashboard(tmp_path / 'influence.csv', [row]).read_text().splitlines()[1] == 'P3,c,0.120000,Warning'
    df = sweep(s, [0.1, 0.15, 0.2], cfg)
    assert df['state'].tolist() == ['Open', 'Warning', 'Closed']


def test_plot_influence(tmp_path, cfg):
    rows = [dashboard_row(s, evaluate(s, cfg)) for s in (stats_of(0.04), stats_of(0.04, 0.08), stats_of(0.04, 0.08, 0.12))]
    assert plot_influence(save_dashboard(tmp_path / 'influence.csv', rows), cfg.breaker_threshold).exists()
