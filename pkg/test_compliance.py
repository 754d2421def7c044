# OntoGuard, GPL-3.0 license
"""
Regulatory adapters: condition language, first-match evaluation and most-restrictive-wins composition
"""

import itertools
from datetime import datetime, timezone

import numpy as np
import pytest

from compliance.adapter import adapter_from_dict, compose, evaluate, load_adapter, save_decision
from compliance.rules import (EPOCH, DataOperation, Deny, OpKind, Permit, PermitWithConditions, compile_predicate,
                              parse_context)
from conftest import ADAPTERS
from utils import ValidationError
from utils.general import json_load

WALKTHROUGH = {
    'model_card_present': True,
    'training_data_documented': True,
    'data_authorization': True,
    'oversight_percentile': 90,
    'purpose': 'risk-prediction'}


def fixed(i, verdict):
    # Adapter whose only rule returns `verdict` for every operation
    rule = {'id': 'default', 'when': {'always': True}, 'verdict': verdict, 'provision': f'p-{i}'}
    if verdict == 'PermitWithConditions':
        rule['conditions'] = [f'condition {i}']
    if verdict == 'Deny':
        rule['reason'] = f'reason {i}'
    return adapter_from_dict({'adapter_id': f'a{i}', 'jurisdiction': 'X', 'regulation_version': '1', 'rules': [rule]})


@pytest.fixture(scope='module')
def adapters():
    return [load_adapter(f) for f in ADAPTERS]


@pytest.mark.parametrize('kinds', list(itertools.product(('Permit', 'PermitWithConditions', 'Deny'), repeat=3)))
def test_most_restrictive_wins(kinds):
    d = compose([fixed(i, k) for i, k in enumerate(kinds)], DataOperation('Deploy'))
    assert len(d.audit) == 3
    assert [a.adapter_id for a in d.audit] == ['a0', 'a1', 'a2']
    if 'Deny' in kinds:
        assert d.verdict == Deny(f'reason {kinds.index("Deny")}')
        assert bool(d.notes) == (kinds.count('Deny') > 1)
    elif 'PermitWithConditions' in kinds:
        expected = tuple(f'condition {i}' for i, k in enumerate(kinds) if k == 'PermitWithConditions')
        assert d.verdict == PermitWithConditions(expected)
        assert bool(d.notes) == (len(expected) > 1)
    else:
        assert d.verdict == Permit() and d.notes == ()


def test_compose_order_independent():
    # Verdict kind and condition set ignore adapter order, and composing the halves agrees with the whole
    rng = np.random.default_rng(0)
    kinds = ('Permit', 'PermitWithConditions', 'Deny')
    op = DataOperation('Deploy')
    for _ in range(300):
        parts = [fixed(int(rng.integers(4)), kinds[rng.integers(3)]) for _ in range(int(rng.integers(1, 7)))]
        d = compose(parts, op)
        assert d.verdict.rank == max(evaluate(a, op)[0].rank for a in parts)
        conditions = set(getattr(d.verdict, 'conditions', ()))
        shuffled = compose([parts[j] for j in rng.permutation(len(parts))], op)
        assert shuffled.verdict.kind == d.verdict.kind
        assert set(getattr(shuffled.verdict, 'conditions', ())) == conditions
        assert sorted(a.provision for a in shuffled.audit) == sorted(a.provision for a in d.audit)
        if len(parts) > 1:
            k = int(rng.integers(1, len(parts)))
            left, right = compose(parts[:k], op), compose(parts[k:], op)
            assert d.verdict.rank == max(left.verdict.rank, right.verdict.rank)
            if d.verdict.kind == 'PermitWithConditions':
                halves = set(getattr(left.verdict, 'conditions', ())) | set(getattr(right.verdict, 'conditions', ()))
                assert halves == conditions


def test_compose_needs_adapters():
    with pytest.raises(ValidationError, match='at least one adapter'):
        compose([], DataOperation('Deploy'))


def test_walkthrough_deploy(tmp_path, adapters):
    op = DataOperation('Deploy', WALKTHROUGH, datetime(2025, 10, 1, tzinfo=timezone.utc))
    d = compose(adapters, op)
    assert isinstance(d.verdict, PermitWithConditions)
    assert d.verdict.conditions[0] == 'physician-in-the-loop for predictions above the 90th percentile'
    assert "intended purpose 'risk-prediction'" in d.verdict.conditions[1]
    assert len(d.verdict.conditions) == 2
    assert [a.adapter_id for a in d.audit] == ['ai-act-demo', 'mdr-demo', 'ehds-demo']
    assert {a.timestamp for a in d.audit} == {'2025-10-01T00:00:00+00:00'}
    assert d.audit[0].provision == 'human oversight (DEMO provision H-1)'
    assert 'conflicts between them are not resolved' in d.notes[0]
    saved = json_load(save_decision(tmp_path / 'compliance.json', d))
    assert saved['verdict'] == 'PermitWithConditions' and len(saved['audit']) == 3


def test_missing_model_card_denies(adapters):
    d = compose(adapters, DataOperation('Deploy', {**WALKTHROUGH, 'model_card_present': False}))
    assert d.verdict == Deny('transparency requirements not met: model card missing')
    assert 'rule transparency matched' in d.audit[0].reasoning


def test_multiple_denies_noted(adapters):
    d = compose(adapters, DataOperation('Train', {'training_data_documented': False}))
    assert d.verdict == Deny('data governance requirements not met: training data undocumented')
    assert d.notes and 'ehds-demo' in d.notes[0]


def test_export_and_ingest(adapters):
    d = compose(adapters, DataOperation('Export', {'data_authorization': True}))
    assert d.verdict == PermitWithConditions(('export only within a secure processing environment',))
    assert compose(adapters, DataOperation('Export', {'data_authorization': True, 'anonymised': True})).verdict == Permit()
    assert compose(adapters, DataOperation('Ingest')).verdict == Permit()


def test_first_match(adapters):
    verdict, audit = evaluate(adapters[0], DataOperation('Predict', {'oversight_percentile': 95}))
    assert verdict == PermitWithConditions(('physician-in-the-loop for predictions above the 95th percentile',))
    assert audit.timestamp == EPOCH.isoformat()


@pytest.mark.parametrize('cond, ctx, expected', [
    ({'always': True}, {}, True),
    ({'eq': ['a', 1]}, {'a': 1}, True),
    ({'eq': ['a', 1]}, {}, False),
    ({'ne': ['a', 1]}, {'a': 2}, True),
    ({'ne': ['a', 1]}, {}, False),
    ({'lt': ['a', 5]}, {'a': 4}, True),
    ({'lt': ['a', 5]}, {}, False),
    ({'ge': ['a', 5]}, {'a': 'high'}, False),
    ({'gt': ['a', 0]}, {'a': True}, False),
    ({'le': ['a', 5]}, {'a': 5}, True),
    ({'in': ['a', ['x', 'y']]}, {'a': 'y'}, True),
    ({'present': 'a'}, {'a': 0}, True),
    ({'absent': 'a'}, {'a': None}, True),
    ({'all': [{'present': 'a'}, {'gt': ['a', 1]}]}, {'a': 2}, True),
    ({'any': [{'present': 'b'}, {'gt': ['a', 1]}]}, {'a': 1}, False),
    ({'not': {'eq': ['a', True]}}, {}, True),])
def test_predicates(cond, ctx, expected):
    assert compile_predicate(cond)(ctx) is expected


@pytest.mark.parametrize('cond', [
    {'between': ['a', 1, 2]},
    {'eq': ['a', 1], 'ne': ['a', 2]},
    {'lt': ['a', 'b']},
    {'all': []},
    {'always': False},
    {'in': ['a', 'x']},
    ['eq', 'a', 1],])
def test_malformed_predicates(cond):
    with pytest.raises(ValidationError):
        compile_predicate(cond)


def test_adapter_needs_default_rule():
    bad = {'adapter_id': 'a', 'jurisdiction': 'X', 'regulation_version': '1',
           'rules': [{'when': {'present': 'a'}, 'verdict': 'Permit', 'provision': 'p'}]}
    with pytest.raises(ValidationError, match='unconditional default rule'):
        adapter_from_dict(bad)
    bad['rules'] = [{'when': {'always': True}, 'verdict': 'Deny', 'provision': 'p'}]
    with pytest.raises(ValidationError, match='Deny needs a reason'):
        adapter_from_dict(bad)
    with pytest.raises(ValidationError, match='missing key'):
        adapter_from_dict({'adapter_id': 'a'})


def test_operation_and_context():
    assert DataOperation('deploy').op_kind is OpKind.DEPLOY
    with pytest.raises(ValidationError, match='unknown operation'):
        DataOperation('Delete')
    with pytest.raises(ValidationError, match='expected a string or number'):
        DataOperation('Deploy', {'a': [1]})
    assert parse_context(['anonymised=true', 'note=']) == {'anonymised': True, 'note': ''}
    with pytest.raises(ValidationError, match='key=value'):
        parse_context(['anonymised'])
