# OntoGuard, GPL-3.0 license
"""
Code system, records and pipeline config
"""

import json
from datetime import date, datetime

import pytest

from conftest import CODE_SYSTEM, ROOT
from core.codes import TransitionTable, code_system_from_dict, load_code_system, serialize_code_system
from core.config import PipelineConfig, load_config, weighted_mean
from core.records import (AGE_BANDS, Layer, Window, code_of, load_records, make_record, record_from_dict,
                          record_to_dict, save_records)
from utils import ValidationError


def tiny_system(**over):
    d = {
        'system_id': 'T',
        'versions': [{'label': 'v1', 'release_date': '2024-01-01', 'validated': True},
                     {'label': 'v2', 'release_date': '2025-01-01', 'validated': True}],
        'codes': {
            'v1': [{'code': 'A', 'clinical_group': 'g', 'billing_category': 'b'},
                   {'code': 'B', 'clinical_group': 'g', 'billing_category': 'b'}],
            'v2': [{'code': 'A', 'clinical_group': 'g', 'billing_category': 'b'},
                   {'code': 'B1', 'clinical_group': 'g', 'billing_category': 'b'},
                   {'code': 'B2', 'clinical_group': 'g', 'billing_category': 'b'}]},
        'transitions': [{'from': 'v1', 'to': 'v2',
                         'mappings': [{'from_code': 'A', 'to_code': 'A'}, {'from_code': 'B', 'to_code': 'B1'},
                                      {'from_code': 'B', 'to_code': 'B2'}], 'unmappable': []}]}
    d.update(over)
    return d


def test_bundled_system(system):
    assert system.labels == ('2024', '2025')
    assert system.latest == '2025'
    assert system.version('2025').release_date == date(2025, 1, 1)
    assert system.table('2024', '2025').image('SR73.0X') == 'SR73.09'
    assert system.table('2024', '2025').image('SZ99.X') is None  # unmappable
    assert system.changed_codes('2025') == frozenset({'SR73.09'})
    assert system.category_members('DM-SPECIFIC', '2025') == ['SE11.65', 'SE11.69', 'SE13.9']
    assert 'LB-HBA1C-H' in system.co_codes('2025') and 'LB-HBA1C-H' not in system.primary_codes('2025')


def test_canonical_round_trip(system):
    assert serialize_code_system(system) == CODE_SYSTEM.read_text()


def test_unknown_version(system):
    with pytest.raises(ValidationError, match='unknown version'):
        system.version('2026')


def test_one_to_many_is_ambiguous():
    s = code_system_from_dict(tiny_system())
    t = s.table('v1', 'v2')
    assert t.image('A') == 'A'
    assert t.image('B') is None


def test_chain_composition():
    t1 = TransitionTable('v1', 'v2', (('A', 'A2'), ('B', 'B2')), ('C',))
    t2 = TransitionTable('v2', 'v3', (('A2', 'A3'),), ('B2',))
    t = t1.compose(t2)
    assert t.mappings == (('A', 'A3'),)
    assert set(t.unmappable) == {'B', 'C'}
    with pytest.raises(ValidationError):
        t2.compose(t1)


@pytest.mark.parametrize('over, match', [
    ({'versions': [{'label': 'v1', 'release_date': '2025-01-01'}, {'label': 'v2', 'release_date': '2024-01-01'}]},
     'strictly ordered'),
    ({'transitions': [{'from': 'v1', 'to': 'v9', 'mappings': []}]}, 'unknown version'),
    ({'transitions': [{'from': 'v1', 'to': 'v2', 'mappings': [{'from_code': 'Z', 'to_code': 'A'}]}]}, 'unknown code'),
    ({'taxonomies': {'clinical_groups': ['x'], 'billing_categories': ['b']}}, 'not declared'),])
def test_malformed_system(over, match):
    with pytest.raises(ValidationError, match=match):
        code_system_from_dict(tiny_system(**over))


def test_load_malformed_json(tmp_path):
    f = tmp_path / 'bad.json'
    f.write_text('{"system_id": ')
    with pytest.raises(ValidationError, match='JSON parse failure'):
        load_code_system(f)


def test_record_validation(record):
    r = record(co_codes=['RX-MET', 'LB-HBA1C-N', 'RX-MET'])
    assert r.co_codes == ('LB-HBA1C-N', 'RX-MET')  # set semantics, sorted
    with pytest.raises(ValidationError, match='age band'):
        record(age='20-29')
    with pytest.raises(ValidationError, match='sex'):
        record(sex='Q')


def test_record_immutable(record):
    r = record()
    with pytest.raises(AttributeError):
        r.primary_code = 'SE11.65'
    r2 = r.replace(clinical_code='SE11.65')
    assert r.clinical_code is None and r2.clinical_code == 'SE11.65'


def test_code_of_layers(record):
    r = record(primary_code='SE11.9')
    assert code_of(r, Layer.ADMINISTRATIVE) == 'SE11.9'
    with pytest.raises(ValidationError, match='clinical layer not populated'):
        code_of(r, Layer.CLINICAL)
    assert code_of(r.replace(clinical_code='SE11.65'), 'clinical') == 'SE11.65'


def test_records_file(tmp_path, record):
    rs = [record(f'R-{i}', influence_tag={'model_version': 'risk-v0000', 'model_confidence': 0.7}) for i in range(3)]
    f = save_records(tmp_path / 'r.jsonl', rs)
    assert load_records(f) == rs
    assert record_from_dict(record_to_dict(rs[0])) == rs[0]
    with pytest.raises(ValidationError, match='malformed record'):
        record_from_dict({'record_id': 'x', 'unexpected': 1})


def test_window():
    q = Window.quarter(2025, 1)
    assert (q.start, q.end) == (datetime(2025, 1, 1), datetime(2025, 4, 1))
    assert q.next_quarter() == Window.quarter(2025, 2)
    assert Window.quarter(2025, 4).next_quarter() == Window.quarter(2026, 1)
    assert q.contains(datetime(2025, 3, 31, 23, 59)) and not q.contains(q.end)
    with pytest.raises(ValidationError):
        Window(q.end, q.start)


def test_config_defaults_and_file(tmp_path):
    cfg = load_config()
    assert cfg == PipelineConfig()
    assert load_config(ROOT / 'data' / 'hyps' / 'pipeline.yaml') == cfg
    f = tmp_path / 'cfg.json'
    f.write_text(json.dumps({'drift_threshold': 0.04, 'min_support': 200}))
    c = load_config(f)
    assert (c.drift_threshold, c.min_support, c.breaker_threshold) == (0.04, 200, 0.15)


@pytest.mark.parametrize('kw, key', [
    ({'breaker_threshold': 1.5}, 'breaker_threshold'),
    ({'drift_threshold': 0}, 'drift_threshold'),
    ({'fidelity_weights': [0.5, 0.5, 0.5]}, 'fidelity_weights'),
    ({'min_support': 0}, 'min_support'),
    ({'breaker_trend_periods': 1}, 'breaker_trend_periods'),
    ({'no_such_key': 1}, 'unknown config key'),])
def test_config_validation(kw, key):
    with pytest.raises(ValidationError, match=key):
        PipelineConfig.from_dict(kw)


def test_config_update():
    c = PipelineConfig().update(breaker_threshold=0.2)
    assert c.breaker_threshold == 0.2 and c.drift_threshold == PipelineConfig().drift_threshold


def test_weighted_mean():
    assert weighted_mean((1.0, 0.0), (3, 1)) == 0.75
    assert len(AGE_BANDS) == 6
