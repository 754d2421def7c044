# OntoGuard, GPL-3.0 license
"""
Brute-force oracles against hand-counted files
"""

import pytest

from conftest import CODE_SYSTEM
from core.config import PipelineConfig
from core.records import save_records
from utils import ValidationError
from utils.general import jsonl_save
from utils.oracles import (binomial_interval, check, count_prevalence, coverage_oracle, jsd_oracle,
                           layer_accuracy_oracle, partition_oracle)
from version_gate.gate import gate_batch, save_outcome


def test_check():
    assert check('x', 3, 3).passed
    assert not check('x', 3, 4).passed
    assert check('x', 0.5, 0.5 + 1e-10, 1e-9).passed
    r = check('x', 0.5, 0.6, 0.05)
    assert r.to_dict() == {'oracle_name': 'x', 'expected': 0.5, 'observed': 0.6, 'tolerance': 0.05, 'pass': False}


def test_jsd_oracle():
    assert jsd_oracle([1, 0], [0, 1]) == pytest.approx(1.0)
    assert jsd_oracle([0.25, 0.75], [0.25, 0.75]) == 0.0
    # p = (1, 0), q = (1/2, 1/2): m = (3/4, 1/4)
    expected = 0.5 * (1.0 * 0.4150374992788438) + 0.5 * (0.5 * -0.5849625007211562 + 0.5 * 1.0)
    assert jsd_oracle([1, 0], [0.5, 0.5]) == pytest.approx(expected)
    with pytest.raises(ValidationError, match='length mismatch'):
        jsd_oracle([1], [0.5, 0.5])
    with pytest.raises(ValidationError, match='not a normalized distribution'):
        jsd_oracle([0.5, 0.6], [0.5, 0.5])


def test_partition_oracle(tmp_path, system, record):
    rows = [record('R-1', 'SR73.0X', version='2024'), record('R-2', 'SZ99.X', version='2024'), record('R-3')]
    src = save_records(tmp_path / 'in.jsonl', rows)
    out = save_outcome(tmp_path / 'gate', gate_batch(rows, system, '2025', PipelineConfig()))
    assert partition_oracle(src, out)
    save_records(tmp_path / 'in.jsonl', rows + [record('R-4')])
    assert not partition_oracle(src, out)


def test_binomial_interval():
    lo, hi = binomial_interval(0.5, 100, z=2.0)
    assert (lo, hi) == pytest.approx((0.4, 0.6))
    assert binomial_interval(0.001, 10) == (0.0, pytest.approx(0.001 + 3 * (0.001 * 0.999 / 10) ** 0.5))
    assert binomial_interval(0.5, 0) == (0.0, 1.0)


def test_count_prevalence(tmp_path, record):
    f = save_records(tmp_path / 'r.jsonl', [record(f'R-{i}', 'SE13.9' if i < 3 else 'SE11.9') for i in range(12)])
    assert count_prevalence(f, 'SE13.9') == (3, 0.25)
    assert count_prevalence(f, 'SQ87.1') == (0, 0.0)
    empty = tmp_path / 'empty.jsonl'
    empty.write_text('')
    assert count_prevalence(empty, 'SE13.9') == (0, 0.0)


def test_layer_accuracy_oracle(tmp_path):
    records = tmp_path / 'r.jsonl'
    truth = tmp_path / 't.jsonl'
    jsonl_save(records, [{'record_id': 'R-1', 'primary_code': 'SE11.9', 'clinical_code': 'SE11.65'},
                         {'record_id': 'R-2', 'primary_code': 'SE11.9', 'clinical_code': 'SE11.9'},
                         {'record_id': 'R-3', 'primary_code': 'SI10', 'clinical_code': 'SI10'},
                         {'record_id': 'R-4', 'primary_code': 'SE11.9', 'clinical_code': 'SE11.69'}])
    jsonl_save(truth, [{'record_id': f'R-{i}', 'true_clinical_code': c}
                       for i, c in enumerate(('SE11.65', 'SE11.9', 'SI10', 'SE11.65'), 1)])
    assert layer_accuracy_oracle(records, truth, 'Administrative') == 0.5
    assert layer_accuracy_oracle(records, truth, 'Clinical') == 0.75


@pytest.mark.parametrize('src, dst, codes, expected', [
    ('2024', '2025', {'SE11.9', 'SZ99.X'}, 0.5),
    ('2024', '2025', {'SR73.0X', 'SE11.65'}, 1.0),
    ('2024', '2024', {'SZ99.X'}, 1.0),
    ('2025', '2024', {'SE11.9'}, 0.0),
    ('2024', '2025', set(), 1.0),])
def test_coverage_oracle(src, dst, codes, expected):
    assert coverage_oracle(CODE_SYSTEM, src, dst, codes) == expected
