# OntoGuard, GPL-3.0 license
"""
Command-line surface: subcommands, output files and exit status (0 ok, 1 validation error, 2 stage error)
"""

import pytest
import yaml

from cli import main
from core.records import save_records
from utils.general import json_load, jsonl_load


@pytest.fixture
def batch_file(tmp_path, clean_batch):
    return save_records(tmp_path / 'batch.jsonl', clean_batch[0][:2000])


@pytest.fixture
def lagged_file(tmp_path, record):
    rows = [record('R-1', 'SR73.0X', version='2024'), record('R-2', 'SE11.9', version='2024'),
            record('R-3', 'SZ99.X', version='2024'), record('R-4', 'SE11.65')]
    return save_records(tmp_path / 'lagged.jsonl', rows)


@pytest.mark.parametrize('argv', [
    [],
    ['gate'],
    ['gate', '--input', 'x.jsonl', '--frobnicate'],
    ['teleport'],
    ['oracle', 'run', 'entropy'],])
def test_usage_errors_exit_1(argv):
    assert main(argv) == 1


def test_gate(tmp_path, lagged_file, capsys):
    out = tmp_path / 'gate'
    assert main(['gate', '--input', str(lagged_file), '--target-version', '2025', '--save-dir', str(out)]) == 0
    assert 'accepted 1, reconciled 2, quarantined 1' in capsys.readouterr().out
    assert [r['primary_code'] for r in jsonl_load(out / 'records.jsonl')] == ['SE11.65', 'SR73.09', 'SE11.9']
    assert main(['oracle', 'run', 'partition', '--input', str(lagged_file), '--outcome', str(out), '--save-dir',
                 str(tmp_path / 'oracle')]) == 0
    assert json_load(tmp_path / 'oracle' / 'partition.json')['pass']


def test_gate_unknown_version_exit_1(tmp_path, lagged_file):
    assert main(['gate', '--input', str(lagged_file), '--target-version', '2026', '--save-dir', str(tmp_path)]) == 1


def test_missing_input_exit_1(tmp_path):
    assert main(['gate', '--input', str(tmp_path / 'absent.jsonl'), '--save-dir', str(tmp_path)]) == 1


def test_synth_generate(tmp_path):
    out = tmp_path / 'synth'
    assert main(['synth', 'generate', '--quarters', '2', '--n', '100', '--seed', '3', '--save-dir', str(out)]) == 0
    assert len(jsonl_load(out / 'q1.jsonl')) == len(jsonl_load(out / 'q2.truth.jsonl')) == 100


def test_fidelity_and_infer(tmp_path, batch_file, capsys):
    assert main(['fidelity-report', '--input', str(batch_file), '--save-dir', str(tmp_path / 'f')]) == 0
    assert 'layer: Administrative' in capsys.readouterr().out
    assert (tmp_path / 'f' / 'fidelity.csv').read_text().startswith('# fidelity score is an ordinal index')
    assert main(['infer-clinical', '--input', str(tmp_path / 'f' / 'annotated.jsonl'), '--save-dir',
                 str(tmp_path / 'd')]) == 0
    assert 'disagreement rate' in capsys.readouterr().out
    assert all(r['clinical_code'] for r in jsonl_load(tmp_path / 'd' / 'records.jsonl'))


def test_drift_scan_identical(tmp_path, batch_file, capsys):
    assert main(['drift-scan', '--baseline', str(batch_file), '--current', str(batch_file), '--save-dir',
                 str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert 'layer: Administrative' in out and '0 alert(s)' in out


def test_dormancy(tmp_path, record, capsys):
    rows = [record(f'R-{i}', 'SE13.9' if i == 0 else 'SE11.9') for i in range(1000)]
    f = save_records(tmp_path / 'q.jsonl', rows)
    sig = tmp_path / 'sig.yaml'
    sig.write_text(yaml.safe_dump({'significance': {'SE13.9': 'rare subtype'},
                                   'conditions': {'SE13.9': [{'domain_transfer': 'endocrinology'}]}}))
    store = tmp_path / 'store.json'
    assert main(['dormancy', 'classify', '--input', str(f), '--significance', str(sig), '--store', str(store),
                 '--save-dir', str(tmp_path)]) == 0
    assert 'SE13.9 dormant, count 1' in capsys.readouterr().out
    assert main(['dormancy', 'activate', '--input', str(f), '--store', str(store), '--event',
                 'domain_transfer=endocrinology', '--save-dir', str(tmp_path)]) == 0
    assert 'SE13.9 activated' in capsys.readouterr().out


def test_breaker(tmp_path, record, capsys):
    tag = {'model_version': 'risk-v0000', 'model_confidence': 0.7}
    files = []
    for q, k in enumerate((4, 8, 12), 1):
        rows = [record(f'R-{q}-{i}', influence_tag=tag if i < k else None) for i in range(100)]
        files.append(str(save_records(tmp_path / f'q{q}.jsonl', rows)))
    assert main(['breaker', 'check', '--input', *files, '--save-dir', str(tmp_path)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert [line.split()[3].rstrip(':') for line in lines] == ['Closed', 'Closed', 'Warning']
    assert main(['breaker', 'check', '--input', *files, '--threshold', '0.1', '--save-dir', str(tmp_path)]) == 0
    assert capsys.readouterr().out.splitlines()[-1].split()[3] == 'Open:'
    assert main(['breaker', 'sweep', '--input', *files, '--thresholds', '0.1', '0.2', '--save-dir', str(tmp_path)]) == 0
    assert (tmp_path / 'sweep.csv').exists()


def test_comply_check(tmp_path, capsys):
    argv = ['comply-check', '--op', 'deploy', '--context', 'model_card_present=true', 'training_data_documented=true',
            'data_authorization=true', 'oversight_percentile=90', 'purpose=risk-prediction', '--save-dir',
            str(tmp_path)]
    assert main(argv) == 0
    out = capsys.readouterr().out
    assert out.startswith('PermitWithConditions')
    assert 'physician-in-the-loop for predictions above the 90th percentile' in out
    assert json_load(tmp_path / 'decision.json')['audit'][0]['timestamp'] == '1970-01-01T00:00:00'
    assert main(['comply-check', '--op', 'deploy', '--save-dir', str(tmp_path)]) == 0
    assert capsys.readouterr().out.startswith('Deny')
    assert main(['comply-check', '--op', 'delete', '--save-dir', str(tmp_path)]) == 1


def test_oracles(tmp_path, lagged_file):
    save = ['--save-dir', str(tmp_path)]
    assert main(['oracle', 'run', 'jsd', '--p', '1', '0', '--q', '0', '1', '--expected', '1.0', *save]) == 0
    assert main(['oracle', 'run', 'jsd', '--p', '0.5', '0.5', '--q', '0.5', '0.5', '--expected', '0.5', *save]) == 2
    assert main(['oracle', 'run', 'jsd', '--p', '1', '0', *save]) == 1  # missing --q
    assert main(['oracle', 'run', 'prevalence', '--input', str(lagged_file), '--code', 'SE11.65', '--expected-count',
                 '1', *save]) == 0
    assert main(['oracle', 'run', 'coverage', '--input', str(lagged_file), '--from-version', '2024', '--to-version',
                 '2025', '--expected', '0.75', *save]) == 0


def test_identical_runs_identical_outputs(tmp_path):
    # Same inputs and seed, byte-identical outputs
    for run in 'a', 'b':
        d = tmp_path / run
        assert main(['synth', 'generate', '--scenario', 'diabetes-walkthrough', '--n', '500', '--seed', '42',
                     '--save-dir', str(d / 'synth')]) == 0
        assert main(['gate', '--input', str(d / 'synth' / 'q1.jsonl'), '--save-dir', str(d / 'gate')]) == 0
        assert main(['fidelity-report', '--input', str(d / 'gate' / 'records.jsonl'), '--save-dir',
                     str(d / 'fidelity')]) == 0
        assert main(['drift-scan', '--baseline', str(d / 'synth' / 'q1.jsonl'), '--current',
                     str(d / 'synth' / 'q2.jsonl'), '--save-dir', str(d / 'sentinel')]) == 0
    files = sorted(p.relative_to(tmp_path / 'a') for p in (tmp_path / 'a').rglob('*') if p.is_file())
    assert len(files) >= 10
    for f in files:
        assert (tmp_path / 'a' / f).read_bytes() == (tmp_path / 'b' / f).read_bytes(), f


def test_malformed_truth_exit_2(tmp_path, batch_file):
    truth = tmp_path / 'truth.jsonl'
    truth.write_text('{"record_id": "R-1"}\n')
    assert main(['fidelity-report', '--input', str(batch_file), '--save-dir', str(tmp_path / 'f')]) == 0
    assert main(['infer-clinical', '--input', str(tmp_path / 'f' / 'annotated.jsonl'), '--truth', str(truth),
                 '--save-dir', str(tmp_path / 'd')]) == 2
