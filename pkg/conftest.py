# OntoGuard, GPL-3.0 license
"""
Shared pytest fixtures: bundled code system, hand-built records and small seeded batches
"""

from datetime import datetime
from pathlib import Path

import pytest

from checkpoint.reference import build_reference_model
from core.codes import load_code_system
from core.config import PipelineConfig
from core.records import Layer, make_record
from synthgen.distortions import DistortionSpec
from synthgen.generator import generate_batch

ROOT = Path(__file__).resolve().parent
CODE_SYSTEM = ROOT / 'data' / 'codes' / 'syn-icd.json'
ADAPTERS = [ROOT / 'data' / 'adapters' / f'{a}-demo.json' for a in ('ai-act', 'mdr', 'ehds')]


@pytest.fixture(scope='session')
def system():
    return load_code_system(CODE_SYSTEM)


@pytest.fixture
def cfg():
    return PipelineConfig()


@pytest.fixture
def record():
    # Record factory with defaults for every field the test does not care about
    def make(record_id='R-000001', primary_code='SE11.9', co_codes=(), age='60-69', sex='F', institution='INST-01',
             time=datetime(2025, 2, 1, 12), version='2025', **kw):
        return make_record(record_id, age, sex, institution, time, primary_code, co_codes, version, **kw)

    return make


@pytest.fixture(scope='session')
def clean_batch(system):
    # 5,000 undistorted encounters across three institutions
    spec = DistortionSpec(institutions={'INST-01': 0.4, 'INST-02': 0.3, 'INST-03': 0.3})
    return generate_batch(system, spec, 5000, seed=0)


@pytest.fixture(scope='session')
def reference(system, clean_batch):
    # Administrative-layer reference model over the clean batch
    return build_reference_model(clean_batch[0], layer=Layer.ADMINISTRATIVE, vocabulary=system.primary_codes('2025'),
                                 co_vocabulary=system.co_codes('2025'))
