# OntoGuard, GPL-3.0 license
"""
Coded encounter records, annotation slots, layer selector and time windows
"""

import dataclasses
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import Optional, Tuple

from utils import ValidationError
from utils.general import jsonl_load, jsonl_save

AGE_BANDS = ('0-39', '40-49', '50-59', '60-69', '70-79', '80+')
SEXES = ('F', 'M', 'X')
STRATA = tuple((a, s) for a in AGE_BANDS for s in SEXES)  # demographic profile = (age_band, sex)


class Layer(Enum):
    ADMINISTRATIVE = 'Administrative'
    CLINICAL = 'Clinical'

    @classmethod
    def parse(cls, s):
        if isinstance(s, cls):
            return s
        for m in cls:
            if str(s).lower() in (m.value.lower(), m.name.lower()):
                return m
        raise ValidationError(f'unknown layer {s!r}, choose Administrative or Clinical')


@dataclass(frozen=True)
class Window:
    # Half-open interval [start, end)
    start: datetime
    end: datetime

    def __post_init__(self):
        if not self.start < self.end:
            raise ValidationError(f'window start {self.start} must precede end {self.end}')

    @classmethod
    def quarter(cls, year, q):
        # Window.quarter(2025, 1) -> [2025-01-01, 2025-04-01)
        year, q = year + (q - 1) // 4, (q - 1) % 4 + 1
        end = datetime(year + 1, 1, 1) if q == 4 else datetime(year, 3 * q + 1, 1)
        return cls(datetime(year, 3 * q - 2, 1), end)

    @classmethod
    def from_dict(cls, d):
        return cls(parse_time(d['start']), parse_time(d['end']))

    def to_dict(self):
        return {'start': self.start.isoformat(), 'end': self.end.isoformat()}

    def next_quarter(self):
        return Window.quarter(self.start.year, (self.start.month - 1) // 3 + 2)

    def contains(self, t):
        return self.start <= t < self.end

    @property
    def seconds(self):
        return (self.end - self.start).total_seconds()


def parse_time(s):
    if isinstance(s, datetime):
        return s
    try:
        return datetime.fromisoformat(str(s))
    except ValueError:
        raise ValidationError(f'invalid timestamp {s!r}') from None


@dataclass(frozen=True)
class InfluenceTag:
    model_version: str
    model_confidence: float
    clinician_modified: bool = False

    def __post_init__(self):
        if not self.model_version:
            raise ValidationError('influence tag: model_version must be non-empty')
        if not 0.0 <= self.model_confidence <= 1.0:
            raise ValidationError(f'influence tag: model_confidence={self.model_confidence} out of range [0, 1]')


@dataclass(frozen=True)
class FidelityAnnotation:
    # Ordinal coding-fidelity index, not a calibrated probability
    score: float
    prevalence_subscore: float
    cooccurrence_subscore: float
    institutional_subscore: float
    rationale: str = ''

    def __post_init__(self):
        for k in 'score', 'prevalence_subscore', 'cooccurrence_subscore', 'institutional_subscore':
            v = getattr(self, k)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f'fidelity {k}={v} out of range [0, 1]')


@dataclass(frozen=True)
class CodedRecord:
    record_id: str
    patient_age_band: str
    patient_sex: str
    institution_id: str
    encounter_time: datetime
    primary_code: str
    co_codes: Tuple[str, ...]
    version_tag: str
    influence_tag: Optional[InfluenceTag] = None
    fidelity: Optional[FidelityAnnotation] = None
    clinical_code: Optional[str] = None

    def __post_init__(self):
        if not self.record_id:
            raise ValidationError('record_id must be non-empty')
        if self.patient_age_band not in AGE_BANDS:
            raise ValidationError(f'{self.record_id}: unknown age band {self.patient_age_band!r}')
        if self.patient_sex not in SEXES:
            raise ValidationError(f'{self.record_id}: unknown sex {self.patient_sex!r}')
        if not self.primary_code or not self.version_tag or not self.institution_id:
            raise ValidationError(f'{self.record_id}: primary_code, version_tag and institution_id are required')

    def replace(self, **changes):
        return make_record(**{**self.to_fields(), **changes})

    def to_fields(self):
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}


def make_record(record_id, patient_age_band, patient_sex, institution_id, encounter_time, primary_code, co_codes=(),
                version_tag='', influence_tag=None, fidelity=None, clinical_code=None):
    # Single constructor path for every CodedRecord in the repo
    if isinstance(influence_tag, dict):
        influence_tag = InfluenceTag(**influence_tag)
    if isinstance(fidelity, dict):
        fidelity = FidelityAnnotation(**fidelity)
    return CodedRecord(record_id=str(record_id),
                       patient_age_band=patient_age_band,
                       patient_sex=patient_sex,
                       institution_id=str(institution_id),
                       encounter_time=parse_time(encounter_time),
                       primary_code=primary_code,
                       co_codes=tuple(sorted(set(co_codes))),
                       version_tag=str(version_tag),
                       influence_tag=influence_tag,
                       fidelity=fidelity,
                       clinical_code=clinical_code)


def code_of(record, layer):
    # Code on the requested layer; the clinical layer must have been populated
    if Layer.parse(layer) is Layer.ADMINISTRATIVE:
        return record.primary_code
    if record.clinical_code is None:
        raise ValidationError(f'{record.record_id}: clinical layer not populated')
    return record.clinical_code


def record_to_dict(r):
    return {
        'record_id': r.record_id,
        'patient_age_band': r.patient_age_band,
        'patient_sex': r.patient_sex,
        'institution_id': r.institution_id,
        'encounter_time': r.encounter_time.isoformat(),
        'primary_code': r.primary_code,
        'co_codes': list(r.co_codes),
        'version_tag': r.version_tag,
        'influence_tag': dataclasses.asdict(r.influence_tag) if r.influence_tag else None,
        'fidelity': dataclasses.asdict(r.fidelity) if r.fidelity else None,
        'clinical_code': r.clinical_code}


def record_from_dict(d):
    try:
        return make_record(**d)
    except TypeError as e:
        raise ValidationError(f'malformed record {d.get("record_id", "?")}: {e}') from e


def save_records(path, records):
    jsonl_save(path, (record_to_dict(r) for r in records))
    return path


def load_records(path):
    return [record_from_dict(d) for d in jsonl_load(path)]
