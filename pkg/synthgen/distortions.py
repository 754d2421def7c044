# OntoGuard, GPL-3.0 license
"""
Distortion specification and ground truth for synthetic encounter batches
"""

from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Dict, FrozenSet, Mapping, Optional, Tuple

from core.records import AGE_BANDS, parse_time
from utils import ValidationError
from utils.general import check_probability, check_range, jsonl_load, jsonl_save


class DistortionLabel(Enum):
    CATCH_ALL = 'CatchAll'
    BILLING_INFLATION = 'BillingInflation'
    VERSION_LAG = 'VersionLag'
    AI_INFLUENCED = 'AIInfluenced'
    OUTBREAK = 'Outbreak'
    NONE = 'None'


@dataclass(frozen=True)
class CatchAll:
    institution_id: str
    target_code: str
    excess_rate: float
    sources: Tuple[str, ...] = ()  # empty: clinical-group siblings of the target

    def __post_init__(self):
        check_probability('catch_all.excess_rate', self.excess_rate)


@dataclass(frozen=True)
class BillingInflation:
    billing_category: str
    start_time: datetime
    rate_multiplier: float
    donors: Tuple[str, ...] = ()  # empty: clinical-group siblings outside the category
    institutions: Tuple[str, ...] = ()  # empty: every institution

    def __post_init__(self):
        check_range('billing_inflation.rate_multiplier', self.rate_multiplier, 0.0, None, lo_open=True)


@dataclass(frozen=True)
class AIInfluence:
    model_version: str = 'risk-v0000'
    schedule: Tuple[float, ...] = ()  # tagged fraction per quarter, last value repeats
    modified_fraction: float = 0.2

    def __post_init__(self):
        for f in self.schedule:
            check_probability('ai_influence.schedule', f)
        check_probability('ai_influence.modified_fraction', self.modified_fraction)

    def fraction(self, quarter):
        if not self.schedule:
            return 0.0
        return float(self.schedule[min(quarter, len(self.schedule) - 1)])


@dataclass(frozen=True)
class Outbreak:
    code: str
    start_time: datetime
    prevalence_multiplier: float
    age_bands: Tuple[str, ...] = ()  # empty: all ages
    group_spill: float = 0.0  # fraction of the multiplier's excess applied to clinical-group siblings

    def __post_init__(self):
        check_range('outbreak.prevalence_multiplier', self.prevalence_multiplier, 0.0, None, lo_open=True)
        check_probability('outbreak.group_spill', self.group_spill)
        for a in self.age_bands:
            if a not in AGE_BANDS:
                raise ValidationError(f'outbreak.age_bands: unknown age band {a!r}')

    def multiplier(self, code, siblings, age_band, t):
        if t < self.start_time or (self.age_bands and age_band not in self.age_bands):
            return 1.0
        if code == self.code:
            return self.prevalence_multiplier
        if code in siblings:
            return 1.0 + self.group_spill * (self.prevalence_multiplier - 1.0)
        return 1.0


@dataclass(frozen=True)
class DistortionSpec:
    institutions: Mapping[str, float] = field(default_factory=lambda: {'INST-01': 1.0})
    catch_all: Tuple[CatchAll, ...] = ()
    billing_inflation: Tuple[BillingInflation, ...] = ()
    version_mix: Mapping[str, str] = field(default_factory=dict)
    ai_influence: AIInfluence = AIInfluence()
    outbreak: Optional[Outbreak] = None
    exact_counts: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.institutions:
            raise ValidationError('distortions.institutions: at least one institution required')
        for k, v in self.institutions.items():
            check_range(f'distortions.institutions.{k}', v, 0.0, None, lo_open=True)
        for k, v in self.exact_counts.items():
            if isinstance(v, bool) or not isinstance(v, int) or v < 0:
                raise ValidationError(f'distortions.exact_counts.{k}={v!r}: expected a non-negative integer')

    @classmethod
    def from_dict(cls, d):
        # Parse the `distortions:` section of a scenario file
        d = dict(d or {})
        known = {'institutions', 'catch_all', 'billing_inflation', 'version_mix', 'ai_influence', 'outbreak',
                 'exact_counts'}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ValidationError(f'unknown distortions key(s) {unknown}')

        def build(kind, x):
            try:
                return kind(**x)
            except TypeError as e:
                raise ValidationError(f'distortions.{kind.__name__}: {e}') from e

        catch_all = tuple(build(CatchAll, {**x, 'sources': tuple(x.get('sources', ()))}) for x in d.get('catch_all', []))
        billing = tuple(
            build(BillingInflation, {
                **x, 'start_time': parse_time(x['start_time']),
                'donors': tuple(x.get('donors', ())),
                'institutions': tuple(x.get('institutions', ()))}) for x in d.get('billing_inflation', []))
        ai = d.get('ai_influence') or {}
        ai = build(AIInfluence, {**ai, 'schedule': tuple(float(f) for f in ai.get('schedule', ()))})
        ob = d.get('outbreak')
        if ob:
            ob = build(Outbreak, {**ob, 'start_time': parse_time(ob['start_time']), 'age_bands': tuple(ob.get('age_bands', ()))})
        kw = dict(catch_all=catch_all, billing_inflation=billing, ai_influence=ai, outbreak=ob or None,
                  version_mix={str(k): str(v) for k, v in (d.get('version_mix') or {}).items()},
                  exact_counts=dict(d.get('exact_counts') or {}))
        if d.get('institutions'):
            kw['institutions'] = {str(k): float(v) for k, v in d['institutions'].items()}
        return cls(**kw)

    def validate(self, system):
        # Every referenced code, category, version and institution must exist
        latest = system.latest
        codes = system.codes_in(latest)
        primary = set(system.primary_codes(latest))

        def known(code, where):
            if code not in codes:
                raise ValidationError(f'{where}: unknown code {code!r} in {system.system_id} {latest}')

        def institution(i, where):
            if i not in self.institutions:
                raise ValidationError(f'{where}: unknown institution {i!r}')

        for c in self.catch_all:
            institution(c.institution_id, 'catch_all')
            known(c.target_code, 'catch_all')
            for s in c.sources:
                known(s, 'catch_all.sources')
        for b in self.billing_inflation:
            if not system.category_members(b.billing_category, latest):
                raise ValidationError(f'billing_inflation: unknown billing category {b.billing_category!r}')
            for s in b.donors:
                known(s, 'billing_inflation.donors')
            for i in b.institutions:
                institution(i, 'billing_inflation.institutions')
        for i, v in self.version_mix.items():
            institution(i, 'version_mix')
            system.version(v)
        if self.outbreak:
            known(self.outbreak.code, 'outbreak')
        for c in self.exact_counts:
            known(c, 'exact_counts')
            if c not in primary:
                raise ValidationError(f'exact_counts: {c!r} is not a primary code')
        if system.profiles is None or system.population is None:
            raise ValidationError(f'{system.system_id}: code system carries no population/profiles sections')
        return self


@dataclass(frozen=True)
class TruthEntry:
    true_clinical_code: str
    distortion_labels: FrozenSet[DistortionLabel]


class GroundTruth(Dict[str, TruthEntry]):
    # record_id -> TruthEntry, in generation order

    def labeled(self, label):
        return {k for k, v in self.items() if label in v.distortion_labels}

    def to_rows(self):
        return [{
            'record_id': k,
            'true_clinical_code': v.true_clinical_code,
            'distortion_labels': sorted(x.value for x in v.distortion_labels)} for k, v in self.items()]

    @classmethod
    def from_rows(cls, rows):
        gt = cls()
        for r in rows:
            gt[r['record_id']] = TruthEntry(r['true_clinical_code'],
                                            frozenset(DistortionLabel(x) for x in r['distortion_labels']))
        return gt

    def save(self, path):
        jsonl_save(path, self.to_rows())
        return path

    @classmethod
    def load(cls, path):
        return cls.from_rows(jsonl_load(path))
