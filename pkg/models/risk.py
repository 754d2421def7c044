# OntoGuard, GPL-3.0 license
"""
Toy per-code risk model that closes the AI feedback loop

Usage:
    model = ToyRiskModel.fit(cohort, outcome_codes, cohort_id='2025Q1', layer=Layer.CLINICAL)
    preds = model.predict(batch)
    model = model.retrain(next_cohort, cohort_id='2025Q2')  # risk-v0000 -> risk-v0001
"""

import re
from collections import Counter
from dataclasses import dataclass
from typing import FrozenSet, Mapping, Optional

from core.records import CodedRecord, Layer, code_of
from utils import ValidationError
from utils.general import LOGGER, colorstr, json_save

PREFIX = colorstr('model: ')
OUTCOME_GROUP = 'complication'  # outcome: the record carries any co-code of this clinical group


def bump_version(version):
    # 'risk-v0007' -> 'risk-v0008', zero padding kept
    m = re.fullmatch(r'(.*?)(\d+)', version)
    if not m:
        raise ValidationError(f'model_version {version!r}: expected a trailing version number')
    head, num = m.groups()
    return f'{head}{int(num) + 1:0{len(num)}d}'


def version_number(version):
    m = re.search(r'(\d+)$', version)
    return int(m.group(1)) if m else -1


@dataclass(frozen=True)
class Prediction:
    record: CodedRecord
    score: float
    model_version: str


@dataclass(frozen=True)
class ToyRiskModel:
    model_version: str
    weights: Mapping[str, float]  # code on `layer` -> empirical outcome rate
    outcome_codes: FrozenSet[str]
    training_cohort_id: Optional[str] = None
    prior: float = 0.0  # cohort-wide outcome rate, scores codes never seen in training
    layer: Layer = Layer.ADMINISTRATIVE

    @staticmethod
    def outcome(record, outcome_codes):
        return not outcome_codes.isdisjoint(record.co_codes)

    @classmethod
    def fit(cls, cohort, outcome_codes, cohort_id=None, model_version='risk-v0000', *, layer):
        layer = Layer.parse(layer)
        outcome_codes = frozenset(outcome_codes)
        if not cohort:
            raise ValidationError('ToyRiskModel.fit: empty cohort')
        n, hits = Counter(), Counter()
        for r in cohort:
            c = code_of(r, layer)
            n[c] += 1
            hits[c] += cls.outcome(r, outcome_codes)
        weights = {c: hits[c] / n[c] for c in sorted(n)}
        prior = sum(hits.values()) / len(cohort)
        LOGGER.info(f'{PREFIX}{model_version} fit on {len(cohort)} records ({cohort_id}), layer {layer.value}, '
                    f'outcome rate {prior:.4f}')
        return cls(model_version, weights, outcome_codes, cohort_id, prior, layer)

    def retrain(self, cohort, cohort_id=None):
        return ToyRiskModel.fit(cohort, self.outcome_codes, cohort_id, bump_version(self.model_version),
                                layer=self.layer)

    def score(self, record):
        return self.weights.get(code_of(record, self.layer), self.prior)

    def predict(self, batch):
        return [Prediction(r, self.score(r), self.model_version) for r in batch]

    def to_dict(self):
        return {
            'model_version': self.model_version,
            'training_cohort_id': self.training_cohort_id,
            'layer': self.layer.value,
            'prior': self.prior,
            'outcome_codes': sorted(self.outcome_codes),
            'weights': dict(self.weights)}

    def save(self, path):
        json_save(path, self.to_dict())
        return path
