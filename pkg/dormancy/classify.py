# OntoGuard, GPL-3.0 license
"""
Feature classes and activation conditions for the dormancy-aware pipeline
"""

from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Union

from core.records import code_of
from utils import ValidationError
from utils.general import LOGGER, check_range, colorstr

PREFIX = colorstr('dormancy: ')


class FeatureClass(Enum):
    ACTIVE = 'Active'
    DORMANT = 'Dormant'
    PRUNED = 'Pruned'


@dataclass(frozen=True)
class PrevalenceExceeds:
    threshold: float
    window: str = 'quarterly'

    def __post_init__(self):
        check_range('prevalence_exceeds', self.threshold, 0.0, 1.0, lo_open=True, hi_open=True)

    def to_dict(self):
        return {'prevalence_exceeds': self.threshold}

    def describe(self):
        return f'prevalence exceeds {self.threshold:.2%} in a {self.window} cohort'


@dataclass(frozen=True)
class DomainTransferRequest:
    domain: str

    def to_dict(self):
        return {'domain_transfer': self.domain}

    def describe(self):
        return f'domain transfer requested: {self.domain}'


@dataclass(frozen=True)
class OutbreakSignal:
    code: str

    def to_dict(self):
        return {'outbreak_signal': self.code}

    def describe(self):
        return f'outbreak signal on {self.code}'


ActivationCondition = Union[PrevalenceExceeds, DomainTransferRequest, OutbreakSignal]


def parse_condition(d, cfg=None):
    # {'prevalence_exceeds': 0.005 | null}, {'domain_transfer': 'endocrinology'} or {'outbreak_signal': 'SE13.9'}
    if not isinstance(d, dict) or len(d) != 1:
        raise ValidationError(f'activation condition {d!r}: expected a single-key mapping')
    (k, v), = d.items()
    if k == 'prevalence_exceeds':
        if v is None:
            if cfg is None:
                raise ValidationError('prevalence_exceeds: threshold required without a config')
            v = cfg.activation_prevalence_threshold
        return PrevalenceExceeds(check_range('prevalence_exceeds', v))
    if k == 'domain_transfer':
        return DomainTransferRequest(str(v))
    if k == 'outbreak_signal':
        return OutbreakSignal(str(v))
    raise ValidationError(f'unknown activation condition {k!r}')


def parse_conditions(d, cfg=None):
    # code -> list of conditions
    return {str(code): [parse_condition(x, cfg) for x in conds] for code, conds in (d or {}).items()}


def classify_features(batch, significance, cfg, *, layer):
    """
    Classify every distinct code in the batch: frequency >= cfg.dormancy_frequency_threshold is Active;
    rarer codes are Dormant when on the clinical-significance list, else Pruned
    """
    if not batch:
        raise ValidationError('classify_features: empty batch')
    counts = Counter(code_of(r, layer) for r in batch)
    n = len(batch)
    out = {}
    for code in sorted(counts):
        if counts[code] / n >= cfg.dormancy_frequency_threshold:
            out[code] = FeatureClass.ACTIVE
        elif code in significance:
            out[code] = FeatureClass.DORMANT
        else:
            out[code] = FeatureClass.PRUNED
    tally = Counter(out.values())
    LOGGER.info(f'{PREFIX}{len(out)} codes: {tally[FeatureClass.ACTIVE]} active, {tally[FeatureClass.DORMANT]} dormant, '
                f'{tally[FeatureClass.PRUNED]} pruned')
    return out
