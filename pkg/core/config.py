# OntoGuard, GPL-3.0 license
"""
Pipeline configuration: thresholds, weights and windows shared by every stage
"""

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

from core.records import Window
from utils import ValidationError
from utils.general import check_file, check_range, json_load, yaml_load


@dataclass(frozen=True)
class PipelineConfig:
    fidelity_weights: Tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)  # prevalence, co-occurrence, institutional
    drift_threshold: float = 0.05
    breaker_threshold: float = 0.15
    dormancy_frequency_threshold: float = 0.002
    activation_prevalence_threshold: float = 0.005
    release_correlation_window_days: int = 30
    baseline_window: Optional[Window] = None
    current_window: Optional[Window] = None
    min_support: int = 20
    temporal_bins: int = 3
    fingerprint_weights: Tuple[float, float, float, float] = (0.25, 0.25, 0.25, 0.25)  # co-occ, demo, temporal, inst
    cooccurrence_top_k: int = 10
    clinical_inference_cutoff: float = 0.5
    acknowledged_unmapped: Tuple[str, ...] = ()
    acknowledged_versions: Tuple[str, ...] = ()
    breaker_trend_periods: int = 3

    def __post_init__(self):
        w = tuple(float(x) for x in self.fidelity_weights)
        if len(w) != 3:
            raise ValidationError(f'fidelity_weights: expected 3 values, got {len(w)}')
        for x in w:
            check_range('fidelity_weights', x, 0.0)
        if abs(sum(w) - 1.0) > 1e-9:
            raise ValidationError(f'fidelity_weights={w}: weights must sum to 1')
        fw = tuple(float(x) for x in self.fingerprint_weights)
        if len(fw) != 4:
            raise ValidationError(f'fingerprint_weights: expected 4 values, got {len(fw)}')
        for x in fw:
            check_range('fingerprint_weights', x, 0.0)
        if not sum(fw) > 0:
            raise ValidationError('fingerprint_weights: at least one weight must be positive')
        check_range('drift_threshold', self.drift_threshold, 0.0, None, lo_open=True)
        check_range('breaker_threshold', self.breaker_threshold, 0.0, 1.0, lo_open=True, hi_open=True)
        check_range('dormancy_frequency_threshold', self.dormancy_frequency_threshold, 0.0, 1.0, True, True)
        check_range('activation_prevalence_threshold', self.activation_prevalence_threshold, 0.0, 1.0, True, True)
        check_range('clinical_inference_cutoff', self.clinical_inference_cutoff, 0.0, 1.0)
        for k, lo in ('release_correlation_window_days', 1), ('min_support', 1), ('temporal_bins', 1), \
                     ('cooccurrence_top_k', 1), ('breaker_trend_periods', 2):
            v = getattr(self, k)
            if isinstance(v, bool) or not isinstance(v, int) or v < lo:
                raise ValidationError(f'{k}={v!r}: expected an integer >= {lo}')
        for k in 'baseline_window', 'current_window':
            v = getattr(self, k)
            if isinstance(v, dict):
                object.__setattr__(self, k, Window.from_dict(v))
            elif v is not None and not isinstance(v, Window):
                raise ValidationError(f'{k}: expected a {{start, end}} mapping')
        object.__setattr__(self, 'fidelity_weights', w)
        object.__setattr__(self, 'fingerprint_weights', fw)
        object.__setattr__(self, 'acknowledged_unmapped', tuple(str(x) for x in self.acknowledged_unmapped))
        object.__setattr__(self, 'acknowledged_versions', tuple(str(x) for x in self.acknowledged_versions))

    @classmethod
    def from_dict(cls, d):
        d = dict(d or {})
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - names)
        if unknown:
            raise ValidationError(f'unknown config key(s) {unknown}')
        for k in 'drift_threshold', 'breaker_threshold', 'dormancy_frequency_threshold', \
                 'activation_prevalence_threshold', 'clinical_inference_cutoff':
            if k in d and isinstance(d[k], str):  # YAML 1.1 reads 1e-3 as a string
                d[k] = check_range(k, d[k])
        return cls(**d)

    def to_dict(self):
        d = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            d[f.name] = v.to_dict() if isinstance(v, Window) else list(v) if isinstance(v, tuple) else v
        return d

    def update(self, **kwargs):
        return PipelineConfig.from_dict({**{f.name: getattr(self, f.name) for f in dataclasses.fields(self)}, **kwargs})


def load_config(path=None):
    # PipelineConfig from *.json or *.yaml; absent keys take defaults, no file means all defaults
    if path is None:
        return PipelineConfig()
    path = check_file(path, ('.json', '.yaml', '.yml'))
    d = json_load(path) if Path(path).suffix == '.json' else yaml_load(path)
    if d is not None and not isinstance(d, dict):
        raise ValidationError(f'{path}: expected a mapping of config keys')
    return PipelineConfig.from_dict(d)


def weighted_mean(values, weights):
    # sum(w * v) / sum(w), with math.fsum for stable rounding
    return math.fsum(w * v for w, v in zip(weights, values)) / math.fsum(weights)
