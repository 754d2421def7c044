# OntoGuard, GPL-3.0 license
"""
Semantic fingerprints: per-code usage context and its Jensen-Shannon divergence between windows
"""

from collections import Counter
from dataclasses import dataclass
from datetime import timedelta
from typing import Mapping, Tuple

import numpy as np
from scipy.spatial.distance import jensenshannon

from core.config import weighted_mean
from core.records import Window, code_of
from utils import ValidationError

NO_CO_CODE = '<none>'  # co-occurrence key for records without co-codes
COMPONENTS = ('cooccurrence', 'demographic', 'temporal', 'institutional')


@dataclass(frozen=True)
class SemanticFingerprint:
    code: str
    cooccurrence_dist: Mapping[str, float]
    demographic_dist: Mapping[str, float]  # 'age_band|sex' -> probability
    temporal_profile: Tuple[float, ...]  # per-bin prevalence, normalized over bins
    institutional_dist: Mapping[str, float]
    window: Window
    support: int


class Fingerprints(dict):
    # code -> SemanticFingerprint, plus the codes left out for low support
    def __init__(self, window, low_support=None):
        super().__init__()
        self.window = window
        self.low_support = dict(low_support or {})


def _dist(counter):
    total = sum(counter.values())
    return {k: counter[k] / total for k in sorted(counter)}


def batch_window(batch):
    times = [r.encounter_time for r in batch]
    return Window(min(times), max(times) + timedelta(seconds=1))


def build_fingerprints(batch, window=None, *, layer, min_support=20, bins=3):
    """
    One fingerprint per code with at least min_support records inside the window

    Arguments:
        batch: list of CodedRecord
        window: Window, defaults to the span of the batch's encounter times
        layer: Layer whose codes are fingerprinted
        min_support: minimum records per code, rarer codes are listed in Fingerprints.low_support
        bins: temporal sub-windows
    """
    if not batch:
        raise ValidationError('build_fingerprints: empty batch')
    window = window or batch_window(batch)
    records = [r for r in batch if window.contains(r.encounter_time)]
    if not records:
        raise ValidationError(f'build_fingerprints: no records inside {window.start}..{window.end}')

    def bin_of(t):
        return min(bins - 1, int((t - window.start).total_seconds() / window.seconds * bins))

    by_code, bin_totals = {}, np.zeros(bins)
    for r in records:
        b = bin_of(r.encounter_time)
        bin_totals[b] += 1
        by_code.setdefault(code_of(r, layer), []).append((r, b))
    fps = Fingerprints(window)
    for code in sorted(by_code):
        rows = by_code[code]
        if len(rows) < min_support:
            fps.low_support[code] = len(rows)
            continue
        cooc, demo, inst, per_bin = Counter(), Counter(), Counter(), np.zeros(bins)
        for r, b in rows:
            cooc.update(r.co_codes or (NO_CO_CODE,))
            demo[f'{r.patient_age_band}|{r.patient_sex}'] += 1
            inst[r.institution_id] += 1
            per_bin[b] += 1
        prevalence = np.divide(per_bin, bin_totals, out=np.zeros(bins), where=bin_totals > 0)
        fps[code] = SemanticFingerprint(code, _dist(cooc), _dist(demo), tuple((prevalence / prevalence.sum()).tolist()),
                                        _dist(inst), window, len(rows))
    return fps


def jsd(p, q):
    # Base-2 Jensen-Shannon divergence in [0, 1] of two distributions given as mappings or aligned sequences
    if isinstance(p, Mapping):
        keys = sorted(set(p) | set(q))
        p, q = [p.get(k, 0.0) for k in keys], [q.get(k, 0.0) for k in keys]
    elif len(p) != len(q):
        raise ValidationError(f'jsd: length mismatch {len(p)} != {len(q)}')
    d = jensenshannon(np.asarray(p, dtype=float), np.asarray(q, dtype=float), base=2) ** 2
    return float(min(1.0, max(0.0, d)))


def component_divergences(baseline, current):
    return (jsd(baseline.cooccurrence_dist, current.cooccurrence_dist),
            jsd(baseline.demographic_dist, current.demographic_dist),
            jsd(baseline.temporal_profile, current.temporal_profile),
            jsd(baseline.institutional_dist, current.institutional_dist))


def compare(baseline, current, weights=(0.25, 0.25, 0.25, 0.25)):
    # Weighted mean of the four component divergences; symmetric, 0 iff all components are equal
    if baseline.code != current.code:
        raise ValidationError(f'compare: code mismatch {baseline.code} != {current.code}')
    return weighted_mean(component_divergences(baseline, current), weights)
