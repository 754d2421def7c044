# OntoGuard, GPL-3.0 license
"""
Drift sentinel: compare fingerprints between windows, alert above threshold, classify the probable cause
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Tuple

from dormancy.classify import OutbreakSignal
from sentinel.fingerprint import COMPONENTS, build_fingerprints, compare, component_divergences
from utils.general import LOGGER, colorstr, jsonl_save

PREFIX = colorstr('sentinel: ')


class DriftType(Enum):
    TYPE_A = 'TypeA'  # epidemiological: clinically related codes co-drift
    TYPE_B = 'TypeB'  # administrative: codes of one billing category co-drift
    TYPE_C = 'TypeC'  # terminological: drift at a release on a code the release changed


PRECEDENCE = (DriftType.TYPE_B, DriftType.TYPE_C, DriftType.TYPE_A)  # tie order, TypeB first


@dataclass(frozen=True)
class DriftAlert:
    code: str
    divergence: float
    drift_type: DriftType
    confidence: float  # top type score / sum of type scores; ordinal, not a probability
    evidence: Mapping = field(default_factory=dict)
    components: Tuple[float, ...] = ()

    def to_dict(self):
        return {
            'code': self.code,
            'divergence': self.divergence,
            'drift_type': self.drift_type.value,
            'confidence': self.confidence,
            'evidence': dict(self.evidence),
            'components': dict(zip(COMPONENTS, self.components))}


def jaccard(a, b):
    a, b = set(a), set(b)
    return len(a & b) / len(a | b) if a | b else 0.0


def _home_version(system, code):
    for label in reversed(system.labels):
        if code in system.codes_in(label):
            return label
    return None


def classify(code, drifting, system, window_start, calendar, cfg):
    # Type scores: C from release proximity and table change, B/A from Jaccard overlap with category/group
    home = _home_version(system, code)
    d = system.code_def(code, home) if home else None
    category = set(system.category_members(d.billing_category, home)) if d else {code}
    group = set(system.group_members(d.clinical_group, home)) if d else {code}
    release = None
    for label, date in sorted(calendar.items(), key=lambda x: x[1]):
        days = (window_start.date() - date).days
        if abs(days) <= cfg.release_correlation_window_days:
            release = {'version': label, 'release_date': date.isoformat(), 'days_from_release': days,
                       'changed_in_transition': code in system.changed_codes(label)}
            if release['changed_in_transition']:
                break
    scores = {
        DriftType.TYPE_C: 1.0 if release and release['changed_in_transition'] else 0.0,
        DriftType.TYPE_B: jaccard(drifting, category),
        DriftType.TYPE_A: jaccard(drifting, group)}
    top = max(PRECEDENCE, key=lambda t: scores[t])
    total = sum(scores.values())
    evidence = {
        'co_drifting': sorted(drifting),
        'billing_category': d.billing_category if d else None,
        'billing_overlap': scores[DriftType.TYPE_B],
        'clinical_group': d.clinical_group if d else None,
        'clinical_overlap': scores[DriftType.TYPE_A],
        'release': release,
        'type_scores': {t.value: scores[t] for t in PRECEDENCE}}
    return top, scores[top] / total if total else 0.0, evidence


def scan(baseline_batch, current_batch, system, release_calendar, cfg, *, layer):
    """
    Drift alerts for codes fingerprinted in both windows with divergence >= cfg.drift_threshold,
    sorted by divergence descending then code

    Arguments:
        release_calendar: version label -> release date, None uses the code system's versions
    """
    kw = dict(layer=layer, min_support=cfg.min_support, bins=cfg.temporal_bins)
    base = build_fingerprints(baseline_batch, cfg.baseline_window, **kw)
    cur = build_fingerprints(current_batch, cfg.current_window, **kw)
    calendar = release_calendar if release_calendar is not None else system.release_calendar
    common = sorted(set(base) & set(cur))
    div = {c: compare(base[c], cur[c], cfg.fingerprint_weights) for c in common}
    drifting = {c for c, d in div.items() if d >= cfg.drift_threshold}
    alerts = []
    for c in sorted(drifting, key=lambda c: (-div[c], c)):
        t, conf, evidence = classify(c, drifting, system, cur.window.start, calendar, cfg)
        alerts.append(DriftAlert(c, div[c], t, conf, evidence, component_divergences(base[c], cur[c])))
    LOGGER.info(f'{PREFIX}{len(common)} codes compared ({len(base.low_support) + len(cur.low_support)} low-support '
                f'skips), {len(alerts)} alert(s) at threshold {cfg.drift_threshold}')
    for a in alerts:
        LOGGER.info(f'{PREFIX}{a.code} divergence {a.divergence:.4f} {a.drift_type.value} (confidence {a.confidence:.2f})')
    return alerts


def outbreak_signals(alerts):
    # Type A alerts become dormancy OutbreakSignal events
    return [OutbreakSignal(a.code) for a in alerts if a.drift_type is DriftType.TYPE_A]


def save_alerts(path, alerts):
    jsonl_save(path, (a.to_dict() for a in alerts))
    return path
