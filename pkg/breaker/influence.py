# OntoGuard, GPL-3.0 license
"""
Feedback-loop circuit breaker: AI-influence ratio per training cohort, breaker states and the retraining gate
"""

import threading
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np
import pandas as pd

from core.records import InfluenceTag
from utils import ValidationError
from utils.general import LOGGER, check_probability, colorstr, init_rng, json_save

PREFIX = colorstr('breaker: ')


class State(Enum):
    CLOSED = 'Closed'
    WARNING = 'Warning'
    OPEN = 'Open'


@dataclass(frozen=True)
class InfluenceStats:
    cohort_id: str
    ratio: float
    tagged_count: int
    total_count: int
    history: Tuple[Tuple[str, float], ...] = ()  # (period, ratio), oldest first, current period last

    def to_dict(self):
        return {
            'cohort_id': self.cohort_id,
            'ratio': self.ratio,
            'tagged_count': self.tagged_count,
            'total_count': self.total_count,
            'history': [[p, r] for p, r in self.history]}


@dataclass(frozen=True)
class BreakerState:
    state: State
    reason: str
    threshold_used: float


@dataclass(frozen=True)
class Refusal:
    cohort_id: str
    model_version: str
    stats: InfluenceStats
    state: BreakerState
    notes: Tuple[str, ...] = ()  # e.g. administrative drift alerts attached by the harness

    def to_dict(self):
        return {
            'decision': 'retraining refused',
            'cohort_id': self.cohort_id,
            'model_version': self.model_version,
            'state': self.state.state.value,
            'reason': self.state.reason,
            'threshold': self.state.threshold_used,
            'stats': self.stats.to_dict(),
            'notes': list(self.notes),
            'audit': 'human review required: separate amplifying distortions from legitimate clinical adoption'}


@dataclass(frozen=True)
class AcceptanceModel:
    # Clinician response to suggestions: fraction accepted, fraction of accepted that are modified
    accept: float = 0.5
    modify: float = 0.2

    def __post_init__(self):
        check_probability('accept', self.accept)
        check_probability('modify', self.modify)


def compute_stats(cohort, history=(), *, cohort_id='cohort', period=None):
    # Ratio of AI-influenced records in the cohort; the current period is appended to history
    total = len(cohort)
    tagged = sum(r.influence_tag is not None for r in cohort)
    ratio = tagged / total if total else 0.0
    history = tuple((str(p), float(r)) for p, r in history)
    period = str(period if period is not None else len(history) + 1)
    return InfluenceStats(cohort_id, ratio, tagged, total, history + ((period, ratio),))


def trend_projection(ratios, periods=3):
    """
    Next-period ratio by linear extrapolation of the last two deltas, or None without a strictly increasing run

    >>> round(trend_projection([0.04, 0.08, 0.12]), 6)
    0.16
    >>> trend_projection([0.12, 0.12, 0.12]) is None
    True
    """
    tail = np.asarray(ratios[-periods:], dtype=float)
    if len(tail) < periods or not np.all(np.diff(tail) > 0):
        return None
    deltas = np.diff(tail)[-2:]
    return float(tail[-1] + deltas.mean())


def evaluate(stats, cfg):
    # Open iff ratio > threshold (strict); Warning when below it but the trend crosses next period
    t = cfg.breaker_threshold
    if stats.ratio > t:
        return BreakerState(State.OPEN, f'AI influence ratio {stats.ratio:.2%} exceeds threshold {t:.2%}, '
                                        f'automatic retraining paused', t)
    projected = trend_projection([r for _, r in stats.history], cfg.breaker_trend_periods)
    if projected is not None and projected > t:
        first = stats.history[-cfg.breaker_trend_periods][1]
        return BreakerState(State.WARNING, f'ratio increased from {first:.0%} to {stats.ratio:.0%} over '
                                           f'{cfg.breaker_trend_periods} periods, may breach the threshold '
                                           f'{t:.0%} by the next cycle', t)
    return BreakerState(State.CLOSED, f'ratio {stats.ratio:.2%} within threshold {t:.2%}', t)


class Breaker:
    # Serializes state transitions per cohort; the latest BreakerState per cohort_id
    def __init__(self, cfg):
        self.cfg = cfg
        self.states = {}
        self._lock = threading.Lock()

    def update(self, stats):
        with self._lock:
            state = evaluate(stats, self.cfg)
            self.states[stats.cohort_id] = state
        return state


def retrain_gate(state, cohort, model, stats=None, notes=()):
    # New model in Closed/Warning, Refusal carrying the stats in Open
    if state.state is State.OPEN:
        LOGGER.warning(f'{PREFIX}WARNING ⚠️ retraining refused for {model.model_version}: {state.reason}')
        stats = stats or compute_stats(cohort)
        return Refusal(stats.cohort_id, model.model_version, stats, state, tuple(notes))
    if not cohort:
        raise ValidationError('retrain_gate: empty cohort')
    cohort_id = stats.cohort_id if stats else None
    new = model.retrain(cohort, cohort_id)
    LOGGER.info(f'{PREFIX}{state.state.value}, retrained {model.model_version} -> {new.model_version}')
    return new


def tag_outputs(predictions, acceptance, seed):
    """
    Accepted suggestions documented as new records carrying an InfluenceTag

    Exactly round(accept * n) predictions are accepted and round(modify * accepted) of those are marked
    clinician-modified; choices are drawn from a generator seeded with seed.
    """
    rng = init_rng(seed)
    n = len(predictions)
    k = int(round(acceptance.accept * n))
    accepted = np.sort(rng.choice(n, size=k, replace=False)) if k else np.array([], dtype=int)
    modified = set(rng.choice(accepted, size=int(round(acceptance.modify * k)), replace=False).tolist()) if k else set()
    out = []
    for i in accepted.tolist():
        p = predictions[i]
        tag = InfluenceTag(p.model_version, float(min(1.0, max(0.0, p.score))), i in modified)
        out.append(p.record.replace(record_id=f'{p.record.record_id}-AI', influence_tag=tag, fidelity=None))
    LOGGER.info(f'{PREFIX}{len(out)}/{n} suggestions documented, {len(modified)} clinician-modified')
    return out


def dashboard_row(stats, state, period=None):
    return {
        'period': period or stats.history[-1][0],
        'cohort': stats.cohort_id,
        'ratio': stats.ratio,
        'state': state.state.value}


def save_dashboard(path, rows):
    # Influence dashboard CSV: period, cohort, ratio, state
    pd.DataFrame(list(rows), columns=['period', 'cohort', 'ratio', 'state']).to_csv(path, index=False,
                                                                                 float_format='%.6f')
    return path


def save_refusal(path, refusal):
    json_save(path, refusal.to_dict())
    return path


def sweep(stats, thresholds, cfg):
    # Breaker state of each cohort under each threshold; a sensitivity table, not a calibration
    stats = [stats] if isinstance(stats, InfluenceStats) else list(stats)
    rows = []
    for t in thresholds:
        c = cfg.update(breaker_threshold=float(t))
        for s in stats:
            period = s.history[-1][0] if s.history else ''
            rows.append([float(t), s.cohort_id, period, s.ratio, evaluate(s, c).state.value])
    return pd.DataFrame(rows, columns=['threshold', 'cohort', 'period', 'ratio', 'state'])
