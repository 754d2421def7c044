# OntoGuard, GPL-3.0 license
"""
Dormant feature store: summaries of rare but clinically significant codes, activation checks and the prune log
"""

import threading
from collections import Counter
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Mapping, Tuple

import pandas as pd

from core.records import code_of, parse_time
from dormancy.classify import (PREFIX, DomainTransferRequest, FeatureClass, OutbreakSignal, PrevalenceExceeds,
                               parse_condition)
from utils import ValidationError
from utils.general import LOGGER, json_load, json_save

DEFAULT_NOTE = 'clinically significant (configured)'


@dataclass(frozen=True)
class DormantEntry:
    code: str
    count: int
    frequency: float
    cooccurrence: Mapping[str, float]  # top co-codes -> share of the code's records
    significance_note: str
    activation_conditions: Tuple
    last_observed: datetime

    def __post_init__(self):
        if not self.activation_conditions:
            raise ValidationError(f'dormant entry {self.code}: at least one activation condition required')

    def to_dict(self):
        return {
            'code': self.code,
            'count': self.count,
            'frequency': self.frequency,
            'cooccurrence': dict(self.cooccurrence),
            'significance_note': self.significance_note,
            'activation_conditions': [c.to_dict() for c in self.activation_conditions],
            'last_observed': self.last_observed.isoformat()}

    @classmethod
    def from_dict(cls, d):
        return cls(d['code'], int(d['count']), float(d['frequency']), d.get('cooccurrence', {}),
                   d.get('significance_note', DEFAULT_NOTE),
                   tuple(parse_condition(c) for c in d['activation_conditions']), parse_time(d['last_observed']))


@dataclass(frozen=True)
class Activation:
    code: str
    condition: object
    prevalence: float

    def to_dict(self):
        return {'code': self.code, 'condition': self.condition.to_dict(), 'prevalence': self.prevalence}


class DormantStore:
    # Single-writer store: mutations hold the lock, reads see a consistent dict
    def __init__(self, path=None):
        self.path = Path(path) if path else None
        self.entries = {}
        self.pruned = {}  # code -> (count, last_observed)
        self._lock = threading.Lock()

    def __len__(self):
        return len(self.entries)

    def __contains__(self, code):
        return code in self.entries

    def __getitem__(self, code):
        return self.entries[code]

    @property
    def prune_path(self):
        return self.path.with_name(f'{self.path.stem}_prune_log.csv') if self.path else None

    def upsert(self, entry):
        with self._lock:
            self.entries[entry.code] = entry

    def log_pruned(self, code, count, last_observed):
        with self._lock:
            self.pruned[code] = (count, last_observed)

    def prune_log(self):
        rows = [[c, n, t.isoformat()] for c, (n, t) in sorted(self.pruned.items())]
        return pd.DataFrame(rows, columns=['code', 'count', 'last_observed'])

    def save(self, path=None):
        self.path = Path(path) if path else self.path
        with self._lock:
            json_save(self.path, [self.entries[c].to_dict() for c in sorted(self.entries)])
            self.prune_log().to_csv(self.prune_path, index=False)
        return self.path

    @classmethod
    def load(cls, path):
        store = cls(path)
        for d in json_load(path):
            store.entries[d['code']] = DormantEntry.from_dict(d)
        if store.prune_path.exists():
            df = pd.read_csv(store.prune_path, dtype={'code': str})
            for code, n, t in zip(df['code'], df['count'], df['last_observed']):
                store.pruned[code] = (int(n), parse_time(t))
        return store


def _summaries(batch, layer):
    counts, last, cooc = Counter(), {}, {}
    for r in batch:
        c = code_of(r, layer)
        counts[c] += 1
        last[c] = max(last.get(c, r.encounter_time), r.encounter_time)
        cooc.setdefault(c, Counter()).update(r.co_codes)
    return counts, last, cooc


def store_dormant(classification, batch, conditions_by_code, *, layer, significance=None, store=None):
    """
    One DormantEntry per Dormant code (upserted, so re-storing is idempotent); Pruned codes go to the prune log

    Arguments:
        classification: code -> FeatureClass from classify_features
        conditions_by_code: code -> list of activation conditions; every Dormant code needs at least one
        significance: code -> note (or an iterable of codes) from the clinical-significance list
    """
    store = store if store is not None else DormantStore()
    counts, last, cooc = _summaries(batch, layer)
    notes = significance if isinstance(significance, Mapping) else dict.fromkeys(significance or (), DEFAULT_NOTE)
    n = len(batch)
    for code, cls in sorted(classification.items()):
        if cls is FeatureClass.DORMANT:
            conditions = conditions_by_code.get(code)
            if not conditions:
                raise ValidationError(f'dormant code {code} has no configured activation condition')
            top = sorted(cooc.get(code, {}).items(), key=lambda x: (-x[1], x[0]))[:5]
            store.upsert(
                DormantEntry(code, counts[code], counts[code] / n, {k: v / counts[code] for k, v in top},
                             notes.get(code, DEFAULT_NOTE), tuple(conditions), last[code]))
        elif cls is FeatureClass.PRUNED:
            store.log_pruned(code, counts[code], last[code])
    LOGGER.info(f'{PREFIX}store holds {len(store)} dormant entries, prune log {len(store.pruned)} codes')
    return store


def check_activation(store, quarterly_batch, events, *, layer):
    # (code, first triggered condition) for every stored code with at least one condition true
    counts = Counter(code_of(r, layer) for r in quarterly_batch)
    n = len(quarterly_batch)
    events = list(events or ())
    out = []
    for code in sorted(store.entries):
        prevalence = counts[code] / n if n else 0.0
        for cond in store[code].activation_conditions:
            if isinstance(cond, PrevalenceExceeds):
                hit = prevalence > cond.threshold
            elif isinstance(cond, DomainTransferRequest):
                hit = any(isinstance(e, DomainTransferRequest) and e.domain == cond.domain for e in events)
            elif isinstance(cond, OutbreakSignal):
                hit = any(isinstance(e, OutbreakSignal) and e.code == cond.code for e in events)
            else:
                hit = False
            if hit:
                out.append(Activation(code, cond, prevalence))
                LOGGER.info(f'{PREFIX}{code} activated: {cond.describe()}')
                break
    return out
