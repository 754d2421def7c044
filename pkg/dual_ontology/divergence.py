# OntoGuard, GPL-3.0 license
"""
Administrative vs clinical layer divergence as a first-class data element
"""

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Tuple

import pandas as pd

from utils import ValidationError


class Scope(Enum):
    RECORD = 'Record'
    INSTITUTION = 'Institution'
    POPULATION = 'Population'


@dataclass(frozen=True)
class DivergenceReport:
    scope: Scope
    disagreement_rate: float
    per_code_confusion: Mapping[Tuple[str, str], int]  # (admin_code, clinical_code) -> count
    n: int
    key: Optional[str] = None  # institution or record id, None for the population

    def transpose(self):
        confusion = {(b, a): k for (a, b), k in self.per_code_confusion.items()}
        return DivergenceReport(self.scope, self.disagreement_rate, confusion, self.n, self.key)


def _report(scope, records, key=None):
    confusion = Counter((r.primary_code, r.clinical_code) for r in records)
    n = len(records)
    rate = sum(k for (a, b), k in confusion.items() if a != b) / n if n else 0.0
    return DivergenceReport(scope, rate, dict(sorted(confusion.items())), n, key)


def divergence(batch, scope):
    # List of reports: one for POPULATION, one per institution or record otherwise, sorted by key
    scope = Scope(scope) if not isinstance(scope, Scope) else scope
    missing = [r.record_id for r in batch if r.clinical_code is None]
    if missing:
        raise ValidationError(f'divergence: {len(missing)} record(s) without a clinical layer, first {missing[0]}')
    if scope is Scope.POPULATION:
        return [_report(scope, list(batch))]
    groups = {}
    for r in batch:
        groups.setdefault(r.institution_id if scope is Scope.INSTITUTION else r.record_id, []).append(r)
    return [_report(scope, groups[k], k) for k in sorted(groups)]


def divergence_frame(reports):
    # Long-format table: scope, key, n, disagreement_rate, admin_code, clinical_code, count
    rows = []
    for rep in reports:
        for (a, b), k in rep.per_code_confusion.items():
            rows.append([rep.scope.value, rep.key or 'all', rep.n, rep.disagreement_rate, a, b, k])
    return pd.DataFrame(rows, columns=['scope', 'key', 'n', 'disagreement_rate', 'admin_code', 'clinical_code', 'count'])


def save_divergence(path, reports):
    divergence_frame(reports).to_csv(path, index=False, float_format='%.6f')
    return path
