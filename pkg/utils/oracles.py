# OntoGuard, GPL-3.0 license
"""
Brute-force oracles: naive recounts and direct summations, independent of the pipeline modules they check

Usage:
    $ python cli.py oracle run partition --input batch.jsonl --outcome runs/gate/exp
"""

import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

from utils import ValidationError


@dataclass(frozen=True)
class OracleResult:
    oracle_name: str
    expected: Any
    observed: Any
    tolerance: Optional[float] = None  # None for discrete oracles: exact equality
    passed: bool = False

    def to_dict(self):
        return {'oracle_name': self.oracle_name, 'expected': self.expected, 'observed': self.observed,
                'tolerance': self.tolerance, 'pass': self.passed}


def check(name, expected, observed, tolerance=None):
    # pass <=> |expected - observed| <= tolerance, or exact equality without a tolerance
    ok = expected == observed if tolerance is None else abs(expected - observed) <= tolerance
    return OracleResult(name, expected, observed, tolerance, bool(ok))


def _rows(path):
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]


def jsd_oracle(p, q, tol=1e-9):
    """
    Base-2 Jensen-Shannon divergence by direct summation

    >>> jsd_oracle([1.0, 0.0], [0.0, 1.0])
    1.0
    >>> jsd_oracle([0.5, 0.5], [0.5, 0.5])
    0.0
    """
    p, q = [float(x) for x in p], [float(x) for x in q]
    if len(p) != len(q):
        raise ValidationError(f'jsd_oracle: length mismatch {len(p)} != {len(q)}')
    for name, v in ('p', p), ('q', q):
        if any(x < 0 for x in v) or abs(sum(v) - 1.0) > tol:
            raise ValidationError(f'jsd_oracle: {name} is not a normalized distribution (sum {sum(v)})')
    total = 0.0
    for pi, qi in zip(p, q):
        mi = (pi + qi) / 2
        if pi > 0:
            total += 0.5 * pi * math.log2(pi / mi)
        if qi > 0:
            total += 0.5 * qi * math.log2(qi / mi)
    return total


def partition_oracle(input_path, outcome_dir):
    # Recount record ids from the raw files: accepted + reconciled + quarantined == input, as multisets
    outcome_dir = Path(outcome_dir)
    expected = Counter(r['record_id'] for r in _rows(input_path))
    observed = Counter(r['record_id'] for r in _rows(outcome_dir / 'accepted.jsonl'))
    for name in 'reconciled.jsonl', 'quarantine.jsonl':
        observed.update(r['record']['record_id'] for r in _rows(outcome_dir / name))
    return expected == observed


def binomial_interval(p, n, z=3.0):
    """
    Normal-approximation interval for the observed share of n Bernoulli(p) draws

    >>> lo, hi = binomial_interval(0.25, 1000)
    >>> round(lo, 3), round(hi, 3)
    (0.209, 0.291)
    """
    half = z * math.sqrt(p * (1 - p) / n) if n else 1.0
    return max(0.0, p - half), min(1.0, p + half)


def count_prevalence(records_path, code, field='primary_code'):
    # (count, share) of code in a records file
    rows = _rows(records_path)
    k = sum(r.get(field) == code for r in rows)
    return k, (k / len(rows) if rows else 0.0)


def layer_accuracy_oracle(records_path, truth_path, layer='Administrative'):
    # Share of records whose layer code equals the ground-truth clinical code
    key = {'administrative': 'primary_code', 'clinical': 'clinical_code'}[str(layer).lower()]
    truth = {r['record_id']: r['true_clinical_code'] for r in _rows(truth_path)}
    rows = _rows(records_path)
    return sum(r[key] == truth[r['record_id']] for r in rows) / len(rows) if rows else 0.0


def coverage_oracle(code_system_path, from_version, to_version, observed_codes):
    # Share of observed codes with exactly one image after walking every hop of the raw transition rows
    with open(code_system_path) as f:
        d = json.load(f)
    order = [v['label'] for v in sorted(d['versions'], key=lambda v: v['release_date'])]
    i, j = order.index(str(from_version)), order.index(str(to_version))
    observed = sorted(set(observed_codes))
    if not observed:
        return 1.0
    if j < i:
        return 0.0
    images = {c: {c} for c in observed}
    for a, b in zip(order[i:j], order[i + 1:j + 1]):
        hop = [t for t in d['transitions'] if t['from'] == a and t['to'] == b]
        if not hop:
            return 0.0
        rows = hop[0]['mappings']
        dead = set(hop[0].get('unmappable', []))
        for c, now in images.items():
            nxt = set()
            for x in now:
                if x in dead:
                    continue
                nxt |= {m['to_code'] for m in rows if m['from_code'] == x}
            images[c] = nxt
    return sum(len(v) == 1 for v in images.values()) / len(observed)
