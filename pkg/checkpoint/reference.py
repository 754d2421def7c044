# OntoGuard, GPL-3.0 license
"""
Reference model: expected prevalence per demographic stratum, co-occurrence and institutional baselines

Co-occurrence is also kept per institution, so a record can be compared against how peer institutions code with the
same code instead of a reference its own institution helped shape.
"""

from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Mapping, Tuple

import numpy as np

from core.records import Layer, code_of
from utils import ValidationError


@dataclass(frozen=True)
class ReferenceModel:
    layer: Layer
    vocabulary: Tuple[str, ...]  # code set smoothed over
    co_vocabulary: Tuple[str, ...]
    n: int
    code_counts: Mapping[str, int]
    stratum_counts: Mapping[Tuple[str, str], int]
    joint_counts: Mapping[Tuple[str, str, str], int]
    cooc_counts: Mapping[str, Mapping[str, int]]
    institution_counts: Mapping[str, int]
    institution_code_counts: Mapping[Tuple[str, str], int]
    peer_median: Mapping[str, float] = field(default_factory=dict)
    institution_cooc_counts: Mapping[Tuple[str, str], Mapping[str, int]] = field(default_factory=dict)
    _totals: Mapping[str, int] = field(default=None, init=False, repr=False, compare=False)
    _ranked: Mapping[str, Tuple[str, ...]] = field(default=None, init=False, repr=False, compare=False)
    _peer_ranked: Dict[Tuple[str, str], Tuple[str, ...]] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, '_totals', {k: sum(v.values()) for k, v in self.cooc_counts.items()})
        object.__setattr__(self, '_ranked', {k: _rank(v) for k, v in self.cooc_counts.items()})
        object.__setattr__(self, '_peer_ranked', {})

    @property
    def floor(self):
        # smoothing floor: add-one mass of an unseen code in an empty stratum
        return 1.0 / len(self.vocabulary)

    def knows(self, code):
        return code in self.code_counts

    def expected_prevalence(self, code, age_band, sex):
        # P(code | age_band, sex), add-one smoothed over the vocabulary
        j = self.joint_counts.get((code, age_band, sex), 0)
        return (j + 1) / (self.stratum_counts.get((age_band, sex), 0) + len(self.vocabulary))

    def marginal_prevalence(self, code):
        return (self.code_counts.get(code, 0) + 1) / (self.n + len(self.vocabulary))

    def cooccurrence_prob(self, code, co_code):
        # P(co_code | code), add-one smoothed over the co-code vocabulary
        counts = self.cooc_counts.get(code, {})
        return (counts.get(co_code, 0) + 1) / (self._totals.get(code, 0) + max(len(self.co_vocabulary), 1))

    def expected_cooccurrence(self, code):
        # Full smoothed distribution over co-codes, sums to 1
        return {c: self.cooccurrence_prob(code, c) for c in self.co_vocabulary}

    def top_cooccurrence(self, code, k):
        # Observed co-codes of code ranked by count, ties by code
        return list(self._ranked.get(code, ())[:k])

    def peer_support(self, code, institution_id):
        # Records of code coded by institutions other than institution_id
        return self.code_counts.get(code, 0) - self.institution_code_counts.get((institution_id, code), 0)

    def peer_top_cooccurrence(self, code, institution_id, k, min_support):
        """
        Top-k co-codes of code over the other institutions' records

        Falls back to the full reference when fewer than min_support peer records carry the code.
        """
        if self.peer_support(code, institution_id) < min_support:
            return self.top_cooccurrence(code, k)
        key = (institution_id, code)
        if key not in self._peer_ranked:
            own = self.institution_cooc_counts.get(key, {})
            peers = {c: n - own.get(c, 0) for c, n in self.cooc_counts.get(code, {}).items()}
            self._peer_ranked[key] = _rank({c: n for c, n in peers.items() if n > 0})
        return list(self._peer_ranked[key][:k])

    def institution_baseline(self, institution_id, code):
        # Historical smoothed rate of code within an institution's records
        n = self.institution_counts.get(institution_id, 0)
        return (self.institution_code_counts.get((institution_id, code), 0) + 1) / (n + len(self.vocabulary))


def _rank(counts):
    # Codes by count descending, ties by code
    return tuple(c for c, _ in sorted(counts.items(), key=lambda x: (-x[1], x[0])))


def build_reference_model(history, *, layer, vocabulary=None, co_vocabulary=None):
    """
    Empirical reference distributions from historical records

    Arguments:
        history: non-empty list of CodedRecord
        layer: Layer whose codes are counted
        vocabulary: code set to smooth over, i.e. the active version's primary codes (observed codes are added)
        co_vocabulary: co-code set to smooth co-occurrence over (observed co-codes are added)
    Returns:
        ReferenceModel
    """
    if not history:
        raise ValidationError('build_reference_model: empty history')
    layer = Layer.parse(layer)
    code_counts, strata, joint, inst, inst_code = Counter(), Counter(), Counter(), Counter(), Counter()
    cooc: Dict[str, Counter] = {}
    inst_cooc: Dict[Tuple[str, str], Counter] = {}
    for r in history:
        c = code_of(r, layer)
        code_counts[c] += 1
        strata[(r.patient_age_band, r.patient_sex)] += 1
        joint[(c, r.patient_age_band, r.patient_sex)] += 1
        inst[r.institution_id] += 1
        inst_code[(r.institution_id, c)] += 1
        cc, ic = cooc.setdefault(c, Counter()), inst_cooc.setdefault((r.institution_id, c), Counter())
        for x in r.co_codes:
            cc[x] += 1
            ic[x] += 1
    vocab = tuple(sorted(set(vocabulary or ()) | set(code_counts)))
    co_vocab = tuple(sorted(set(co_vocabulary or ()) | {x for cc in cooc.values() for x in cc}))
    V = len(vocab)
    medians = {}
    for c in vocab:
        rates = [(inst_code.get((i, c), 0) + 1) / (n + V) for i, n in sorted(inst.items())]
        medians[c] = float(np.median(rates))
    return ReferenceModel(layer=layer,
                          vocabulary=vocab,
                          co_vocabulary=co_vocab,
                          n=len(history),
                          code_counts=dict(code_counts),
                          stratum_counts=dict(strata),
                          joint_counts=dict(joint),
                          cooc_counts={k: dict(v) for k, v in cooc.items()},
                          institution_counts=dict(inst),
                          institution_code_counts=dict(inst_code),
                          peer_median=medians,
                          institution_cooc_counts={k: dict(v) for k, v in inst_cooc.items()})
