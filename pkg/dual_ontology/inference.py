# OntoGuard, GPL-3.0 license
"""
Clinical-layer population: copy high-fidelity codes, infer the rest, apply structured-instrument overrides
"""

import math

from core.records import Layer, code_of
from utils import ValidationError
from utils.general import LOGGER, colorstr, jsonl_load

PREFIX = colorstr('dual ontology: ')


def candidate_codes(code, system, version):
    # Codes sharing the administrative code's clinical group within the record's version
    d = system.code_def(code, version) if code in system.codes_in(version) else None
    return system.group_members(d.clinical_group, version) if d else [code]


def candidate_score(candidate, record, ref):
    # sum log P(co-code | candidate) under the reference co-occurrence distribution
    return sum(math.log(ref.cooccurrence_prob(candidate, k)) for k in record.co_codes)


def infer_code(record, ref, system, candidates):
    f = record.fidelity.score
    n = len(candidates)
    agree = math.log(max(f, 1e-12))
    disagree = math.log(max((1.0 - f) / (n - 1), 1e-12)) if n > 1 else agree
    best, best_score = None, -math.inf
    for c in sorted(candidates):  # strict '>' keeps the lexicographically smallest on ties
        # the administrative code is one more conditionally independent observation, right with probability f
        s = candidate_score(c, record, ref) + (agree if c == record.primary_code else disagree)
        if s > best_score:
            best, best_score = c, s
    return best


def infer_clinical_layer(batch, ref, system, cfg, overrides=None):
    """
    Populate clinical_code on every record

    Records with fidelity >= cfg.clinical_inference_cutoff copy the administrative code; below it the clinical code
    is the argmax of a naive conditional-independence score over the administrative code's clinical group: the
    record's co-codes, plus the administrative code read as an observation that is right with probability equal to
    the fidelity score. No demographic prior enters the score.
    Overrides (record_id -> clinical_code, from structured instruments) take precedence.
    """
    if ref.layer is not Layer.ADMINISTRATIVE:
        raise ValidationError('infer_clinical_layer needs a reference model built on the Administrative layer')
    overrides = overrides or {}
    out, inferred, changed = [], 0, 0
    for r in batch:
        if r.fidelity is None:
            raise ValidationError(f'{r.record_id}: missing fidelity annotation, run the checkpoint first')
        if r.record_id in overrides:
            clinical = overrides[r.record_id]
        elif r.fidelity.score >= cfg.clinical_inference_cutoff:
            clinical = r.primary_code
        else:
            inferred += 1
            clinical = infer_code(r, ref, system, candidate_codes(r.primary_code, system, r.version_tag))
        changed += clinical != r.primary_code
        out.append(r.replace(clinical_code=clinical))
    LOGGER.info(f'{PREFIX}{inferred} of {len(out)} records below cutoff {cfg.clinical_inference_cutoff} inferred, '
                f'{changed} differ from the administrative layer, {len(overrides)} overrides')
    return out


def load_overrides(path):
    # Structured-instrument annotations: JSON Lines of {record_id, clinical_code}
    out = {}
    for row in jsonl_load(path):
        if not row.get('record_id') or not row.get('clinical_code'):
            raise ValidationError(f'{path}: override rows need record_id and clinical_code')
        out[row['record_id']] = row['clinical_code']
    return out


def layer_accuracy(batch, truth, *, layer):
    # Fraction of records whose code on `layer` equals the ground-truth clinical code
    if not batch:
        return 0.0
    return sum(code_of(r, layer) == truth[r.record_id].true_clinical_code for r in batch) / len(batch)
