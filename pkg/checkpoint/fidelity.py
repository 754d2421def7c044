# OntoGuard, GPL-3.0 license
"""
Ontological checkpoint: annotate every ingested record with a coding-fidelity index, never reject

Usage:
    ref = build_reference_model(history, layer=Layer.ADMINISTRATIVE, vocabulary=system.primary_codes('2025'))
    batch = annotate_batch(batch, ref, cfg)
    save_fidelity_report('fidelity.csv', fidelity_report(batch))
"""

import numpy as np
import pandas as pd
from tqdm import tqdm

from core.config import weighted_mean
from core.records import FidelityAnnotation, code_of
from utils import ValidationError
from utils.general import LOGGER, TQDM_BAR_FORMAT, VERBOSE, colorstr

PREFIX = colorstr('checkpoint: ')
REPORT_HEADER = '# fidelity score is an ordinal index of coding fidelity, not a calibrated probability\n'
DECILES = [f'd{i}' for i in range(1, 10)]


def prevalence_subscore(x):
    # Likelihood ratio x = P(code | stratum) / P(code) mapped through 2x/(1+x), capped at 1; x = 1 scores 1
    return min(1.0, 2.0 * x / (1.0 + x))


def overlap_coefficient(a, b):
    # |a & b| / min(|a|, |b|); no co-codes contradict nothing, co-codes against an empty reference contradict
    if not a:
        return 1.0
    if not b:
        return 0.0
    return len(set(a) & set(b)) / min(len(a), len(b))


def institutional_subscore(rate, median):
    return 1.0 - min(1.0, abs(rate - median) / median)


def annotate(record, ref, cfg):
    # Record with fidelity populated from the reference model's layer; idempotent
    code = code_of(record, ref.layer)
    k = cfg.cooccurrence_top_k
    if not ref.knows(code):
        p = c = i = ref.floor
        rationale = f'{code} unknown to reference model, smoothing floor {ref.floor:.4f}'
    else:
        x = ref.expected_prevalence(code, record.patient_age_band, record.patient_sex) / ref.marginal_prevalence(code)
        top = ref.peer_top_cooccurrence(code, record.institution_id, k, cfg.min_support)
        rate, median = ref.institution_baseline(record.institution_id, code), ref.peer_median[code]
        p, c, i = prevalence_subscore(x), overlap_coefficient(record.co_codes, top), institutional_subscore(rate, median)
        hits = len(set(record.co_codes) & set(top))
        rationale = (f'stratum likelihood ratio {x:.2f}; {hits}/{len(record.co_codes)} co-codes in peer top-{k}; '
                     f'institution rate {rate / median:.2f}x peer median')
    score = min(1.0, max(0.0, weighted_mean((p, c, i), cfg.fidelity_weights)))
    return record.replace(fidelity=FidelityAnnotation(score, p, c, i, rationale))


def annotate_batch(batch, ref, cfg):
    # Annotates every record; |output| == |input| always
    out = [annotate(r, ref, cfg) for r in tqdm(batch, desc='annotating', bar_format=TQDM_BAR_FORMAT, disable=not VERBOSE)]
    if out:
        LOGGER.info(f'{PREFIX}{len(out)} records annotated, mean fidelity {np.mean([r.fidelity.score for r in out]):.3f}')
    return out


def fidelity_report(batch):
    # One row per institution: n, mean and deciles of the fidelity score
    cols = ['institution', 'n', 'mean', *DECILES]
    missing = [r.record_id for r in batch if r.fidelity is None]
    if missing:
        raise ValidationError(f'fidelity_report: {len(missing)} unannotated record(s), first {missing[0]}')
    if not batch:
        return pd.DataFrame(columns=cols)
    df = pd.DataFrame({'institution': [r.institution_id for r in batch], 'score': [r.fidelity.score for r in batch]})
    rows = []
    for inst, g in df.groupby('institution', sort=True):
        s = g['score'].to_numpy()
        rows.append([inst, len(s), float(s.mean()), *np.percentile(s, range(10, 100, 10)).tolist()])
    return pd.DataFrame(rows, columns=cols)


def save_fidelity_report(path, report):
    with open(path, 'w') as f:
        f.write(REPORT_HEADER)
        report.to_csv(f, index=False, float_format='%.6f')
    return path


def load_fidelity_report(path):
    return pd.read_csv(path, comment='#')
