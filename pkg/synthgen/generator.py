# OntoGuard, GPL-3.0 license
"""
Synthetic encounter generator with labeled documentary distortions

Usage:
    from synthgen.generator import generate_batch
    records, truth = generate_batch(system, spec, n=50000, seed=42)
"""

from datetime import timedelta
from pathlib import Path

import numpy as np

from core.records import AGE_BANDS, SEXES, InfluenceTag, Window, make_record, save_records
from synthgen.distortions import DistortionLabel, GroundTruth, TruthEntry
from utils import ValidationError
from utils.general import LOGGER, colorstr, init_rng, spawn_seeds

PREFIX = colorstr('synthgen: ')


def _normalize(w):
    w = np.asarray(w, dtype=float)
    return w / w.sum()


def stratified_counts(shares, n):
    # Largest-remainder apportionment: integer counts summing to n, each within 1 of share * n
    raw = _normalize(shares) * n
    counts = np.floor(raw).astype(int)
    order = np.argsort(-(raw - counts), kind='stable')
    counts[order[:n - counts.sum()]] += 1
    return counts


def _profile_arrays(system, codes):
    profiles = system.profiles
    base = np.array([float(profiles[c]['prevalence']) for c in codes])
    age = np.array([profiles[c].get('age', [1] * len(AGE_BANDS)) for c in codes], dtype=float)
    sex = np.array([profiles[c].get('sex', [1] * len(SEXES)) for c in codes], dtype=float)
    return base, age, sex


def expected_prevalence(system, age_band, sex):
    # code -> P(code | age_band, sex) implied by the code-system profiles, before any distortion
    codes = [c for c in system.primary_codes(system.latest) if c in (system.profiles or {})]
    base, age, sx = _profile_arrays(system, codes)
    w = base * age[:, AGE_BANDS.index(age_band)] * sx[:, SEXES.index(sex)]
    return dict(zip(codes, _normalize(w)))


def _default_window(system):
    return Window.quarter(system.version(system.latest).release_date.year, 1)


def generate_batch(system, spec, n, seed, window=None, quarter=0):
    """
    Generate n coded encounters and their ground truth

    Arguments:
        system: CodeSystem carrying population and profiles sections
        spec: DistortionSpec
        n: number of records
        seed: integer seed, output is a pure function of (system, spec, n, seed, window, quarter)
        window: encounter time window, defaults to the first quarter of the latest version's release year
        quarter: index into the AI-influence schedule
    Returns:
        (list of CodedRecord, GroundTruth)
    """
    spec.validate(system)
    if n < 0:
        raise ValidationError(f'n={n}: expected a non-negative integer')
    window = window or _default_window(system)
    truth = GroundTruth()
    if n == 0:
        return [], truth

    rng = init_rng(seed)
    latest = system.latest
    profiles = system.profiles
    codes = [c for c in system.primary_codes(latest) if c in profiles]
    exact = dict(sorted(spec.exact_counts.items()))
    sampled = [c for c in codes if c not in exact]
    base, age_m, sex_m = _profile_arrays(system, sampled)

    # Demographics, institutions, times
    inst_ids = list(spec.institutions)
    inst = rng.permutation(np.repeat(np.arange(len(inst_ids)), stratified_counts(list(spec.institutions.values()), n)))
    ages = rng.choice(len(AGE_BANDS), size=n, p=_normalize(system.population['age']))
    sexes = rng.choice(len(SEXES), size=n, p=_normalize(system.population['sex']))
    offsets = np.floor(rng.random(n) * window.seconds).astype(int)
    times = [window.start + timedelta(seconds=int(s)) for s in offsets]

    ob = spec.outbreak
    ob_on = np.zeros(n, dtype=bool)
    ob_mult = np.ones(len(sampled))
    if ob:
        siblings = set(system.group_members(system.code_def(ob.code).clinical_group, latest)) - {ob.code}
        ob_on = np.array([t >= ob.start_time for t in times]) & \
            (np.isin(ages, [AGE_BANDS.index(a) for a in ob.age_bands]) if ob.age_bands else True)
        ob_mult = np.array([ob.multiplier(c, siblings, ob.age_bands[0] if ob.age_bands else AGE_BANDS[0], ob.start_time)
                            for c in sampled])

    # True clinical codes, sampled per (age, sex, outbreak) stratum
    true = [None] * n
    key = (ages * len(SEXES) + sexes) * 2 + ob_on
    for k in np.unique(key):
        idx = np.flatnonzero(key == k)
        on, a, s = k % 2, k // 2 // len(SEXES), k // 2 % len(SEXES)
        w = base * age_m[:, a] * sex_m[:, s] * (ob_mult if on else 1.0)
        for i, d in zip(idx, rng.choice(len(sampled), size=len(idx), p=_normalize(w))):
            true[i] = sampled[d]
    taken = np.zeros(n, dtype=bool)
    for code, k in exact.items():
        free = np.flatnonzero(~taken)
        if k > len(free):
            raise ValidationError(f'exact_counts.{code}={k} exceeds the {len(free)} records available')
        for i in rng.choice(free, size=k, replace=False):
            true[i] = code
            taken[i] = True

    # Co-codes from each true code's profile
    by_code = {}
    for i, c in enumerate(true):
        by_code.setdefault(c, []).append(i)
    co = [[] for _ in range(n)]
    for c in sorted(by_code):
        idx = by_code[c]
        for cc, p in profiles[c].get('co_codes', {}).items():
            for i, hit in zip(idx, rng.random(len(idx)) < float(p)):
                if hit:
                    co[i].append(cc)

    primary = list(true)
    labels = [set() for _ in range(n)]
    protected = set(exact)  # exact-count codes are never distortion sources or targets

    # Catch-all coding
    for c in spec.catch_all:
        group = system.code_def(c.target_code).clinical_group
        sources = set(c.sources or system.group_members(group, latest)) - {c.target_code} - protected
        ii = inst_ids.index(c.institution_id)
        cand = [i for i in range(n) if inst[i] == ii and true[i] in sources and primary[i] == true[i]]
        for i, hit in zip(cand, rng.random(len(cand)) < c.excess_rate):
            if hit:
                primary[i] = c.target_code
                labels[i].add(DistortionLabel.CATCH_ALL)

    # Billing-guideline inflation
    for b in spec.billing_inflation:
        members = set(system.category_members(b.billing_category, latest))
        targets = sorted((members & set(codes)) - protected)
        groups = {system.code_def(c).clinical_group for c in members}
        donors = set(b.donors) if b.donors else {c for g in groups for c in system.group_members(g, latest)} - members
        donors -= protected
        insts = {inst_ids.index(i) for i in b.institutions} if b.institutions else set(range(len(inst_ids)))
        eligible = [i for i in range(n) if times[i] >= b.start_time and inst[i] in insts and primary[i] == true[i]]
        vol = np.array([sum(primary[i] == c for i in eligible) for c in targets], dtype=float)
        donor_idx = [i for i in eligible if true[i] in donors]
        if not donor_idx or not vol.sum():
            LOGGER.warning(f'{PREFIX}WARNING ⚠️ billing inflation on {b.billing_category} has no donor or base volume')
            continue
        f = min(1.0, (b.rate_multiplier - 1.0) * vol.sum() / len(donor_idx)) if b.rate_multiplier > 1 else 0.0
        hits = [i for i, h in zip(donor_idx, rng.random(len(donor_idx)) < f) if h]
        for i, d in zip(hits, rng.choice(len(targets), size=len(hits), p=_normalize(vol))):
            primary[i] = targets[d]
            labels[i].add(DistortionLabel.BILLING_INFLATION)

    # Late-reporting institutions code under an older version
    version = [latest] * n
    for i_id, v in sorted(spec.version_mix.items()):
        if v == latest:
            continue
        t = system.chain(v, latest)
        images = {}
        for a, _ in (t.mappings if t else ()):
            b = t.image(a)
            if b is not None:
                images.setdefault(b, []).append(a)
        back = {b: a[0] for b, a in images.items() if len(a) == 1}
        ii = inst_ids.index(i_id)
        for i in np.flatnonzero(inst == ii):
            version[i] = v
            primary[i] = back.get(primary[i], primary[i])
            labels[i].add(DistortionLabel.VERSION_LAG)

    # AI-influenced documentation
    tags = [None] * n
    ai = spec.ai_influence
    k = int(round(ai.fraction(quarter) * n))
    idx = np.sort(rng.choice(n, size=k, replace=False)) if k else []
    conf = rng.uniform(0.5, 1.0, size=k)
    modified = rng.random(k) < ai.modified_fraction
    for i, c, m in zip(idx, conf, modified):
        tags[i] = InfluenceTag(ai.model_version, float(round(c, 6)), bool(m))
        labels[i].add(DistortionLabel.AI_INFLUENCED)

    if ob:
        spill = {ob.code} | (siblings if ob.group_spill > 0 else set())
        for i in np.flatnonzero(ob_on):
            if true[i] in spill:
                labels[i].add(DistortionLabel.OUTBREAK)

    prefix = f'R{window.start:%Y%m%d}'
    records = []
    for i in range(n):
        r = make_record(record_id=f'{prefix}-{i:06d}',
                        patient_age_band=AGE_BANDS[ages[i]],
                        patient_sex=SEXES[sexes[i]],
                        institution_id=inst_ids[inst[i]],
                        encounter_time=times[i],
                        primary_code=primary[i],
                        co_codes=co[i],
                        version_tag=version[i],
                        influence_tag=tags[i])
        records.append(r)
        truth[r.record_id] = TruthEntry(true[i], frozenset(labels[i]) or frozenset({DistortionLabel.NONE}))
    LOGGER.info(f'{PREFIX}{n} records {window.start:%Y-%m-%d}..{window.end:%Y-%m-%d}, '
                f'{sum(p != t for p, t in zip(primary, true))} administratively distorted, {k} AI-influenced')
    return records, truth


def generate_quarter_series(system, spec, quarters, n_per_quarter, seed, start=None):
    # Consecutive quarterly batches; quarter q draws from an independent child seed and schedule[q]
    if quarters < 1:
        raise ValidationError(f'quarters={quarters}: expected a positive integer')
    window = start or _default_window(system)
    batches, truth = [], GroundTruth()
    for q, s in enumerate(spawn_seeds(seed, quarters)):
        records, t = generate_batch(system, spec, n_per_quarter, s, window=window, quarter=q)
        batches.append(records)
        truth.update(t)
        window = window.next_quarter()
    return batches, truth


def truth_path(path):
    path = Path(path)
    return path.with_name(f'{path.stem}.truth.jsonl')


def save_batch(path, records, truth):
    # Records to path, ground truth to the parallel <stem>.truth.jsonl keyed by record_id
    save_records(path, records)
    GroundTruth({r.record_id: truth[r.record_id] for r in records if r.record_id in truth}).save(truth_path(path))
    return path
