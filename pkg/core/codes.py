# OntoGuard, GPL-3.0 license
"""
Versioned code system: code definitions, terminology versions and transition tables

Usage:
    from core.codes import load_code_system
    system = load_code_system('data/codes/syn-icd.json')
    system.table('2024', '2025').image('SR73.0X')  # 'SR73.09'
"""

import json
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from types import MappingProxyType
from typing import Dict, Mapping, Optional, Tuple

from utils import ValidationError
from utils.general import check_file

CO_CODE_GROUPS = ('lab', 'medication', 'complication')  # clinical groups whose codes only appear as co-codes


@dataclass(frozen=True)
class CodeDef:
    code: str
    clinical_group: str
    billing_category: str
    description: str = ''

    def __post_init__(self):
        for k in 'code', 'clinical_group', 'billing_category':
            if not getattr(self, k):
                raise ValidationError(f'code definition {self.code or "?"}: {k} must be non-empty')


@dataclass(frozen=True)
class TerminologyVersion:
    system_id: str
    version_label: str
    release_date: date
    validated: bool = False


@dataclass(frozen=True)
class TransitionTable:
    from_version: str
    to_version: str
    mappings: Tuple[Tuple[str, str], ...] = ()
    unmappable: Tuple[str, ...] = ()
    _index: Mapping = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        index = {}
        for a, b in self.mappings:
            index.setdefault(a, []).append(b)
        object.__setattr__(self, '_index', MappingProxyType({k: tuple(v) for k, v in index.items()}))

    def image(self, code):
        # Unique target of code, None when unmappable, ambiguous (one-to-many) or absent from the table
        if code in self.unmappable:
            return None
        targets = self._index.get(code, ())
        return targets[0] if len(set(targets)) == 1 else None

    def compose(self, other):
        # self: A->B, other: B->C  =>  A->C, keeping only codes with a unique image through both hops
        if self.to_version != other.from_version:
            raise ValidationError(f'cannot chain {self.from_version}->{self.to_version} with '
                                  f'{other.from_version}->{other.to_version}')
        mappings, unmappable = [], []
        for a in sorted(set(self._index) | set(self.unmappable)):
            b = self.image(a)
            c = other.image(b) if b is not None else None
            if c is None:
                unmappable.append(a)
            else:
                mappings.append((a, c))
        return TransitionTable(self.from_version, other.to_version, tuple(mappings), tuple(unmappable))


@dataclass(frozen=True)
class CodeSystem:
    system_id: str
    versions: Tuple[TerminologyVersion, ...]
    codes_by_version: Mapping[str, Tuple[CodeDef, ...]]
    transition_tables: Mapping[Tuple[str, str], TransitionTable]
    taxonomies: Optional[Mapping] = None  # declared clinical_groups / billing_categories, None when inferred
    population: Optional[Mapping] = None  # synthgen age/sex weights
    profiles: Optional[Mapping] = None  # synthgen per-code prevalence, demographic multipliers, co-code rates
    _lookup: Mapping = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        lookup = {label: MappingProxyType({c.code: c for c in defs}) for label, defs in self.codes_by_version.items()}
        object.__setattr__(self, '_lookup', MappingProxyType(lookup))

    @property
    def labels(self):
        return tuple(v.version_label for v in self.versions)

    @property
    def latest(self):
        return self.versions[-1].version_label

    @property
    def release_calendar(self):
        return {v.version_label: v.release_date for v in self.versions}

    def version(self, label):
        for v in self.versions:
            if v.version_label == str(label):
                return v
        raise ValidationError(f'unknown version {label!r} for code system {self.system_id} (have {list(self.labels)})')

    def codes_in(self, label):
        # code -> CodeDef for one version
        self.version(label)
        return self._lookup.get(str(label), MappingProxyType({}))

    def code_def(self, code, version=None):
        # CodeDef from the given version, else from the newest version defining the code
        labels = [version] if version is not None else reversed(self.labels)
        for label in labels:
            d = self.codes_in(label).get(code)
            if d is not None:
                return d
        return None

    def primary_codes(self, label):
        return sorted(c for c, d in self.codes_in(label).items() if d.clinical_group not in CO_CODE_GROUPS)

    def co_codes(self, label):
        return sorted(c for c, d in self.codes_in(label).items() if d.clinical_group in CO_CODE_GROUPS)

    def group_members(self, group, label):
        return sorted(c for c, d in self.codes_in(label).items() if d.clinical_group == group)

    def category_members(self, category, label):
        return sorted(c for c, d in self.codes_in(label).items() if d.billing_category == category)

    def codes_with_group(self, groups, label):
        groups = {groups} if isinstance(groups, str) else set(groups)
        return frozenset(c for c, d in self.codes_in(label).items() if d.clinical_group in groups)

    def table(self, from_version, to_version):
        return self.transition_tables.get((str(from_version), str(to_version)))

    def chain(self, from_version, to_version):
        # Table from_version -> to_version composed hop by hop over adjacent versions, None if a hop is missing
        labels = self.labels
        i, j = labels.index(self.version(from_version).version_label), labels.index(self.version(to_version).version_label)
        if i == j:
            codes = tuple((c, c) for c in self.codes_in(labels[i]))
            return TransitionTable(labels[i], labels[i], codes)
        if i > j:
            return None
        t = self.table(labels[i], labels[i + 1])
        for k in range(i + 1, j):
            if t is None:
                return None
            nxt = self.table(labels[k], labels[k + 1])
            t = t.compose(nxt) if nxt is not None else None
        return t

    def changed_codes(self, label):
        # Codes of `label` introduced or renamed by the transition into it (identity rows excluded)
        i = self.labels.index(self.version(label).version_label)
        if i == 0:
            return frozenset()
        prev = self.labels[i - 1]
        changed = set(self.codes_in(label)) - set(self.codes_in(prev))
        t = self.table(prev, label)
        if t is not None:
            changed |= {b for a, b in t.mappings if a != b}
        return frozenset(changed)


def _parse_date(key, s):
    try:
        return date.fromisoformat(str(s))
    except ValueError:
        raise ValidationError(f'{key}: invalid date {s!r}') from None


def _require(d, key, where):
    if not isinstance(d, dict) or key not in d:
        raise ValidationError(f'{where}: missing key {key!r}')
    return d[key]


def code_system_from_dict(d, where='code system'):
    system_id = _require(d, 'system_id', where)
    versions, seen = [], set()
    for i, v in enumerate(_require(d, 'versions', where)):
        label = str(_require(v, 'label', f'{where} versions[{i}]'))
        if label in seen:
            raise ValidationError(f'{where}: duplicate version label {label!r}')
        seen.add(label)
        rd = _parse_date(f'versions[{i}].release_date', _require(v, 'release_date', f'{where} versions[{i}]'))
        versions.append(TerminologyVersion(system_id, label, rd, bool(v.get('validated', False))))
    if not versions:
        raise ValidationError(f'{where}: at least one version required')
    for a, b in zip(versions, versions[1:]):
        if not a.release_date < b.release_date:
            raise ValidationError(f'{where}: versions must be strictly ordered by release_date '
                                  f'({a.version_label} {a.release_date} >= {b.version_label} {b.release_date})')

    taxonomies = d.get('taxonomies')
    groups = set(taxonomies.get('clinical_groups', ())) if taxonomies else None
    categories = set(taxonomies.get('billing_categories', ())) if taxonomies else None

    raw_codes = _require(d, 'codes', where)
    codes_by_version = {}
    for label, defs in raw_codes.items():
        if label not in seen:
            raise ValidationError(f'{where}: codes given for unknown version {label!r}')
        out, dup = [], set()
        for c in defs:
            cd = CodeDef(c.get('code', ''), c.get('clinical_group', ''), c.get('billing_category', ''),
                         c.get('description', ''))
            if cd.code in dup:
                raise ValidationError(f'{where}: duplicate code {cd.code!r} in version {label}')
            dup.add(cd.code)
            if groups is not None and cd.clinical_group not in groups:
                raise ValidationError(f'{where}: {cd.code} clinical_group {cd.clinical_group!r} not declared')
            if categories is not None and cd.billing_category not in categories:
                raise ValidationError(f'{where}: {cd.code} billing_category {cd.billing_category!r} not declared')
            out.append(cd)
        codes_by_version[label] = tuple(out)
    for label in seen:
        codes_by_version.setdefault(label, ())

    tables = {}
    for i, t in enumerate(d.get('transitions', [])):
        a, b = str(_require(t, 'from', f'{where} transitions[{i}]')), str(_require(t, 'to', f'{where} transitions[{i}]'))
        for v in a, b:
            if v not in seen:
                raise ValidationError(f'{where}: transition table references unknown version {v!r}')
        if (a, b) in tables:
            raise ValidationError(f'{where}: duplicate transition table {a}->{b}')
        src, dst = {c.code for c in codes_by_version[a]}, {c.code for c in codes_by_version[b]}
        mappings = []
        for m in t.get('mappings', []):
            fc, tc = m.get('from_code'), m.get('to_code')
            if fc not in src:
                raise ValidationError(f'{where}: transition table {a}->{b} references unknown code {fc!r} in {a}')
            if tc not in dst:
                raise ValidationError(f'{where}: transition table {a}->{b} references unknown code {tc!r} in {b}')
            mappings.append((fc, tc))
        unmappable = tuple(t.get('unmappable', []))
        for c in unmappable:
            if c not in src:
                raise ValidationError(f'{where}: transition table {a}->{b} references unknown code {c!r} in {a}')
        tables[(a, b)] = TransitionTable(a, b, tuple(mappings), unmappable)

    profiles = d.get('profiles')
    if profiles is not None:
        known = {c.code for defs in codes_by_version.values() for c in defs}
        for code, p in profiles.items():
            if code not in known:
                raise ValidationError(f'{where}: profile for unknown code {code!r}')
            if not float(p.get('prevalence', 0)) >= 0:
                raise ValidationError(f'{where}: profiles.{code}.prevalence must be non-negative')
            for co, pr in p.get('co_codes', {}).items():
                if co not in known:
                    raise ValidationError(f'{where}: profiles.{code} references unknown co-code {co!r}')
                if not 0 <= float(pr) <= 1:
                    raise ValidationError(f'{where}: profiles.{code}.co_codes.{co}={pr} out of range [0, 1]')

    return CodeSystem(system_id=system_id,
                      versions=tuple(versions),
                      codes_by_version=MappingProxyType(codes_by_version),
                      transition_tables=MappingProxyType(tables),
                      taxonomies=taxonomies,
                      population=d.get('population'),
                      profiles=profiles)


def load_code_system(path):
    # Load and validate a code-system JSON file
    path = check_file(path, ('.json',))
    with open(path) as f:
        try:
            d = json.load(f)
        except json.JSONDecodeError as e:
            raise ValidationError(f'{path}: JSON parse failure: {e}') from e
    return code_system_from_dict(d, where=str(path))


def code_system_to_dict(system):
    d: Dict = {'system_id': system.system_id}
    if system.taxonomies is not None:
        d['taxonomies'] = system.taxonomies
    d['versions'] = [{
        'label': v.version_label,
        'release_date': v.release_date.isoformat(),
        'validated': v.validated} for v in system.versions]
    d['codes'] = {
        label: [{
            'code': c.code,
            'clinical_group': c.clinical_group,
            'billing_category': c.billing_category,
            'description': c.description} for c in defs]
        for label, defs in system.codes_by_version.items()}
    d['transitions'] = [{
        'from': t.from_version,
        'to': t.to_version,
        'mappings': [{
            'from_code': a,
            'to_code': b} for a, b in t.mappings],
        'unmappable': list(t.unmappable)} for t in system.transition_tables.values()]
    if system.population is not None:
        d['population'] = system.population
    if system.profiles is not None:
        d['profiles'] = system.profiles
    return d


def serialize_code_system(system):
    # Canonical text: serialize_code_system(load_code_system(f)) == open(f).read() for canonical files
    return json.dumps(code_system_to_dict(system), indent=2) + '\n'


def save_code_system(path, system):
    Path(path).write_text(serialize_code_system(system))
    return path
