# OntoGuard, GPL-3.0 license
"""
Data operations, verdicts, audit entries and the declarative rule-condition language
"""

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from numbers import Real
from typing import Callable, FrozenSet, Mapping, Optional, Tuple

import yaml

from core.records import parse_time
from utils import ValidationError

EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


class OpKind(Enum):
    INGEST = 'Ingest'
    TRAIN = 'Train'
    DEPLOY = 'Deploy'
    EXPORT = 'Export'
    PREDICT = 'Predict'

    @classmethod
    def parse(cls, s):
        if isinstance(s, cls):
            return s
        for m in cls:
            if str(s).lower() in (m.value.lower(), m.name.lower()):
                return m
        raise ValidationError(f'unknown operation {s!r}, choose from {[m.value for m in cls]}')


@dataclass(frozen=True)
class DataOperation:
    op_kind: OpKind
    context: Mapping = field(default_factory=dict)
    requested_at: datetime = EPOCH  # audit timestamp source, never the wall clock

    def __post_init__(self):
        object.__setattr__(self, 'op_kind', OpKind.parse(self.op_kind))
        object.__setattr__(self, 'requested_at', parse_time(self.requested_at))
        for k, v in self.context.items():
            if not isinstance(v, (str, Real)) and v is not None:
                raise ValidationError(f'context.{k}={v!r}: expected a string or number')


def parse_context(pairs):
    """
    ['k=v', ...] to a context mapping; values are read as YAML scalars

    >>> parse_context(['model_card_present=true', 'oversight_percentile=90', 'purpose=risk-prediction'])
    {'model_card_present': True, 'oversight_percentile': 90, 'purpose': 'risk-prediction'}
    """
    ctx = {}
    for p in pairs or ():
        k, sep, v = p.partition('=')
        if not sep or not k:
            raise ValidationError(f'context entry {p!r}: expected key=value')
        value = yaml.safe_load(v) if v else ''
        ctx[k.strip()] = value if isinstance(value, (str, Real)) else v
    return ctx


class Permit:
    rank = 0
    kind = 'Permit'

    def __eq__(self, other):
        return isinstance(other, Permit)

    def __hash__(self):
        return hash(self.kind)

    def __repr__(self):
        return 'Permit()'

    def to_dict(self):
        return {'verdict': self.kind}


@dataclass(frozen=True)
class PermitWithConditions:
    conditions: Tuple[str, ...]
    rank = 1
    kind = 'PermitWithConditions'

    def __post_init__(self):
        object.__setattr__(self, 'conditions', tuple(self.conditions))
        if not self.conditions or not all(self.conditions):
            raise ValidationError('PermitWithConditions requires at least one non-empty condition')

    def to_dict(self):
        return {'verdict': self.kind, 'conditions': list(self.conditions)}


@dataclass(frozen=True)
class Deny:
    reason: str
    rank = 2
    kind = 'Deny'

    def __post_init__(self):
        if not self.reason:
            raise ValidationError('Deny requires a non-empty reason')

    def to_dict(self):
        return {'verdict': self.kind, 'reason': self.reason}


VERDICT_KINDS = ('Permit', 'PermitWithConditions', 'Deny')  # least to most restrictive


@dataclass(frozen=True)
class AuditEntry:
    regulation_id: str
    regulation_version: str
    provision: str
    reasoning: str
    adapter_id: str
    timestamp: str

    def __post_init__(self):
        for k, v in vars(self).items():
            if not v:
                raise ValidationError(f'audit entry: {k} must be non-empty')

    def to_dict(self):
        return dict(vars(self))


# Condition language --------------------------------------------------------------------------------------------------
def _key(args, op, n):
    if not isinstance(args, list) or len(args) != n or not isinstance(args[0], str):
        raise ValidationError(f'{op}: expected [key, value]' if n == 2 else f'{op}: expected a key')
    return args


def _compare(fn):
    def build(args, op):
        k, v = _key(args, op, 2)
        if isinstance(v, bool) or not isinstance(v, Real):
            raise ValidationError(f'{op}: {v!r} is not a number')
        return lambda ctx: isinstance(ctx.get(k), Real) and not isinstance(ctx.get(k), bool) and fn(ctx[k], v)

    return build


def _eq(args, op):
    k, v = _key(args, op, 2)
    return lambda ctx: k in ctx and ctx[k] == v


def _ne(args, op):
    k, v = _key(args, op, 2)
    return lambda ctx: k in ctx and ctx[k] != v


def _in(args, op):
    k, values = _key(args, op, 2)
    if not isinstance(values, list):
        raise ValidationError(f'{op}: expected [key, [values]]')
    return lambda ctx: k in ctx and ctx[k] in values


def _present(args, op):
    if not isinstance(args, str):
        raise ValidationError(f'{op}: expected a key')
    return lambda ctx: ctx.get(args) is not None


def _absent(args, op):
    present = _present(args, op)
    return lambda ctx: not present(ctx)


def _always(args, op):
    if args is not True:
        raise ValidationError(f'{op}: expected true')
    return lambda ctx: True


def _all(args, op):
    if not isinstance(args, list) or not args:
        raise ValidationError(f'{op}: expected a non-empty list of conditions')
    parts = [compile_predicate(p) for p in args]
    return lambda ctx: all(p(ctx) for p in parts)


def _any(args, op):
    if not isinstance(args, list) or not args:
        raise ValidationError(f'{op}: expected a non-empty list of conditions')
    parts = [compile_predicate(p) for p in args]
    return lambda ctx: any(p(ctx) for p in parts)


def _not(args, op):
    p = compile_predicate(args)
    return lambda ctx: not p(ctx)


OPERATORS = {
    'always': _always,
    'all': _all,
    'any': _any,
    'not': _not,
    'eq': _eq,
    'ne': _ne,
    'lt': _compare(lambda a, b: a < b),
    'le': _compare(lambda a, b: a <= b),
    'gt': _compare(lambda a, b: a > b),
    'ge': _compare(lambda a, b: a >= b),
    'in': _in,
    'present': _present,
    'absent': _absent}


def compile_predicate(p):
    # Single-operator mapping to a callable over the context; comparisons on missing keys are false
    if not isinstance(p, dict) or len(p) != 1:
        raise ValidationError(f'malformed condition {p!r}: expected a single-operator mapping')
    (op, args), = p.items()
    if op not in OPERATORS:
        raise ValidationError(f'malformed condition: unknown operator {op!r}')
    return OPERATORS[op](args, op)


class _Keep(dict):
    def __missing__(self, k):
        return '{' + k + '}'


def render(template, ctx):
    """
    >>> render('above the {oversight_percentile}th percentile', {'oversight_percentile': 90})
    'above the 90th percentile'
    """
    return template.format_map(_Keep(ctx))


@dataclass(frozen=True)
class Rule:
    rule_id: str
    when: Mapping
    verdict: str
    provision: str
    conditions: Tuple[str, ...] = ()
    reason: str = ''
    ops: Optional[FrozenSet[OpKind]] = None  # None applies to every operation
    test: Callable = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.verdict not in VERDICT_KINDS:
            raise ValidationError(f'rule {self.rule_id}: verdict {self.verdict!r} not in {VERDICT_KINDS}')
        if not self.provision:
            raise ValidationError(f'rule {self.rule_id}: provision required')
        if self.verdict == 'PermitWithConditions' and not self.conditions:
            raise ValidationError(f'rule {self.rule_id}: PermitWithConditions needs conditions')
        if self.verdict == 'Deny' and not self.reason:
            raise ValidationError(f'rule {self.rule_id}: Deny needs a reason')
        object.__setattr__(self, 'test', compile_predicate(self.when))

    @property
    def is_default(self):
        return self.ops is None and self.when == {'always': True}

    def matches(self, op):
        return (self.ops is None or op.op_kind in self.ops) and self.test(op.context)

    def verdict_for(self, ctx):
        if self.verdict == 'Deny':
            return Deny(render(self.reason, ctx))
        if self.verdict == 'PermitWithConditions':
            return PermitWithConditions(tuple(render(c, ctx) for c in self.conditions))
        return Permit()

    def describe(self):
        return json.dumps(self.when, sort_keys=True, separators=(',', ':'))


def rule_from_dict(d, i, where):
    if not isinstance(d, dict):
        raise ValidationError(f'{where}: rule {i} is not a mapping')
    ops = d.get('ops')
    try:
        return Rule(rule_id=str(d.get('id', f'r{i}')),
                    when=d.get('when', {}),
                    verdict=d.get('verdict', ''),
                    provision=d.get('provision', ''),
                    conditions=tuple(d.get('conditions', ())),
                    reason=d.get('reason', ''),
                    ops=frozenset(OpKind.parse(o) for o in ops) if ops else None)
    except ValidationError as e:
        raise ValidationError(f'{where}: {e}') from None
