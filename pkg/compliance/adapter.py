# OntoGuard, GPL-3.0 license
"""
Versioned, jurisdiction-tagged regulatory adapters and their most-restrictive-wins composition

Usage:
    adapters = [load_adapter(f) for f in ('ai-act-demo.json', 'mdr-demo.json', 'ehds-demo.json')]
    decision = compose(adapters, DataOperation('Deploy', {'model_card_present': True}))
"""

from dataclasses import dataclass
from typing import Tuple

from compliance.rules import AuditEntry, Deny, Permit, PermitWithConditions, Rule, rule_from_dict
from utils import ValidationError
from utils.general import LOGGER, check_file, colorstr, json_load, json_save

PREFIX = colorstr('compliance: ')


@dataclass(frozen=True)
class AdapterRuleSet:
    adapter_id: str
    jurisdiction: str
    regulation_id: str
    regulation_version: str
    rules: Tuple[Rule, ...]
    demo: bool = False
    description: str = ''

    def __post_init__(self):
        for k in 'adapter_id', 'jurisdiction', 'regulation_id', 'regulation_version':
            if not getattr(self, k):
                raise ValidationError(f'adapter: {k} must be non-empty')
        if not self.rules or not self.rules[-1].is_default:
            raise ValidationError(f'adapter {self.adapter_id}: rules must end with an unconditional default rule '
                                  f'(when: {{"always": true}}, no ops)')


@dataclass(frozen=True)
class Decision:
    verdict: object
    audit: Tuple[AuditEntry, ...]
    notes: Tuple[str, ...] = ()

    def to_dict(self):
        return {**self.verdict.to_dict(), 'audit': [a.to_dict() for a in self.audit], 'notes': list(self.notes)}


def adapter_from_dict(d, where='adapter'):
    if not isinstance(d, dict):
        raise ValidationError(f'{where}: expected a mapping')
    for k in 'adapter_id', 'jurisdiction', 'regulation_version', 'rules':
        if k not in d:
            raise ValidationError(f'{where}: missing key {k!r}')
    if not isinstance(d['rules'], list):
        raise ValidationError(f'{where}: rules must be a list')
    rules = tuple(rule_from_dict(r, i, where) for i, r in enumerate(d['rules']))
    return AdapterRuleSet(adapter_id=str(d['adapter_id']),
                          jurisdiction=str(d['jurisdiction']),
                          regulation_id=str(d.get('regulation_id', d['adapter_id'])),
                          regulation_version=str(d['regulation_version']),
                          rules=rules,
                          demo=bool(d.get('demo', False)),
                          description=str(d.get('description', '')))


def load_adapter(path):
    path = check_file(path, '.json')
    adapter = adapter_from_dict(json_load(path), str(path))
    if adapter.demo:
        LOGGER.info(f'{PREFIX}{adapter.adapter_id} {adapter.regulation_version} loaded (DEMO rule set, non-normative)')
    return adapter


def evaluate(adapter, op):
    # First matching rule fires; its provision is cited in the audit entry
    for rule in adapter.rules:
        if rule.matches(op):
            verdict = rule.verdict_for(op.context)
            audit = AuditEntry(regulation_id=adapter.regulation_id,
                               regulation_version=adapter.regulation_version,
                               provision=rule.provision,
                               reasoning=f'{op.op_kind.value}: rule {rule.rule_id} matched {rule.describe()} '
                                         f'-> {verdict.kind}',
                               adapter_id=adapter.adapter_id,
                               timestamp=op.requested_at.isoformat())
            return verdict, audit
    raise ValidationError(f'adapter {adapter.adapter_id}: no rule matched')  # unreachable for a total rule set


def compose(adapters, op):
    """
    Evaluate every adapter in order; the most restrictive verdict prevails (Deny > PermitWithConditions > Permit)

    Conditions of all PermitWithConditions verdicts are concatenated without duplicates in first-seen order.
    A Deny carries the reason of the first denying adapter. Every adapter contributes one audit entry.
    """
    adapters = list(adapters)
    if not adapters:
        raise ValidationError('compose: at least one adapter required')
    results = [evaluate(a, op) for a in adapters]
    audit = tuple(e for _, e in results)
    verdicts = [v for v, _ in results]
    notes = []
    denies = [(a, v) for a, v in zip(adapters, verdicts) if isinstance(v, Deny)]
    conditional = [(a, v) for a, v in zip(adapters, verdicts) if isinstance(v, PermitWithConditions)]
    if denies:
        verdict = denies[0][1]
        if len(denies) > 1:
            notes.append(f'{len(denies)} adapters denied: ' + '; '.join(f'{a.adapter_id}: {v.reason}' for a, v in denies))
    elif conditional:
        conditions = list(dict.fromkeys(c for _, v in conditional for c in v.conditions))
        verdict = PermitWithConditions(tuple(conditions))
        if len(conditional) > 1:
            notes.append(f'conditions from {", ".join(a.adapter_id for a, _ in conditional)} concatenated; '
                         f'conflicts between them are not resolved and need review')
    else:
        verdict = Permit()
    LOGGER.info(f'{PREFIX}{op.op_kind.value} -> {verdict.kind} across {len(adapters)} adapter(s)')
    return Decision(verdict, audit, tuple(notes))


def save_decision(path, decision):
    json_save(path, decision.to_dict())
    return path
