# OntoGuard, GPL-3.0 license
"""
Terminology version gate: accept, reconcile through transition tables, or quarantine with a reason
"""

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import List, Tuple

from core.records import CodedRecord, record_to_dict
from utils import ValidationError
from utils.general import LOGGER, colorstr, jsonl_save

PREFIX = colorstr('version gate: ')


class QuarantineReason(Enum):
    UNMAPPABLE_CODE = 'UnmappableCode'
    UNVALIDATED_VERSION = 'UnvalidatedVersion'
    UNKNOWN_CODE = 'UnknownCode'


@dataclass
class GateOutcome:
    accepted: List[CodedRecord] = field(default_factory=list)
    reconciled: List[Tuple[CodedRecord, str, str]] = field(default_factory=list)  # (record, original_code, original_version)
    quarantined: List[Tuple[CodedRecord, QuarantineReason]] = field(default_factory=list)

    def __len__(self):
        return len(self.accepted) + len(self.reconciled) + len(self.quarantined)

    @property
    def records(self):
        # Records passed downstream, in the gate's output order
        return self.accepted + [r for r, _, _ in self.reconciled]

    def summary(self):
        reasons = {}
        for _, why in self.quarantined:
            reasons[why.value] = reasons.get(why.value, 0) + 1
        return {
            'accepted': len(self.accepted),
            'reconciled': len(self.reconciled),
            'quarantined': len(self.quarantined),
            'quarantine_reasons': dict(sorted(reasons.items()))}


def is_valid_target(system, version, cfg=None):
    v = system.version(version)
    return v.validated or (cfg is not None and v.version_label in cfg.acknowledged_versions)


def compose_tables(system, from_version, to_version):
    # Transitive one-hop chaining of adjacent tables; one-to-many steps become unmappable
    return system.chain(from_version, to_version)


def gate_batch(batch, system, target_version, cfg):
    """
    Route every record: accepted (already on target), reconciled (older validated version, unique image)
    or quarantined (UnknownCode, UnvalidatedVersion, UnmappableCode). Cardinality is conserved.
    """
    target = system.version(target_version).version_label  # raises 'unknown version'
    if not is_valid_target(system, target, cfg):
        raise ValidationError(f'target version {target} is not validated; validate the migration or acknowledge it')
    target_codes = system.codes_in(target)
    labels = system.labels
    tables = {}
    out = GateOutcome()
    for r in batch:
        v = r.version_tag
        if v == target:
            if r.primary_code in target_codes:
                out.accepted.append(r)
            else:
                out.quarantined.append((r, QuarantineReason.UNKNOWN_CODE))
            continue
        if v not in labels or not is_valid_target(system, v, cfg):
            out.quarantined.append((r, QuarantineReason.UNVALIDATED_VERSION))
            continue
        if r.primary_code not in system.codes_in(v):
            out.quarantined.append((r, QuarantineReason.UNKNOWN_CODE))
            continue
        if v not in tables:
            tables[v] = compose_tables(system, v, target)
        image = tables[v].image(r.primary_code) if tables[v] is not None else None
        if image is None:
            out.quarantined.append((r, QuarantineReason.UNMAPPABLE_CODE))
        else:
            out.reconciled.append((r.replace(primary_code=image, version_tag=target), r.primary_code, v))
    s = out.summary()
    LOGGER.info(f"{PREFIX}target {target}: accepted {s['accepted']}, reconciled {s['reconciled']}, "
                f"quarantined {s['quarantined']}")
    if s['quarantined']:
        LOGGER.warning(f"{PREFIX}WARNING ⚠️ {s['quarantined']} record(s) quarantined {s['quarantine_reasons']}")
    return out


def save_outcome(save_dir, outcome):
    # accepted.jsonl, reconciled.jsonl and quarantine.jsonl; quarantine rows keep the original code and version
    save_dir = Path(save_dir)
    save_dir.mkdir(parents=True, exist_ok=True)
    jsonl_save(save_dir / 'accepted.jsonl', (record_to_dict(r) for r in outcome.accepted))
    jsonl_save(save_dir / 'reconciled.jsonl', ({
        'record': record_to_dict(r),
        'original_code': c,
        'original_version': v} for r, c, v in outcome.reconciled))
    jsonl_save(save_dir / 'quarantine.jsonl', ({
        'record': record_to_dict(r),
        'reason': why.value,
        'original_code': r.primary_code,
        'original_version': r.version_tag} for r, why in outcome.quarantined))
    return save_dir
