# OntoGuard, GPL-3.0 license
"""
Terminology releases as schema migrations: coverage validation before a version may be targeted
"""

import dataclasses
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

from core.codes import CodeSystem
from version_gate.gate import compose_tables
from utils.general import LOGGER, colorstr

PREFIX = colorstr('migration: ')


class MigrationVerdict(Enum):
    VALIDATED = 'Validated'
    BLOCKED = 'Blocked'


@dataclass(frozen=True)
class MigrationReport:
    from_version: str
    to_version: str
    mapping_coverage: float
    changed_codes: Tuple[str, ...]
    unmappable_codes: Tuple[str, ...]
    verdict: MigrationVerdict

    def to_dict(self):
        return {
            'from_version': self.from_version,
            'to_version': self.to_version,
            'mapping_coverage': self.mapping_coverage,
            'changed_codes': list(self.changed_codes),
            'unmappable_codes': list(self.unmappable_codes),
            'verdict': self.verdict.value}


def validate_migration(system, from_version, to_version, observed_codes, cfg=None):
    # Validated iff every observed code has a unique image, or every uncovered code is acknowledged in cfg
    a, b = system.version(from_version).version_label, system.version(to_version).version_label
    observed = sorted(set(observed_codes))
    table = compose_tables(system, a, b)
    if table is None:
        unmapped, changed = observed, []
    else:
        images = {c: table.image(c) for c in observed}
        unmapped = [c for c, i in images.items() if i is None]
        changed = [c for c, i in images.items() if i is not None and i != c]
    if table is None:
        coverage = 0.0
    else:
        coverage = 1.0 if not observed else (len(observed) - len(unmapped)) / len(observed)
    acknowledged = set(cfg.acknowledged_unmapped) if cfg is not None else set()
    ok = table is not None and (coverage == 1.0 or set(unmapped) <= acknowledged)
    report = MigrationReport(a, b, coverage, tuple(changed), tuple(unmapped),
                             MigrationVerdict.VALIDATED if ok else MigrationVerdict.BLOCKED)
    log = LOGGER.info if ok else LOGGER.warning
    log(f"{PREFIX}{'' if ok else 'WARNING ⚠️ '}{a}->{b} coverage {coverage:.4f}, {len(changed)} changed, "
        f"{len(unmapped)} unmappable: {report.verdict.value}")
    return report


def apply_migration(system: CodeSystem, report: MigrationReport):
    # Code system with the target version's validated flag set from the report
    versions = tuple(
        dataclasses.replace(v, validated=report.verdict is MigrationVerdict.VALIDATED) if v.version_label ==
        report.to_version else v for v in system.versions)
    return dataclasses.replace(system, versions=versions)
