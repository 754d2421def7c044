# OntoGuard, GPL-3.0 license
"""
Run a pipeline scenario over simulated quarters: gate, checkpoint, dual ontology, dormancy, breaker, feedback,
sentinel and compliance, in the five-layer order, with a structured run report

Usage:
    $ python scenario.py --scenario diabetes-walkthrough --seed 42
    $ python scenario.py --scenario data/scenarios/clean.yaml --seed 0 --plots
"""

import argparse
import contextlib
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Mapping, Optional, Tuple

FILE = Path(__file__).resolve()
ROOT = FILE.parents[0]  # OntoGuard root directory
if str(ROOT) not in sys.path:
    sys.path.append(str(ROOT))  # add ROOT to PATH
ROOT = Path(os.path.relpath(ROOT, Path.cwd()))  # relative

from breaker.influence import (AcceptanceModel, Breaker, Refusal, State, compute_stats, dashboard_row, retrain_gate,
                               save_dashboard, save_refusal, tag_outputs)
from checkpoint.fidelity import annotate_batch, fidelity_report, save_fidelity_report
from checkpoint.reference import build_reference_model
from compliance.adapter import compose, load_adapter, save_decision
from compliance.rules import DataOperation, OpKind
from core.codes import load_code_system
from core.config import PipelineConfig
from core.records import Layer, Window, save_records
from dormancy.classify import FeatureClass, classify_features, parse_condition, parse_conditions
from dormancy.store import DormantStore, check_activation, store_dormant
from dual_ontology.divergence import Scope, divergence, save_divergence
from dual_ontology.inference import infer_clinical_layer, layer_accuracy, load_overrides
from models.risk import OUTCOME_GROUP, ToyRiskModel
from sentinel.scan import DriftType, outbreak_signals, save_alerts, scan
from synthgen.distortions import DistortionSpec
from synthgen.generator import generate_quarter_series, save_batch
from utils import StageError, ValidationError
from utils.callbacks import Callbacks
from utils.general import (LOGGER, RUNS_DIR, Profile, check_file, check_yaml, colorstr, increment_path, json_save,
                           methods, print_args, spawn_seeds, yaml_load, yaml_save)
from utils.loggers import Loggers
from version_gate.gate import gate_batch, save_outcome
from version_gate.migration import validate_migration

PREFIX = colorstr('scenario: ')
STAGES = ('gate', 'checkpoint', 'dual_ontology', 'dormancy', 'breaker', 'retrain', 'feedback', 'sentinel', 'migration',
          'compliance', 'deploy')  # per-quarter order
LAYER_OF = {
    'gate': 1,
    'checkpoint': 1,
    'dual_ontology': 1,
    'dormancy': 2,
    'breaker': 3,
    'retrain': 3,
    'feedback': 3,
    'sentinel': 4,
    'migration': 4,
    'compliance': 5,
    'deploy': 5}
EXTERNAL = ('deploy', 'export')  # stages that must follow a compliance verdict in the same quarter
STATE_INDEX = {State.CLOSED: 0, State.WARNING: 1, State.OPEN: 2}
NO_ADAPTERS = {'verdict': 'none', 'audit': [], 'notes': []}  # quarters without adapters never deploy


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    code_system: str
    distortions: DistortionSpec
    quarters: int
    n_per_quarter: int
    config: PipelineConfig = PipelineConfig()
    adapters: Tuple[str, ...] = ()
    target_version: Optional[str] = None  # None targets the latest version
    start: Optional[Window] = None
    layer: Layer = Layer.ADMINISTRATIVE  # analytical layer for dormancy, sentinel and the risk model
    deploy_context: Mapping = field(default_factory=dict)
    significance: Mapping[str, str] = field(default_factory=dict)  # code -> clinical-significance note
    conditions: Mapping = field(default_factory=dict)  # code -> activation conditions
    events: Mapping = field(default_factory=dict)  # quarter -> external events (e.g. domain transfer requests)
    acceptance: AcceptanceModel = AcceptanceModel()
    carry_feedback: bool = False  # quarter q's documented suggestions join quarter q+1's training cohort
    overrides: Optional[str] = None
    expect: Tuple[Mapping, ...] = ()


@dataclass(frozen=True)
class TraceEntry:
    quarter: int
    layer: int
    stage: str

    def to_dict(self):
        return {'quarter': self.quarter, 'layer': self.layer, 'stage': self.stage}


@dataclass
class RunReport:
    name: str
    seed: int
    quarters: List[dict] = field(default_factory=list)
    trace: List[TraceEntry] = field(default_factory=list)
    assertions: List[dict] = field(default_factory=list)
    save_dir: Optional[Path] = None  # not serialized, reports stay identical across run directories

    @property
    def passed(self):
        return all(a['pass'] for a in self.assertions)

    def to_dict(self):
        return {
            'name': self.name,
            'seed': self.seed,
            'quarters': self.quarters,
            'trace': [t.to_dict() for t in self.trace],
            'assertions': self.assertions,
            'passed': self.passed}

    def summary(self):
        s = [f'scenario {self.name} seed {self.seed}']
        for q in self.quarters:
            g, b = q['gate'], q['breaker']
            s.append(f"Q{q['quarter']} {q['window']['start'][:10]}: accepted {g['accepted']}, reconciled "
                     f"{g['reconciled']}, quarantined {g['quarantined']} | fidelity mean {q['fidelity_mean']:.4f} | "
                     f"disagreement {q['divergence']['disagreement_rate']:.4f} | dormant {len(q['dormancy']['dormant'])}, "
                     f"activations {len(q['dormancy']['activations'])} | alerts {len(q['alerts'])} | AI ratio "
                     f"{b['ratio']:.4f} {b['state']} | {q['compliance']['verdict']} | deployed {q['deployed']}")
            for a in q['alerts']:
                s.append(f"    {a['code']} divergence {a['divergence']:.4f} {a['drift_type']} "
                         f"(confidence {a['confidence']:.2f}, {a['evidence']['billing_category']})")
        for a in self.assertions:
            s.append(f"{'PASS' if a['pass'] else 'FAIL'} {a['check']}: expected {a['expected']!r}, "
                     f"observed {a['observed']!r}")
        return '\n'.join(s) + '\n'

    def save(self, save_dir=None):
        save_dir = Path(save_dir or self.save_dir)
        json_save(save_dir / 'report.json', self.to_dict())
        (save_dir / 'summary.txt').write_text(self.summary())
        return save_dir / 'report.json'


def scenario_file(name):
    # Bundled scenario name or a path to a scenario YAML
    p = Path(str(name))
    if p.suffix not in ('.yaml', '.yml'):
        p = p.with_suffix('.yaml')
    return check_yaml(p)


def load_scenario(file):
    file = scenario_file(file)
    d = yaml_load(file) or {}
    known = {f for f in ScenarioSpec.__dataclass_fields__} | {'description'}
    unknown = sorted(set(d) - known)
    if unknown:
        raise ValidationError(f'{file}: unknown scenario key(s) {unknown}')
    for k in 'code_system', 'quarters', 'n_per_quarter':
        if k not in d:
            raise ValidationError(f'{file}: missing key {k!r}')
    cfg = PipelineConfig.from_dict(d.get('config'))
    quarters, n = d['quarters'], d['n_per_quarter']
    for k, v in ('quarters', quarters), ('n_per_quarter', n):
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            raise ValidationError(f'{file}: {k}={v!r}: expected a positive integer')
    carry = d.get('carry_feedback', False)
    if not isinstance(carry, bool):
        raise ValidationError(f'{file}: carry_feedback={carry!r}: expected true or false')
    significance = d.get('significance') or {}
    if not isinstance(significance, dict):
        significance = {str(c): 'clinically significant (configured)' for c in significance}
    conditions = parse_conditions(d.get('conditions'), cfg)
    events = {int(q): [parse_condition(e, cfg) for e in v] for q, v in (d.get('events') or {}).items()}
    return ScenarioSpec(name=str(d.get('name', Path(file).stem)),
                        code_system=check_file(d['code_system'], '.json'),
                        distortions=DistortionSpec.from_dict(d.get('distortions')),
                        quarters=quarters,
                        n_per_quarter=n,
                        config=cfg,
                        adapters=tuple(check_file(a, '.json') for a in d.get('adapters') or ()),
                        target_version=str(d['target_version']) if d.get('target_version') else None,
                        start=Window.from_dict(d['start']) if d.get('start') else None,
                        layer=Layer.parse(d.get('layer', 'Administrative')),
                        deploy_context=dict(d.get('deploy_context') or {}),
                        significance={str(k): str(v) for k, v in significance.items()},
                        conditions=conditions,
                        events=events,
                        acceptance=AcceptanceModel(**(d.get('acceptance') or {})),
                        carry_feedback=carry,
                        overrides=check_file(d['overrides'], '.jsonl') if d.get('overrides') else None,
                        expect=tuple(d.get('expect') or ()))


def check_trace(trace):
    """
    Violations of the per-quarter dataflow order; an empty list means the trace conforms

    Stages run in STAGES order within a quarter, quarters never go back, the sentinel only looks at quarters
    whose Layers 1-3 completed, and every external stage follows a compliance verdict of the same quarter.
    """
    problems = []
    last_q, last_i, seen = 0, -1, set()
    for t in trace:
        if t.stage not in LAYER_OF:
            problems.append(f'Q{t.quarter}: unknown stage {t.stage!r}')
            continue
        if t.layer != LAYER_OF[t.stage]:
            problems.append(f'Q{t.quarter}: {t.stage} recorded on layer {t.layer}, expected {LAYER_OF[t.stage]}')
        if t.quarter < last_q:
            problems.append(f'Q{t.quarter}: {t.stage} after quarter {last_q}')
            continue
        if t.quarter > last_q:
            last_q, last_i, seen = t.quarter, -1, set()
        i = STAGES.index(t.stage)
        if i < last_i:
            problems.append(f'Q{t.quarter}: {t.stage} after {STAGES[last_i]}')
        if t.stage == 'sentinel' and not {'gate', 'checkpoint', 'dual_ontology', 'breaker'} <= seen:
            problems.append(f'Q{t.quarter}: sentinel before the quarter completed Layers 1-3')
        if t.stage in EXTERNAL and 'compliance' not in seen:
            problems.append(f'Q{t.quarter}: {t.stage} without a preceding compliance verdict')
        last_i = max(last_i, i)
        seen.add(t.stage)
    return problems


# Expected-outcome checks: each returns (expected, observed, pass) -------------------------------------------------
def _quarter(report, a):
    q = int(a.get('quarter', len(report.quarters)))
    if not 1 <= q <= len(report.quarters):
        raise ValidationError(f"expect.{a['check']}: quarter {q} not simulated")
    return report.quarters[q - 1]


def _equal(expected, observed, tol=1e-9):
    if isinstance(expected, (int, float)) and isinstance(observed, (int, float)):
        return math.isclose(expected, observed, rel_tol=0, abs_tol=tol)
    return expected == observed


def _check_reconciled(report, a):
    n = _quarter(report, a)['gate']['reconciled']
    return a['equals'], n, n == a['equals']


def _check_quarantined(report, a):
    n = _quarter(report, a)['gate']['quarantined']
    return a['equals'], n, n == a['equals']


def _check_dormant(report, a):
    entry = _quarter(report, a)['dormancy']['dormant'].get(a['code'])
    observed = None if entry is None else {'count': entry['count'], 'conditions': len(entry['activation_conditions'])}
    expected = {'count': a['equals'], 'conditions': a.get('conditions', observed and observed['conditions'])}
    return expected, observed, observed == expected


def _check_ratio(report, a):
    r = _quarter(report, a)['breaker']['ratio']
    return a['equals'], r, _equal(a['equals'], r)


def _check_state(report, a):
    s = _quarter(report, a)['breaker']['state']
    return a['equals'], s, s == a['equals']


def _check_history(report, a):
    h = [r for _, r in _quarter(report, a)['breaker']['history']]
    return a['equals'], h, len(h) == len(a['equals']) and all(_equal(x, y) for x, y in zip(a['equals'], h))


def _check_drift(report, a):
    # At least one alert on the code with the drift type (and evidence key) in any of the listed quarters
    hits = []
    for q in report.quarters:
        for al in q['alerts']:
            if al['code'] == a['code'] and al['drift_type'] == a['type'] and \
                    (not a.get('evidence') or al['evidence'].get(a['evidence'])):
                hits.append(q['quarter'])
    expected = f"{a['type']} on {a['code']}"
    return expected, hits, len(hits) >= int(a.get('min_quarters', 1))


def _check_no_alerts(report, a):
    n = sum(len(q['alerts']) for q in report.quarters)
    return 0, n, n == 0


def _check_verdict(report, a):
    c = _quarter(report, a)['compliance']
    ok = c['verdict'] == a['equals'] and all(x in c.get('conditions', []) for x in a.get('contains', []))
    ok &= 'audit_entries' not in a or len(c['audit']) == a['audit_entries']
    return {'verdict': a['equals'], 'contains': a.get('contains', [])}, c['verdict'], ok


def _check_divergence(report, a):
    rates = [q['divergence']['disagreement_rate'] for q in report.quarters]
    if 'quarter' in a:
        rates = [_quarter(report, a)['divergence']['disagreement_rate']]
    return a['equals'], rates, all(_equal(a['equals'], r) for r in rates)


def _check_lift(report, a):
    q = _quarter(report, a)
    acc = q['accuracy']
    return 'Clinical > Administrative', acc, acc['Clinical'] > acc['Administrative']


def _check_states(report, a):
    # One state for every quarter, or a list with one state per quarter
    states = [q['breaker']['state'] for q in report.quarters]
    if isinstance(a['equals'], list):
        return a['equals'], states, states == a['equals']
    return a['equals'], states, all(s == a['equals'] for s in states)


CHECKS = {
    'reconciled': _check_reconciled,
    'quarantined': _check_quarantined,
    'dormant': _check_dormant,
    'influence_ratio': _check_ratio,
    'breaker_state': _check_state,
    'breaker_states': _check_states,
    'influence_history': _check_history,
    'drift_alert': _check_drift,
    'no_alerts': _check_no_alerts,
    'deploy_verdict': _check_verdict,
    'divergence': _check_divergence,
    'layer_lift': _check_lift}


def evaluate_expectations(report, expect):
    out = []
    for a in expect:
        if a.get('check') not in CHECKS:
            raise ValidationError(f"unknown expectation {a.get('check')!r}, choose from {sorted(CHECKS)}")
        expected, observed, ok = CHECKS[a['check']](report, a)
        out.append({'check': a['check'], 'expected': expected, 'observed': observed, 'pass': bool(ok)})
    return out


def run_scenario(spec, seed, save_dir, callbacks=Callbacks()):
    """
    Simulate spec.quarters quarters and run every stage once per quarter in the five-layer order

    Arguments:
        spec: ScenarioSpec
        seed: integer seed, the report is a pure function of (spec, seed)
        save_dir: run directory, per-quarter artifacts go to save_dir/q<k>/
        callbacks: Callbacks fired on_run_start, on_quarter_start, on_stage_end, on_quarter_end, on_run_end
    Returns:
        RunReport, with assertion results when spec.expect is set
    """
    save_dir = Path(save_dir)
    cfg = spec.config
    system = load_code_system(spec.code_system)
    target = system.version(spec.target_version or system.latest).version_label
    adapters = [load_adapter(a) for a in spec.adapters]
    overrides = load_overrides(spec.overrides) if spec.overrides else None
    outcome_codes = system.group_members(OUTCOME_GROUP, target)
    report = RunReport(spec.name, seed, save_dir=save_dir)
    callbacks.run('on_run_start', spec.name, seed)

    batches, truth = generate_quarter_series(system, spec.distortions, spec.quarters, spec.n_per_quarter, seed,
                                             spec.start)
    feedback_seeds = spawn_seeds([seed, 1], spec.quarters)
    breaker = Breaker(cfg)
    store = DormantStore(save_dir / 'dormant_store.json')
    ref = model = baseline = None
    history, dashboard, prev_alerts, carried = (), [], [], []

    for q, batch in enumerate(batches, 1):
        qdir = save_dir / f'q{q}'
        qdir.mkdir(parents=True, exist_ok=True)
        window = Window(min(r.encounter_time for r in batch), max(r.encounter_time for r in batch))
        window = Window.quarter(window.start.year, (window.start.month - 1) // 3 + 1)
        callbacks.run('on_quarter_start', q)
        save_batch(qdir / 'batch.jsonl', batch, truth)
        dt = {}

        @contextlib.contextmanager
        def stage(name):
            # Times the stage, records it in the trace, surfaces failures as StageError(name, quarter)
            with Profile() as p:
                try:
                    yield
                except StageError:
                    raise
                except Exception as e:
                    raise StageError(name, q, str(e)) from e
            dt[name] = p.t
            report.trace.append(TraceEntry(q, LAYER_OF[name], name))
            callbacks.run('on_stage_end', q, LAYER_OF[name], name)

        # Layer 1: ingestion
        with stage('gate'):
            outcome = gate_batch(batch, system, target, cfg)
            save_outcome(qdir / 'gate', outcome)
            gated = outcome.records
        with stage('checkpoint'):
            if ref is None:
                ref = build_reference_model(gated, layer=Layer.ADMINISTRATIVE, vocabulary=system.primary_codes(target),
                                            co_vocabulary=system.co_codes(target))
            annotated = annotate_batch(gated, ref, cfg)
            fidelity = fidelity_report(annotated)
            save_fidelity_report(qdir / 'fidelity.csv', fidelity)
        with stage('dual_ontology'):
            dual = infer_clinical_layer(annotated, ref, system, cfg, overrides)
            population = divergence(dual, Scope.POPULATION)[0]
            save_divergence(qdir / 'divergence.csv', divergence(dual, Scope.INSTITUTION))
            save_records(qdir / 'records.jsonl', dual)
            accuracy = {l.value: layer_accuracy(dual, truth, layer=l) for l in Layer}

        # Layer 2: dormancy-aware features
        with stage('dormancy'):
            classes = classify_features(dual, spec.significance, cfg, layer=spec.layer)
            store_dormant(classes, dual, spec.conditions, layer=spec.layer, significance=spec.significance, store=store)
            store.save()
            events = outbreak_signals(prev_alerts) + list(spec.events.get(q, ()))
            activations = check_activation(store, dual, events, layer=spec.layer)

        # Layer 3: model lifecycle
        with stage('breaker'):
            cohort = dual + carried
            stats = compute_stats(cohort, history, cohort_id=f'{spec.name}-Q{q}', period=f'Q{q}')
            history = stats.history
            state = breaker.update(stats)
            dashboard.append(dashboard_row(stats, state))
            save_dashboard(save_dir / 'influence.csv', dashboard)
            notes = [f"TypeB drift on {a.code} ({a.evidence['billing_category']}) in Q{q - 1}" for a in prev_alerts
                     if a.drift_type is DriftType.TYPE_B]
        with stage('retrain'):
            refusal = None
            if state.state is State.OPEN:
                if model is None:
                    refusal = Refusal(stats.cohort_id, 'none', stats, state, tuple(notes))
                else:
                    refusal = retrain_gate(state, cohort, model, stats, notes)
                save_refusal(qdir / 'refusal.json', refusal)
            elif model is None:
                model = ToyRiskModel.fit(cohort, outcome_codes, stats.cohort_id, layer=spec.layer)
            else:
                model = retrain_gate(state, cohort, model, stats, notes)
        with stage('feedback'):
            feedback = tag_outputs(model.predict(dual), spec.acceptance, feedback_seeds[q - 1]) if model else []
            save_records(qdir / 'feedback.jsonl', feedback)
        n_carried, carried = len(carried), feedback if spec.carry_feedback else []

        # Layer 4: drift monitoring against the first quarter
        alerts = []
        if baseline is None:
            baseline = dual
        else:
            with stage('sentinel'):
                alerts = scan(baseline, dual, system, None, cfg, layer=spec.layer)
                save_alerts(qdir / 'alerts.jsonl', alerts)
            migrations = []
            type_c = [a for a in alerts if a.drift_type is DriftType.TYPE_C]
            if type_c:
                with stage('migration'):
                    by_version = {}
                    for a in type_c:
                        by_version.setdefault(a.evidence['release']['version'], []).append(a.code)
                    for v, codes in sorted(by_version.items()):
                        i = system.labels.index(v)
                        if i:
                            prev = system.labels[i - 1]
                            t = system.table(prev, v)
                            sources = {a for a, b in (t.mappings if t else ()) if b in codes}
                            sources |= {c for c in codes if c in system.codes_in(prev)}  # pre-images of the alerts
                            migrations.append(validate_migration(system, prev, v, sources, cfg).to_dict())
                    json_save(qdir / 'migration.json', migrations)
        prev_alerts = alerts

        # Layer 5: compliance wraps deployment
        with stage('compliance'):
            op = DataOperation(OpKind.DEPLOY, dict(spec.deploy_context), requested_at=window.end)
            decision = compose(adapters, op) if adapters else None
            if decision:
                save_decision(qdir / 'compliance.json', decision)
        deployed = None
        if model is not None and refusal is None and decision is not None and decision.verdict.kind != 'Deny':
            with stage('deploy'):
                model.save(qdir / 'model.json')
                deployed = model.model_version

        below = sum(r.fidelity.score < cfg.clinical_inference_cutoff for r in annotated)
        entries = {c: store[c].to_dict() for c in sorted(store.entries)}
        quarter = {
            'quarter': q,
            'window': window.to_dict(),
            'gate': outcome.summary(),
            'fidelity_report': f'q{q}/fidelity.csv',
            'fidelity_mean': float(fidelity['mean'].mul(fidelity['n']).sum() / max(1, fidelity['n'].sum())),
            'below_cutoff': below,
            'divergence': {'disagreement_rate': population.disagreement_rate, 'n': population.n,
                           'report': f'q{q}/divergence.csv'},
            'accuracy': accuracy,
            'dormancy': {
                'classes': {k.value: sum(v is k for v in classes.values()) for k in FeatureClass},
                'dormant': entries,
                'pruned': sorted(c for c, v in classes.items() if v is FeatureClass.PRUNED),
                'activations': [a.to_dict() for a in activations]},
            'alerts': [a.to_dict() for a in alerts],
            'breaker': {**stats.to_dict(), 'state': state.state.value, 'reason': state.reason, 'notes': notes,
                        'refusal': f'q{q}/refusal.json' if refusal else None},
            'model_version': model.model_version if model else None,
            'feedback_records': len(feedback),
            'feedback_carried': n_carried,
            'compliance': {**decision.to_dict(), 'path': f'q{q}/compliance.json'} if decision else NO_ADAPTERS,
            'deployed': deployed}
        report.quarters.append(quarter)
        vals = [len(outcome.accepted), len(outcome.reconciled), len(outcome.quarantined), quarter['fidelity_mean'],
                below / max(1, len(annotated)), population.disagreement_rate, len(entries), len(activations),
                len(alerts), stats.ratio, STATE_INDEX[state.state], decision.verdict.rank if decision else -1]
        callbacks.run('on_quarter_end', vals, q)
        LOGGER.info(f"{PREFIX}Q{q} done ({', '.join(f'{k} {v:.1f}s' for k, v in dt.items())})")

    problems = check_trace(report.trace)
    if problems:
        raise StageError('trace', None, '; '.join(problems))
    report.assertions = evaluate_expectations(report, spec.expect)
    report.save(save_dir)
    callbacks.run('on_run_end', spec.quarters)
    failed = [a for a in report.assertions if not a['pass']]
    if failed:
        raise StageError('assertions', None, '; '.join(f"{a['check']} expected {a['expected']!r} observed "
                                                       f"{a['observed']!r}" for a in failed))
    return report


def run(
        scenario='diabetes-walkthrough',  # bundled scenario name or scenario.yaml path
        seed=42,  # global seed
        project=RUNS_DIR / 'scenario',  # save to project/name
        name=None,  # save to project/name, defaults to the scenario name
        exist_ok=False,  # existing project/name ok, do not increment
        plots=False,  # save plots
):
    spec = load_scenario(scenario)
    save_dir = increment_path(Path(project) / (name or spec.name), exist_ok=exist_ok, mkdir=True)
    yaml_save(save_dir / 'opt.yaml', {'scenario': str(scenario), 'seed': seed, 'plots': plots})
    callbacks = Callbacks()
    loggers = Loggers(save_dir=save_dir, plots=plots, threshold=spec.config.breaker_threshold)
    for k in methods(loggers):
        callbacks.register_action(k, callback=getattr(loggers, k))
    report = run_scenario(spec, seed, save_dir, callbacks)
    LOGGER.info(f'{PREFIX}{len(report.assertions)} expectation(s) passed, report {save_dir / "report.json"}')
    return report


def parse_opt(known=False):
    parser = argparse.ArgumentParser()
    parser.add_argument('--scenario', type=str, default='diabetes-walkthrough', help='scenario name or yaml path')
    parser.add_argument('--seed', type=int, default=42, help='global seed')
    parser.add_argument('--project', default=RUNS_DIR / 'scenario', help='save to project/name')
    parser.add_argument('--name', default=None, help='save to project/name, defaults to the scenario name')
    parser.add_argument('--exist-ok', action='store_true', help='existing project/name ok, do not increment')
    parser.add_argument('--plots', action='store_true', help='save plots')
    opt = parser.parse_known_args()[0] if known else parser.parse_args()
    print_args(vars(opt))
    return opt


def main(opt):
    run(**vars(opt))


if __name__ == '__main__':
    opt = parse_opt()
    main(opt)
