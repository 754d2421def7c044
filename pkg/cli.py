# OntoGuard, GPL-3.0 license
"""
Command-line entry point: one subcommand per pipeline stage plus the scenario harness and the oracles

Usage:
    $ python cli.py synth generate --scenario diabetes-walkthrough --seed 42 --save-dir runs/synth/dm
    $ python cli.py gate --input runs/synth/dm/q1.jsonl --target-version 2025
    $ python cli.py fidelity-report --input runs/gate/exp/records.jsonl
    $ python cli.py infer-clinical --input runs/fidelity/exp/annotated.jsonl --truth runs/synth/dm/q1.truth.jsonl
    $ python cli.py dormancy classify --input records.jsonl --significance diabetes-walkthrough --layer Clinical
    $ python cli.py dormancy activate --input q2.jsonl --store runs/dormancy/exp/dormant.json --event domain_transfer=endocrinology
    $ python cli.py drift-scan --baseline q1.jsonl --current q2.jsonl
    $ python cli.py breaker check --input q1.jsonl q2.jsonl q3.jsonl
    $ python cli.py breaker sweep --input q1.jsonl q2.jsonl q3.jsonl --thresholds 0.05 0.1 0.15
    $ python cli.py comply-check --op deploy --context model_card_present=true oversight_percentile=90
    $ python cli.py scenario run diabetes-walkthrough --seed 42
    $ python cli.py oracle run partition --input q1.jsonl --outcome runs/gate/exp

Exit status: 0 on success, 1 on a validation error (bad input, unknown flag), 2 on a stage error.
"""

import argparse
import sys
from datetime import datetime
from pathlib import Path

FILE = Path(__file__).resolve()
ROOT = FILE.parents[0]  # OntoGuard root directory
if str(ROOT) not in sys.path:
    sys.path.append(str(ROOT))  # add ROOT to PATH

from breaker.influence import Breaker, compute_stats, dashboard_row, save_dashboard, sweep
from checkpoint.fidelity import annotate_batch, fidelity_report, save_fidelity_report
from checkpoint.reference import build_reference_model
from compliance.adapter import compose, load_adapter, save_decision
from compliance.rules import DataOperation, parse_context
from core.codes import load_code_system
from core.config import load_config
from core.records import Layer, Window, load_records, parse_time, save_records
from dormancy.classify import classify_features, parse_condition, parse_conditions
from dormancy.store import DormantStore, check_activation, store_dormant
from dual_ontology.divergence import Scope, divergence, save_divergence
from dual_ontology.inference import infer_clinical_layer, layer_accuracy, load_overrides
from sentinel.scan import save_alerts, scan
from synthgen.distortions import DistortionSpec, GroundTruth
from synthgen.generator import generate_quarter_series, save_batch
from utils import StageError, ValidationError
from utils import oracles
from utils.general import LOGGER, RUNS_DIR, check_file, colorstr, increment_path, json_save, yaml_load
from version_gate.gate import gate_batch, save_outcome

CODE_SYSTEM = 'syn-icd.json'  # bundled synthetic code system
ADAPTERS = ('ai-act-demo.json', 'mdr-demo.json', 'ehds-demo.json')


class ArgumentParser(argparse.ArgumentParser):
    # Usage errors are validation errors: print usage, exit status 1 instead of argparse's 2
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ValidationError(f'{self.prog}: {message}')


def _save_dir(opt, stage):
    # Explicit --save-dir is used as is, otherwise runs/<stage>/exp, exp2, ...
    d = Path(opt.save_dir) if opt.save_dir else increment_path(RUNS_DIR / stage / 'exp')
    d.mkdir(parents=True, exist_ok=True)
    return d


def _layer(opt):
    layer = Layer.parse(opt.layer)
    print(f'layer: {layer.value}')
    return layer


def _records(path):
    return load_records(check_file(path, '.jsonl'))


def _scenario_dict(name):
    from scenario import scenario_file
    return yaml_load(scenario_file(name)) or {}


# Subcommands ----------------------------------------------------------------------------------------------------------
def synth_generate(opt):
    system = load_code_system(opt.code_system)
    d = _scenario_dict(opt.scenario) if opt.scenario else {}
    spec = DistortionSpec.from_dict(yaml_load(check_file(opt.distortions)) if opt.distortions else d.get('distortions'))
    spec.validate(system)
    quarters = opt.quarters or d.get('quarters', 1)
    n = opt.n or d.get('n_per_quarter', 1000)
    start = Window.from_dict(d['start']) if d.get('start') else None
    batches, truth = generate_quarter_series(system, spec, quarters, n, opt.seed, start)
    save_dir = _save_dir(opt, 'synth')
    for q, batch in enumerate(batches, 1):
        save_batch(save_dir / f'q{q}.jsonl', batch, truth)
    print(f'{quarters} batch(es) of {n} records written to {save_dir}')


def gate(opt):
    system = load_code_system(opt.code_system)
    cfg = load_config(opt.config)
    outcome = gate_batch(_records(opt.input), system, opt.target_version or system.latest, cfg)
    save_dir = _save_dir(opt, 'gate')
    save_outcome(save_dir, outcome)
    save_records(save_dir / 'records.jsonl', outcome.records)
    print(', '.join(f'{k} {v}' for k, v in outcome.summary().items()))


def fidelity(opt):
    system = load_code_system(opt.code_system)
    cfg = load_config(opt.config)
    print(f'layer: {Layer.ADMINISTRATIVE.value}')  # fidelity scores the administrative code
    batch = _records(opt.input)
    history = _records(opt.reference) if opt.reference else batch
    version = opt.target_version or system.latest
    ref = build_reference_model(history, layer=Layer.ADMINISTRATIVE, vocabulary=system.primary_codes(version),
                                co_vocabulary=system.co_codes(version))
    annotated = annotate_batch(batch, ref, cfg)
    save_dir = _save_dir(opt, 'fidelity')
    save_records(save_dir / 'annotated.jsonl', annotated)
    report = fidelity_report(annotated)
    save_fidelity_report(save_dir / 'fidelity.csv', report)
    print(report.to_string(index=False, float_format='%.4f'))


def infer_clinical(opt):
    print(f'layer: {Layer.CLINICAL.value}')  # populated here, compared against the administrative code
    system = load_code_system(opt.code_system)
    cfg = load_config(opt.config)
    batch = _records(opt.input)
    history = _records(opt.reference) if opt.reference else batch
    version = opt.target_version or system.latest
    ref = build_reference_model(history, layer=Layer.ADMINISTRATIVE, vocabulary=system.primary_codes(version),
                                co_vocabulary=system.co_codes(version))
    dual = infer_clinical_layer(batch, ref, system, cfg, load_overrides(opt.overrides) if opt.overrides else None)
    save_dir = _save_dir(opt, 'dual')
    save_records(save_dir / 'records.jsonl', dual)
    reports = divergence(dual, Scope.POPULATION) + divergence(dual, Scope.INSTITUTION)
    save_divergence(save_dir / 'divergence.csv', reports)
    print(f'disagreement rate {reports[0].disagreement_rate:.4f} over {reports[0].n} records')
    if opt.truth:
        truth = GroundTruth.load(check_file(opt.truth, '.jsonl'))
        for layer in Layer:
            print(f'layer: {layer.value} accuracy {layer_accuracy(dual, truth, layer=layer):.4f}')


def dormancy_classify(opt):
    layer = _layer(opt)
    cfg = load_config(opt.config)
    d = _scenario_dict(opt.significance)
    significance = d.get('significance') or {}
    batch = _records(opt.input)
    classes = classify_features(batch, significance, cfg, layer=layer)
    save_dir = _save_dir(opt, 'dormancy')
    store = DormantStore.load(opt.store) if opt.store and Path(opt.store).exists() else DormantStore(
        opt.store or save_dir / 'dormant.json')
    store_dormant(classes, batch, parse_conditions(d.get('conditions'), cfg), layer=layer, significance=significance,
                  store=store)
    store.save()
    json_save(save_dir / 'classes.json', {c: v.value for c, v in classes.items()})
    for c in sorted(store.entries):
        e = store[c]
        print(f'{c} dormant, count {e.count}, {len(e.activation_conditions)} activation condition(s)')


def dormancy_activate(opt):
    layer = _layer(opt)
    store = DormantStore.load(check_file(opt.store, '.json'))
    events = []
    for e in opt.event:
        k, _, v = e.partition('=')
        events.append(parse_condition({k: v}))
    activations = check_activation(store, _records(opt.input), events, layer=layer)
    save_dir = _save_dir(opt, 'dormancy')
    json_save(save_dir / 'activations.json', [a.to_dict() for a in activations])
    for a in activations:
        print(f'{a.code} activated: {a.condition.describe()} (prevalence {a.prevalence:.4f})')
    if not activations:
        print('no activations')


def drift_scan(opt):
    layer = _layer(opt)
    system = load_code_system(opt.code_system)
    cfg = load_config(opt.config)
    alerts = scan(_records(opt.baseline), _records(opt.current), system, None, cfg, layer=layer)
    save_dir = _save_dir(opt, 'sentinel')
    save_alerts(save_dir / 'alerts.jsonl', alerts)
    print(f'{len(alerts)} alert(s)')
    for a in alerts:
        print(f'{a.code} divergence {a.divergence:.4f} {a.drift_type.value} confidence {a.confidence:.2f}')


def _cohort_stats(opt):
    # One InfluenceStats per input cohort, each carrying the history of those before it
    stats, history = [], ()
    for i, f in enumerate(opt.input, 1):
        s = compute_stats(_records(f), history, cohort_id=opt.cohort, period=f'Q{i}')
        history = s.history
        stats.append(s)
    return stats


def breaker_check(opt):
    cfg = load_config(opt.config)
    if opt.threshold is not None:
        cfg = cfg.update(breaker_threshold=opt.threshold)
    breaker = Breaker(cfg)
    rows = []
    for s in _cohort_stats(opt):
        state = breaker.update(s)
        rows.append(dashboard_row(s, state))
        print(f'{rows[-1]["period"]} ratio {s.ratio:.4f} {state.state.value}: {state.reason}')
    save_dashboard(_save_dir(opt, 'breaker') / 'influence.csv', rows)


def breaker_sweep(opt):
    cfg = load_config(opt.config)
    df = sweep(_cohort_stats(opt)[-1], opt.thresholds, cfg)
    df.to_csv(_save_dir(opt, 'breaker') / 'sweep.csv', index=False, float_format='%.6f')
    print(df.to_string(index=False))


def comply_check(opt):
    adapters = [load_adapter(a) for a in (opt.adapter or ADAPTERS)]
    requested_at = parse_time(opt.requested_at) if opt.requested_at else datetime(1970, 1, 1)
    op = DataOperation(opt.op, parse_context(opt.context), requested_at=requested_at)
    decision = compose(adapters, op)
    save_decision(_save_dir(opt, 'compliance') / 'decision.json', decision)
    v = decision.verdict.to_dict()
    print(v['verdict'])
    for c in v.get('conditions', []):
        print(f'  condition: {c}')
    if 'reason' in v:
        print(f'  reason: {v["reason"]}')
    for a in decision.audit:
        print(f'  audit: {a.adapter_id} {a.regulation_version} {a.provision}')
    for n in decision.notes:
        print(f'  note: {n}')


def scenario_run(opt):
    import scenario
    print(f'layer: {scenario.load_scenario(opt.name).layer.value}')
    report = scenario.run(scenario=opt.name, seed=opt.seed, project=opt.project, name=opt.run_name,
                          exist_ok=opt.exist_ok, plots=opt.plots)
    print(report.summary(), end='')


def _need(opt, *keys):
    missing = [k for k in keys if getattr(opt, k) is None]
    if missing:
        raise ValidationError(f"oracle {opt.oracle}: missing {', '.join('--' + k.replace('_', '-') for k in missing)}")


def oracle_run(opt):
    if opt.oracle == 'jsd':
        _need(opt, 'p', 'q', 'expected')
        p, q = [float(x) for x in opt.p], [float(x) for x in opt.q]
        r = oracles.check('jsd', opt.expected, oracles.jsd_oracle(p, q), opt.tolerance or 1e-9)
    elif opt.oracle == 'partition':
        _need(opt, 'input', 'outcome')
        r = oracles.check('partition', True, oracles.partition_oracle(check_file(opt.input), opt.outcome))
    elif opt.oracle == 'prevalence':
        _need(opt, 'input', 'code')
        path = check_file(opt.input, '.jsonl')
        k, share = oracles.count_prevalence(path, opt.code)
        if opt.expected_count is not None:
            r = oracles.check('prevalence', opt.expected_count, k)
        else:
            _need(opt, 'expected')
            lo, hi = oracles.binomial_interval(opt.expected, len(oracles._rows(path)))
            r = oracles.check('prevalence', opt.expected, share, max(opt.expected - lo, hi - opt.expected))
    elif opt.oracle == 'layer-accuracy':
        _need(opt, 'input', 'truth', 'expected')
        r = oracles.check('layer-accuracy', opt.expected,
                          oracles.layer_accuracy_oracle(check_file(opt.input), check_file(opt.truth), _layer(opt).value),
                          opt.tolerance or 0.0)
    else:  # coverage
        _need(opt, 'input', 'from_version', 'to_version', 'expected')
        codes = {r['primary_code'] for r in oracles._rows(check_file(opt.input))}
        r = oracles.check('coverage', opt.expected,
                          oracles.coverage_oracle(check_file(opt.code_system, '.json'), opt.from_version,
                                                  opt.to_version, codes), opt.tolerance or 1e-9)
    json_save(_save_dir(opt, 'oracle') / f'{opt.oracle}.json', r.to_dict())
    print(f"{r.oracle_name}: expected {r.expected!r} observed {r.observed!r} {'PASS' if r.passed else 'FAIL'}")
    if not r.passed:
        raise StageError(f'oracle {r.oracle_name}', None, 'check failed')


# Parser ---------------------------------------------------------------------------------------------------------------
def _common(p, layer=False):
    p.add_argument('--code-system', default=CODE_SYSTEM, help='code system JSON')
    p.add_argument('--config', default=None, help='pipeline config *.yaml or *.json, defaults otherwise')
    p.add_argument('--save-dir', default=None, help='output directory, defaults to runs/<stage>/exp')
    if layer:
        p.add_argument('--layer', default='Administrative', help='analytical layer: Administrative or Clinical')
    return p


def build_parser():
    parser = ArgumentParser(prog='ontoguard', description='Ontology-aware clinical data pipeline')
    sub = parser.add_subparsers(dest='command', required=True, parser_class=ArgumentParser)

    synth = sub.add_parser('synth', help='synthetic EHR batches').add_subparsers(dest='action', required=True,
                                                                                   parser_class=ArgumentParser)
    p = _common(synth.add_parser('generate', help='generate labeled quarterly batches'))
    p.add_argument('--scenario', default=None, help='take distortions, quarters and size from a scenario')
    p.add_argument('--distortions', default=None, help='distortions YAML, overrides --scenario')
    p.add_argument('--quarters', type=int, default=None)
    p.add_argument('--n', type=int, default=None, help='records per quarter')
    p.add_argument('--seed', type=int, default=0)
    p.set_defaults(func=synth_generate)

    p = _common(sub.add_parser('gate', help='version gate: accept, reconcile or quarantine'))
    p.add_argument('--input', required=True, help='records JSONL')
    p.add_argument('--target-version', default=None, help='target terminology version, defaults to the latest')
    p.set_defaults(func=gate)

    p = _common(sub.add_parser('fidelity-report', help='coding fidelity annotation and per-institution report'))
    p.add_argument('--input', required=True, help='records JSONL')
    p.add_argument('--reference', default=None, help='history JSONL for the reference model, defaults to --input')
    p.add_argument('--target-version', default=None)
    p.set_defaults(func=fidelity)

    p = _common(sub.add_parser('infer-clinical', help='populate the clinical layer and report divergence'))
    p.add_argument('--input', required=True, help='fidelity-annotated records JSONL')
    p.add_argument('--reference', default=None, help='history JSONL for the reference model, defaults to --input')
    p.add_argument('--overrides', default=None, help='structured-instrument annotations JSONL')
    p.add_argument('--truth', default=None, help='ground truth JSONL, prints per-layer accuracy')
    p.add_argument('--target-version', default=None)
    p.set_defaults(func=infer_clinical)

    dormancy = sub.add_parser('dormancy', help='dormant feature store').add_subparsers(dest='action', required=True,
                                                                                         parser_class=ArgumentParser)
    p = _common(dormancy.add_parser('classify', help='classify features and store dormant ones'), layer=True)
    p.add_argument('--input', required=True, help='records JSONL')
    p.add_argument('--significance', required=True, help='YAML (or scenario) with significance and conditions')
    p.add_argument('--store', default=None, help='dormant store JSON, defaults to <save-dir>/dormant.json')
    p.set_defaults(func=dormancy_classify)
    p = _common(dormancy.add_parser('activate', help='check activation conditions'), layer=True)
    p.add_argument('--input', required=True, help='quarterly records JSONL')
    p.add_argument('--store', required=True, help='dormant store JSON')
    p.add_argument('--event', nargs='*', default=[], help='events, i.e. domain_transfer=endocrinology')
    p.set_defaults(func=dormancy_activate)

    p = _common(sub.add_parser('drift-scan', help='semantic drift sentinel'), layer=True)
    p.add_argument('--baseline', required=True, help='baseline records JSONL')
    p.add_argument('--current', required=True, help='current records JSONL')
    p.set_defaults(func=drift_scan)

    breaker = sub.add_parser('breaker', help='feedback circuit breaker').add_subparsers(dest='action', required=True,
                                                                                         parser_class=ArgumentParser)
    p = _common(breaker.add_parser('check', help='influence ratio and breaker state per period'))
    p.add_argument('--input', nargs='+', required=True, help='cohort JSONL files in period order')
    p.add_argument('--cohort', default='cohort', help='cohort id')
    p.add_argument('--threshold', type=float, default=None, help='overrides breaker_threshold')
    p.set_defaults(func=breaker_check)
    p = _common(breaker.add_parser('sweep', help='breaker state over a threshold grid'))
    p.add_argument('--input', nargs='+', required=True, help='cohort JSONL files in period order')
    p.add_argument('--cohort', default='cohort', help='cohort id')
    p.add_argument('--thresholds', nargs='+', type=float, default=[0.05, 0.10, 0.15, 0.20, 0.25])
    p.set_defaults(func=breaker_sweep)

    p = _common(sub.add_parser('comply-check', help='compose regulatory adapters for one operation'))
    p.add_argument('--op', required=True, help='Ingest, Train, Deploy, Export or Predict')
    p.add_argument('--context', nargs='*', default=[], help='context key=value pairs')
    p.add_argument('--adapter', nargs='*', default=None, help='adapter JSON files, defaults to the bundled demos')
    p.add_argument('--requested-at', default=None, help='ISO timestamp recorded in the audit entries')
    p.set_defaults(func=comply_check)

    scenario = sub.add_parser('scenario', help='scenario harness').add_subparsers(dest='action', required=True,
                                                                                   parser_class=ArgumentParser)
    p = scenario.add_parser('run', help='run a scenario end to end')
    p.add_argument('name', help='scenario name or YAML path')
    p.add_argument('--seed', type=int, default=42)
    p.add_argument('--project', default=RUNS_DIR / 'scenario', help='save to project/name')
    p.add_argument('--name', dest='run_name', default=None, help='save to project/name')
    p.add_argument('--exist-ok', action='store_true', help='existing project/name ok, do not increment')
    p.add_argument('--plots', action='store_true', help='save plots')
    p.set_defaults(func=scenario_run)

    oracle = sub.add_parser('oracle', help='brute-force oracles').add_subparsers(dest='action', required=True,
                                                                                 parser_class=ArgumentParser)
    p = _common(oracle.add_parser('run', help='run one oracle'), layer=True)
    p.add_argument('oracle', choices=['jsd', 'partition', 'prevalence', 'layer-accuracy', 'coverage'])
    p.add_argument('--input', default=None, help='records JSONL')
    p.add_argument('--outcome', default=None, help='gate output directory (partition)')
    p.add_argument('--truth', default=None, help='ground truth JSONL (layer-accuracy)')
    p.add_argument('--code', default=None, help='code (prevalence)')
    p.add_argument('--p', nargs='+', default=None, help='distribution (jsd)')
    p.add_argument('--q', nargs='+', default=None, help='distribution (jsd)')
    p.add_argument('--from-version', default=None, help='coverage source version')
    p.add_argument('--to-version', default=None, help='coverage target version')
    p.add_argument('--expected', type=float, default=None, help='expected value')
    p.add_argument('--expected-count', type=int, default=None, help='expected exact count (prevalence)')
    p.add_argument('--tolerance', type=float, default=None)
    p.set_defaults(func=oracle_run)
    return parser


def main(argv=None):
    try:
        opt = build_parser().parse_args(argv)
        opt.func(opt)
    except ValidationError as e:
        LOGGER.error(f"{colorstr('red', 'bold', 'error:')} {e}")
        return 1
    except StageError as e:
        LOGGER.error(f"{colorstr('red', 'bold', 'stage error:')} {e}")
        return 2
    except Exception as e:
        LOGGER.error(f"{colorstr('red', 'bold', 'stage error:')} {type(e).__name__}: {e}")
        return 2
    return 0


if __name__ == '__main__':
    raise SystemExit(main())
