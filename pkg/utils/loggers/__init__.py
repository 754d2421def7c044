# OntoGuard, GPL-3.0 license
"""
Logging utils
"""

from utils import TryExcept
from utils.general import LOGGER, colorstr
from utils.plots import plot_fidelity, plot_influence, plot_results

LOGGERS = ('csv',)  # *.csv


class Loggers():
    # OntoGuard Loggers class: per-quarter scalars to results.csv, plots at run end
    def __init__(self, save_dir=None, plots=False, threshold=0.15, logger=LOGGER, include=LOGGERS):
        self.save_dir = save_dir
        self.plots = plots  # plot results
        self.threshold = threshold  # breaker threshold drawn on the influence plot
        self.logger = logger  # for printing results to console
        self.include = include
        self.keys = [
            'gate/accepted',
            'gate/reconciled',
            'gate/quarantined',  # version gate
            'checkpoint/fidelity_mean',
            'checkpoint/below_cutoff',  # coding fidelity
            'dual/disagreement',  # administrative vs clinical layer
            'dormancy/dormant',
            'dormancy/activations',
            'sentinel/alerts',
            'breaker/ratio',
            'breaker/state',  # 0 Closed, 1 Warning, 2 Open
            'compliance/verdict']  # 0 Permit, 1 PermitWithConditions, 2 Deny
        self.csv = 'csv' in include

    def on_run_start(self, name, seed):
        self.logger.info(f"{colorstr('scenario: ')}{name} seed {seed}, saving to {colorstr('bold', self.save_dir)}")

    def on_stage_end(self, quarter, layer, stage):
        self.logger.debug(f'{colorstr("trace: ")}Q{quarter} layer {layer} {stage}')

    def on_quarter_end(self, vals, quarter):
        # Callback runs at the end of each simulated quarter
        if self.csv:
            file = self.save_dir / 'results.csv'
            n = len(self.keys) + 1  # number of cols
            s = '' if file.exists() else (('%20s,' * n % tuple(['quarter'] + self.keys)).rstrip(',') + '\n')  # header
            with open(file, 'a') as f:
                f.write(s + ('%20.5g,' * n % tuple([quarter] + list(vals))).rstrip(',') + '\n')

    def on_run_end(self, quarters):
        # Callback runs on scenario end, i.e. plotting
        if self.plots:
            with TryExcept('WARNING ⚠️ plot_results failure'):
                plot_results(file=self.save_dir / 'results.csv')  # save results.png
            for q in range(1, quarters + 1):
                f = self.save_dir / f'q{q}' / 'fidelity.csv'
                if f.exists():
                    plot_fidelity(f)
            if (self.save_dir / 'influence.csv').exists():
                plot_influence(self.save_dir / 'influence.csv', self.threshold)
        self.logger.info(f"Results saved to {colorstr('bold', self.save_dir)}")
