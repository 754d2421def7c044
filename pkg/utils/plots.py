# OntoGuard, GPL-3.0 license
"""
Plotting utils
"""

from pathlib import Path

import matplotlib
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import seaborn as sn

from utils import TryExcept
from utils.general import LOGGER

# Settings
matplotlib.rc('font', **{'size': 11})
matplotlib.use('Agg')  # for writing to files only


class Colors:
    # Ultralytics color palette https://ultralytics.com/
    def __init__(self):
        hexs = ('FF3838', 'FF9D97', 'FF701F', 'FFB21D', 'CFD231', '48F90A', '92CC17', '3DDB86', '1A9334', '00D4BB',
                '2C99A8', '00C2FF', '344593', '6473FF', '0018EC', '8438FF', '520085', 'CB38FF', 'FF95C8', 'FF37C7')
        self.palette = [f'#{c}' for c in hexs]
        self.n = len(self.palette)

    def __call__(self, i):
        return self.palette[int(i) % self.n]


colors = Colors()  # create instance for 'from utils.plots import colors'


@TryExcept('WARNING ⚠️ plot_fidelity failure')
def plot_fidelity(file='path/to/fidelity.csv'):
    # Per-institution mean fidelity with the d1..d9 decile band. Usage: plot_fidelity('runs/scenario/exp/q1/fidelity.csv')
    file = Path(file)
    df = pd.read_csv(file, comment='#', dtype={'institution': str})
    fig, ax = plt.subplots(1, 1, figsize=(9, 5), tight_layout=True)
    x = np.arange(len(df))
    ax.fill_between(x, df['d1'], df['d9'], color=colors(11), alpha=0.2, label='d1-d9')
    ax.plot(x, df['d5'], color=colors(11), linestyle='--', linewidth=1, label='median')
    ax.plot(x, df['mean'], color=colors(0), marker='.', markersize=10, linewidth=2, label='mean')
    ax.set_xticks(x, df['institution'], rotation=45, ha='right')
    ax.set_ylim(0, 1)
    ax.set_ylabel('fidelity score (ordinal)')
    ax.set_title(file.parent.name or file.stem)
    ax.legend(loc='lower left')
    f = file.with_suffix('.png')
    fig.savefig(f, dpi=200)
    plt.close()
    return f


@TryExcept('WARNING ⚠️ plot_influence failure')
def plot_influence(file='path/to/influence.csv', threshold=0.15):
    # AI-influence ratio history per cohort against the breaker threshold. Usage: plot_influence('influence.csv')
    file = Path(file)
    df = pd.read_csv(file, dtype={'period': str, 'cohort': str})
    fig, ax = plt.subplots(1, 1, figsize=(8, 5), tight_layout=True)
    sn.lineplot(data=df, x='period', y='ratio', hue='cohort', marker='o', ax=ax, sort=False)
    ax.axhline(threshold, color=colors(0), linestyle='--', linewidth=1, label=f'threshold {threshold:g}')
    for _, row in df.iterrows():
        if row['state'] != 'Closed':
            ax.annotate(row['state'], (row['period'], row['ratio']), textcoords='offset points', xytext=(0, 8),
                        ha='center', fontsize=9)
    ax.set_ylim(0, max(threshold, df['ratio'].max()) * 1.25)
    ax.legend()
    f = file.with_suffix('.png')
    fig.savefig(f, dpi=200)
    plt.close()
    return f


def plot_results(file='path/to/results.csv', dir=''):
    # Plot scenario results.csv. Usage: from utils.plots import *; plot_results('path/to/results.csv')
    save_dir = Path(file).parent if file else Path(dir)
    fig, ax = plt.subplots(2, 5, figsize=(12, 6), tight_layout=True)
    ax = ax.ravel()
    files = list(save_dir.glob('results.csv'))
    if not files:
        LOGGER.info(f'WARNING ⚠️ No results.csv files found in {save_dir.resolve()}, nothing to plot.')
        return
    for f in files:
        try:
            data = pd.read_csv(f)
            s = [x.strip() for x in data.columns]
            x = data.values[:, 0]
            for i, j in enumerate(range(1, min(len(s), 11))):
                y = data.values[:, j].astype('float')
                ax[i].plot(x, y, marker='.', label=f.stem, linewidth=2, markersize=8)
                ax[i].set_title(s[j], fontsize=12)
        except Exception as e:
            LOGGER.info(f'Warning: Plotting error for {f}: {e}')
    ax[1].legend()
    fig.savefig(save_dir / 'results.png', dpi=200)
    plt.close()
