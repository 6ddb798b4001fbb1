"""Static report figures (matplotlib, Agg backend)."""

from pathlib import Path

import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return str(path)


def plot_latency_vs(latency, axis, series, path):
    """
    Mean full pre-authorization latency against `axis` ('n' or 'q'), one
    line per value of `series`.
    """
    frame = latency[latency['phase'] == 'full_preauthorization']
    fig, ax = plt.subplots(figsize=(6, 4))
    if frame.empty:
        frame = latency
    means = frame.groupby([series, axis], as_index=False)['ms'].mean()
    for value, group in means.groupby(series):
        ax.plot(group[axis], group['ms'], marker='o', label=f"{series}={value}")
    ax.set_xlabel(axis)
    ax.set_ylabel('latency (ms)')
    ax.grid(True)
    if not means.empty:
        ax.legend()
    return _save(fig, path)


def plot_throughput(throughput, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    for n, group in throughput.groupby('n'):
        ax.plot(group['devices'], group['rate_rps'], marker='o', label=f"{n} domains")
    ax.set_xlabel('devices')
    ax.set_ylabel('throughput (r/s)')
    ax.grid(True)
    if not throughput.empty:
        ax.legend()
    return _save(fig, path)


def plot_f1(dfl, path):
    per_round = dfl.groupby(['domain', 'round'], as_index=False)['test_f1'].first()
    fig, ax = plt.subplots(figsize=(6, 4))
    for domain, group in per_round.groupby('domain'):
        ax.plot(group['round'], group['test_f1'], label=domain)
    ax.set_xlabel('round')
    ax.set_ylabel('held-out macro F1')
    ax.grid(True)
    if not per_round.empty:
        ax.legend()
    return _save(fig, path)


def scheme_latency(latency, own='ztmesh'):
    """
    Mean full pre-authorization latency per scheme and n. Rows whose phase is
    "<name>:full_preauthorization" belong to baseline `name`, plain rows to `own`.

    Returns:
        DataFrame with columns scheme, n, ms
    """
    split = latency['phase'].str.rpartition(':')
    frame = latency.assign(scheme=split[0].where(split[0] != '', own), base=split[2])
    frame = frame[frame['base'] == 'full_preauthorization']
    return frame.groupby(['scheme', 'n'], as_index=False)['ms'].mean()


def plot_schemes(latency, path):
    means = scheme_latency(latency)
    fig, ax = plt.subplots(figsize=(6, 4))
    for scheme, group in means.groupby('scheme'):
        ax.plot(group['n'], group['ms'], marker='o', label=scheme)
    ax.set_xlabel('n')
    ax.set_ylabel('full pre-authorization latency (ms)')
    ax.grid(True)
    if not means.empty:
        ax.legend()
    return _save(fig, path)
