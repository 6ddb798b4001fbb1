"""
Scenario pipeline: build the domains, pretrain, run the workload, write the
result tables. Every command writes into a staging directory that replaces
the output files only when the run succeeds.
"""

import logging
import shutil
import tempfile
from contextlib import contextmanager
from pathlib import Path

from src.dfl.codec import save_checkpoint
from src.dfl.data import build_partition
from src.dfl.engine import DflFederation
from src.dfl.mlp import Architecture
from src.exceptions import MissingInput
from src.metrics.counters import OpCounters
from src.metrics.latency import LatencySample, percentile_latency, throughput_curve
from src.metrics.table1 import CounterCollector, table1_conformance, measure_table1
from src.sim.simulation import Simulation, SimulationSettings, build_trainers, untrained_models
from src.sim.workload import Workload, generate_workload, place_devices
from src.utils.csv_writer import (
    CELL_COLUMNS, COUNTER_COLUMNS, DFL_COLUMNS, LATENCY_COLUMNS, THROUGHPUT_COLUMNS, read_csv, write_csv)
from src.utils import plotting
from src.zta.authentication import Device
from src.zta.domain import Domain

logger = logging.getLogger(__name__)

DEVICE_KEY_BASE = 10_000_000


@contextmanager
def staged_output(out_dir):
    """Yield a staging directory; move its files into `out_dir` only on success."""
    out_dir = Path(out_dir)
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=f".{out_dir.name}-staging-", dir=out_dir.parent))
    try:
        yield staging
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise
    out_dir.mkdir(parents=True, exist_ok=True)
    for path in sorted(staging.iterdir()):
        shutil.move(str(path), str(out_dir / path.name))
    staging.rmdir()


def build_domains(topology, zta, architecture, seed):
    """One Domain per topology node, peered along every edge."""
    domains = {}
    for k, domain_id in enumerate(topology.domains):
        domains[domain_id] = Domain(domain_id, rules=zta.trust_rules, threshold=zta.threshold,
                                    resources=zta.resources, ttl_ms=zta.token_ttl_ms,
                                    seed=seed * 1000 + k, architecture=architecture)
    for a, b in sorted(topology.edges):
        domains[a].peer_with(domains[b])
    return domains


def run_cell(config, cell=None, trace=None, baseline=None):
    """
    Run one sweep cell end to end. With a `baseline` (BaselineConfig) the
    cell runs that scheme's latency stand-in instead: untrained models, no
    DFL rounds, and the baseline's extra service at the source and target.

    Returns:
        (SimulationResult, CounterCollector, n, q)
    """
    cell = cell or {}
    topology = config.topology.build(cell.get('neighbors'), cell.get('domains'))
    wl = config.workload
    workload = Workload(cell.get('devices', wl.devices), wl.requests, wl.cross_domain_fraction,
                        cell.get('parallelism', wl.parallelism), config.seed)
    architecture = Architecture()
    domains = build_domains(topology, config.zta, architecture, config.seed)

    dfl = config.dfl
    partition = build_partition(topology.domains, dfl.devices, dfl.records_per_device, dfl.test_records_per_device,
                                dfl.dirichlet_alpha, dfl.data_seed, architecture.input_dim, architecture.classes)
    for domain_id in topology.domains:
        domains[domain_id].cam.ingest_many(partition.train_records[domain_id])

    settings = SimulationSettings(
        cost_model=config.cost_model,
        timeout_ms=wl.timeout_ms,
        link_rate_kbps=wl.link_rate_kbps,
        round_interval_ms=dfl.round_interval_ms,
        dispatch=wl.dispatch,
        present_tokens=wl.present_tokens,
        parallelism_scope=wl.parallelism_scope,
        access_latency_ms=wl.access_latency_ms,
        train_during_workload=dfl.train_during_workload and baseline is None,
        seal_extra_ms=baseline.share_ms if baseline else 0.0,
        preauth_extra_ms=baseline.preauth_extra_ms(len(topology.domains)) if baseline else 0.0,
    )
    collector = CounterCollector()
    sim = Simulation(topology, domains, settings, collector, trace)
    untrained_models(domains, architecture, config.seed)
    if baseline is None:
        sim.attach_trainers(build_trainers(domains, partition, dfl.hyperparams, architecture, config.seed))
        sim.pretrain(dfl.hyperparams.rounds)

    placement = place_devices(workload.device_count, topology)
    devices = {device_id: Device(device_id, key_seed=DEVICE_KEY_BASE + config.seed * 100_000 + k)
               for k, device_id in enumerate(sorted(placement))}
    sim.enroll_devices(devices, placement)
    specs = generate_workload(workload, topology, config.zta.resources, placement)
    result = sim.run_workload(specs, workload.parallelism)
    counts = result.outcome_counts()
    logger.info("cell %s%s: n=%d q=%d %s hash=%s", cell, f" baseline {baseline.name}" if baseline else '',
                topology.size_label, workload.parallelism, counts, result.state_hash[:12])
    return result, collector, topology.size_label, workload.parallelism


def run_simulation(config, out_dir, trace=False):
    """
    `simulate`: every sweep cell, then latency.csv, throughput.csv,
    counters.csv, dfl_metrics.csv and cells.csv. Each configured baseline
    reruns every cell; its latency rows carry the phase "<name>:<phase>".

    Returns:
        list of per-cell summary rows
    """
    latency_rows, throughput_runs, cell_rows, dfl_rows = [], [], [], []
    totals = CounterCollector()
    with staged_output(out_dir) as staging:
        trace_file = open(staging / 'events.jsonl', 'w', encoding='utf-8') if trace else None
        try:
            for index, cell in enumerate(config.sweep.cells()):
                result, collector, n, q = run_cell(config, cell, trace_file)
                for sample in result.samples:
                    latency_rows.append({'request_id': sample.request_id, 'phase': sample.phase.value,
                                         'n': n, 'q': q, 'ms': sample.ms})
                throughput_runs.append(result.throughput)
                for label, counters in collector.totals.items():
                    totals.add(label, counters)
                counts = result.outcome_counts()
                cell_rows.append({'n': n, 'q': q, 'devices': result.throughput.devices, **counts,
                                  'state_hash': result.state_hash})
                if index == 0:
                    dfl_rows = [record.to_dict() for record in result.dfl_history]
                for baseline in config.baselines:
                    stand_in, _, _, _ = run_cell(config, cell, baseline=baseline)
                    for sample in stand_in.samples:
                        latency_rows.append({'request_id': sample.request_id,
                                             'phase': f"{baseline.name}:{sample.phase.value}",
                                             'n': n, 'q': q, 'ms': sample.ms})
        finally:
            if trace_file is not None:
                trace_file.close()

        measured = measure_table1(config.seed)
        counter_rows = [{'label': label, **counters.to_dict()} for label, counters in sorted(measured.items())]
        counter_rows.extend(totals.rows())

        write_csv(latency_rows, staging / 'latency.csv', LATENCY_COLUMNS)
        write_csv(throughput_curve(throughput_runs), staging / 'throughput.csv', THROUGHPUT_COLUMNS)
        write_csv(counter_rows, staging / 'counters.csv', COUNTER_COLUMNS)
        write_csv(dfl_rows, staging / 'dfl_metrics.csv', DFL_COLUMNS)
        write_csv(cell_rows, staging / 'cells.csv', CELL_COLUMNS)
    return cell_rows


def run_training(config, out_dir, rounds=None):
    """
    `train`: lockstep DFL rounds only; dfl_metrics.csv plus one checkpoint
    per domain.

    Returns:
        DflFederation after the run
    """
    topology = config.topology.build()
    architecture = Architecture()
    dfl = config.dfl
    partition = build_partition(topology.domains, dfl.devices, dfl.records_per_device, dfl.test_records_per_device,
                                dfl.dirichlet_alpha, dfl.data_seed, architecture.input_dim, architecture.classes)
    federation = DflFederation.from_partition(topology.neighbor_map(), partition, dfl.hyperparams, architecture,
                                              config.seed)
    federation.run(dfl.hyperparams.rounds if rounds is None else rounds)
    with staged_output(out_dir) as staging:
        write_csv([record.to_dict() for record in federation.history()], staging / 'dfl_metrics.csv', DFL_COLUMNS)
        for domain_id, trainer in sorted(federation.trainers.items()):
            save_checkpoint(trainer.model, staging / f"checkpoint_{domain_id}.bin")
    return federation


def run_table1(seed=0):
    """Measured counters and their conformance rows."""
    observed = measure_table1(seed)
    return observed, table1_conformance(observed)


def _latency_summary(latency):
    lines = ["latency (ms): phase n q count mean p50 p95"]
    samples_by_cell = {}
    for row in latency.itertuples(index=False):
        # baseline rows are "<scheme>:<phase>"
        phase = row.phase.rpartition(':')[2]
        sample = LatencySample(int(row.request_id), phase, 0.0, float(row.ms))
        samples_by_cell.setdefault((row.phase, int(row.n), int(row.q)), []).append(sample)
    for (label, n, q), samples in sorted(samples_by_cell.items()):
        phase = samples[0].phase
        mean = sum(s.ms for s in samples) / len(samples)
        lines.append(f"  {label} {n} {q} {len(samples)} {mean:.3f} "
                     f"{percentile_latency(samples, phase, 50):.3f} {percentile_latency(samples, phase, 95):.3f}")
    return lines


def build_report(in_dir, plots=False):
    """
    `report`: summary.txt from whatever result tables are present, plus
    figures with `plots`.

    Raises:
        MissingInput: no result table in `in_dir`
    """
    in_dir = Path(in_dir)
    present = {name: in_dir / f"{name}.csv" for name in ('latency', 'throughput', 'counters', 'dfl_metrics')}
    present = {name: path for name, path in present.items() if path.is_file()}
    if not present:
        raise MissingInput(f"no result tables in {in_dir}")

    lines = [f"report for {in_dir}"]
    tables = {name: read_csv(path) for name, path in present.items()}

    if 'latency' in tables and not tables['latency'].empty:
        lines.extend(_latency_summary(tables['latency']))
        schemes = plotting.scheme_latency(tables['latency'])
        if schemes['scheme'].nunique() > 1:
            lines.append("full pre-authorization by scheme (ms): scheme n mean")
            for row in schemes.itertuples(index=False):
                lines.append(f"  {row.scheme} {int(row.n)} {row.ms:.3f}")
    if 'throughput' in tables:
        lines.append("throughput (r/s): n devices rate")
        for row in tables['throughput'].itertuples(index=False):
            lines.append(f"  {int(row.n)} {int(row.devices)} {row.rate_rps:.2f}")
    if 'counters' in tables:
        rows = tables['counters'].to_dict('records')
        for label, expected, observed, status in table1_conformance(rows):
            lines.append(f"table1 {label}: expected {expected} observed {observed or OpCounters()} {status}")
    if 'dfl_metrics' in tables and not tables['dfl_metrics'].empty:
        dfl = tables['dfl_metrics']
        last = dfl[dfl['round'] == dfl['round'].max()].groupby('domain')['test_f1'].first()
        first = dfl[dfl['round'] == dfl['round'].min()].groupby('domain')['test_f1'].first()
        lines.append("dfl held-out F1: domain first last")
        for domain in sorted(last.index):
            lines.append(f"  {domain} {first[domain]:.4f} {last[domain]:.4f}")

    summary = in_dir / 'summary.txt'
    summary.write_text('\n'.join(lines) + '\n', encoding='utf-8')
    written = [str(summary)]

    if plots:
        if 'latency' in tables and not tables['latency'].empty:
            written.append(plotting.plot_latency_vs(tables['latency'], 'n', 'q', in_dir / 'latency_vs_n.png'))
            written.append(plotting.plot_latency_vs(tables['latency'], 'q', 'n', in_dir / 'latency_vs_q.png'))
            if plotting.scheme_latency(tables['latency'])['scheme'].nunique() > 1:
                written.append(plotting.plot_schemes(tables['latency'], in_dir / 'latency_by_scheme.png'))
        if 'throughput' in tables and not tables['throughput'].empty:
            written.append(plotting.plot_throughput(tables['throughput'], in_dir / 'throughput_vs_devices.png'))
        if 'dfl_metrics' in tables and not tables['dfl_metrics'].empty:
            written.append(plotting.plot_f1(tables['dfl_metrics'], in_dir / 'f1_vs_round.png'))
    logger.info("report written: %s", ', '.join(written))
    return written
