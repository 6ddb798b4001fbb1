#!/usr/bin/env python3
"""
Scenario configuration and command-line tests: config validation, the
bundled scenario files, and the simulate / train / report / table1 commands.
"""

import json
import sys
from pathlib import Path

import pytest

# Add the project root to the Python path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

import run  # noqa: E402
from src.dfl.codec import load_checkpoint  # noqa: E402
from src.dfl.mlp import Architecture, init_model  # noqa: E402
from src.exceptions import ConfigError  # noqa: E402
from src.models.scenario import ScenarioConfig, load_scenario, validate_against_schema  # noqa: E402
from src.utils.csv_writer import read_csv  # noqa: E402
from src.utils.json_handler import save_to_json  # noqa: E402

SCENARIO_DIR = project_root / 'scenarios'
RESULT_FILES = ('latency.csv', 'throughput.csv', 'counters.csv', 'dfl_metrics.csv', 'cells.csv')

SMALL = {
    'name': 'cli-small',
    'seed': 4,
    'topology': {'kind': 'mesh', 'domains': 2},
    'workload': {'devices': 4, 'requests': 12, 'parallelism': 2, 'cross_domain_fraction': 0.5},
    'dfl': {
        'hyperparams': {'rounds': 2},
        'devices': 8,
        'records_per_device': 5,
        'test_records_per_device': 2,
    },
}


@pytest.fixture
def small_config(tmp_path):
    return save_to_json(SMALL, tmp_path / 'small.json')


def write_config(tmp_path, text):
    path = tmp_path / 'config.json'
    path.write_text(text, encoding='utf-8')
    return str(path)


def test_config_round_trip():
    config = ScenarioConfig.from_json(SMALL)
    assert ScenarioConfig.from_json(config.to_dict()) == config
    assert ScenarioConfig.from_json(json.loads(json.dumps(config.to_dict()))) == config
    assert ScenarioConfig.from_json({}) == ScenarioConfig()


def test_defaults_fill_missing_sections():
    config = ScenarioConfig.from_json({'seed': 3})
    assert config.seed == 3
    assert config.workload.parallelism == 1
    assert config.zta.threshold == 0.6
    assert config.sweep.cells() == [{}]


@pytest.mark.parametrize('data, path', [
    ({'colour': 'red'}, "unknown key 'colour'"),
    ({'topology': {'kind': 'star', 'spokes': 3}}, "unknown key 'topology.spokes'"),
    ({'dfl': {'hyperparams': {'rounds': 2, 'epochs': 1}}}, "unknown key 'dfl.hyperparams.epochs'"),
    ({'zta': {'trust_rules': {'weights': {'weather': 1}}}}, "unknown key 'zta.trust_rules.weights.weather'"),
    ({'cost_model': {'exp': 1.0, 'aes': 2.0}}, "unknown key 'cost_model.aes'"),
])
def test_unknown_keys_rejected_with_path(data, path):
    with pytest.raises(ConfigError, match=path.replace('.', r'\.')):
        ScenarioConfig.from_json(data)


@pytest.mark.parametrize('data', [
    {'seed': 'seven'},
    {'seed': True},
    {'workload': {'parallelism': 0}},
    {'workload': {'cross_domain_fraction': 1.5}},
    {'workload': {'dispatch': 'random'}},
    {'topology': {'kind': 'torus'}},
    {'zta': {'threshold': 2}},
    {'dfl': {'hyperparams': {'weighting': 'greedy'}}},
    {'sweep': {'parallelism': [0]}},
])
def test_invalid_values_rejected(data):
    with pytest.raises(ConfigError):
        ScenarioConfig.from_json(data)


def test_json_syntax_error_reports_line_and_column(tmp_path):
    path = write_config(tmp_path, '{\n  "seed": 1\n  "name": "x"\n}\n')
    with pytest.raises(ConfigError, match=r':3:3:'):
        load_scenario(path)


def test_top_level_must_be_an_object(tmp_path):
    with pytest.raises(ConfigError):
        load_scenario(write_config(tmp_path, '[1, 2]'))
    with pytest.raises(ConfigError):
        load_scenario(tmp_path / 'missing.json')


def test_sweep_cells_are_the_grid():
    config = ScenarioConfig.from_json({'sweep': {'neighbors': [2, 4], 'parallelism': [1, 8, 16]}})
    cells = config.sweep.cells()
    assert len(cells) == 6
    assert cells[0] == {'neighbors': 2, 'parallelism': 1}
    assert cells[-1] == {'neighbors': 4, 'parallelism': 16}


@pytest.mark.parametrize('name', ['fig5.json', 'fig6.json', 'tableI.json', 'dfl_noniid.json'])
def test_bundled_scenarios_validate(name):
    config = load_scenario(SCENARIO_DIR / name)
    assert ScenarioConfig.from_json(config.to_dict()) == config


@pytest.mark.parametrize('name', ['fig5.json', 'fig6.json', 'tableI.json', 'dfl_noniid.json'])
def test_bundled_scenarios_match_schema(name):
    validate_against_schema(json.loads((SCENARIO_DIR / name).read_text(encoding='utf-8')))


def test_serialized_config_matches_schema():
    config = ScenarioConfig.from_json({**SMALL, 'baselines': [{'name': 'slow_ledger', 'confirm_ms': 20.0}]})
    validate_against_schema(json.loads(json.dumps(config.to_dict())))


@pytest.mark.parametrize('data, where', [
    ({'workload': {'devices': 2.5}}, 'workload.devices'),
    ({'name': 5}, 'name'),
    ({'cost_model': {'aggregate_ms': -1}}, 'cost_model'),
])
def test_schema_violations_rejected_with_path(tmp_path, data, where):
    path = save_to_json(data, tmp_path / 'bad.json')
    with pytest.raises(ConfigError, match=where.replace('.', r'\.')):
        load_scenario(path)


def test_baselines_parsed_and_checked():
    config = ScenarioConfig.from_json({'baselines': [{'name': 'slow_ledger', 'share_ms': 4, 'per_domain_ms': 2}]})
    baseline = config.baselines[0]
    assert (baseline.name, baseline.share_ms, baseline.confirm_ms) == ('slow_ledger', 4.0, 0.0)
    assert baseline.preauth_extra_ms(5) == pytest.approx(10.0)
    with pytest.raises(ConfigError, match='unique'):
        ScenarioConfig.from_json({'baselines': [{'name': 'a'}, {'name': 'a'}]})
    with pytest.raises(ConfigError, match=r"unknown key 'baselines\.0\.delay'"):
        ScenarioConfig.from_json({'baselines': [{'name': 'a', 'delay': 1}]})
    with pytest.raises(ConfigError):
        ScenarioConfig.from_json({'baselines': [{'share_ms': 1}]})
    with pytest.raises(ConfigError):
        ScenarioConfig.from_json({'baselines': [{'name': 'a', 'confirm_ms': -1}]})


def test_workload_options_parsed():
    config = ScenarioConfig.from_json({'workload': {'parallelism_scope': 'per_domain', 'access_latency_ms': 2.5},
                                       'dfl': {'train_during_workload': False}})
    assert config.workload.parallelism_scope == 'per_domain'
    assert config.workload.access_latency_ms == 2.5
    assert config.dfl.train_during_workload is False
    with pytest.raises(ConfigError):
        ScenarioConfig.from_json({'workload': {'parallelism_scope': 'per_device'}})


def test_star_sweep_grid():
    config = load_scenario(SCENARIO_DIR / 'fig5.json')
    assert config.topology.kind == 'star'
    assert len(config.sweep.cells()) == 16
    assert config.workload.cross_domain_fraction == 1.0


def test_no_command_is_usage_error():
    assert run.main([]) == run.EXIT_CONFIG


def test_bad_config_exits_2_without_outputs(tmp_path):
    config = write_config(tmp_path, json.dumps({'workload': {'parallelism': -1}}))
    out = tmp_path / 'out'
    assert run.main(['simulate', '--config', config, '--out', str(out)]) == run.EXIT_CONFIG
    assert not out.exists()


def test_simulate_is_deterministic(tmp_path, small_config):
    first, second = tmp_path / 'first', tmp_path / 'second'
    assert run.main(['simulate', '--config', small_config, '--out', str(first)]) == run.EXIT_OK
    assert run.main(['simulate', '--config', small_config, '--out', str(second)]) == run.EXIT_OK
    for name in RESULT_FILES:
        assert (first / name).read_bytes() == (second / name).read_bytes(), name
    cells = read_csv(first / 'cells.csv')
    assert len(cells) == 1
    assert int(cells[['grant', 'denial', 'timeout']].sum(axis=1)[0]) == 12
    assert not list(tmp_path.glob('.*staging*'))


def test_simulate_seed_override_changes_run(tmp_path, small_config):
    base, other = tmp_path / 'base', tmp_path / 'other'
    run.main(['simulate', '--config', small_config, '--out', str(base)])
    run.main(['simulate', '--config', small_config, '--seed', '9', '--out', str(other)])
    assert read_csv(base / 'cells.csv')['state_hash'][0] != read_csv(other / 'cells.csv')['state_hash'][0]


def test_simulate_trace(tmp_path, small_config):
    out = tmp_path / 'out'
    assert run.main(['simulate', '--config', small_config, '--out', str(out), '--trace']) == run.EXIT_OK
    lines = (out / 'events.jsonl').read_text(encoding='utf-8').splitlines()
    kinds = {json.loads(line)['kind'] for line in lines}
    assert {'request_issued', 'request_completed', 'message_arrival', 'round_tick'} <= kinds


def test_train_zero_rounds_writes_initial_checkpoints(tmp_path, small_config):
    out = tmp_path / 'train'
    assert run.main(['train', '--config', small_config, '--rounds', '0', '--out', str(out)]) == run.EXIT_OK
    assert read_csv(out / 'dfl_metrics.csv').empty
    for k, domain_id in enumerate(['dom-0', 'dom-1']):
        checkpoint = load_checkpoint(out / f"checkpoint_{domain_id}.bin")
        assert checkpoint.equals(init_model(Architecture(), SMALL['seed'] + k))


def test_train_writes_rounds(tmp_path, small_config):
    out = tmp_path / 'train'
    assert run.main(['train', '--config', small_config, '--rounds', '3', '--out', str(out)]) == run.EXIT_OK
    metrics = read_csv(out / 'dfl_metrics.csv')
    assert sorted(metrics['round'].unique()) == [1, 2, 3]
    assert set(metrics['domain']) == {'dom-0', 'dom-1'}


def test_train_rejects_negative_rounds(tmp_path, small_config):
    assert run.main(['train', '--config', small_config, '--rounds', '-1', '--out', str(tmp_path / 'x')]) == 2


def test_report_needs_inputs(tmp_path):
    empty = tmp_path / 'empty'
    empty.mkdir()
    assert run.main(['report', '--in', str(empty)]) == run.EXIT_RUNTIME


def test_report_summary_and_plots(tmp_path, small_config):
    out = tmp_path / 'out'
    run.main(['simulate', '--config', small_config, '--out', str(out)])
    assert run.main(['report', '--in', str(out), '--plots']) == run.EXIT_OK
    summary = (out / 'summary.txt').read_text(encoding='utf-8')
    assert 'table1 table1:intra_domain' in summary
    assert summary.count('PASS') == 2
    assert 'FAIL' not in summary
    assert (out / 'latency_vs_n.png').is_file()
    assert (out / 'f1_vs_round.png').is_file()


def test_simulate_writes_baseline_rows(tmp_path):
    data = {**SMALL, 'baselines': [{'name': 'slow_ledger', 'share_ms': 5.0, 'confirm_ms': 20.0, 'per_domain_ms': 2.0}]}
    config = save_to_json(data, tmp_path / 'baselines.json')
    out = tmp_path / 'out'
    assert run.main(['simulate', '--config', config, '--out', str(out)]) == run.EXIT_OK
    latency = read_csv(out / 'latency.csv')
    assert list(latency.columns) == ['request_id', 'phase', 'n', 'q', 'ms']
    phases = set(latency['phase'])
    assert {'full_preauthorization', 'slow_ledger:full_preauthorization', 'slow_ledger:data_sharing'} <= phases
    own = latency[latency['phase'] == 'full_preauthorization']['ms'].mean()
    stand_in = latency[latency['phase'] == 'slow_ledger:full_preauthorization']['ms'].mean()
    assert stand_in > own
    assert len(read_csv(out / 'cells.csv')) == 1

    assert run.main(['report', '--in', str(out), '--plots']) == run.EXIT_OK
    summary = (out / 'summary.txt').read_text(encoding='utf-8')
    assert 'slow_ledger:full_preauthorization' in summary
    assert 'full pre-authorization by scheme' in summary
    assert (out / 'latency_by_scheme.png').is_file()


def test_table1_command(capsys):
    assert run.main(['table1', '--seed', '1']) == run.EXIT_OK
    assert 'All rows match' in capsys.readouterr().out
