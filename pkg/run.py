#!/usr/bin/env python3
"""
ztmesh - Main Runner Script
Sets up the Python path and dispatches the simulator commands.
"""

import argparse
import sys
from pathlib import Path

# Add the project root to the Python path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from config.settings import OUTPUT_DIR  # noqa: E402
from src.exceptions import ConfigError, InvariantViolation, ZtMeshError  # noqa: E402

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def build_parser():
    parser = argparse.ArgumentParser(prog='run.py', description='Multi-domain zero-trust simulator')
    parser.add_argument('--log', default=None, help='log level (default: ZTMESH_LOG or info)')
    sub = parser.add_subparsers(dest='command')

    simulate = sub.add_parser('simulate', help='run a scenario: DFL pretraining plus the request workload')
    simulate.add_argument('--config', required=True)
    simulate.add_argument('--seed', type=int, default=None, help='overrides the config seed')
    simulate.add_argument('--out', default=OUTPUT_DIR)
    simulate.add_argument('--trace', action='store_true', help='write events.jsonl')

    train = sub.add_parser('train', help='DFL rounds only; dfl_metrics.csv and checkpoints')
    train.add_argument('--config', required=True)
    train.add_argument('--rounds', type=int, default=None)
    train.add_argument('--seed', type=int, default=None)
    train.add_argument('--out', default=OUTPUT_DIR)

    report = sub.add_parser('report', help='summary.txt (and figures) from a result directory')
    report.add_argument('--in', dest='in_dir', required=True)
    report.add_argument('--plots', action='store_true')

    table1 = sub.add_parser('table1', help='per-step operation counts of one intra- and one cross-domain request')
    table1.add_argument('--seed', type=int, default=0)
    return parser


def _load(args):
    from src.models.scenario import load_scenario
    config = load_scenario(args.config)
    if args.seed is not None:
        config = config.with_seed(args.seed)
    return config


def cmd_simulate(args):
    from src.main import run_simulation
    config = _load(args)
    print(f"🔄 Running scenario '{config.name}' ({len(config.sweep.cells())} cell(s), seed {config.seed})...")
    cells = run_simulation(config, args.out, trace=args.trace)
    for cell in cells:
        print(f"   n={cell['n']} q={cell['q']} devices={cell['devices']}: "
              f"{cell['grant']} grant / {cell['denial']} denial / {cell['timeout']} timeout")
    print(f"✅ Simulation completed! Results in {args.out}/")


def cmd_train(args):
    from src.main import run_training
    config = _load(args)
    rounds = config.dfl.hyperparams.rounds if args.rounds is None else args.rounds
    if rounds < 0:
        raise ConfigError("--rounds must be >= 0")
    print(f"🔄 Training {rounds} round(s)...")
    federation = run_training(config, args.out, rounds)
    for domain_id, trainer in sorted(federation.trainers.items()):
        print(f"   {domain_id}: F1 {trainer.f1:.4f}, held-out F1 {trainer.test_f1():.4f}")
    print(f"✅ Training completed! dfl_metrics.csv and checkpoints in {args.out}/")


def cmd_report(args):
    from src.main import build_report
    written = build_report(args.in_dir, plots=args.plots)
    summary = Path(written[0]).read_text(encoding='utf-8')
    print(summary, end='')
    print(f"✅ Report written ({len(written)} file(s))")


def cmd_table1(args):
    from src.main import run_table1
    observed, conformance = run_table1(args.seed)
    print("📊 Computation overhead per step")
    for label, expected, counters, status in conformance:
        print(f"   {label:<22} {str(counters):<32} expected {expected}  {status}")
    if any(status == 'FAIL' for *_, status in conformance):
        raise InvariantViolation("operation counts differ from the expected totals")
    print("✅ All rows match")


COMMANDS = {
    'simulate': cmd_simulate,
    'train': cmd_train,
    'report': cmd_report,
    'table1': cmd_table1,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return EXIT_CONFIG

    from src.utils.logging_setup import configure_logging
    configure_logging(args.log)
    try:
        COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"❌ Config error: {e}")
        return EXIT_CONFIG
    except ZtMeshError as e:
        print(f"❌ {type(e).__name__}: {e}")
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
