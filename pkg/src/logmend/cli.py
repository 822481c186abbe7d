#!/usr/bin/env python3
"""
logmend CLI - online log parsing and parser evaluation.

Usage:
    logmend parse --input HDFS.log --out-dir out/          # parse a corpus
    logmend parse --input HDFS_2k.log_structured.csv       # Loghub CSV (Content column)
    logmend evaluate --predictions out/HDFS_structured.csv --truth HDFS_2k.log_structured.csv
    logmend stats out/HDFS_stats.json                      # match-source breakdown
"""

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import pandas as pd

from logmend import __version__
from logmend.colors import Colors, colorize, metric_str, source_str
from logmend.config import load_config
from logmend.llm_client import LlmError
from logmend.metrics import METRIC_NAMES, LabeledCorpus, evaluate, read_structured_csv
from logmend.pipeline import AblationFlags, LogParser, PipelineCounters

logger = logging.getLogger(__name__)

SOURCES = (
    ('bdpt_forward', 'matched_bdpt_forward'),
    ('bdpt_reverse', 'matched_bdpt_reverse'),
    ('ptmp', 'matched_ptmp'),
    ('new', 'new_templates'),
)


# ============================================================================
# Input / Output Helpers
# ============================================================================

def _detect_format(path: str, fmt: str) -> str:
    if fmt != 'auto':
        return fmt
    return 'csv' if path.lower().endswith('.csv') else 'text'


def read_messages(path: str, fmt: str = 'auto') -> list:
    """Read log messages: one per line, or the Content column of a Loghub CSV."""
    fmt = _detect_format(path, fmt)
    source = sys.stdin if path == '-' else path
    if fmt == 'csv':
        try:
            frame = pd.read_csv(source, dtype=str, keep_default_na=False)
        except pd.errors.EmptyDataError:
            return []
        except OSError as e:
            raise RuntimeError(f"Cannot read input {path}: {e}") from e
        if 'Content' not in frame.columns:
            raise RuntimeError(f"Input {path} has no 'Content' column")
        return frame['Content'].tolist()
    if path == '-':
        return sys.stdin.read().splitlines()
    try:
        return Path(path).read_text(encoding='utf-8', errors='replace').splitlines()
    except OSError as e:
        raise RuntimeError(f"Cannot read input {path}: {e}") from e


def _output_name(path: str) -> str:
    if path == '-':
        return 'stdin'
    name = Path(path).name
    for suffix in ('_structured.csv', '.csv', '.log', '.txt'):
        if name.endswith(suffix) and len(name) > len(suffix):
            return name[:-len(suffix)]
    return name


def _print_json(data) -> None:
    print(json.dumps(data, indent=2))


# ============================================================================
# Commands
# ============================================================================

def cmd_parse(args, use_json: bool = False) -> int:
    config = load_config(Path(args.config) if args.config else None)
    if args.backend:
        config.llm = replace(config.llm, backend=args.backend)
    if args.fixtures:
        config.llm = replace(config.llm, fixtures_dir=args.fixtures)
    if args.top_k is not None:
        config.parser = replace(config.parser, top_k=args.top_k)
    if args.lexicon:
        config.lexicon = replace(config.lexicon, path=args.lexicon)

    flags = AblationFlags(
        disable_nlpe=args.disable_nlpe,
        disable_llm=args.disable_llm,
        disable_pos=args.disable_pos,
        disable_ptmp=args.disable_ptmp,
        disable_bdpt=args.disable_bdpt,
    )
    # Built before any input is read so a missing API key fails fast
    parser = LogParser(config, flags)

    if args.seed_templates:
        seeds = read_structured_csv(Path(args.seed_templates))
        if 'EventTemplate' not in seeds.columns:
            raise RuntimeError(f"{args.seed_templates} has no 'EventTemplate' column")
        parser.seed_templates(seeds['EventTemplate'].tolist())

    messages = read_messages(args.input, args.format)
    logger.info(f"Loaded {len(messages)} line(s) from {args.input}")

    failures = 0
    for lineno, line in enumerate(messages, start=1):
        try:
            parser.parse_line(line)
        except (LlmError, ValueError) as e:
            failures += 1
            logger.error(f"Line {lineno}: {e}")

    result = parser.export()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = args.name or _output_name(args.input)
    structured_path = out_dir / f"{name}_structured.csv"
    templates_path = out_dir / f"{name}_templates.csv"
    stats_path = out_dir / f"{name}_stats.json"

    result.structured.to_csv(structured_path, index=False)
    result.templates.to_csv(templates_path, index=False)
    report = {**result.report, 'failed_lines': failures}
    stats_path.write_text(json.dumps(report, indent=2) + '\n', encoding='utf-8')
    logger.info(f"Wrote {structured_path}, {templates_path} and {stats_path}")

    if use_json:
        _print_json({
            'structured': str(structured_path),
            'templates': str(templates_path),
            'stats': str(stats_path),
            **report,
        })
    else:
        print(f"✓ Parsed {report['lines']} line(s) into {len(result.templates)} template(s)")
        print(f"  {structured_path}")
        print(f"  {templates_path}")
        print(f"  {stats_path}")
        if failures:
            print(colorize(f"  {failures} line(s) failed, see log output", Colors.YELLOW))
    return 0


def cmd_evaluate(args, use_json: bool = False) -> int:
    corpus = LabeledCorpus.from_csv(Path(args.predictions), Path(args.truth))
    result = evaluate(corpus)

    output = Path(args.output) if args.output else (
        Path(args.predictions).with_name(f"{_output_name(args.predictions)}_metrics.json")
    )
    output.write_text(json.dumps(result, indent=2) + '\n', encoding='utf-8')

    if use_json:
        _print_json(result)
        return 0

    print(f"{Colors.BOLD}Metric  Value{Colors.RESET}")
    for name in METRIC_NAMES:
        print(f"{name:<7} {metric_str(result[name])}")
    print(f"\n✓ {len(corpus)} line(s) evaluated, metrics written to {output}")
    return 0


def source_breakdown(counters: PipelineCounters) -> dict:
    total = counters.lines_parsed
    breakdown = {}
    for label, attr in SOURCES:
        count = getattr(counters, attr)
        breakdown[label] = {
            'count': count,
            'percent': round(100.0 * count / total, 2) if total else 0.0,
        }
    return breakdown


def cmd_stats(args, use_json: bool = False) -> int:
    path = Path(args.stats_file)
    try:
        report = json.loads(path.read_text(encoding='utf-8'))
    except FileNotFoundError:
        raise RuntimeError(f"Stats file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise RuntimeError(f"Stats file {path} is not valid JSON: {e}") from e

    counters = PipelineCounters.from_dict(report.get('counters', {}))
    usage = report.get('usage', {})
    breakdown = source_breakdown(counters)

    if use_json:
        _print_json({
            'lines': counters.lines_parsed,
            'sources': breakdown,
            'nlpe_invocations': counters.nlpe_invocations,
            'llm_calls': counters.llm_calls,
            'llm_cache_hits': counters.llm_cache_hits,
            'malformed_replies': counters.malformed_replies,
            'stage2_unavailable': counters.stage2_unavailable,
            'template_updates': counters.template_updates,
            'usage': usage,
        })
        return 0

    print(f"{Colors.BOLD}Match sources ({counters.lines_parsed} lines){Colors.RESET}")
    for label, entry in breakdown.items():
        print(f"  {source_str(label, width=13)} {entry['count']:>8}  {entry['percent']:6.2f}%")
    print()
    print(f"NLPE invocations:  {counters.nlpe_invocations}")
    print(f"LLM calls:         {counters.llm_calls} "
          f"{Colors.DIM}(cache hits {counters.llm_cache_hits}, malformed {counters.malformed_replies}, "
          f"unavailable {counters.stage2_unavailable}){Colors.RESET}")
    print(f"Template updates:  {counters.template_updates}")
    if usage:
        print(f"LLM tokens:        {usage.get('prompt_tokens', 0)} prompt, "
              f"{usage.get('completion_tokens', 0)} completion")
    return 0


# ============================================================================
# Entry Point
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='logmend',
        description='logmend - self-correcting online log parser',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog='''
Examples:
  logmend parse --input Linux.log --out-dir out/          Parse with the offline mock LLM
  logmend parse --input Linux.log --backend live          Parse with a live endpoint
  logmend parse --input Linux.log --disable-pos           Ablation: LLM-only matching
  logmend evaluate --predictions out/Linux_structured.csv --truth Linux_truth.csv
  logmend stats out/Linux_stats.json
'''
    )
    parser.add_argument('--version', action='version', version=f'logmend {__version__}')
    parser.add_argument('--json', action='store_true', help='Output in JSON format')
    parser.add_argument('--verbose', '-v', action='store_true', help='Verbose output')

    subparsers = parser.add_subparsers(dest='command')

    # parse
    parse_p = subparsers.add_parser('parse', help='Parse a log corpus into templates')
    parse_p.add_argument('--input', '-i', required=True, help="Log file ('-' for stdin)")
    parse_p.add_argument('--out-dir', '-o', default='.', help='Directory for output files')
    parse_p.add_argument('--name', help='Output file stem (default: input file name)')
    parse_p.add_argument('--config', '-c', help='JSON config overlay')
    parse_p.add_argument('--backend', choices=['live', 'mock'], help='LLM backend')
    parse_p.add_argument('--fixtures', help='Directory of recorded LLM replies (mock backend)')
    parse_p.add_argument('--top-k', type=int, help='Pool candidates examined per line')
    parse_p.add_argument('--lexicon', help='Alternate POS lexicon file')
    parse_p.add_argument('--format', choices=['auto', 'text', 'csv'], default='auto',
                         help='Input format (auto: by extension)')
    parse_p.add_argument('--seed-templates', help='Templates CSV from an earlier run to preload')
    for component in ('nlpe', 'llm', 'pos', 'ptmp', 'bdpt'):
        parse_p.add_argument(f'--disable-{component}', action='store_true',
                             help=f'Ablation: turn off {component.upper()}')

    # evaluate
    eval_p = subparsers.add_parser('evaluate', help='Compute GA/PA/FGA/FTA')
    eval_p.add_argument('--predictions', '-p', required=True, help='Structured CSV produced by parse')
    eval_p.add_argument('--truth', '-t', required=True, help='Ground-truth structured CSV')
    eval_p.add_argument('--output', help='Metrics JSON path (default: next to predictions)')

    # stats
    stats_p = subparsers.add_parser('stats', help='Summarize a stats JSON written by parse')
    stats_p.add_argument('stats_file', help='<name>_stats.json')

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format='%(asctime)s [%(levelname)s] %(message)s',
        datefmt='%H:%M:%S',
        stream=sys.stderr,
    )

    if not args.command:
        parser.print_help()
        sys.exit(0)

    commands = {
        'parse': cmd_parse,
        'evaluate': cmd_evaluate,
        'stats': cmd_stats,
    }

    try:
        code = commands[args.command](args, use_json=args.json)
    except KeyboardInterrupt:
        print("\nInterrupted")
        sys.exit(130)
    except (RuntimeError, ValueError) as e:
        print(f"✗ {e}")
        if args.verbose:
            import traceback
            traceback.print_exc()
        sys.exit(1)
    except Exception as e:
        print(f"✗ Unexpected error: {e}")
        if args.verbose:
            import traceback
            traceback.print_exc()
        sys.exit(1)
    sys.exit(code)


if __name__ == '__main__':
    main()
