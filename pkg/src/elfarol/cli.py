"""Command line entry point: run / replay / analyze / compare / export.

Exit codes: 0 ok, 2 configuration error, 3 LLM transport/auth error,
4 data error (bad trace, replay mismatch, nothing to analyze).
Errors are reported on stderr as one line::

    error kind=<kind> code=<exit code> msg="<message>"
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from .brains import make_brain
from .config import BrainSpec, SimConfig, load_config
from .errors import ConfigError, DataError, ElFarolError
from .recorder import TRANSCRIPT_NAME, RunLog, load
from .runner import replay, simulate

log = logging.getLogger("elfarol")


def _effective_config(args: argparse.Namespace) -> SimConfig:
    config = load_config(args.config) if args.config else SimConfig()
    brain = config.brain
    if args.brain:
        same = BrainSpec(kind=args.brain).kind == brain.kind
        brain = BrainSpec(kind=args.brain, params=brain.params if same else {})
    return config.with_overrides(
        brain=brain,
        max_steps=args.steps,
        rng_seed=args.seed,
        venue_name=args.venue,
        template_path=getattr(args, "template", None),
    )


def cmd_run(args: argparse.Namespace) -> int:
    config = _effective_config(args)
    out = Path(args.out) if args.out else Path("runs") / datetime.now(timezone.utc).strftime("run-%Y%m%dT%H%M%SZ")
    # brain construction validates credentials before anything touches disk
    brain = make_brain(config.brain, config, transcript_path=out / TRANSCRIPT_NAME)
    threshold = config.threshold_count

    def report(step: int, att: int) -> None:
        if not args.quiet:
            flag = " crowded" if att >= threshold else ""
            print(f"step {step:5d} attendance {att:3d}{flag}", flush=True)

    try:
        simulate(config, brain, out, on_step=report)
    finally:
        brain.close()
    print(f"run complete: {out}")
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    verdict = replay(args.run_dir)
    print(verdict)
    if not verdict.ok:
        raise DataError(str(verdict))
    return 0


def _load_many(dirs: Sequence[str]) -> tuple[list[RunLog], list[str]]:
    logs, labels = [], []
    for d in dirs:
        try:
            logs.append(load(d))
            labels.append(Path(d).name or str(d))
        except ElFarolError as exc:
            print(f"warning: skipping {d}: {type(exc).__name__}: {exc}", file=sys.stderr)
    if not logs:
        raise DataError("no loadable runs")
    return logs, labels


def _analysis_kwargs(args: argparse.Namespace) -> dict:
    from .analysis.tokens import load_stopwords

    return dict(
        window=args.window,
        bin_width=args.bin_width,
        dt_bin_width=args.dt_bin_width,
        horizon=args.horizon,
        centroid=args.centroid,
        stopwords=load_stopwords(args.stopwords),
    )


def cmd_analyze(args: argparse.Namespace) -> int:
    from .analysis.report import analyze_logs, export_report

    logs, labels = _load_many(args.run_dirs)
    report = analyze_logs(logs, labels, **_analysis_kwargs(args))
    files = export_report(report, args.out, args.format)
    for f in files:
        print(f)
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    from .analysis.report import compare_runs, export_comparison

    if not args.a or not args.b:
        raise DataError("compare needs run directories for both --a and --b")
    logs_a, _ = _load_many(args.a)
    logs_b, _ = _load_many(args.b)
    cmp = compare_runs(logs_a, logs_b, tuple(args.labels), queries=args.query, **_analysis_kwargs(args))
    for f in export_comparison(cmp, args.out, args.format):
        print(f)
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    """Dump messages and memories as plain text and JSONL for external embedding tools."""
    run = load(args.run_dir)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "messages.txt").open("w", encoding="utf-8") as m, \
            (out / "memories.txt").open("w", encoding="utf-8") as mem, \
            (out / "texts.jsonl").open("w", encoding="utf-8") as js:
        for r in run.records:
            m.write(r.message.replace("\n", " ") + "\n")
            mem.write(r.memory.replace("\n", " ") + "\n")
            js.write(json.dumps(
                {"step": r.step, "agent_id": r.agent_id, "message": r.message, "memory": r.memory},
                ensure_ascii=False,
            ) + "\n")
    print(out)
    return 0


def _add_analysis_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", required=True, help="output directory for CSV/SVG files")
    p.add_argument("--window", type=int, default=20, help="half-width of the hashtag-aligned window")
    p.add_argument("--bin-width", type=float, default=1.0, help="bin width for the speed profile")
    p.add_argument("--dt-bin-width", type=float, default=50.0, help="bin width for the ΔT histogram")
    p.add_argument("--horizon", type=int, default=50, help="steps after first crowding that count as leaving")
    p.add_argument("--centroid", choices=("global", "largest_component"), default="global")
    p.add_argument("--stopwords", default="default", help="'default', 'none' or a file with one word per line")
    p.add_argument("--format", choices=("csv", "svg", "both"), default="both")


class _Parser(argparse.ArgumentParser):
    """Usage errors use the same one-line format as runtime errors."""

    def error(self, message: str):
        self.exit(ConfigError.exit_code, f'error kind=usage code={ConfigError.exit_code} msg="{_one_line(message)}"\n')


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="elfarol", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute a simulation")
    p.add_argument("--config", help="scenario TOML file")
    p.add_argument("--brain", help="override brain kind: llm, greedy, threshold, random")
    p.add_argument("--steps", type=int, help="override max_steps")
    p.add_argument("--seed", type=int, help="override rng_seed")
    p.add_argument("--venue", help="override venue name, e.g. Library")
    p.add_argument("--template", help="prompt template override file")
    p.add_argument("--out", help="run directory (default runs/run-<timestamp>)")
    p.add_argument("-q", "--quiet", action="store_true", help="no per-step attendance lines")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("replay", help="re-execute a run from its trace and verify it byte for byte")
    p.add_argument("run_dir")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("analyze", help="analysis report over one or more runs")
    p.add_argument("run_dirs", nargs="+")
    _add_analysis_flags(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("compare", help="compare two sets of runs (e.g. bar vs library)")
    p.add_argument("--a", nargs="+", default=[], help="run directories of the first set")
    p.add_argument("--b", nargs="+", default=[], help="run directories of the second set")
    p.add_argument("--labels", nargs=2, default=["bar", "library"])
    p.add_argument("--query", nargs="+", default=["together"], help="tokens to rank in both sets")
    _add_analysis_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("export", help="write messages and memories as text/JSONL")
    p.add_argument("run_dir")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)
    return parser


def _one_line(msg: str) -> str:
    return msg.replace("\\", "\\\\").replace("\n", "\\n").replace('"', '\\"')


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ElFarolError as exc:
        print(f'error kind={exc.code} code={exc.exit_code} msg="{_one_line(str(exc))}"', file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f'error kind=io code=4 msg="{_one_line(str(exc))}"', file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
