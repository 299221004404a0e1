"""Command-line front end.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 the planner got stuck.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import bench, simulator
from .automaton import InputError, enumerate_language, export_dot, load_pdfa, save_pdfa
from .pipeline import learn
from .planner import ScheduledEnvironment, Stuck, execute, greedy_plan
from .subgoals import DbscanParams, RadiusPolicy
from .trace import LoadError, Schema, SchemaError, load_demonstrations, write_demonstrations
from .wordgen import format_word, save_words

log = logging.getLogger("subgoal_pdfa")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_STUCK = 0, 1, 2, 3

PRESETS = {
    "four-blocks": simulator.four_blocks,
    "two-stacks": simulator.two_stacks,
    "late-block": simulator.late_block,
    "drone": simulator.drone_surveillance,
    "reacher": simulator.reacher,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list:
    try:
        return [int(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _load_schema(path) -> Schema:
    try:
        return Schema.load(path)
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}") from None
    except (LoadError, SchemaError, ValueError, TypeError) as e:
        raise UsageError(f"bad config {path}: {e}") from None


def cmd_infer(args) -> int:
    schema = _load_schema(args.config)
    opts = schema.extra
    eps = args.eps if args.eps is not None else opts.get("eps", 0.05)
    min_pts = args.min_pts if args.min_pts is not None else opts.get("min_pts")
    radius = args.radius if args.radius is not None else opts.get("radius", 0.03)
    try:
        params = DbscanParams(float(eps), None if min_pts is None else int(min_pts))
        policy = RadiusPolicy.parse(radius)
    except ValueError as e:
        raise UsageError(str(e)) from None
    if not Path(args.demos).exists():
        raise UsageError(f"demonstration file not found: {args.demos}")
    corpus = load_demonstrations(args.demos, schema)
    result = learn(corpus, schema.candidates, params, policy)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result.subgoals.save(out / "subgoals.json")
    save_words(out / "words.txt", result.words)
    save_pdfa(out / "pdfa.json", result.pdfa)
    dfa = result.pdfa.dfa
    print(f"|G| = {len(result.subgoals)}")
    print(f"|Q| = {len(dfa.states)}")
    print(f"|F| = {len(dfa.accepting)}")
    print(f"|L| = {len(enumerate_language(result.pdfa))}")
    return EXIT_OK


def _symbol_objects(pdfa) -> dict:
    out = {}
    for sym, ref in pdfa.symbol_refs.items():
        if isinstance(ref, dict) and ref.get("subset"):
            out[sym] = ref["subset"][0] // 3
    return out


def _state_from_id(pdfa, sid):
    if sid is None:
        return pdfa.initial
    if not 0 <= sid < len(pdfa.dfa.states):
        raise UsageError(f"no state with id {sid}")
    return pdfa.dfa.states[sid]


def cmd_plan(args) -> int:
    pdfa = _read_pdfa(args.pdfa)
    start = _state_from_id(pdfa, args.start)
    unreachable = set(args.unreachable or ())
    try:
        plan = greedy_plan(pdfa, start, unreachable, args.prefer_terminal)
    except Stuck as e:
        print(f"stuck in state {pdfa.dfa.state_id(e.state)}", file=sys.stderr)
        return EXIT_STUCK
    print(f"plan: {format_word(plan.symbols)}")
    print(f"expected_probability: {float(plan.expected_probability):.6f}")
    if args.schedule is None:
        return EXIT_OK

    try:
        raw = json.loads(Path(args.schedule).read_text())
        env = ScheduledEnvironment.from_json(raw, _symbol_objects(pdfa) or None)
    except FileNotFoundError:
        raise UsageError(f"schedule file not found: {args.schedule}") from None
    except (ValueError, AttributeError) as e:
        raise UsageError(f"bad schedule {args.schedule}: {e}") from None
    trace = execute(pdfa, env, prefer_terminal=args.prefer_terminal)
    trace_path = Path(args.trace) if args.trace else Path(args.out_dir) / "trace.jsonl"
    trace_path.parent.mkdir(parents=True, exist_ok=True)
    trace.save(trace_path, pdfa)
    print(f"executed: {format_word(trace.achieved)}")
    print(f"replanned: {trace.count('replanned')}")
    print(f"outcome: {trace.outcome}")
    return EXIT_STUCK if trace.outcome == "stuck" else EXIT_OK


def _read_pdfa(path):
    if not Path(path).exists():
        raise UsageError(f"PDFA file not found: {path}")
    return load_pdfa(path)


def cmd_export(args) -> int:
    pdfa = _read_pdfa(args.pdfa)
    text = export_dot(pdfa, probabilities=args.probabilities == "on")
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.reps == 1:
        log.warning("a single repetition gives no spread estimate; MAD will be 0")
    try:
        rows = bench.scaling_bench(args.axis, args.levels, args.reps, args.seed)
    except ValueError as e:
        raise UsageError(str(e)) from None
    sys.stdout.write(bench.to_tsv(rows))
    if args.out_dir:
        bench.write_outputs(rows, args.out_dir, args.axis)
    return EXIT_OK


def cmd_generate(args) -> int:
    if args.script:
        try:
            script = simulator.TaskScript.load(args.script)
        except FileNotFoundError:
            raise UsageError(f"script file not found: {args.script}") from None
        except (ValueError, KeyError, TypeError) as e:
            raise UsageError(f"bad task script {args.script}: {e}") from None
    else:
        script = PRESETS[args.preset]()
    corpus, _ = simulator.generate_demos(script, args.count, args.seed, exact=args.exact)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_demonstrations(out / "demos.csv", corpus)
    schema = script.schema()
    schema.extra["radius"] = script.targets[0].radius
    schema.save(out / "config.json")
    if script.absent:
        sched = {"absent": {str(k): sorted(v) for k, v in sorted(script.absent.items())}}
        (out / "schedule.json").write_text(json.dumps(sched, indent=2) + "\n")
    print(f"wrote {len(corpus)} demonstrations to {out / 'demos.csv'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="subgoal-pdfa", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    q = sub.add_parser("infer", help="learn sub-goals and a PDFA from demonstrations")
    q.add_argument("--demos", required=True)
    q.add_argument("--config", required=True, help="JSON with n_features, candidates, optional eps/min_pts/radius")
    q.add_argument("--out-dir", default=".")
    q.add_argument("--eps", type=float)
    q.add_argument("--min-pts", type=int)
    q.add_argument("--radius", help="fixed sub-goal radius, or 'max-member'")
    q.add_argument("--seed", type=int, default=0)
    q.set_defaults(func=cmd_infer)

    q = sub.add_parser("plan", help="greedy plan over a PDFA, optionally simulated")
    q.add_argument("--pdfa", required=True)
    q.add_argument("--start", type=int, help="state id to plan from (default: initial)")
    q.add_argument("--unreachable", type=_int_list, help="symbols unavailable right now")
    q.add_argument("--prefer-terminal", action="store_true")
    q.add_argument("--schedule", "--simulate", dest="schedule", help="availability schedule; runs execution")
    q.add_argument("--trace", help="trace output path (default OUT_DIR/trace.jsonl)")
    q.add_argument("--out-dir", default=".")
    q.add_argument("--seed", type=int, default=0)
    q.set_defaults(func=cmd_plan)

    q = sub.add_parser("export", help="write the PDFA as Graphviz DOT")
    q.add_argument("--pdfa", required=True)
    q.add_argument("--probabilities", choices=("on", "off"), default="on")
    q.add_argument("--out")
    q.set_defaults(func=cmd_export)

    q = sub.add_parser("bench", help="scaling benchmark along one axis")
    q.add_argument("--axis", required=True, choices=bench.AXES)
    q.add_argument("--levels", type=_int_list)
    q.add_argument("--reps", type=int, default=3)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out-dir")
    q.set_defaults(func=cmd_bench)

    q = sub.add_parser("generate", help="synthesise demonstrations from a task script")
    src = q.add_mutually_exclusive_group(required=True)
    src.add_argument("--script")
    src.add_argument("--preset", choices=sorted(PRESETS))
    q.add_argument("--count", type=int, default=24)
    q.add_argument("--exact", action="store_true", help="allocate orderings by weight instead of sampling")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out-dir", default=".")
    q.set_defaults(func=cmd_generate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (LoadError, SchemaError, InputError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
