"""Command-line front end: ``defgraph <command> ...``.

Exit codes: 0 success, 1 errors found in the input, 2 usage, 3 I/O or bundle
integrity failures. Options can also come from a JSON ``--config`` file;
command-line flags win over the file, the file wins over built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .bundle_io import MANIFEST, read_bundle, write_bundle
from .circuit_db import TechTable, Vocabularies, resolve, validate
from .def_parser import Stage, detect_stage, emit_def, read_def
from .errors import DefGraphError, DefSyntaxError
from .homograph import HomoGraph, merge_graphs, split_dataset, to_homograph
from .labels import compute_labels
from .stats import CONVENTIONS, DEFAULT_SAMPLES, format_report, graph_stats
from .syngen import GenSpec, write_design
from .views import VIEWS, CircuitGraph, build_view, check_parity

logger = logging.getLogger("defgraph")

EXIT_OK, EXIT_ERRORS, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
THREADS_ENV = "R2G_THREADS"


class _Fail(Exception):
    """Command finished but found problems; message already reported."""


def _threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            logger.warning("ignoring non-integer %s=%r", THREADS_ENV, raw)
    return os.cpu_count() or 1


def _is_bundle(path: str) -> bool:
    return (Path(path) / MANIFEST).is_file()


def _load_db(path: str, tech: Optional[str], vocab: Optional[str]):
    raw = read_def(path)
    for diag in raw.diagnostics:
        logger.warning("%d:%d %s", diag.line, diag.col, diag.message)
    vocabularies = Vocabularies.load(vocab) if vocab and Path(vocab).is_file() else Vocabularies()
    table = TechTable.load(tech) if tech else None
    return raw, resolve(raw, vocabularies, table)


def _stage_arg(value: Optional[str], db) -> Stage:
    return db.stage if value is None else Stage.parse(value)


# -- commands ----------------------------------------------------------------------


def cmd_parse(args) -> int:
    raw = read_def(args.def_file)
    for diag in raw.diagnostics:
        logger.warning("%d:%d %s", diag.line, diag.col, diag.message)
    if args.emit:
        data = emit_def(raw)
        if args.output:
            Path(args.output).write_bytes(data)
        else:
            sys.stdout.buffer.write(data)
            sys.stdout.flush()
        return EXIT_OK
    die = raw.die_area
    lines = [
        f"design={raw.design_name}",
        f"dbu_per_micron={raw.dbu_per_micron}",
        f"die_area={' '.join(map(str, die)) if die else None}",
        f"stage={detect_stage(raw).value}",
        f"components={len(raw.components)}",
        f"pins={len(raw.pins)}",
        f"nets={len(raw.nets)}",
        f"special_nets={len(raw.special_nets)}",
        f"warnings={len(raw.diagnostics)}",
    ]
    print("\n".join(lines))
    return EXIT_OK


def _build_one(db, view: str, stage: Stage, labels, variant: str) -> CircuitGraph:
    return build_view(db, view, stage, labels, variant=variant)


def cmd_build(args) -> int:
    _, db = _load_db(args.def_file, args.tech, args.vocab)
    stage = _stage_arg(args.stage, db)
    labels = compute_labels(db, stage, include_special=args.include_special)
    out = Path(args.output)
    if args.view == "all":
        with ThreadPoolExecutor(max_workers=_threads()) as pool:
            futures = {v: pool.submit(_build_one, db, v, stage, labels, args.view_variant) for v in VIEWS}
            graphs = {v: f.result() for v, f in futures.items()}
        # writes stay sequential and in view order
        for v, g in graphs.items():
            write_bundle(g, out / v)
        report = check_parity(graphs)
        print(f"parity={'PASS' if report.passed else 'FAIL'}")
        for failure in report.failures:
            logger.error("parity: %s", failure)
        for note in report.notes:
            logger.info("parity: %s", note)
        if not report.passed:
            raise _Fail()
    else:
        g = _build_one(db, args.view, stage, labels, args.view_variant)
        write_bundle(g, out)
    if args.vocab:
        db.vocab.save(args.vocab)
    return EXIT_OK


def _graph_for_stats(args):
    if _is_bundle(args.input):
        return read_bundle(args.input)
    _, db = _load_db(args.input, args.tech, None)
    return build_view(db, args.view, db.stage)


def cmd_stats(args) -> int:
    g = _graph_for_stats(args)
    if args.exact:
        mode = "exact"
    elif args.sample is not None:
        mode = "sampled"
    else:
        mode = "auto"
    stats = graph_stats(g, mode=mode, k=args.sample or DEFAULT_SAMPLES, seed=args.seed)
    sys.stdout.write(format_report(stats, CONVENTIONS))
    return EXIT_OK


def _as_homo(g) -> HomoGraph:
    return g if isinstance(g, HomoGraph) else to_homograph(g)


def cmd_merge(args) -> int:
    graphs = [_as_homo(read_bundle(p)) for p in args.bundles]
    merged = merge_graphs(graphs)
    write_bundle(merged, args.output)
    print(f"designs={merged.num_designs} nodes={merged.num_nodes} edges={merged.num_edges}")
    return EXIT_OK


def _ratios(text) -> tuple[float, ...]:
    if isinstance(text, (list, tuple)):
        values = tuple(float(v) for v in text)
    else:
        values = tuple(float(v) for v in str(text).split(","))
    if len(values) != 3:
        raise argparse.ArgumentTypeError("ratios need three comma-separated numbers")
    return values


def cmd_split(args) -> int:
    h = _as_homo(read_bundle(args.bundle))
    masks = split_dataset(h, policy=args.policy, ratios=_ratios(args.ratios), seed=args.seed)
    write_bundle(h, args.output or args.bundle)
    counts = masks.policy["counts"]
    print(f"train={counts[0]} val={counts[1]} test={counts[2]} "
          f"labeled_train={int(masks.train.sum())} labeled_val={int(masks.val.sum())} "
          f"labeled_test={int(masks.test.sum())}")
    return EXIT_OK


def cmd_validate(args) -> int:
    problems = []
    if _is_bundle(args.input):
        g = read_bundle(args.input)
        if isinstance(g, CircuitGraph):
            problems.extend(g.check())
        print(f"bundle={args.input} problems={len(problems)}")
    else:
        _, db = _load_db(args.input, args.tech, None)
        issues = validate(db)
        problems.extend(f"{i.code}: {i.message}" for i in issues)
        stages = [s for s in (Stage.PLACEMENT, Stage.ROUTING) if s.rank <= db.stage.rank] or [Stage.FLOORPLAN]
        for stage in stages:
            graphs = {v: build_view(db, v, stage) for v in VIEWS}
            for v, g in graphs.items():
                problems.extend(f"view {v}: {p}" for p in g.check())
            report = check_parity(graphs)
            print(f"parity[{stage.value}]={'PASS' if report.passed else 'FAIL'}")
            problems.extend(report.failures)
        print(f"db_issues={len(issues)}")
    for p in problems:
        logger.error("%s", p)
    if problems:
        raise _Fail()
    return EXIT_OK


def cmd_gen(args) -> int:
    spec = GenSpec(gates=args.gates, avg_fanout=args.fanout, io_count=args.io_count, grid=args.grid,
                   seed=args.seed, stage=Stage.parse(args.stage).value, via_stack=args.via_stack)
    def_path, truth, tech = write_design(spec, args.output, name=args.name)
    print(f"def={def_path} truth={truth} tech={tech}")
    return EXIT_OK


# -- argument parsing -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="defgraph", description="DEF to multi-view circuit graphs.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--config", help="JSON file with option defaults")
    p.add_argument("-v", "--verbose", action="count", default=0)
    p.add_argument("-q", "--quiet", action="store_true")
    # -v/-q are accepted after the subcommand as well
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS)
    common.add_argument("-q", "--quiet", action="store_true", default=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("parse", parents=[common], help="parse a DEF file and print a summary")
    sp.add_argument("def_file")
    sp.add_argument("--emit", action="store_true", help="print normalized DEF instead of the summary")
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_parse)

    sp = sub.add_parser("build", parents=[common], help="build graph views and write bundles")
    sp.add_argument("def_file")
    sp.add_argument("--view", choices=[*VIEWS, "all"], default="all")
    sp.add_argument("--stage", choices=["floorplan", "place", "placement", "route", "routing"])
    sp.add_argument("--view-variant", choices=["canonical", "table2"], default="canonical")
    sp.add_argument("--tech")
    sp.add_argument("--vocab", help="vocabulary sidecar to extend (read if present, written back)")
    sp.add_argument("--include-special", action="store_true")
    sp.add_argument("-o", "--output", required=True)
    sp.set_defaults(func=cmd_build)

    sp = sub.add_parser("stats", parents=[common], help="graph statistics of a bundle or DEF")
    sp.add_argument("input")
    mode = sp.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true")
    mode.add_argument("--sample", type=int, metavar="K")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--view", choices=VIEWS, default="b", help="view to build when the input is DEF")
    sp.add_argument("--tech")
    sp.set_defaults(func=cmd_stats)

    sp = sub.add_parser("merge", parents=[common], help="merge bundles into one homogeneous bundle")
    sp.add_argument("bundles", nargs="+")
    sp.add_argument("-o", "--output", required=True)
    sp.set_defaults(func=cmd_merge)

    sp = sub.add_parser("split", parents=[common], help="assign designs of a merged bundle to train/val/test")
    sp.add_argument("bundle")
    sp.add_argument("--policy", choices=["design"], default="design")
    sp.add_argument("--ratios", type=_ratios, default="70,15,15")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_split)

    sp = sub.add_parser("validate", parents=[common], help="check a DEF (database + view parity) or a bundle")
    sp.add_argument("input")
    sp.add_argument("--tech")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("gen", parents=[common], help="generate a synthetic DEF with ground truth")
    sp.add_argument("--gates", type=int, required=True)
    sp.add_argument("--fanout", type=float, default=2.0)
    sp.add_argument("--io-count", type=int, default=0)
    sp.add_argument("--grid", type=int)
    sp.add_argument("--stage", default="routing")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--via-stack", type=int, default=0)
    sp.add_argument("--name")
    sp.add_argument("-o", "--output", required=True)
    sp.set_defaults(func=cmd_gen)
    return p


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    config = json.loads(Path(known.config).read_text(encoding="utf-8"))
    if not isinstance(config, dict):
        raise ValueError(f"{known.config}: config must be a JSON object")
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for sp in subparsers.choices.values():
        dests = {a.dest for a in sp._actions}
        values = {k.replace("-", "_"): v for k, v in config.items()}
        sp.set_defaults(**{k: v for k, v in values.items() if k in dests})


def _setup_logging(verbose: int, quiet: bool) -> None:
    level = logging.ERROR if quiet else (logging.DEBUG if verbose > 1 else logging.INFO if verbose else logging.WARNING)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    root = logging.getLogger("defgraph")
    root.handlers[:] = [handler]
    root.setLevel(level)
    root.propagate = False


def run(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
    except (OSError, ValueError) as exc:
        print(f"defgraph: error: config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    _setup_logging(args.verbose, args.quiet)
    source = (getattr(args, "def_file", None) or getattr(args, "input", None)
              or getattr(args, "bundle", None) or " ".join(getattr(args, "bundles", None) or ()))
    try:
        return args.func(args)
    except _Fail:
        return EXIT_ERRORS
    except DefSyntaxError as exc:
        logger.error("%s:%s", source, exc)
        return exc.exit_code
    except DefGraphError as exc:
        logger.error("%s: %s", source, exc)
        return exc.exit_code
    except ValueError as exc:
        logger.error("%s: %s", source, exc)
        return EXIT_ERRORS
    except OSError as exc:
        logger.error("%s", exc)
        return EXIT_IO


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
