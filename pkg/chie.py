#!/usr/bin/env python3
"""
Command-line entry point.
Usage: python chie.py <command> [options]

Commands:
  targets   catalog of convex targets for n triangles
  solve     tile one target with a piece set
  coverage  count the targets a piece set can form
  ftable    f(1..N) with the doubling check
  search    look for piece sets with high coverage
  verify    machine checks behind the ten-piece argument
  pieces    print a piece set in piece-file form
  results   list, view, summarise or export stored runs
"""

import argparse
import json
import sys
import time
from pathlib import Path
from typing import List, Optional, Tuple

import pandas as pd

from config import load_settings, log
from lattice import LatticeError, Region, rasterize_polygon, region_from_triangles
from pieces import PieceFileError, UnknownPieceSetError, load_piece_source, serialize_piece_set
from render import catalog_svg, ftable_chart, solution_svg, write_svg
from results_store import ResultStore
from search import SearchBudget, SearchParameterError, search_piece_sets, verify_ten_piece_subclaims
from solver import (
    MODULO_NONE,
    MODULO_SYMMETRY,
    AreaMismatchError,
    InvariantViolation,
    SolverBudgetExceeded,
    count_solutions,
    coverage,
    enumerate_solutions,
    serialize_solution,
    solve,
)
from targets import (
    TargetError,
    catalog_records,
    check_doubling,
    enumerate_targets,
    ftable,
    polygon_from_spec,
    target_by_id,
    validate_spec,
)

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_USAGE = 2
EXIT_INVARIANT = 3

USAGE_ERRORS = (
    TargetError,
    PieceFileError,
    UnknownPieceSetError,
    AreaMismatchError,
    SearchParameterError,
    LatticeError,
    OSError,
    ValueError,
)


def emit(args, record: dict, text: str):
    """One JSON document for --format structured, plain text otherwise."""
    if args.format == "structured":
        print(json.dumps(record, indent=2))
    else:
        print(text)


def table(rows: List[dict]) -> str:
    if not rows:
        return "(none)"
    return pd.DataFrame(rows).to_string(index=False)


def output_dir(args) -> Path:
    return Path(args.output_dir or load_settings().output_dir)


def resolve_target(source: str) -> Tuple[str, Region]:
    """A catalog id, or a file holding either eight octagon lengths or T records."""
    path = Path(source)
    if not path.is_file():
        target = target_by_id(source)
        return target.id, target.region
    lines = [line.split("#", 1)[0].strip() for line in path.read_text(encoding="utf-8").splitlines()]
    lines = [line for line in lines if line]
    if lines and lines[0].startswith("T"):
        triangles = []
        for line in lines:
            tokens = line.split()
            if len(tokens) != 4 or tokens[0] != "T":
                raise TargetError(f"{source}: expected 'T <x> <y> <half>', got {line!r}")
            triangles.append((int(tokens[1]), int(tokens[2]), tokens[3]))
        return path.stem, region_from_triangles(triangles)
    try:
        spec = validate_spec([int(v) for v in " ".join(lines).split()])
    except ValueError as e:
        raise TargetError(f"{source}: {e}") from None
    return path.stem, rasterize_polygon(polygon_from_spec(spec))


# --- Commands ---

def cmd_targets(args) -> int:
    if args.n < 1:
        raise TargetError(f"--n must be at least 1, got {args.n}")
    targets = enumerate_targets(args.n)
    records = catalog_records(args.n)
    rows = [
        {"id": r["id"], "spec": " ".join(map(str, r["spec"])), "edges": sum(1 for v in r["spec"] if v),
         "symmetry": r["symmetry_order"]}
        for r in records
    ]
    emit(args, {"n": args.n, "f": len(targets), "targets": records}, f"f({args.n}) = {len(targets)}\n{table(rows)}")
    if args.svg:
        path = write_svg(catalog_svg(targets), str(output_dir(args) / f"targets-n{args.n}.svg"))
        log("CLI", f"Wrote {path}")
    return EXIT_OK


def cmd_solve(args) -> int:
    ps = load_piece_source(args.pieces)
    name, region = resolve_target(args.target)
    if len(region) != 2 * ps.total_triangles:
        raise AreaMismatchError(f"{ps.name} has {ps.total_triangles} triangles, {name} needs {len(region) // 2}")

    if args.count:
        modulo = MODULO_SYMMETRY if args.modulo_symmetry else MODULO_NONE
        count = count_solutions(ps, region, modulo)
        emit(args, {"pieceset": ps.name, "target": name, "modulo": modulo, "count": count},
             f"{ps.name} on {name}: {count} solutions ({modulo})")
        return EXIT_OK if count else EXIT_NEGATIVE

    if args.all:
        solutions = list(enumerate_solutions(ps, region))
        emit(
            args,
            {"pieceset": ps.name, "target": name, "count": len(solutions),
             "solutions": [serialize_solution(ps, s).splitlines() for s in solutions]},
            "\n\n".join([f"{ps.name} on {name}: {len(solutions)} solutions"]
                        + [serialize_solution(ps, s) for s in solutions]),
        )
        if args.svg:
            for index, solution in enumerate(solutions):
                write_svg(solution_svg(region, solution, ps, f"{name} #{index}"),
                          str(output_dir(args) / f"{name}-{index}.svg"))
        return EXIT_OK if solutions else EXIT_NEGATIVE

    try:
        result = solve(ps, region, args.max_nodes)
    except SolverBudgetExceeded as e:
        emit(args, {"pieceset": ps.name, "target": name, "verdict": "unknown", "nodes": e.nodes},
             f"{ps.name} on {name}: unknown ({e})")
        return EXIT_NEGATIVE
    verdict = "SAT" if result.found else "UNSAT"
    record = {"pieceset": ps.name, "target": name, "verdict": verdict, "nodes": result.nodes}
    text = f"{ps.name} on {name}: {verdict} ({result.nodes} nodes)"
    if result.found:
        record["witness"] = serialize_solution(ps, result.solution).splitlines()
        text += "\n" + serialize_solution(ps, result.solution)
        if args.svg:
            path = write_svg(solution_svg(region, result.solution, ps, f"{ps.name} on {name}"),
                             str(output_dir(args) / f"{name}.svg"))
            log("CLI", f"Wrote {path}")
    emit(args, record, text)
    return EXIT_OK if result.found else EXIT_NEGATIVE


def cmd_coverage(args) -> int:
    settings = load_settings()
    ps = load_piece_source(args.pieces)
    started = time.perf_counter()
    report = coverage(ps, args.n, threads=args.threads or settings.threads, max_nodes=args.max_nodes,
                      keep_witnesses=args.svg)
    elapsed = time.perf_counter() - started
    rows = [
        {"target": r["target"], "verdict": r["verdict"], "unplaceable": ", ".join(r["unplaceable"]) or "-"}
        for r in report.to_record(timings=False)["verdicts"]
    ]
    emit(args, report.to_record(timings=False),
         f"{ps.name}: {report.count} of {len(report.verdicts)} targets formable\n{table(rows)}")

    if not args.no_store:
        try:
            ResultStore(settings.db_path).store_coverage(report, elapsed)
        except Exception as e:
            log("DB ERROR", f"Failed to store coverage run: {e}")
    if args.svg:
        targets = {t.id: t for t in enumerate_targets(args.n)}
        for verdict in report.verdicts:
            if verdict.witness is None:
                continue
            try:
                write_svg(solution_svg(targets[verdict.target_id].region, verdict.witness, ps),
                          str(output_dir(args) / f"{ps.name}-{verdict.target_id}.svg"))
            except Exception as e:
                log("RENDER ERROR", f"Failed to render {verdict.target_id}: {e}")
    return EXIT_OK


def cmd_ftable(args) -> int:
    values = ftable(args.max)
    violations = check_doubling(values)
    rows = [{"n": n, "f(n)": v} for n, v in values.items()]
    emit(args, {"f": {str(n): v for n, v in values.items()}, "doubling_violations": violations}, table(rows))
    if args.plot:
        path = ftable_chart(values, str(output_dir(args) / f"ftable-{args.max}.svg"))
        log("CLI", f"Wrote {path}")
    if violations:
        raise InvariantViolation(f"f(x) >= f(2x) for x in {violations}")
    return EXIT_OK


def cmd_search(args) -> int:
    settings = load_settings()
    budget = SearchBudget(
        max_candidates=args.max_candidates,
        max_solver_nodes=args.max_nodes,
        time_limit=args.time_limit,
        checkpoint_path=args.checkpoint,
    )
    store = None
    if not args.no_store:
        try:
            store = ResultStore(settings.db_path)
        except Exception as e:
            log("DB ERROR", f"Result store unavailable: {e}")
    result = search_piece_sets(args.pieces, args.triangles, args.min_coverage, budget,
                               threads=args.threads, resume=args.resume, store=store)
    rows = [{"coverage": hit.coverage, "pieces": " ".join(s.name for s in hit.pieceset.expanded())}
            for hit in result.hits]
    status = "exhausted" if result.exhausted else result.stop_reason
    emit(args, result.to_record(),
         f"{len(result.hits)} piece sets with coverage >= {args.min_coverage} "
         f"after {result.evaluated} candidates ({status})\n{table(rows)}")
    return EXIT_OK if result.hits else EXIT_NEGATIVE


def cmd_verify(args) -> int:
    checks = verify_ten_piece_subclaims(args.n)
    rows = [{"subclaim": c.name, "result": "pass" if c.passed else "FAIL", "detail": c.detail} for c in checks]
    emit(args, {"checks": [c.to_record() for c in checks]}, table(rows))
    return EXIT_OK if all(c.passed for c in checks) else EXIT_NEGATIVE


def cmd_pieces(args) -> int:
    ps = load_piece_source(args.source)
    record = {
        "pieceset": ps.name,
        "pieces": ps.piece_count,
        "triangles": ps.total_triangles,
        "shapes": [{"name": s.name, "count": c, "triangles": s.serialize().splitlines()} for s, c in ps.pieces],
    }
    emit(args, record, serialize_piece_set(ps).rstrip("\n"))
    return EXIT_OK


def cmd_results(args) -> int:
    store = ResultStore(load_settings().db_path)
    if args.action == "list":
        runs = store.get_all_runs(limit=int(args.arg) if args.arg else 10)
        rows = [{"id": r["id"], "created": r["created_at"], "pieceset": r["pieceset"], "n": r["n"],
                 "coverage": r["coverage"]} for r in runs]
        emit(args, {"runs": runs}, f"{len(runs)} coverage runs\n{table(rows)}")
    elif args.action == "view":
        if not args.arg:
            print("Usage: python chie.py results view <run id>", file=sys.stderr)
            return EXIT_USAGE
        run = store.get_run(args.arg)
        if run is None:
            print(f"Run with ID {args.arg} not found.")
            return EXIT_NEGATIVE
        rows = [{"target": v["target"], "verdict": v["verdict"]} for v in run["verdicts"]]
        emit(args, run, f"{run['pieceset']} (n={run['n']}): {run['coverage']} formable\n{table(rows)}")
    elif args.action == "stats":
        stats = store.get_statistics()
        rows = [{"pieceset": k, "best coverage": v} for k, v in stats["best_by_pieceset"].items()]
        emit(args, stats,
             f"Total runs: {stats['total_runs']}\nSearch hits: {stats['total_search_hits']}\n{table(rows)}")
    elif args.action == "hits":
        hits = store.get_search_hits(limit=int(args.arg) if args.arg else 10)
        rows = [{"id": h["id"], "created": h["created_at"], "pieces": h["num_pieces"], "n": h["num_triangles"],
                 "coverage": h["coverage"]} for h in hits]
        emit(args, {"hits": hits}, f"{len(hits)} search hits\n{table(rows)}")
    else:
        target = args.arg or "chie_results_export.csv"
        runs = store.get_all_runs(limit=10000)
        frame = pd.DataFrame([{k: v for k, v in r.items() if k != "verdicts"} for r in runs])
        frame.to_csv(target, index=False)
        emit(args, {"exported": len(runs), "file": target}, f"Exported {len(runs)} runs to {target}")
    return EXIT_OK


# --- Parser ---

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "structured"), default="text")
    common.add_argument("--output-dir", help="directory for SVG files (default CHIE_OUTPUT_DIR)")

    parser = argparse.ArgumentParser(prog="chie", description="Convex polygons from unit triangles.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("targets", parents=[common], help="list the convex targets for n triangles")
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--svg", action="store_true")
    p.set_defaults(func=cmd_targets)

    p = sub.add_parser("solve", parents=[common], help="tile one target")
    p.add_argument("--pieces", required=True, help="built-in name or piece file")
    p.add_argument("--target", required=True, help="target id (n16-t07) or a target file")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--count", action="store_true")
    mode.add_argument("--all", action="store_true")
    p.add_argument("--modulo-symmetry", action="store_true")
    p.add_argument("--max-nodes", type=int)
    p.add_argument("--svg", action="store_true")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("coverage", parents=[common], help="count formable targets")
    p.add_argument("--pieces", required=True)
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--threads", type=int)
    p.add_argument("--max-nodes", type=int)
    p.add_argument("--svg", action="store_true")
    p.add_argument("--no-store", action="store_true")
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("ftable", parents=[common], help="f(1..N)")
    p.add_argument("--max", type=int, default=16)
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_ftable)

    p = sub.add_parser("search", parents=[common], help="search piece sets")
    p.add_argument("--pieces", type=int, required=True)
    p.add_argument("--triangles", type=int, default=16)
    p.add_argument("--min-coverage", type=int, required=True)
    p.add_argument("--max-candidates", type=int)
    p.add_argument("--max-nodes", type=int)
    p.add_argument("--time-limit", type=float, help="seconds")
    p.add_argument("--checkpoint", help="checkpoint file written after every batch")
    p.add_argument("--resume", help="checkpoint file to continue from")
    p.add_argument("--threads", type=int)
    p.add_argument("--no-store", action="store_true")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("verify", parents=[common], help="check the ten-piece argument")
    p.add_argument("--n", type=int, default=16)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("pieces", parents=[common], help="print a piece set")
    p.add_argument("source")
    p.set_defaults(func=cmd_pieces)

    p = sub.add_parser("results", parents=[common], help="stored runs")
    p.add_argument("action", nargs="?", default="list", choices=("list", "view", "stats", "hits", "export"))
    p.add_argument("arg", nargs="?")
    p.set_defaults(func=cmd_results)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvariantViolation as e:
        print(f"[CLI ERROR] invariant violated: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    except USAGE_ERRORS as e:
        print(f"[CLI ERROR] {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
