"""
Search over piece sets cut from a fixed number of unit triangles, looking
for sets that form many convex targets, plus the machine checks behind the
ten-piece impossibility argument.

Candidates are visited partition by partition (part sizes sorted
descending, partitions in ascending lexicographic order) and, inside a
partition, as multisets of free polyaboloes per part size. A candidate is
identified by (partition index, cursor), which is what the checkpoint file
stores.
"""

import itertools
import multiprocessing
import time
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Iterator, List, Optional, Sequence, Tuple

from config import load_settings, log
from lattice import Region, Shape, neighbours, region_from_triangles, region_triangles, unit_triangle
from pieces import (
    PIECE_FILES_DIR,
    PieceSet,
    builtin,
    enumerate_polyaboloes,
    make_piece_set,
    parallelogram_shape,
    parse_piece_file,
    polyabolo_by_name,
    serialize_piece_set,
    UnknownPieceSetError,
)
from solver import (
    CoverageReport,
    InvariantViolation,
    SolverBudgetExceeded,
    coverage,
    max_packing,
    placements_for,
    solve,
)
from targets import ConvexTarget, diamond_spec, enumerate_targets, find_target, thin_parallelogram_spec

CHECKPOINT_HEADER = "# chie search checkpoint"
BATCH_PER_WORKER = 32


class SearchParameterError(ValueError):
    """Infeasible search parameters or a checkpoint from a different search."""


@dataclass(frozen=True)
class SearchBudget:
    max_candidates: Optional[int] = None
    max_solver_nodes: Optional[int] = None
    time_limit: Optional[float] = None
    checkpoint_path: Optional[str] = None

    def validate(self):
        for name in ("max_candidates", "max_solver_nodes", "time_limit"):
            value = getattr(self, name)
            if value is not None and value <= 0:
                raise SearchParameterError(f"{name} must be positive, got {value}")


@dataclass
class SearchHit:
    coverage: int
    pieceset: PieceSet
    report: CoverageReport

    def to_record(self) -> Dict:
        return {
            "coverage": self.coverage,
            "pieces": [shape.name for shape in self.pieceset.expanded()],
            "formable": self.report.formable_ids,
            "missing": self.report.missing_ids,
        }


@dataclass
class SearchResult:
    hits: List[SearchHit] = field(default_factory=list)
    exhausted: bool = False
    evaluated: int = 0
    stop_reason: str = ""

    @property
    def best(self) -> Optional[SearchHit]:
        if not self.hits:
            return None
        return max(self.hits, key=lambda hit: hit.coverage)

    def to_record(self) -> Dict:
        return {
            "exhausted": self.exhausted,
            "evaluated": self.evaluated,
            "stop_reason": self.stop_reason,
            "hits": [hit.to_record() for hit in self.hits],
        }


# --- Checkpoint ---

@dataclass
class Checkpoint:
    params: Tuple[int, int, int]
    partition_index: int = 0
    cursor: int = 0
    evaluated: int = 0
    hits: List[Tuple[int, Tuple[str, ...]]] = field(default_factory=list)

    def save(self, path: str):
        lines = [
            CHECKPOINT_HEADER,
            "params " + " ".join(str(v) for v in self.params),
            f"partition {self.partition_index}",
            f"cursor {self.cursor}",
            f"evaluated {self.evaluated}",
        ]
        lines += [f"hit {count} {' '.join(names)}" for count, names in self.hits]
        target = Path(path)
        scratch = target.with_name(target.name + ".tmp")
        scratch.write_text("\n".join(lines) + "\n", encoding="utf-8")
        scratch.replace(target)

    @classmethod
    def load(cls, path: str) -> "Checkpoint":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise SearchParameterError(f"cannot read checkpoint {path}: {e}") from e
        values: Dict[str, List[str]] = {}
        hits = []
        for line_number, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, *rest = line.split()
            try:
                if key == "hit":
                    hits.append((int(rest[0]), tuple(rest[1:])))
                elif key in ("params", "partition", "cursor", "evaluated"):
                    values[key] = [str(int(v)) for v in rest]
                else:
                    raise ValueError(f"unknown record {key!r}")
            except (ValueError, IndexError) as e:
                raise SearchParameterError(f"checkpoint {path} line {line_number}: {e}") from None
        if "params" not in values or len(values["params"]) != 3:
            raise SearchParameterError(f"checkpoint {path} has no params line")
        return cls(
            params=tuple(int(v) for v in values["params"]),
            partition_index=int(values.get("partition", ["0"])[0]),
            cursor=int(values.get("cursor", ["0"])[0]),
            evaluated=int(values.get("evaluated", ["0"])[0]),
            hits=hits,
        )


# --- Candidate space ---

def partitions(total: int, parts: int) -> List[Tuple[int, ...]]:
    """Partitions of total into exactly `parts` positive parts, each sorted descending."""
    found = []

    def grow(remaining: int, slots: int, cap: int, prefix: Tuple[int, ...]):
        if slots == 0:
            if remaining == 0:
                found.append(prefix)
            return
        low = max(1, remaining - cap * (slots - 1))
        for part in range(min(cap, remaining - (slots - 1)), low - 1, -1):
            grow(remaining - part, slots - 1, part, prefix + (part,))

    grow(total, parts, total, ())
    return sorted(found)


def candidates(partition: Sequence[int]) -> Iterator[Tuple[Shape, ...]]:
    """Multisets of free polyaboloes whose sizes match the partition."""
    sizes = sorted(Counter(partition).items(), reverse=True)
    pools = [itertools.combinations_with_replacement(enumerate_polyaboloes(size), count) for size, count in sizes]
    for choice in itertools.product(*[list(pool) for pool in pools]):
        yield tuple(shape for group in choice for shape in group)


def _shape_by_name(name: str) -> Shape:
    try:
        return polyabolo_by_name(name)
    except UnknownPieceSetError as e:
        raise SearchParameterError(f"checkpoint: {e}") from None


def _candidate_set(shapes: Sequence[Shape], label: str) -> PieceSet:
    return make_piece_set(label, [(shape, 1) for shape in shapes])


class _FitTable:
    """Which targets each shape has at least one placement in."""

    def __init__(self, targets: Sequence[ConvexTarget]):
        self.targets = targets
        self._fits: Dict[Shape, FrozenSet[int]] = {}

    def fits(self, shape: Shape) -> FrozenSet[int]:
        found = self._fits.get(shape)
        if found is None:
            found = frozenset(i for i, t in enumerate(self.targets) if placements_for(shape, t.region))
            self._fits[shape] = found
        return found

    def possible(self, shapes: Sequence[Shape]) -> FrozenSet[int]:
        result = frozenset(range(len(self.targets)))
        for shape in set(shapes):
            result &= self.fits(shape)
        return result


def initial_target_order(targets: Sequence[ConvexTarget]) -> List[int]:
    """Thinnest targets first: fewest size-4 polyaboloes that fit anywhere inside."""
    table = _FitTable(targets)
    room = Counter()
    for shape in enumerate_polyaboloes(4):
        for i in table.fits(shape):
            room[i] += 1
    return sorted(range(len(targets)), key=lambda i: (room[i], targets[i].id))


def _evaluate_candidate(args) -> Tuple[int, List[int]]:
    """Fail-fast check; returns (formable count, indices of targets that failed)."""
    ps, n, order, possible, allowed_failures, max_nodes = args
    targets = enumerate_targets(n)
    formable = 0
    failed = []
    for i in order:
        ok = False
        if i in possible:
            try:
                ok = solve(ps, targets[i].region, max_nodes).found
            except SolverBudgetExceeded:
                ok = False
        if ok:
            formable += 1
        else:
            failed.append(i)
            if len(failed) > allowed_failures:
                break
    return formable, failed


# --- Search ---

def search_piece_sets(
    num_pieces: int,
    num_triangles: int,
    min_coverage: int,
    budget: Optional[SearchBudget] = None,
    threads: Optional[int] = None,
    resume: Optional[str] = None,
    store=None,
) -> SearchResult:
    budget = budget or SearchBudget()
    budget.validate()
    if num_pieces < 1 or num_triangles < 1:
        raise SearchParameterError("piece and triangle counts must be positive")
    if num_pieces > num_triangles:
        raise SearchParameterError(f"{num_pieces} pieces cannot be cut from {num_triangles} triangles")
    targets = enumerate_targets(num_triangles)
    if not 0 <= min_coverage <= len(targets):
        raise SearchParameterError(f"min coverage must be in 0..{len(targets)}, got {min_coverage}")

    settings = load_settings()
    threads = max(1, threads if threads is not None else settings.threads)
    params = (num_pieces, num_triangles, min_coverage)
    state = Checkpoint(params)
    if resume:
        state = Checkpoint.load(resume)
        if state.params != params:
            raise SearchParameterError(f"checkpoint is for search {state.params}, not {params}")
        log("SEARCH", f"Resuming at partition {state.partition_index}, cursor {state.cursor}")

    result = SearchResult(evaluated=state.evaluated)
    for count, names in state.hits:
        shapes = [_shape_by_name(name) for name in names]
        result.hits.append(_confirm_hit(shapes, num_triangles, count, budget.max_solver_nodes))

    fit_table = _FitTable(targets)
    failures = Counter()
    base_order = initial_target_order(targets)
    allowed_failures = len(targets) - min_coverage
    started = time.monotonic()
    all_partitions = partitions(num_triangles, num_pieces)
    batch_size = BATCH_PER_WORKER * threads
    pool = multiprocessing.Pool(threads) if threads > 1 else None

    def out_of_budget() -> str:
        if budget.max_candidates is not None and result.evaluated >= budget.max_candidates:
            return "max candidates reached"
        if budget.time_limit is not None and time.monotonic() - started >= budget.time_limit:
            return "time limit reached"
        return ""

    try:
        p = state.partition_index
        while p < len(all_partitions):
            partition = all_partitions[p]
            stream = itertools.islice(candidates(partition), state.cursor, None)
            cursor = state.cursor
            exhausted_partition = False
            while not exhausted_partition:
                reason = out_of_budget()
                if reason:
                    result.stop_reason = reason
                    break
                batch = []
                while len(batch) < batch_size:
                    if budget.max_candidates is not None and result.evaluated + len(batch) >= budget.max_candidates:
                        break
                    shapes = next(stream, None)
                    if shapes is None:
                        exhausted_partition = True
                        break
                    batch.append((cursor, shapes))
                    cursor += 1
                _run_batch(batch, p, num_triangles, fit_table, base_order, failures,
                           allowed_failures, min_coverage, budget, pool, result, store, settings)
                state.partition_index, state.cursor = p, cursor
                state.evaluated = result.evaluated
                state.hits = [(hit.coverage, tuple(s.name for s in hit.pieceset.expanded())) for hit in result.hits]
                if budget.checkpoint_path:
                    state.save(budget.checkpoint_path)
            if not exhausted_partition:
                break
            p += 1
            state.cursor = 0
        else:
            result.exhausted = True
            result.stop_reason = "candidate space exhausted"
            if budget.checkpoint_path:
                state.partition_index, state.cursor = len(all_partitions), 0
                state.save(budget.checkpoint_path)
    finally:
        if pool is not None:
            pool.close()
            pool.join()

    log("SEARCH", f"Done: {result.evaluated} candidates, {len(result.hits)} hits ({result.stop_reason})")
    return result


def _run_batch(batch, p, n, fit_table, base_order, failures, allowed_failures, min_coverage,
               budget, pool, result, store, settings):
    order = sorted(base_order, key=lambda i: -failures[i])
    jobs = []
    for cursor, shapes in batch:
        possible = fit_table.possible(shapes)
        if len(possible) < min_coverage:
            continue
        ps = _candidate_set(shapes, f"search-p{p}-c{cursor}")
        jobs.append((cursor, shapes, (ps, n, order, possible, allowed_failures, budget.max_solver_nodes)))

    args = [job[2] for job in jobs]
    if pool is not None and len(args) > 1:
        outcomes = pool.map(_evaluate_candidate, args)
    else:
        outcomes = [_evaluate_candidate(a) for a in args]

    for (cursor, shapes, _), (formable, failed) in zip(jobs, outcomes):
        for i in failed:
            failures[i] += 1
        if formable >= min_coverage and len(failed) <= allowed_failures:
            hit = _confirm_hit(shapes, n, formable, budget.max_solver_nodes)
            result.hits.append(hit)
            log("SEARCH", f"Hit at partition {p} cursor {cursor}: coverage {hit.coverage}")
            if store is not None:
                try:
                    store.store_search_hit(len(shapes), n, hit.coverage, serialize_piece_set(hit.pieceset))
                except Exception as e:
                    log("DB ERROR", f"Failed to store search hit: {e}")

    before = result.evaluated
    result.evaluated += len(batch)
    every = settings.progress_every
    if result.evaluated // every > before // every:
        log("SEARCH", f"{result.evaluated} candidates, partition {p}, {len(result.hits)} hits")


def _confirm_hit(shapes: Sequence[Shape], n: int, expected: int, max_nodes: Optional[int] = None) -> SearchHit:
    # same node budget as the evaluation, so targets left unknown count the same way
    ps = _candidate_set(shapes, "search-hit")
    report = coverage(ps, n, max_nodes=max_nodes, keep_witnesses=False)
    if report.count != expected:
        raise InvariantViolation(f"search counted {expected} targets but coverage recomputes {report.count}")
    return SearchHit(report.count, ps, report)


# --- Ten-piece argument ---

@dataclass
class SubclaimCheck:
    name: str
    passed: bool
    detail: str

    def to_record(self) -> Dict:
        return {"subclaim": self.name, "passed": self.passed, "detail": self.detail}


def connected_sub_unions(region: Region, min_size: int = 1) -> List[FrozenSet[Tuple[int, int, str]]]:
    """Every edge-connected union of the region's unit triangles with at least min_size triangles."""
    triangles = region_triangles(region)
    owner = {}
    for index, (x, y, half) in enumerate(triangles):
        for cell in unit_triangle(x, y, half):
            owner[cell] = index
    adjacent = [set() for _ in triangles]
    for cell, index in owner.items():
        for nb in neighbours(cell):
            other = owner.get(nb)
            if other is not None and other != index:
                adjacent[index].add(other)

    seen = set()
    frontier = [frozenset([i]) for i in range(len(triangles))]
    seen.update(frontier)
    while frontier:
        grown = []
        for subset in frontier:
            for i in subset:
                for j in adjacent[i] - subset:
                    bigger = subset | {j}
                    if bigger not in seen:
                        seen.add(bigger)
                        grown.append(bigger)
        frontier = grown
    return sorted(
        (frozenset(triangles[i] for i in subset) for subset in seen if len(subset) >= min_size),
        key=lambda s: (len(s), sorted(s)),
    )


def verify_ten_piece_subclaims(n: int = 16) -> List[SubclaimCheck]:
    """Machine checks of the steps that rule out ten pieces forming every target."""
    checks = []
    parallelogram = parallelogram_shape()
    thin = find_target(n, thin_parallelogram_spec(n // 2))
    square = find_target(n, diamond_spec(2)) if n == 16 else None

    # larger pieces fitting inside the thin parallelogram all contain a parallelogram
    if thin is None:
        checks.append(SubclaimCheck("thin-pieces-contain-parallelogram", False, "thin parallelogram not in catalog"))
    else:
        unions = connected_sub_unions(thin.region, min_size=3)
        bad = [u for u in unions if not placements_for(parallelogram, region_from_triangles(u))]
        checks.append(SubclaimCheck(
            "thin-pieces-contain-parallelogram",
            not bad,
            f"{len(unions)} connected unions of 3+ triangles in {thin.id}, {len(bad)} without a parallelogram",
        ))
        trapezoid = next((s for s, _ in builtin("SEI_SHONAGON").pieces if s.name == "trapezoid"), None)
        if trapezoid is not None:
            fits = len(placements_for(trapezoid, thin.region))
            checks.append(SubclaimCheck("trapezoid-misses-thin-parallelogram", fits == 0, f"{fits} placements in {thin.id}"))

    if square is None:
        checks.append(SubclaimCheck("six-parallelograms-in-square", False, "2*sqrt(2) square needs n=16"))
    else:
        six = builtin_file_set("six_parallelograms_four_triangles.txt")
        found = solve(six, square.region).found
        checks.append(SubclaimCheck("six-parallelograms-in-square", not found,
                                    f"{six.name} on {square.id}: {'SAT' if found else 'UNSAT'}"))
        packed = max_packing(parallelogram, square.region)
        checks.append(SubclaimCheck("square-packs-fewer-than-six", packed < 6,
                                    f"at most {packed} parallelograms fit in {square.id}"))

    targets = enumerate_targets(n)
    five = [t.id for t in targets if max_packing(parallelogram, t.region) < 5]
    checks.append(SubclaimCheck("five-parallelograms-fit-everywhere", not five,
                                f"targets packing fewer than five: {', '.join(five) or 'none'}"))

    for check in checks:
        log("VERIFY", f"{check.name}: {'pass' if check.passed else 'FAIL'} ({check.detail})")
    return checks


def builtin_file_set(filename: str) -> PieceSet:
    return parse_piece_file((PIECE_FILES_DIR / filename).read_text(encoding="utf-8"))
