"""
Exact-cover tiling of quarter-cell regions by piece sets.

Region cells are numbered in canonical (row, column, quadrant) order and
every placement becomes an integer bitmask. The search always fills the
lowest uncovered cell, so only placements whose lowest cell is that cell
can be tried there. Identical pieces are kept as one shape with a
remaining count, which makes each partition of the region appear exactly
once.
"""

import functools
import multiprocessing
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

from config import log
from lattice import (
    QuarterCell,
    Region,
    Shape,
    Transform,
    apply_transform,
    bounding_box,
    is_connected,
    is_valid_region,
    region_triangles,
    sorted_cells,
)
from pieces import PieceSet
from targets import ConvexTarget, enumerate_targets, region_symmetries

MODULO_NONE = "none"
MODULO_SYMMETRY = "region_symmetry"


class AreaMismatchError(ValueError):
    """Piece set area does not match the requested target size."""


class SolverBudgetExceeded(RuntimeError):
    """The node limit was reached before the search finished."""

    def __init__(self, nodes: int):
        self.nodes = nodes
        super().__init__(f"solver node limit reached after {nodes} nodes")


class InvariantViolation(RuntimeError):
    """A result broke an invariant that must always hold."""


@dataclass(frozen=True)
class Placement:
    piece_index: int
    transform: Transform
    cells: Region

    def cell_key(self) -> Tuple[Tuple[int, int, int], ...]:
        return tuple(sorted(c.key() for c in self.cells))


@dataclass(frozen=True)
class Solution:
    placements: Tuple[Placement, ...]

    def canonical(self) -> "Solution":
        return Solution(tuple(sorted(self.placements, key=Placement.cell_key)))

    def partition(self) -> frozenset:
        return frozenset(p.cells for p in self.placements)


@dataclass
class TargetVerdict:
    target_id: str
    formable: Optional[bool]
    nodes: int
    elapsed: float
    witness: Optional[Solution] = None
    unplaceable: Tuple[str, ...] = ()

    def to_record(self) -> Dict:
        return {
            "target": self.target_id,
            "verdict": {True: "formable", False: "not formable", None: "unknown"}[self.formable],
            "nodes": self.nodes,
            "elapsed": round(self.elapsed, 6),
            "unplaceable": list(self.unplaceable),
        }


@dataclass
class CoverageReport:
    pieceset: str
    n: int
    verdicts: List[TargetVerdict] = field(default_factory=list)

    @property
    def count(self) -> int:
        return sum(1 for v in self.verdicts if v.formable)

    @property
    def formable_ids(self) -> List[str]:
        return [v.target_id for v in self.verdicts if v.formable]

    @property
    def missing_ids(self) -> List[str]:
        return [v.target_id for v in self.verdicts if not v.formable]

    def to_record(self, timings: bool = True) -> Dict:
        rows = []
        for v in self.verdicts:
            row = v.to_record()
            if not timings:
                row.pop("elapsed")
            rows.append(row)
        return {"pieceset": self.pieceset, "n": self.n, "coverage": self.count, "targets": len(self.verdicts), "verdicts": rows}


# --- Placements ---

@functools.lru_cache(maxsize=1 << 16)
def _fits(shape_cells: Region, region: Region) -> Tuple[Tuple[Transform, Region], ...]:
    x0, y0, x1, y1 = bounding_box(region)
    found: Dict[Region, Transform] = {}
    for g in range(8):
        image = apply_transform(shape_cells, Transform(g))
        mx = min(c.x for c in image)
        my = min(c.y for c in image)
        base = [(c.x - mx, c.y - my, c.q) for c in image]
        w = max(c[0] for c in base)
        h = max(c[1] for c in base)
        for tx in range(x0, x1 - w + 1):
            for ty in range(y0, y1 - h + 1):
                cells = frozenset(QuarterCell(x + tx, y + ty, q) for x, y, q in base)
                if cells <= region and cells not in found:
                    found[cells] = Transform(g, (tx - mx, ty - my))
    return tuple((t, cells) for cells, t in found.items())


def placements_for(shape: Shape, region: Region, piece_index: int = 0) -> List[Placement]:
    """Distinct cell sets of D4 images of shape translated inside region."""
    if not region:
        return []
    return [Placement(piece_index, t, cells) for t, cells in _fits(shape.cells, frozenset(region))]


def unplaceable_pieces(ps: PieceSet, region: Region) -> List[Shape]:
    return [shape for shape, _ in ps.pieces if not _fits(shape.cells, frozenset(region))]


# --- Search ---

class _Problem:
    def __init__(self, ps: PieceSet, region: Region):
        self.ps = ps
        self.cells = sorted_cells(region)
        self.index = {c: i for i, c in enumerate(self.cells)}
        self.full = (1 << len(self.cells)) - 1
        self.counts = [count for _, count in ps.pieces]
        self.offsets = []
        offset = 0
        for count in self.counts:
            self.offsets.append(offset)
            offset += count
        # by_first[type][cell] -> placements whose lowest cell is `cell`
        self.by_first: List[List[List[Tuple[int, Transform, Region]]]] = []
        self.empty_types = []
        for t, (shape, _) in enumerate(ps.pieces):
            table = [[] for _ in self.cells]
            fits = _fits(shape.cells, region)
            if not fits:
                self.empty_types.append(t)
            for transform, cells in fits:
                mask = 0
                for c in cells:
                    mask |= 1 << self.index[c]
                low = (mask & -mask).bit_length() - 1
                table[low].append((mask, transform, cells))
            self.by_first.append(table)
        self.nodes = 0

    def solutions(self, max_nodes: Optional[int] = None) -> Iterator[Solution]:
        remaining = list(self.counts)
        chosen: List[Placement] = []
        full = self.full
        by_first = self.by_first
        types = range(len(remaining))

        def search(covered: int) -> Iterator[Solution]:
            self.nodes += 1
            if max_nodes is not None and self.nodes > max_nodes:
                raise SolverBudgetExceeded(self.nodes)
            if covered == full:
                yield Solution(tuple(chosen))
                return
            free = ~covered & (covered + 1)
            low = free.bit_length() - 1
            for t in types:
                if not remaining[t]:
                    continue
                for mask, transform, cells in by_first[t][low]:
                    if mask & covered:
                        continue
                    copy = self.counts[t] - remaining[t]
                    remaining[t] -= 1
                    chosen.append(Placement(self.offsets[t] + copy, transform, cells))
                    yield from search(covered | mask)
                    chosen.pop()
                    remaining[t] += 1

        yield from search(0)


@dataclass
class SolveResult:
    found: bool
    solution: Optional[Solution]
    nodes: int


def _area_matches(ps: PieceSet, region: Region) -> bool:
    return len(region) == 2 * ps.total_triangles


def solve(ps: PieceSet, region: Region, max_nodes: Optional[int] = None) -> SolveResult:
    region = frozenset(region)
    if not _area_matches(ps, region):
        return SolveResult(False, None, 0)
    problem = _Problem(ps, region)
    if problem.empty_types:
        return SolveResult(False, None, 0)
    for solution in problem.solutions(max_nodes):
        if not check_solution(region, solution):
            raise InvariantViolation(f"witness for {ps.name} does not partition the region")
        return SolveResult(True, solution.canonical(), problem.nodes)
    return SolveResult(False, None, problem.nodes)


def solve_exists(ps: PieceSet, region: Region, max_nodes: Optional[int] = None) -> Tuple[bool, Optional[Solution]]:
    result = solve(ps, region, max_nodes)
    return result.found, result.solution


def enumerate_solutions(
    ps: PieceSet,
    region: Region,
    sink: Optional[Callable[[Solution], bool]] = None,
) -> Iterator[Solution]:
    """Every distinct partition once, in search order.

    With a sink, each solution is handed to it and the search stops as soon
    as the sink returns False.
    """
    region = frozenset(region)
    if not _area_matches(ps, region):
        return
    problem = _Problem(ps, region)
    if problem.empty_types:
        return
    for solution in problem.solutions():
        solution = solution.canonical()
        if sink is not None and sink(solution) is False:
            yield solution
            return
        yield solution


def region_symmetry_transforms(region: Region) -> List[Transform]:
    """Transforms (symmetry plus recentering translation) that map region onto itself."""
    x0, y0, _, _ = bounding_box(region)
    transforms = []
    for g in region_symmetries(region):
        image = apply_transform(region, Transform(g))
        ix, iy, _, _ = bounding_box(image)
        transforms.append(Transform(g, (x0 - ix, y0 - iy)))
    return transforms


def _orbit_key(solution: Solution, transforms: Sequence[Transform]):
    best = None
    for T in transforms:
        key = tuple(sorted(tuple(sorted(c.key() for c in apply_transform(p.cells, T))) for p in solution.placements))
        if best is None or key < best:
            best = key
    return best


def count_solutions(ps: PieceSet, region: Region, modulo: str = MODULO_NONE) -> int:
    if modulo == MODULO_NONE:
        return sum(1 for _ in enumerate_solutions(ps, region))
    if modulo != MODULO_SYMMETRY:
        raise ValueError(f"modulo must be {MODULO_NONE!r} or {MODULO_SYMMETRY!r}, got {modulo!r}")
    transforms = region_symmetry_transforms(frozenset(region))
    return len({_orbit_key(s, transforms) for s in enumerate_solutions(ps, region)})


def check_solution(region: Region, solution: Solution) -> bool:
    """Placements are valid, connected, pairwise disjoint and cover region exactly."""
    seen = set()
    for p in solution.placements:
        if not p.cells or seen & p.cells:
            return False
        if not is_valid_region(p.cells) or not is_connected(p.cells):
            return False
        seen |= p.cells
    return seen == set(region)


def max_packing(shape: Shape, region: Region) -> int:
    """Largest number of pairwise disjoint placements of shape inside region."""
    region = frozenset(region)
    masks = []
    index = {c: i for i, c in enumerate(sorted_cells(region))}
    for _, cells in _fits(shape.cells, region):
        mask = 0
        for c in cells:
            mask |= 1 << index[c]
        masks.append(mask)
    size = len(shape.cells)
    best = 0

    def search(start: int, used: int, placed: int):
        nonlocal best
        best = max(best, placed)
        free_cells = len(region) - bin(used).count("1")
        if placed + free_cells // size <= best:
            return
        for i in range(start, len(masks)):
            if masks[i] & used:
                continue
            search(i + 1, used | masks[i], placed + 1)

    search(0, 0, 0)
    return best


def serialize_solution(ps: PieceSet, solution: Solution) -> str:
    names = [shape.name or f"piece{i}" for i, shape in enumerate(ps.expanded())]
    lines = []
    for p in solution.canonical().placements:
        triangles = " ".join(f"T {x} {y} {half}" for x, y, half in region_triangles(p.cells))
        lines.append(f"P {names[p.piece_index]} @ {triangles}")
    return "\n".join(lines)


# --- Coverage ---

def _evaluate_target(args) -> TargetVerdict:
    ps, target, max_nodes, keep_witness = args
    started = time.perf_counter()
    unplaceable = tuple(shape.name or shape.serialize() for shape in unplaceable_pieces(ps, target.region))
    try:
        result = solve(ps, target.region, max_nodes)
        formable = result.found
        nodes = result.nodes
        witness = result.solution if keep_witness else None
    except SolverBudgetExceeded as e:
        formable, nodes, witness = None, e.nodes, None
    return TargetVerdict(target.id, formable, nodes, time.perf_counter() - started, witness, unplaceable)


def coverage(
    ps: PieceSet,
    n: int = 16,
    threads: int = 1,
    max_nodes: Optional[int] = None,
    keep_witnesses: bool = True,
    targets: Optional[Sequence[ConvexTarget]] = None,
) -> CoverageReport:
    if ps.total_triangles != n:
        raise AreaMismatchError(f"{ps.name} has {ps.total_triangles} triangles, targets need {n}")
    if targets is None:
        targets = enumerate_targets(n)
    jobs = [(ps, t, max_nodes, keep_witnesses) for t in targets]
    if threads > 1 and len(jobs) > 1:
        with multiprocessing.Pool(min(threads, len(jobs))) as pool:
            verdicts = pool.map(_evaluate_target, jobs)
    else:
        verdicts = [_evaluate_target(job) for job in jobs]
    report = CoverageReport(ps.name, n, list(verdicts))
    log("SOLVER", f"{ps.name}: {report.count}/{len(report.verdicts)} targets formable")
    return report
