"""
Quarter-cell lattice geometry.

Every unit square (x, y) is cut along both diagonals into four quarter
cells N, E, S, W. A unit right isosceles triangle with axis-parallel legs
is exactly two adjacent quarter cells, so pieces, targets and placements
are all plain sets of quarter cells: overlap is set intersection and
coverage is set equality.

Transforms work on "quadrupled" coordinates: the quarter cell q of square
(x, y) is represented by the integer point (4x+2+dx, 4y+2+dy) with
(dx, dy) = N:(0,1) E:(1,0) S:(0,-1) W:(-1,0). The 8 symmetries of the
square about the origin map these points onto each other.
"""

from collections import defaultdict, deque
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Dict, FrozenSet, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import shapely
from shapely.geometry import LinearRing, Polygon


class LatticeError(ValueError):
    """Raised for regions or polygons that do not live on the lattice."""


class Quadrant(IntEnum):
    N = 0
    E = 1
    S = 2
    W = 3


QUADRANT_OFFSETS = {
    Quadrant.N: (0, 1),
    Quadrant.E: (1, 0),
    Quadrant.S: (0, -1),
    Quadrant.W: (-1, 0),
}


class QuarterCell(NamedTuple):
    x: int
    y: int
    q: Quadrant

    def key(self) -> Tuple[int, int, int]:
        """Canonical order: row, then column, then N < E < S < W."""
        return (self.y, self.x, int(self.q))

    def center4(self) -> Tuple[int, int]:
        dx, dy = QUADRANT_OFFSETS[self.q]
        return (4 * self.x + 2 + dx, 4 * self.y + 2 + dy)

    @classmethod
    def from_center4(cls, X: int, Y: int) -> "QuarterCell":
        if X % 4 == 2:
            q = Quadrant.N if Y % 4 == 3 else Quadrant.S
        else:
            q = Quadrant.E if X % 4 == 3 else Quadrant.W
        dx, dy = QUADRANT_OFFSETS[q]
        return cls((X - 2 - dx) // 4, (Y - 2 - dy) // 4, q)


Region = FrozenSet[QuarterCell]

N, E, S, W = Quadrant.N, Quadrant.E, Quadrant.S, Quadrant.W

HALVES: Dict[str, Tuple[Quadrant, Quadrant]] = {
    "NE": (N, E),
    "NW": (N, W),
    "SE": (S, E),
    "SW": (S, W),
}
_HALF_OF_PATTERN = {frozenset(v): k for k, v in HALVES.items()}
FULL_SQUARE = frozenset((N, E, S, W))
VALID_PATTERNS = frozenset(
    [frozenset(), FULL_SQUARE] + [frozenset(v) for v in HALVES.values()]
)


def cell_sort_key(cell: QuarterCell) -> Tuple[int, int, int]:
    return (cell.y, cell.x, int(cell.q))


def sorted_cells(r: Iterable[QuarterCell]) -> List[QuarterCell]:
    return sorted(r, key=cell_sort_key)


# --- Symmetry group ---

# (a, b, c, d) maps (x, y) -> (a*x + b*y, c*x + d*y).
# Index k < 4 is a counterclockwise rotation by 90*k degrees; k >= 4 is
# that rotation applied after the mirror x -> -x.
_ROTATIONS = ((1, 0, 0, 1), (0, -1, 1, 0), (-1, 0, 0, -1), (0, 1, -1, 0))
_MIRROR = (-1, 0, 0, 1)


def _matmul(m1, m2):
    a1, b1, c1, d1 = m1
    a2, b2, c2, d2 = m2
    return (a1 * a2 + b1 * c2, a1 * b2 + b1 * d2, c1 * a2 + d1 * c2, c1 * b2 + d1 * d2)


D4: Tuple[Tuple[int, int, int, int], ...] = _ROTATIONS + tuple(_matmul(r, _MIRROR) for r in _ROTATIONS)
D4_NAMES = ("r0", "r90", "r180", "r270", "m0", "m90", "m180", "m270")
_D4_INDEX = {m: i for i, m in enumerate(D4)}
IDENTITY = 0


def d4_product(g: int, h: int) -> int:
    """Index of the element 'h first, then g'."""
    return _D4_INDEX[_matmul(D4[g], D4[h])]


def d4_inverse(g: int) -> int:
    return next(h for h in range(8) if d4_product(g, h) == IDENTITY)


@dataclass(frozen=True)
class Transform:
    """A symmetry of the square lattice followed by an integer translation."""
    g: int = IDENTITY
    t: Tuple[int, int] = (0, 0)

    def __post_init__(self):
        if not 0 <= self.g < 8:
            raise LatticeError(f"D4 index out of range: {self.g}")

    def apply_point4(self, X: int, Y: int) -> Tuple[int, int]:
        a, b, c, d = D4[self.g]
        return (a * X + b * Y + 4 * self.t[0], c * X + d * Y + 4 * self.t[1])

    def apply_point(self, x: int, y: int) -> Tuple[int, int]:
        a, b, c, d = D4[self.g]
        return (a * x + b * y + self.t[0], c * x + d * y + self.t[1])

    def then(self, other: "Transform") -> "Transform":
        """This transform followed by `other`."""
        a, b, c, d = D4[other.g]
        tx, ty = self.t
        return Transform(
            d4_product(other.g, self.g),
            (a * tx + b * ty + other.t[0], c * tx + d * ty + other.t[1]),
        )

    def inverse(self) -> "Transform":
        gi = d4_inverse(self.g)
        a, b, c, d = D4[gi]
        tx, ty = self.t
        return Transform(gi, (-(a * tx + b * ty), -(c * tx + d * ty)))

    def __str__(self):
        return f"{D4_NAMES[self.g]}+({self.t[0]},{self.t[1]})"


def apply_transform(r: Iterable[QuarterCell], T: Transform) -> Region:
    return frozenset(QuarterCell.from_center4(*T.apply_point4(*c.center4())) for c in r)


# --- Region construction and validation ---

def unit_triangle(x: int, y: int, half: str) -> Region:
    try:
        q1, q2 = HALVES[half]
    except KeyError:
        raise LatticeError(f"unknown half {half!r}, expected one of NE, NW, SE, SW") from None
    return frozenset((QuarterCell(x, y, q1), QuarterCell(x, y, q2)))


def square_patterns(r: Iterable[QuarterCell]) -> Dict[Tuple[int, int], FrozenSet[Quadrant]]:
    squares = defaultdict(set)
    for c in r:
        squares[(c.x, c.y)].add(c.q)
    return {k: frozenset(v) for k, v in squares.items()}


def validate_region(r: Iterable[QuarterCell]):
    for (x, y), pattern in square_patterns(r).items():
        if pattern not in VALID_PATTERNS:
            names = "".join(q.name for q in sorted(pattern))
            raise LatticeError(f"square ({x},{y}) covers quarters {{{names}}}, not a union of unit triangles")


def is_valid_region(r: Iterable[QuarterCell]) -> bool:
    return all(p in VALID_PATTERNS for p in square_patterns(r).values())


def region_triangles(r: Iterable[QuarterCell]) -> List[Tuple[int, int, str]]:
    """Triangle records for a region, sorted; a full square is written as NE + SW."""
    triangles = []
    for (x, y), pattern in square_patterns(r).items():
        if pattern == FULL_SQUARE:
            triangles.append((x, y, "NE"))
            triangles.append((x, y, "SW"))
        elif pattern in _HALF_OF_PATTERN:
            triangles.append((x, y, _HALF_OF_PATTERN[pattern]))
        else:
            raise LatticeError(f"square ({x},{y}) is not a union of unit triangles")
    return sorted(triangles)


def region_from_triangles(triangles: Iterable[Tuple[int, int, str]]) -> Region:
    cells = set()
    for x, y, half in triangles:
        tri = unit_triangle(x, y, half)
        if cells & tri:
            raise LatticeError(f"triangle {half} of square ({x},{y}) overlaps another triangle")
        cells |= tri
    return frozenset(cells)


def neighbours(c: QuarterCell) -> Tuple[QuarterCell, ...]:
    """Edge-adjacent quarter cells (corner contact does not count)."""
    x, y, q = c
    if q == N:
        return (QuarterCell(x, y, E), QuarterCell(x, y, W), QuarterCell(x, y + 1, S))
    if q == E:
        return (QuarterCell(x, y, N), QuarterCell(x, y, S), QuarterCell(x + 1, y, W))
    if q == S:
        return (QuarterCell(x, y, E), QuarterCell(x, y, W), QuarterCell(x, y - 1, N))
    return (QuarterCell(x, y, N), QuarterCell(x, y, S), QuarterCell(x - 1, y, E))


def is_connected(r: Iterable[QuarterCell]) -> bool:
    cells = set(r)
    if not cells:
        return False
    start = next(iter(cells))
    seen = {start}
    queue = deque([start])
    while queue:
        for nb in neighbours(queue.popleft()):
            if nb in cells and nb not in seen:
                seen.add(nb)
                queue.append(nb)
    return len(seen) == len(cells)


def normalize(r: Iterable[QuarterCell]) -> Region:
    """Translate so the minimum square column and row are both 0."""
    cells = list(r)
    if not cells:
        return frozenset()
    mx = min(c.x for c in cells)
    my = min(c.y for c in cells)
    return frozenset(QuarterCell(c.x - mx, c.y - my, c.q) for c in cells)


def bounding_box(r: Iterable[QuarterCell]) -> Tuple[int, int, int, int]:
    cells = list(r)
    return (min(c.x for c in cells), min(c.y for c in cells), max(c.x for c in cells), max(c.y for c in cells))


# --- Shapes ---

@dataclass(frozen=True)
class Shape:
    """A connected polyabolo stored in canonical position. Build with canonicalize()."""
    cells: Region
    name: Optional[str] = field(default=None, compare=False)

    @property
    def size(self) -> int:
        """Number of unit triangles."""
        return len(self.cells) // 2

    def key(self) -> Tuple[Tuple[int, int, int], ...]:
        return tuple(sorted(c.key() for c in self.cells))

    def triangles(self) -> List[Tuple[int, int, str]]:
        return region_triangles(self.cells)

    def serialize(self) -> str:
        return "\n".join(f"T {x} {y} {half}" for x, y, half in self.triangles())

    def sort_key(self):
        return (self.size, self.serialize())

    def images(self) -> List[Region]:
        """The distinct normalized D4 images of this shape."""
        seen = {}
        for g in range(8):
            img = normalize(apply_transform(self.cells, Transform(g)))
            seen.setdefault(img, None)
        return list(seen)

    def with_name(self, name: Optional[str]) -> "Shape":
        return Shape(self.cells, name)


def _canonical_key(cells: Iterable[QuarterCell]) -> Tuple[Region, tuple]:
    centers = [c.center4() for c in cells]
    best = None
    best_region = None
    for a, b, c, d in D4:
        img = [QuarterCell.from_center4(a * X + b * Y, c * X + d * Y) for X, Y in centers]
        mx = min(p.x for p in img)
        my = min(p.y for p in img)
        key = tuple(sorted((p.y - my, p.x - mx, int(p.q)) for p in img))
        if best is None or key < best:
            best = key
            best_region = img, mx, my
    img, mx, my = best_region
    return frozenset(QuarterCell(p.x - mx, p.y - my, p.q) for p in img), best


def canonicalize(r: Iterable[QuarterCell], name: Optional[str] = None, check: bool = True) -> Shape:
    """Least image of r over D4, translated to min x = min y = 0."""
    cells = frozenset(r)
    if check:
        if not cells:
            raise LatticeError("empty region has no canonical shape")
        validate_region(cells)
        if not is_connected(cells):
            raise LatticeError("region is not edge-connected")
    region, _ = _canonical_key(cells)
    return Shape(region, name)


# --- Polygons ---

def shoelace_area2(vertices: Sequence[Tuple[int, int]]) -> int:
    """Twice the signed area."""
    total = 0
    for i, (x1, y1) in enumerate(vertices):
        x2, y2 = vertices[(i + 1) % len(vertices)]
        total += x1 * y2 - x2 * y1
    return total


def _check_polygon(vertices: Sequence[Tuple[int, int]]):
    if len(vertices) < 3:
        raise LatticeError("a polygon needs at least 3 vertices")
    n = len(vertices)
    edges = []
    for i in range(n):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % n]
        dx, dy = x2 - x1, y2 - y1
        if dx == 0 and dy == 0:
            raise LatticeError(f"zero-length edge at vertex {i}")
        if not (dx == 0 or dy == 0 or abs(dx) == abs(dy)):
            raise LatticeError(f"edge {i} ({dx},{dy}) is not a multiple of 45 degrees")
        edges.append((dx, dy))
    ring = LinearRing(vertices)
    if not ring.is_simple:
        raise LatticeError("polygon is not simple")
    if not ring.is_ccw:
        raise LatticeError("polygon must be counterclockwise")
    for i in range(n):
        (ax, ay), (bx, by) = edges[i], edges[(i + 1) % n]
        if ax * by - ay * bx <= 0:
            raise LatticeError(f"polygon is not strictly convex at vertex {(i + 1) % n}")


def rasterize_polygon(vertices: Sequence[Tuple[int, int]]) -> Region:
    """Quarter cells inside a ccw convex polygon with 45-degree lattice edges."""
    vertices = [tuple(int(v) for v in p) for p in vertices]
    _check_polygon(vertices)
    polygon = Polygon(vertices)

    xs = [p[0] for p in vertices]
    ys = [p[1] for p in vertices]
    sx, sy = np.meshgrid(np.arange(min(xs), max(xs)), np.arange(min(ys), max(ys)), indexing="ij")
    sx = sx.ravel()
    sy = sy.ravel()

    cells = []
    for q, (dx, dy) in QUADRANT_OFFSETS.items():
        # quarter-cell centres never lie on a lattice line of slope 0, 1 or infinity
        px = sx + 0.5 + dx / 4.0
        py = sy + 0.5 + dy / 4.0
        inside = shapely.contains_xy(polygon, px, py)
        cells.extend(QuarterCell(int(x), int(y), q) for x, y in zip(sx[inside], sy[inside]))

    region = frozenset(cells)
    area2 = shoelace_area2(vertices)
    if len(region) != 2 * area2:
        raise LatticeError(f"rasterized {len(region)} quarter cells, expected {2 * area2}")
    validate_region(region)
    return region
