"""
Piece sets: named multisets of polyaboloes, the built-in puzzles and the
line-oriented piece-file format.

    pieceset <name>
    piece <name> x<multiplicity>
    T <x> <y> <half>        # one line per unit triangle, half in NE NW SE SW
"""

import functools
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

from lattice import (
    HALVES,
    LatticeError,
    Shape,
    canonicalize,
    neighbours,
    rasterize_polygon,
    region_from_triangles,
    square_patterns,
    unit_triangle,
    VALID_PATTERNS,
)

PIECE_FILES_DIR = Path(__file__).resolve().parent / "piece_files"

BUILTIN_FILES = {
    "SEI_SHONAGON": "sei_shonagon.txt",
}
BUILTIN_NAMES = ("TANGRAM", "SEI_SHONAGON", "NINETEEN", "ELEVEN")


class PieceFileError(ValueError):
    """Malformed piece file; line_number is 1-based (0 when not tied to a line)."""

    def __init__(self, message: str, line_number: int = 0):
        self.line_number = line_number
        prefix = f"line {line_number}: " if line_number else ""
        super().__init__(prefix + message)


class UnknownPieceSetError(ValueError):
    """Neither a built-in name nor a readable piece file."""


@dataclass(frozen=True)
class PieceSet:
    name: str
    pieces: Tuple[Tuple[Shape, int], ...]

    @property
    def total_triangles(self) -> int:
        return sum(shape.size * count for shape, count in self.pieces)

    @property
    def piece_count(self) -> int:
        return sum(count for _, count in self.pieces)

    def expanded(self) -> List[Shape]:
        """Shapes repeated by multiplicity, in stored order."""
        return [shape for shape, count in self.pieces for _ in range(count)]

    def multiset_key(self) -> Tuple[str, ...]:
        return tuple(shape.serialize() for shape in self.expanded())

    def describe(self) -> str:
        parts = [f"{shape.name or 'piece'} x{count}" for shape, count in self.pieces]
        return f"{self.name}: {self.piece_count} pieces, {self.total_triangles} triangles ({', '.join(parts)})"


def make_piece_set(name: str, shapes: Iterable[Tuple[Shape, int]]) -> PieceSet:
    """Merge duplicate shapes into multiplicities and sort by size, then serialization."""
    merged: Dict[Shape, List] = {}
    for shape, count in shapes:
        if count < 1:
            raise PieceFileError(f"piece {shape.name or '?'} has multiplicity {count}")
        if shape in merged:
            merged[shape][1] += count
        else:
            merged[shape] = [shape, count]
    ordered = sorted(merged.values(), key=lambda entry: entry[0].sort_key())
    return PieceSet(name, tuple((shape, count) for shape, count in ordered))


def _polygon_shape(name: str, vertices) -> Shape:
    return canonicalize(rasterize_polygon(vertices), name=name)


def unit_shape() -> Shape:
    return canonicalize(unit_triangle(0, 0, "SE"), name="small-triangle")


def parallelogram_shape() -> Shape:
    """The 1 x sqrt(2) parallelogram."""
    return _polygon_shape("parallelogram", [(0, 0), (1, 0), (2, 1), (1, 1)])


def singles(n: int) -> PieceSet:
    return make_piece_set(f"singles-{n}", [(unit_shape(), n)])


def tangram() -> PieceSet:
    return make_piece_set("TANGRAM", [
        (_polygon_shape("large-triangle", [(0, 0), (2, 0), (0, 2)]), 2),
        (_polygon_shape("medium-triangle", [(0, 0), (2, 0), (1, 1)]), 1),
        (_polygon_shape("small-triangle", [(0, 0), (1, 0), (0, 1)]), 2),
        (_polygon_shape("square", [(0, 0), (1, 0), (1, 1), (0, 1)]), 1),
        (parallelogram_shape(), 1),
    ])


def eleven() -> PieceSet:
    return make_piece_set("ELEVEN", [(parallelogram_shape(), 5), (unit_shape(), 6)])


def nineteen() -> PieceSet:
    """Seven pieces forming every 16-triangle target except the 1 x 8*sqrt(2) parallelogram."""
    return make_piece_set("NINETEEN", [
        (polyabolo_by_name("poly1-0").with_name("small-triangle"), 1),
        (polyabolo_by_name("poly2-1").with_name("medium-triangle"), 2),
        (polyabolo_by_name("poly2-2").with_name("parallelogram"), 2),
        (polyabolo_by_name("poly3-0").with_name("right-trapezoid"), 1),
        (polyabolo_by_name("poly4-7"), 1),
    ])


@functools.lru_cache(maxsize=None)
def builtin(name: str) -> PieceSet:
    key = name.strip().upper().replace("-", "_")
    if key == "TANGRAM":
        return tangram()
    if key == "ELEVEN":
        return eleven()
    if key == "NINETEEN":
        return nineteen()
    if key in BUILTIN_FILES:
        path = PIECE_FILES_DIR / BUILTIN_FILES[key]
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise PieceFileError(f"bundled piece file {path.name} is missing: {e}") from e
        return parse_piece_file(text)
    raise UnknownPieceSetError(f"unknown built-in piece set {name!r}; choose from {', '.join(BUILTIN_NAMES)}")


def load_piece_source(source: str) -> PieceSet:
    """A built-in name or a path to a piece file."""
    path = Path(source)
    if path.is_file():
        return parse_piece_file(path.read_text(encoding="utf-8"))
    try:
        return builtin(source)
    except UnknownPieceSetError:
        raise UnknownPieceSetError(f"{source!r} is neither a built-in piece set nor a readable file") from None


# --- Piece file format ---

def _parse_int(token: str, line_number: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise PieceFileError(f"expected an integer, got {token!r}", line_number) from None


def parse_piece_file(text: str) -> PieceSet:
    set_name: Optional[str] = None
    entries: List[Tuple[Shape, int]] = []
    current: Optional[dict] = None

    def close_piece():
        nonlocal current
        if current is None:
            return
        if not current["triangles"]:
            raise PieceFileError(f"piece {current['name']} has no triangles", current["line"])
        try:
            cells = region_from_triangles(current["triangles"])
            shape = canonicalize(cells, name=current["name"])
        except LatticeError as e:
            raise PieceFileError(f"piece {current['name']}: {e}", current["line"]) from e
        entries.append((shape, current["count"]))
        current = None

    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            close_piece()
            continue
        tokens = line.split()
        keyword = tokens[0]
        if keyword == "pieceset":
            if set_name is not None:
                raise PieceFileError("duplicate pieceset line", line_number)
            if len(tokens) != 2:
                raise PieceFileError("expected: pieceset <name>", line_number)
            set_name = tokens[1]
        elif keyword == "piece":
            close_piece()
            if len(tokens) != 3 or not tokens[2].startswith("x"):
                raise PieceFileError("expected: piece <name> x<multiplicity>", line_number)
            count = _parse_int(tokens[2][1:], line_number)
            if count < 1:
                raise PieceFileError(f"multiplicity must be at least 1, got {count}", line_number)
            current = {"name": tokens[1], "count": count, "triangles": [], "line": line_number}
        elif keyword == "T":
            if current is None:
                raise PieceFileError("triangle outside of a piece", line_number)
            if len(tokens) != 4:
                raise PieceFileError("expected: T <x> <y> <half>", line_number)
            half = tokens[3]
            if half not in HALVES:
                raise PieceFileError(f"unknown half {half!r}", line_number)
            current["triangles"].append((_parse_int(tokens[1], line_number), _parse_int(tokens[2], line_number), half))
        else:
            raise PieceFileError(f"unknown record {keyword!r}", line_number)
    close_piece()

    if set_name is None:
        raise PieceFileError("missing pieceset line")
    if not entries:
        raise PieceFileError(f"piece set {set_name} has no pieces")
    return make_piece_set(set_name, entries)


def serialize_piece_set(ps: PieceSet) -> str:
    blocks = [f"pieceset {ps.name}"]
    for index, (shape, count) in enumerate(ps.pieces):
        name = shape.name or f"piece{index}"
        blocks.append(f"piece {name} x{count}\n{shape.serialize()}")
    return "\n\n".join(blocks) + "\n"


# --- Free polyaboloes ---

def _grow(shape: Shape) -> Iterable[Shape]:
    cells = shape.cells
    patterns = square_patterns(cells)
    xs = [x for x, _ in patterns]
    ys = [y for _, y in patterns]
    for x in range(min(xs) - 1, max(xs) + 2):
        for y in range(min(ys) - 1, max(ys) + 2):
            pattern = patterns.get((x, y), frozenset())
            for half in HALVES:
                tri = unit_triangle(x, y, half)
                quadrants = frozenset(c.q for c in tri)
                if quadrants & pattern or (quadrants | pattern) not in VALID_PATTERNS:
                    continue
                if not any(nb in cells for c in tri for nb in neighbours(c)):
                    continue
                yield canonicalize(cells | tri, check=False)


@functools.lru_cache(maxsize=None)
def enumerate_polyaboloes(k: int) -> Tuple[Shape, ...]:
    """All free polyaboloes of k unit triangles, canonical and sorted."""
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if k == 1:
        return (unit_shape().with_name("poly1-0"),)
    grown = set()
    for shape in enumerate_polyaboloes(k - 1):
        grown.update(_grow(shape))
    ordered = sorted(grown, key=Shape.key)
    return tuple(shape.with_name(f"poly{k}-{i}") for i, shape in enumerate(ordered))


def polyabolo_by_name(name: str) -> Shape:
    """Look up a catalogue name such as poly4-7 (size 4, index 7 in enumeration order)."""
    try:
        size, index = name[len("poly"):].split("-")
        if not name.startswith("poly") or int(index) < 0:
            raise ValueError(name)
        return enumerate_polyaboloes(int(size))[int(index)]
    except (ValueError, IndexError):
        raise UnknownPieceSetError(f"unknown polyabolo name {name!r}") from None
