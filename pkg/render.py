"""SVG renderings: tiling witnesses, the target catalog sheet and the f(n) chart."""

import xml.etree.ElementTree as ET
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("agg")
from matplotlib import pyplot  # noqa: E402
import shapely  # noqa: E402
from shapely.geometry import Polygon  # noqa: E402

from lattice import Region, region_triangles  # noqa: E402
from pieces import PieceSet  # noqa: E402
from solver import Solution  # noqa: E402
from targets import ConvexTarget  # noqa: E402

SCALE = 32
MARGIN = 16
CAPTION_HEIGHT = 20
PALETTE = (
    "#e6194b", "#3cb44b", "#ffe119", "#4363d8", "#f58231", "#911eb4",
    "#46f0f0", "#f032e6", "#bcf60c", "#fabebe", "#008080", "#e6beff",
)
OUTLINE = "#222222"
TARGET_FILL = "#d9d9d9"


def triangle_vertices(x: int, y: int, half: str) -> List[Tuple[int, int]]:
    """Corners of a unit triangle; the right angle sits at the corner named by its half."""
    return {
        "NE": [(x, y + 1), (x + 1, y + 1), (x + 1, y)],
        "NW": [(x, y), (x, y + 1), (x + 1, y + 1)],
        "SE": [(x, y), (x + 1, y), (x + 1, y + 1)],
        "SW": [(x, y), (x + 1, y), (x, y + 1)],
    }[half]


def region_outline(region: Region) -> List[Tuple[float, float]]:
    """Boundary of a connected region as one closed ring (first vertex not repeated)."""
    merged = shapely.union_all([Polygon(triangle_vertices(*t)) for t in region_triangles(region)])
    if merged.geom_type != "Polygon":
        merged = max(merged.geoms, key=lambda g: g.area)
    merged = shapely.simplify(merged, 0)
    return [(float(px), float(py)) for px, py in list(merged.exterior.coords)[:-1]]


class _Canvas:
    def __init__(self, width: float, height: float):
        self.width = width
        self.height = height
        self.root = ET.Element(
            "svg",
            xmlns="http://www.w3.org/2000/svg",
            width=f"{width:g}",
            height=f"{height:g}",
            viewBox=f"0 0 {width:g} {height:g}",
        )

    def polygon(self, points: Iterable[Tuple[float, float]], fill: str, stroke: str = OUTLINE, width: float = 1.5):
        ET.SubElement(
            self.root,
            "polygon",
            points=" ".join(f"{px:g},{py:g}" for px, py in points),
            fill=fill,
            stroke=stroke,
            **{"stroke-width": f"{width:g}", "stroke-linejoin": "round"},
        )

    def text(self, x: float, y: float, label: str, size: int = 12):
        node = ET.SubElement(
            self.root, "text", x=f"{x:g}", y=f"{y:g}",
            **{"font-family": "sans-serif", "font-size": str(size), "text-anchor": "middle"},
        )
        node.text = label

    def tostring(self) -> str:
        ET.indent(self.root)
        return ET.tostring(self.root, encoding="unicode") + "\n"


def _extent(regions: Sequence[Region]) -> Tuple[int, int, int, int]:
    xs = [c.x for r in regions for c in r]
    ys = [c.y for r in regions for c in r]
    return min(xs), min(ys), max(xs) + 1, max(ys) + 1


def _project(points, x0: int, y1: int, ox: float, oy: float):
    """Lattice to screen: y grows downward in SVG."""
    return [(ox + (px - x0) * SCALE, oy + (y1 - py) * SCALE) for px, py in points]


def solution_svg(region: Region, solution: Solution, ps: Optional[PieceSet] = None, title: str = "") -> str:
    if not title and ps is not None:
        title = ps.name
    x0, y0, x1, y1 = _extent([region])
    caption = CAPTION_HEIGHT if title else 0
    canvas = _Canvas((x1 - x0) * SCALE + 2 * MARGIN, (y1 - y0) * SCALE + 2 * MARGIN + caption)
    for placement in solution.canonical().placements:
        color = PALETTE[placement.piece_index % len(PALETTE)]
        canvas.polygon(_project(region_outline(placement.cells), x0, y1, MARGIN, MARGIN), color)
    canvas.polygon(_project(region_outline(region), x0, y1, MARGIN, MARGIN), "none", width=3)
    if title:
        canvas.text(canvas.width / 2, (y1 - y0) * SCALE + 2 * MARGIN + caption - 6, title)
    return canvas.tostring()


def catalog_svg(targets: Sequence[ConvexTarget], columns: int = 5) -> str:
    """All targets on one sheet, in catalog order, each captioned with its id."""
    if not targets:
        return _Canvas(2 * MARGIN, 2 * MARGIN).tostring()
    boxes = [_extent([t.region]) for t in targets]
    cell_w = max(x1 - x0 for x0, _, x1, _ in boxes) * SCALE + 2 * MARGIN
    cell_h = max(y1 - y0 for _, y0, _, y1 in boxes) * SCALE + 2 * MARGIN + CAPTION_HEIGHT
    columns = max(1, min(columns, len(targets)))
    rows = (len(targets) + columns - 1) // columns
    canvas = _Canvas(columns * cell_w, rows * cell_h)
    for index, (target, (x0, y0, x1, y1)) in enumerate(zip(targets, boxes)):
        ox = (index % columns) * cell_w + (cell_w - (x1 - x0) * SCALE) / 2
        oy = (index // columns) * cell_h + MARGIN
        canvas.polygon(_project(region_outline(target.region), x0, y1, ox, oy), TARGET_FILL)
        canvas.text((index % columns) * cell_w + cell_w / 2, (index // columns + 1) * cell_h - 6, target.id)
    return canvas.tostring()


def write_svg(text: str, path: str) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text, encoding="utf-8")
    return target


def ftable_chart(table: Dict[int, int], path: str) -> Path:
    """Point-and-line chart of f(n); the file format follows the path suffix (SVG by default)."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    ns = sorted(table)
    fig, ax = pyplot.subplots(figsize=(6, 4))
    ax.plot(ns, [table[n] for n in ns], marker="o", color=PALETTE[3])
    ax.set_xlabel("n (unit triangles)")
    ax.set_ylabel("f(n)")
    ax.set_title("Convex polygons formable from n triangles")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(target, format=target.suffix.lstrip(".") or "svg")
    pyplot.close(fig)
    return target
