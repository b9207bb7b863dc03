"""
Convex targets: every convex polygon that n unit triangles can form.

A convex polygon whose edges run in multiples of 45 degrees has at most one
edge per direction, so it is fully described by eight side lengths taken
counterclockwise in the fixed order E, NE, N, NW, W, SW, S, SE. Axis edges
have integer length m, diagonal edges are k copies of the lattice vector
(+-1, +-1).
"""

import functools
import math
import re
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

from config import log
from lattice import (
    Region,
    Transform,
    apply_transform,
    normalize,
    rasterize_polygon,
)

DIRECTIONS = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))
TARGET_ID = re.compile(r"^n(\d+)-t(\d+)$")


class TargetError(ValueError):
    """Invalid octagon spec or unknown target id."""


class OctagonSpec(NamedTuple):
    m1: int
    k1: int
    m2: int
    k2: int
    m3: int
    k3: int
    m4: int
    k4: int

    def closes(self) -> bool:
        m1, k1, m2, k2, m3, k3, m4, k4 = self
        return m1 + k1 - k2 - m3 - k3 + k4 == 0 and k1 + m2 + k2 - k3 - m4 - k4 == 0

    def width(self) -> int:
        return self.k4 + self.m1 + self.k1

    def height(self) -> int:
        return self.k1 + self.m2 + self.k2

    def triangles(self) -> int:
        """Number of unit triangles (twice the area)."""
        return 2 * self.width() * self.height() - (self.k1 ** 2 + self.k2 ** 2 + self.k3 ** 2 + self.k4 ** 2)

    def edge_count(self) -> int:
        return sum(1 for v in self if v)


def validate_spec(spec: Sequence[int]) -> OctagonSpec:
    if len(spec) != 8:
        raise TargetError(f"an octagon spec has 8 lengths, got {len(spec)}")
    spec = OctagonSpec(*(int(v) for v in spec))
    if any(v < 0 for v in spec):
        raise TargetError(f"negative side length in {tuple(spec)}")
    if not spec.closes():
        raise TargetError(f"spec {tuple(spec)} does not close")
    if spec.edge_count() < 3 or spec.triangles() <= 0:
        raise TargetError(f"spec {tuple(spec)} has zero area")
    return spec


def polygon_from_spec(spec: Sequence[int]) -> List[Tuple[int, int]]:
    spec = validate_spec(spec)
    x, y = 0, 0
    vertices = []
    for length, (dx, dy) in zip(spec, DIRECTIONS):
        if length == 0:
            continue
        vertices.append((x, y))
        x, y = x + length * dx, y + length * dy
    return vertices


# --- Congruence on the direction ring ---

def rotate_spec(spec: Sequence[int]) -> OctagonSpec:
    """Rotate the polygon by 90 degrees counterclockwise."""
    return OctagonSpec(*(tuple(spec[-2:]) + tuple(spec[:-2])))


def reflect_spec(spec: Sequence[int]) -> OctagonSpec:
    """Mirror the polygon in the y axis (x -> -x); the ccw ring reads new[i] = old[-i]."""
    return OctagonSpec(*(spec[(8 - i) % 8] for i in range(8)))


def spec_orbit(spec: Sequence[int]) -> List[OctagonSpec]:
    orbit = []
    for start in (OctagonSpec(*spec), reflect_spec(spec)):
        s = start
        for _ in range(4):
            orbit.append(s)
            s = rotate_spec(s)
    return orbit


def canonical_spec(spec: Sequence[int]) -> OctagonSpec:
    return min(spec_orbit(spec))


# --- Targets ---

@dataclass(frozen=True)
class ConvexTarget:
    id: str
    n: int
    spec: OctagonSpec
    vertices: Tuple[Tuple[int, int], ...]
    region: Region
    symmetries: Tuple[int, ...]

    @property
    def triangles(self) -> int:
        return self.n

    def to_record(self) -> Dict:
        return {
            "id": self.id,
            "n": self.n,
            "spec": list(self.spec),
            "vertices": [list(v) for v in self.vertices],
            "symmetry_order": len(self.symmetries),
        }


def region_symmetries(region: Region) -> Tuple[int, ...]:
    base = normalize(region)
    return tuple(g for g in range(8) if normalize(apply_transform(region, Transform(g))) == base)


def target_symmetries(t: ConvexTarget) -> Tuple[int, ...]:
    return region_symmetries(t.region)


def _target_geometry(spec: OctagonSpec) -> Tuple[Tuple[Tuple[int, int], ...], Region]:
    vertices = [(x + spec.k4, y) for x, y in polygon_from_spec(spec)]
    start = vertices.index(min(vertices))
    vertices = vertices[start:] + vertices[:start]
    return tuple(vertices), rasterize_polygon(vertices)


def candidate_specs(n: int) -> List[OctagonSpec]:
    """Canonical specs of all convex 45-degree lattice polygons made of n triangles."""
    if n < 1:
        raise TargetError(f"n must be positive, got {n}")
    found = set()
    bound = 2 * n
    for width in range(1, bound + 1):
        for height in range(1, bound + 1):
            corner_sum = 2 * width * height - n
            if corner_sum < 0:
                continue
            # k1+k2 <= height and k3+k4 <= height, so the four corner cuts
            # hold at most 2*min(width, height)**2
            short = min(width, height)
            if corner_sum > 2 * short * short:
                continue
            for k1 in range(0, short + 1):
                r1 = corner_sum - k1 * k1
                if r1 < 0:
                    break
                for k2 in range(0, min(height - k1, width) + 1):
                    r2 = r1 - k2 * k2
                    if r2 < 0:
                        break
                    for k3 in range(0, min(width - k2, height) + 1):
                        r3 = r2 - k3 * k3
                        if r3 < 0:
                            break
                        k4 = math.isqrt(r3)
                        if k4 * k4 != r3 or k4 + k1 > width or k3 + k4 > height:
                            continue
                        spec = OctagonSpec(
                            width - k4 - k1, k1, height - k1 - k2, k2,
                            width - k2 - k3, k3, height - k3 - k4, k4,
                        )
                        if spec.edge_count() >= 3:
                            found.add(canonical_spec(spec))
    return sorted(found)


def _verify_tileable(n: int, target: ConvexTarget):
    # imported here: the solver builds its coverage catalog from this module
    from pieces import singles
    from solver import InvariantViolation, solve_exists

    ok, _ = solve_exists(singles(n), target.region)
    if not ok:
        raise InvariantViolation(f"target {target.id} {tuple(target.spec)} is not tileable by {n} unit triangles")


@functools.lru_cache(maxsize=None)
def enumerate_targets(n: int, verify: bool = True) -> Tuple[ConvexTarget, ...]:
    specs = candidate_specs(n)
    width = max(2, len(str(len(specs) - 1)))
    targets = []
    for index, spec in enumerate(specs):
        vertices, region = _target_geometry(spec)
        target = ConvexTarget(
            id=f"n{n}-t{index:0{width}d}",
            n=n,
            spec=spec,
            vertices=vertices,
            region=region,
            symmetries=region_symmetries(region),
        )
        if verify:
            _verify_tileable(n, target)
        targets.append(target)
    log("TARGETS", f"n={n}: {len(targets)} convex targets")
    return tuple(targets)


def f(n: int) -> int:
    return len(enumerate_targets(n))


def ftable(max_n: int) -> Dict[int, int]:
    if max_n < 1:
        raise TargetError(f"max n must be positive, got {max_n}")
    return {n: f(n) for n in range(1, max_n + 1)}


def check_doubling(table: Dict[int, int]) -> List[int]:
    """Values x with f(x) >= f(2x); the strict doubling property says there are none."""
    return [x for x in sorted(table) if 2 * x in table and table[x] >= table[2 * x]]


def target_by_id(target_id: str) -> ConvexTarget:
    match = TARGET_ID.match(target_id.strip())
    if not match:
        raise TargetError(f"malformed target id {target_id!r}, expected n<k>-t<index>")
    n, index = int(match.group(1)), int(match.group(2))
    if n < 1:
        raise TargetError(f"malformed target id {target_id!r}")
    targets = enumerate_targets(n)
    if index >= len(targets):
        raise TargetError(f"unknown target id {target_id!r}: n={n} has {len(targets)} targets")
    return targets[index]


def find_target(n: int, spec: Sequence[int]) -> Optional[ConvexTarget]:
    wanted = canonical_spec(validate_spec(spec))
    return next((t for t in enumerate_targets(n) if t.spec == wanted), None)


def thin_parallelogram_spec(k: int) -> OctagonSpec:
    """The parallelogram with sides 1 and k*sqrt(2)."""
    return OctagonSpec(1, k, 0, 0, 1, k, 0, 0)


def diamond_spec(k: int) -> OctagonSpec:
    """The square with side k*sqrt(2), edges on the diagonals."""
    return OctagonSpec(0, k, 0, k, 0, k, 0, k)


def catalog_records(n: int) -> List[Dict]:
    return [t.to_record() for t in enumerate_targets(n)]
