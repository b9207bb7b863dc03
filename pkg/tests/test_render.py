import xml.etree.ElementTree as ET

from pieces import builtin, singles
from render import PALETTE, SCALE, catalog_svg, ftable_chart, region_outline, solution_svg, write_svg
from solver import solve
from targets import diamond_spec, enumerate_targets, find_target

SVG = "{http://www.w3.org/2000/svg}"


def test_outline_of_a_unit_square():
    region = find_target(2, (1, 0, 1, 0, 1, 0, 1, 0)).region
    assert sorted(region_outline(region)) == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_outline_of_the_diamond_has_four_corners():
    region = find_target(16, diamond_spec(2)).region
    assert len(region_outline(region)) == 4


def test_solution_svg_has_one_polygon_per_piece():
    target = find_target(16, diamond_spec(2))
    ps = builtin("TANGRAM")
    result = solve(ps, target.region)
    root = ET.fromstring(solution_svg(target.region, result.solution, ps))
    polygons = root.findall(f"{SVG}polygon")
    assert len(polygons) == ps.piece_count + 1
    assert {p.get("fill") for p in polygons[:-1]} <= set(PALETTE)
    assert root.find(f"{SVG}text").text == "TANGRAM"
    assert float(root.get("width")) == 4 * SCALE + 32


def test_catalog_sheet_lists_every_target():
    targets = enumerate_targets(4)
    root = ET.fromstring(catalog_svg(targets))
    assert len(root.findall(f"{SVG}polygon")) == len(targets)
    assert [t.text for t in root.findall(f"{SVG}text")] == [t.id for t in targets]


def test_rendering_is_deterministic():
    target = enumerate_targets(4)[0]
    witness = solve(singles(4), target.region).solution
    assert solution_svg(target.region, witness) == solution_svg(target.region, witness)


def test_files_are_written(tmp_path):
    path = write_svg(catalog_svg(enumerate_targets(2)), str(tmp_path / "sheets" / "n2.svg"))
    assert path.exists()
    chart = ftable_chart({1: 1, 2: 3, 3: 2}, str(tmp_path / "f.svg"))
    assert "<svg" in chart.read_text(encoding="utf-8")
