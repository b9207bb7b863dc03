import random

import pytest

from lattice import Transform, apply_transform, region_from_triangles, unit_triangle
from oracle import count_tilings, count_tilings_modulo_symmetry
from pieces import builtin, enumerate_polyaboloes, make_piece_set, parallelogram_shape, singles, unit_shape
from search import builtin_file_set
from solver import (
    MODULO_SYMMETRY,
    AreaMismatchError,
    Solution,
    SolverBudgetExceeded,
    check_solution,
    count_solutions,
    coverage,
    enumerate_solutions,
    max_packing,
    placements_for,
    serialize_solution,
    solve,
    solve_exists,
    unplaceable_pieces,
)
from targets import diamond_spec, enumerate_targets, find_target, region_symmetries, thin_parallelogram_spec

UNIT_SQUARE = (1, 0, 1, 0, 1, 0, 1, 0)


@pytest.fixture(scope="module")
def square16():
    return find_target(16, diamond_spec(2))


def test_placements_of_a_triangle_in_a_unit_square():
    region = find_target(2, UNIT_SQUARE).region
    assert len(placements_for(unit_shape(), region)) == 4
    assert placements_for(parallelogram_shape(), region) == []


def test_unplaceable_pieces():
    region = find_target(2, UNIT_SQUARE).region
    ps = make_piece_set("mixed", [(unit_shape(), 1), (parallelogram_shape(), 1)])
    assert unplaceable_pieces(ps, region) == [parallelogram_shape()]


def test_two_triangles_tile_a_unit_square_two_ways():
    region = find_target(2, UNIT_SQUARE).region
    assert count_solutions(singles(2), region) == 2
    assert count_solutions(singles(2), region, MODULO_SYMMETRY) == 1


def test_unknown_modulo():
    region = find_target(2, UNIT_SQUARE).region
    with pytest.raises(ValueError):
        count_solutions(singles(2), region, "rotations")


def test_area_mismatch_is_unsat_without_search():
    region = find_target(2, UNIT_SQUARE).region
    result = solve(singles(3), region)
    assert not result.found and result.nodes == 0
    with pytest.raises(AreaMismatchError):
        coverage(singles(3), 16)


def test_witness_is_sound_and_deterministic(square16):
    ps = builtin("TANGRAM")
    first = solve(ps, square16.region)
    second = solve(ps, square16.region)
    assert first.found
    assert check_solution(square16.region, first.solution)
    assert first.solution == second.solution
    assert first.nodes == second.nodes


def test_check_solution_rejects_gaps_and_overlaps():
    region = find_target(2, UNIT_SQUARE).region
    ok, solution = solve_exists(singles(2), region)
    assert ok and check_solution(region, solution)
    half = Solution(solution.placements[:1])
    assert not check_solution(region, half)
    doubled = Solution(solution.placements[:1] * 2)
    assert not check_solution(region, doubled)


def test_six_parallelograms_and_four_triangles_miss_the_square(square16):
    ps = builtin_file_set("six_parallelograms_four_triangles.txt")
    assert ps.total_triangles == 16
    ok, witness = solve_exists(ps, square16.region)
    assert not ok and witness is None


def test_parallelogram_packing_in_the_square(square16):
    assert max_packing(parallelogram_shape(), square16.region) == 5


def test_node_limit(square16):
    with pytest.raises(SolverBudgetExceeded):
        solve(singles(16), square16.region, max_nodes=1)
    report = coverage(singles(16), 16, max_nodes=1, targets=[square16])
    assert report.verdicts[0].formable is None
    assert report.to_record()["verdicts"][0]["verdict"] == "unknown"


def test_enumerate_and_count_agree():
    for target in enumerate_targets(4):
        solutions = list(enumerate_solutions(singles(4), target.region))
        assert len(solutions) == count_solutions(singles(4), target.region)
        assert len({s.partition() for s in solutions}) == len(solutions)
        assert all(check_solution(target.region, s) for s in solutions)


def test_enumerate_sink_stops_early():
    target = enumerate_targets(4)[0]
    seen = []
    solutions = list(enumerate_solutions(singles(4), target.region, sink=lambda s: seen.append(s) or False))
    assert len(solutions) == 1 and len(seen) == 1


def test_matches_the_naive_counter():
    rng = random.Random(1603)
    shapes_by_size = {k: enumerate_polyaboloes(k) for k in (1, 2, 3)}
    catalog = [t for n in range(1, 9) for t in enumerate_targets(n)]
    for _ in range(200):
        target = rng.choice(catalog)
        remaining = target.n
        shapes = []
        while remaining:
            size = rng.randint(1, min(3, remaining))
            shapes.append(rng.choice(shapes_by_size[size]))
            remaining -= size
        ps = make_piece_set("random", [(s, 1) for s in shapes])
        assert count_solutions(ps, target.region) == count_tilings(shapes, target.region), (target.id, shapes)


def test_serialize_solution():
    region = find_target(2, UNIT_SQUARE).region
    _, solution = solve_exists(singles(2), region)
    lines = serialize_solution(singles(2), solution).splitlines()
    assert len(lines) == 2
    assert all(line.startswith("P small-triangle @ T ") for line in lines)
    triangles = [line.split("@ T ")[1].split() for line in lines]
    assert region_from_triangles((int(x), int(y), h) for x, y, h in triangles) == region


def test_parallel_coverage_matches_serial():
    serial = coverage(singles(4), 4)
    parallel = coverage(singles(4), 4, threads=2)
    assert serial.count == parallel.count == len(enumerate_targets(4))
    assert serial.to_record(timings=False) == parallel.to_record(timings=False)


def test_single_triangle_fits_a_lone_triangle():
    assert unplaceable_pieces(singles(1), unit_triangle(0, 0, "NE")) == []


@pytest.mark.slow
@pytest.mark.parametrize("name, formable", [("TANGRAM", 13), ("SEI_SHONAGON", 16), ("ELEVEN", 20), ("NINETEEN", 19)])
def test_coverage_counts(name, formable):
    report = coverage(builtin(name), 16)
    assert report.count == formable
    assert all(v.formable is not None for v in report.verdicts)
    for verdict in report.verdicts:
        if verdict.formable:
            target = next(t for t in enumerate_targets(16) if t.id == verdict.target_id)
            assert check_solution(target.region, verdict.witness)


@pytest.mark.slow
def test_sei_shonagon_trapezoid_misses_every_unformable_target():
    ps = builtin("SEI_SHONAGON")
    trapezoid = next(shape for shape, _ in ps.pieces if shape.name == "trapezoid")
    report = coverage(ps, 16, keep_witnesses=False)
    targets = {t.id: t for t in enumerate_targets(16)}
    assert len(report.missing_ids) == 4
    for target_id in report.missing_ids:
        assert placements_for(trapezoid, targets[target_id].region) == []


def test_tangram_square_count_matches_the_naive_counter(square16):
    ps = builtin("TANGRAM")
    total = count_solutions(ps, square16.region)
    assert total == count_tilings(ps.expanded(), square16.region)
    assert count_solutions(ps, square16.region, MODULO_SYMMETRY) == count_tilings_modulo_symmetry(
        ps.expanded(), square16.region)


def test_modulo_symmetry_matches_the_naive_counter():
    shapes_by_size = {k: enumerate_polyaboloes(k) for k in (1, 2, 3)}
    rng = random.Random(77)
    for target in [t for n in range(2, 9) for t in enumerate_targets(n)]:
        remaining = target.n
        shapes = []
        while remaining:
            size = rng.randint(1, min(3, remaining))
            shapes.append(rng.choice(shapes_by_size[size]))
            remaining -= size
        ps = make_piece_set("random", [(s, 1) for s in shapes])
        expected = count_tilings_modulo_symmetry(shapes, target.region)
        assert count_solutions(ps, target.region, MODULO_SYMMETRY) == expected, (target.id, shapes)


def test_counts_survive_moving_the_region():
    ps = make_piece_set("mixed", [(enumerate_polyaboloes(3)[0], 1), (parallelogram_shape(), 1), (unit_shape(), 1)])
    for target in enumerate_targets(6):
        total = count_solutions(ps, target.region)
        found, _ = solve_exists(ps, target.region)
        for g in range(8):
            moved = apply_transform(target.region, Transform(g, (3, -2)))
            assert count_solutions(ps, moved) == total, (target.id, g)
            assert solve_exists(ps, moved)[0] == found
            assert count_solutions(ps, moved, MODULO_SYMMETRY) == count_solutions(ps, target.region, MODULO_SYMMETRY)


def test_tangram_square_survives_every_symmetry(square16):
    ps = builtin("TANGRAM")
    unsat = builtin_file_set("six_parallelograms_four_triangles.txt")
    for g in range(8):
        moved = apply_transform(square16.region, Transform(g, (-5, 7)))
        assert solve_exists(ps, moved)[0]
        assert not solve_exists(unsat, moved)[0]


def test_orbit_counts_respect_the_group_size(square16):
    cases = [(singles(t.n), t) for n in (2, 4, 6) for t in enumerate_targets(n)]
    cases.append((builtin("TANGRAM"), square16))
    for ps, target in cases:
        total = count_solutions(ps, target.region)
        orbits = count_solutions(ps, target.region, MODULO_SYMMETRY)
        group = len(region_symmetries(target.region))
        assert total <= group * orbits, target.id
        assert orbits <= total


@pytest.mark.slow
def test_nineteen_misses_only_the_thin_parallelogram():
    report = coverage(builtin("NINETEEN"), 16, keep_witnesses=False)
    thin = find_target(16, thin_parallelogram_spec(8))
    assert report.missing_ids == [thin.id]
