import pytest

from pieces import builtin, eleven
from search import (
    Checkpoint,
    SearchBudget,
    SearchParameterError,
    candidates,
    connected_sub_unions,
    initial_target_order,
    partitions,
    search_piece_sets,
    verify_ten_piece_subclaims,
)
from solver import coverage
from targets import enumerate_targets, find_target, thin_parallelogram_spec


@pytest.fixture(autouse=True)
def single_worker(monkeypatch):
    monkeypatch.delenv("CHIE_THREADS", raising=False)
    monkeypatch.setenv("CHIE_QUIET", "1")


def hit_keys(result):
    return [hit.pieceset.multiset_key() for hit in result.hits]


def test_partitions_are_descending_and_ordered():
    assert partitions(5, 2) == [(3, 2), (4, 1)]
    assert partitions(16, 16) == [(1,) * 16]
    assert partitions(16, 11)[0] == (2, 2, 2, 2, 2, 1, 1, 1, 1, 1, 1)
    assert partitions(3, 4) == []


def test_candidates_are_multisets():
    assert len(list(candidates((2, 1)))) == 3
    assert len(list(candidates((2, 2)))) == 6
    keys = [tuple(s.serialize() for s in c) for c in candidates((2, 2, 1))]
    assert len(keys) == len(set(keys))


@pytest.mark.parametrize(
    "args",
    [(17, 16, 20), (0, 16, 20), (7, 16, 21), (7, 16, -1)],
)
def test_infeasible_parameters(args):
    with pytest.raises(SearchParameterError):
        search_piece_sets(*args, SearchBudget(max_candidates=1))


def test_budget_limits_must_be_positive():
    with pytest.raises(SearchParameterError):
        SearchBudget(max_candidates=0).validate()
    with pytest.raises(SearchParameterError):
        SearchBudget(time_limit=-1.0).validate()


def test_sixteen_singles_form_everything():
    result = search_piece_sets(16, 16, 20)
    assert result.exhausted
    assert result.evaluated == 1
    assert [hit.coverage for hit in result.hits] == [20]


def test_hits_match_recomputed_coverage():
    result = search_piece_sets(2, 4, 1)
    assert result.exhausted
    assert result.hits
    for hit in result.hits:
        assert coverage(hit.pieceset, 4).count == hit.coverage >= 1


def test_resume_gives_the_same_result(tmp_path):
    full = search_piece_sets(2, 4, 1)
    path = tmp_path / "search.ckpt"
    first = search_piece_sets(2, 4, 1, SearchBudget(max_candidates=3, checkpoint_path=str(path)))
    assert not first.exhausted
    assert first.stop_reason == "max candidates reached"
    resumed = search_piece_sets(2, 4, 1, SearchBudget(checkpoint_path=str(path)), resume=str(path))
    assert resumed.exhausted
    assert resumed.evaluated == full.evaluated == 10
    assert hit_keys(resumed) == hit_keys(full)


def test_checkpoint_round_trip(tmp_path):
    path = tmp_path / "state.ckpt"
    state = Checkpoint((7, 16, 19), partition_index=4, cursor=120, evaluated=9000,
                       hits=[(19, ("poly1-0", "poly4-3"))])
    state.save(str(path))
    assert Checkpoint.load(str(path)) == state


def test_checkpoint_for_another_search_is_rejected(tmp_path):
    path = tmp_path / "state.ckpt"
    Checkpoint((3, 4, 1)).save(str(path))
    with pytest.raises(SearchParameterError):
        search_piece_sets(2, 4, 1, resume=str(path))


def test_malformed_checkpoint(tmp_path):
    path = tmp_path / "state.ckpt"
    path.write_text("partition x\n", encoding="utf-8")
    with pytest.raises(SearchParameterError):
        Checkpoint.load(str(path))
    with pytest.raises(SearchParameterError):
        Checkpoint.load(str(tmp_path / "missing.ckpt"))


def test_thinnest_targets_come_first():
    targets = enumerate_targets(16)
    thin = find_target(16, thin_parallelogram_spec(8))
    assert targets[initial_target_order(targets)[0]].id == thin.id


def test_sub_unions_of_the_thin_parallelogram():
    thin = find_target(16, thin_parallelogram_spec(8))
    # its triangles form a chain, so the connected unions are the runs
    assert len(connected_sub_unions(thin.region, min_size=3)) == 105
    assert len(connected_sub_unions(thin.region)) == 136


@pytest.mark.slow
def test_eleven_pieces_reach_every_target():
    result = search_piece_sets(11, 16, 20, SearchBudget(max_candidates=21))
    assert hit_keys(result) == [eleven().multiset_key()]
    assert result.hits[0].coverage == 20


@pytest.mark.slow
def test_ten_piece_subclaims_hold():
    checks = verify_ten_piece_subclaims()
    assert {c.name for c in checks} == {
        "thin-pieces-contain-parallelogram",
        "trapezoid-misses-thin-parallelogram",
        "six-parallelograms-in-square",
        "square-packs-fewer-than-six",
        "five-parallelograms-fit-everywhere",
    }
    assert all(c.passed for c in checks), [c.to_record() for c in checks if not c.passed]


def test_node_budget_applies_to_hit_confirmation():
    result = search_piece_sets(2, 4, 1, SearchBudget(max_solver_nodes=3))
    assert result.exhausted
    assert result.hits
    for hit in result.hits:
        assert hit.coverage == coverage(hit.pieceset, 4, max_nodes=3).count
        assert hit.coverage <= coverage(hit.pieceset, 4).count


@pytest.fixture(scope="module")
def seven_piece_search():
    # the whole space takes about four minutes on one worker
    return search_piece_sets(7, 16, 19)


@pytest.mark.slow
def test_seven_pieces_reach_nineteen_but_not_twenty(seven_piece_search):
    result = seven_piece_search
    assert result.exhausted
    assert result.hits
    assert builtin("NINETEEN").multiset_key() in hit_keys(result)
    for hit in result.hits:
        assert coverage(hit.pieceset, 16, keep_witnesses=False).count == hit.coverage == 19


@pytest.mark.slow
def test_seven_piece_search_resumes_to_the_same_hits(seven_piece_search, tmp_path):
    path = tmp_path / "seven.ckpt"
    first = search_piece_sets(7, 16, 19, SearchBudget(max_candidates=20000, checkpoint_path=str(path)))
    assert not first.exhausted
    resumed = search_piece_sets(7, 16, 19, SearchBudget(checkpoint_path=str(path)), resume=str(path))
    assert resumed.exhausted
    assert resumed.evaluated == seven_piece_search.evaluated
    assert hit_keys(resumed) == hit_keys(seven_piece_search)
