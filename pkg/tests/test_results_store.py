import sqlite3

import pytest

from pieces import singles
from results_store import ResultStore
from solver import coverage


@pytest.fixture
def store(tmp_path):
    return ResultStore(str(tmp_path / "results.db"))


def test_store_and_read_back_a_coverage_run(store):
    report = coverage(singles(4), 4)
    run_id = store.store_coverage(report, elapsed=0.5)
    run = store.get_run(run_id)
    assert run["pieceset"] == "singles-4"
    assert run["coverage"] == report.count
    assert run["elapsed"] == 0.5
    assert [v["target"] for v in run["verdicts"]] == [v.target_id for v in report.verdicts]
    assert store.get_run("missing") is None


def test_runs_are_listed_newest_first(store):
    first = store.store_coverage(coverage(singles(2), 2))
    second = store.store_coverage(coverage(singles(3), 3))
    ids = [r["id"] for r in store.get_all_runs()]
    assert set(ids) == {first, second}
    assert len(store.get_all_runs(limit=1)) == 1


def test_statistics(store):
    store.store_coverage(coverage(singles(2), 2))
    store.store_search_hit(16, 16, 20, "pieceset hit\n")
    stats = store.get_statistics()
    assert stats["total_runs"] == 1
    assert stats["best_by_pieceset"] == {"singles-2": 3}
    assert stats["total_search_hits"] == 1
    assert stats["best_search_coverage"] == 20
    assert store.get_search_hits()[0]["pieceset"] == "pieceset hit\n"


def test_new_databases_need_no_migration(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv("CHIE_QUIET", raising=False)
    ResultStore(str(tmp_path / "fresh.db"))
    err = capsys.readouterr().err
    assert "Database initialized" in err
    assert "Migrating" not in err


def test_old_databases_gain_the_elapsed_column(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv("CHIE_QUIET", raising=False)
    path = tmp_path / "old.db"
    conn = sqlite3.connect(path)
    conn.execute(
        "CREATE TABLE coverage_runs (id TEXT PRIMARY KEY, created_at TEXT NOT NULL, pieceset TEXT NOT NULL,"
        " n INTEGER NOT NULL, coverage INTEGER NOT NULL, verdicts TEXT NOT NULL)"
    )
    conn.commit()
    conn.close()
    ResultStore(str(path))
    assert "Migrating database" in capsys.readouterr().err
    conn = sqlite3.connect(path)
    columns = [row[1] for row in conn.execute("PRAGMA table_info(coverage_runs)")]
    conn.close()
    assert "elapsed" in columns
