import json
import sqlite3
import uuid
from datetime import datetime
from typing import Dict, List, Optional

from config import log


class ResultStore:
    """SQLite record of coverage runs and search hits."""

    def __init__(self, db_path: str = "chie_results.db"):
        self.db_path = db_path
        self._init_database()

    def _init_database(self):
        """Create tables and add columns missing from older databases."""
        conn = sqlite3.connect(self.db_path)
        cursor = conn.cursor()

        cursor.execute("""
            CREATE TABLE IF NOT EXISTS coverage_runs (
                id TEXT PRIMARY KEY,
                created_at TEXT NOT NULL,
                pieceset TEXT NOT NULL,
                n INTEGER NOT NULL,
                coverage INTEGER NOT NULL,
                verdicts TEXT NOT NULL,
                elapsed REAL
            )
        """)
        cursor.execute("""
            CREATE TABLE IF NOT EXISTS search_hits (
                id TEXT PRIMARY KEY,
                created_at TEXT NOT NULL,
                num_pieces INTEGER NOT NULL,
                num_triangles INTEGER NOT NULL,
                coverage INTEGER NOT NULL,
                pieceset TEXT NOT NULL
            )
        """)

        # databases written before elapsed times were recorded
        cursor.execute("PRAGMA table_info(coverage_runs)")
        columns = [info[1] for info in cursor.fetchall()]
        if "elapsed" not in columns:
            log("DB", "Migrating database: adding 'elapsed' column...")
            cursor.execute("ALTER TABLE coverage_runs ADD COLUMN elapsed REAL")

        conn.commit()
        conn.close()
        log("DB", f"Database initialized at {self.db_path}")

    def store_coverage(self, report, elapsed: float = 0.0) -> str:
        """Store a CoverageReport; returns the new record id."""
        run_id = str(uuid.uuid4())
        conn = sqlite3.connect(self.db_path)
        try:
            conn.execute(
                """
                INSERT INTO coverage_runs (id, created_at, pieceset, n, coverage, verdicts, elapsed)
                VALUES (?, ?, ?, ?, ?, ?, ?)
                """,
                (
                    run_id,
                    datetime.now().isoformat(),
                    report.pieceset,
                    report.n,
                    report.count,
                    json.dumps(report.to_record(timings=False)["verdicts"]),
                    elapsed,
                ),
            )
            conn.commit()
        finally:
            conn.close()
        log("DB", f"Stored coverage run {run_id} ({report.pieceset}: {report.count})")
        return run_id

    def store_search_hit(self, num_pieces: int, num_triangles: int, coverage: int, serialized: str) -> str:
        hit_id = str(uuid.uuid4())
        conn = sqlite3.connect(self.db_path)
        try:
            conn.execute(
                """
                INSERT INTO search_hits (id, created_at, num_pieces, num_triangles, coverage, pieceset)
                VALUES (?, ?, ?, ?, ?, ?)
                """,
                (hit_id, datetime.now().isoformat(), num_pieces, num_triangles, coverage, serialized),
            )
            conn.commit()
        finally:
            conn.close()
        log("DB", f"Stored search hit {hit_id} (coverage {coverage})")
        return hit_id

    @staticmethod
    def _run_row(row) -> Dict:
        return {
            "id": row[0],
            "created_at": row[1],
            "pieceset": row[2],
            "n": row[3],
            "coverage": row[4],
            "verdicts": json.loads(row[5]),
            "elapsed": row[6],
        }

    def get_run(self, run_id: str) -> Optional[Dict]:
        conn = sqlite3.connect(self.db_path)
        cursor = conn.cursor()
        cursor.execute(
            "SELECT id, created_at, pieceset, n, coverage, verdicts, elapsed FROM coverage_runs WHERE id = ?",
            (run_id,),
        )
        row = cursor.fetchone()
        conn.close()
        return self._run_row(row) if row else None

    def get_all_runs(self, limit: int = 100) -> List[Dict]:
        """Coverage runs, most recent first."""
        conn = sqlite3.connect(self.db_path)
        cursor = conn.cursor()
        cursor.execute(
            """
            SELECT id, created_at, pieceset, n, coverage, verdicts, elapsed
            FROM coverage_runs
            ORDER BY created_at DESC
            LIMIT ?
            """,
            (limit,),
        )
        rows = cursor.fetchall()
        conn.close()
        return [self._run_row(row) for row in rows]

    def get_search_hits(self, limit: int = 100) -> List[Dict]:
        conn = sqlite3.connect(self.db_path)
        cursor = conn.cursor()
        cursor.execute(
            """
            SELECT id, created_at, num_pieces, num_triangles, coverage, pieceset
            FROM search_hits
            ORDER BY coverage DESC, created_at DESC
            LIMIT ?
            """,
            (limit,),
        )
        rows = cursor.fetchall()
        conn.close()
        keys = ("id", "created_at", "num_pieces", "num_triangles", "coverage", "pieceset")
        return [dict(zip(keys, row)) for row in rows]

    def get_statistics(self) -> Dict:
        conn = sqlite3.connect(self.db_path)
        cursor = conn.cursor()

        cursor.execute("SELECT COUNT(*) FROM coverage_runs")
        total_runs = cursor.fetchone()[0]

        cursor.execute("""
            SELECT pieceset, MAX(coverage)
            FROM coverage_runs
            GROUP BY pieceset
            ORDER BY pieceset
        """)
        best_by_pieceset = dict(cursor.fetchall())

        cursor.execute("SELECT COUNT(*), MAX(coverage) FROM search_hits")
        total_hits, best_hit = cursor.fetchone()

        conn.close()
        return {
            "total_runs": total_runs,
            "best_by_pieceset": best_by_pieceset,
            "total_search_hits": total_hits,
            "best_search_coverage": best_hit,
        }
