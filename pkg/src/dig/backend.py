"""Database adapter: execute reduced queries, evaluate query domains,
answer catalog questions for rel/attr types.

The port is deliberately narrow (execute / eval_query_domain /
snapshot_catalog) so any SQL engine can sit behind it; the reference
implementation embeds sqlite3, which covers files and in-memory fixtures.
Query-domain results are cached per adapter with explicit invalidation;
membership checks switch to an EXISTS probe once a domain grows past
`probe_threshold` rows so large domains are never materialized client-side.
"""

from __future__ import annotations

import re
import sqlite3
import threading
import time
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import BackendError, TimeoutError_
from .values import Value, render_value


@dataclass(frozen=True)
class CatalogSnapshot:
    relations: tuple[tuple[str, tuple[tuple[str, str], ...]], ...]

    def relation_names(self) -> list[str]:
        return [name for name, _ in self.relations]

    def has_relation(self, name: str) -> bool:
        return any(rel == name for rel, _ in self.relations)

    def attributes(self, relation: str) -> list[str]:
        for rel, attrs in self.relations:
            if rel == relation:
                return [a for a, _ in attrs]
        return []

    def has_attribute(self, relation: str, attribute: str) -> bool:
        return attribute in self.attributes(relation)

    def has_attribute_anywhere(self, attribute: str) -> bool:
        return any(attribute in self.attributes(rel) for rel, _ in self.relations)


@dataclass
class QueryResult:
    columns: list[tuple[str, str]]  # (name, type)
    rows: list[tuple]

    @property
    def row_count(self) -> int:
        return len(self.rows)

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError("row arity does not match column count")

    def to_json(self) -> dict:
        return {
            "columns": [{"name": n, "type": t} for n, t in self.columns],
            "rows": [list(r) for r in self.rows],
            "row_count": self.row_count,
        }


@dataclass
class DomainValues:
    """Distinct rows of a query domain, with canonical text forms."""

    columns: list[str]
    rows: list[tuple]
    rendered: set[str] = field(default_factory=set)

    def __post_init__(self):
        if not self.rendered:
            self.rendered = {render_value(row) for row in self.rows}

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def contains(self, row: tuple) -> bool:
        return render_value(tuple(row)) in self.rendered


def _column_type(values: Iterable) -> str:
    for v in values:
        if v is None:
            continue
        if isinstance(v, int):
            return "int"
        if isinstance(v, float):
            return "float"
        if isinstance(v, (bytes, bytearray)):
            return "blob"
        return "str"
    return "unknown"


class SqliteBackend:
    """sqlite3-backed adapter; safe for concurrent use by multiple sessions."""

    def __init__(self, database: str = ":memory:", timeout_s: float = 30.0,
                 probe_threshold: int = 10000):
        self.database = database
        self.timeout_s = timeout_s
        self.probe_threshold = probe_threshold
        self._conn = sqlite3.connect(database, check_same_thread=False)
        self._lock = threading.RLock()
        self._domain_cache: dict[str, DomainValues] = {}

    def close(self):
        with self._lock:
            self._conn.close()

    # -- core port ----------------------------------------------------------

    def execute(self, query: str, params: tuple = ()) -> QueryResult:
        """Run a query and fetch its full result."""
        deadline = time.monotonic() + self.timeout_s

        def guard():
            return 1 if time.monotonic() > deadline else 0

        with self._lock:
            self._conn.set_progress_handler(guard, 10000)
            try:
                cursor = self._conn.execute(query, params)
                rows = [tuple(row) for row in cursor.fetchall()]
                names = [d[0] for d in cursor.description] if cursor.description else []
            except sqlite3.OperationalError as exc:
                if "interrupted" in str(exc):
                    raise TimeoutError_(query, self.timeout_s) from None
                raise BackendError(str(exc)) from None
            except sqlite3.Error as exc:
                raise BackendError(str(exc)) from None
            finally:
                self._conn.set_progress_handler(None, 0)
        columns = [
            (name, _column_type(row[i] for row in rows)) for i, name in enumerate(names)
        ]
        return QueryResult(columns=columns, rows=rows)

    def eval_query_domain(self, query: str) -> DomainValues:
        """Distinct result rows of a domain query (cached until invalidated)."""
        cached = self._domain_cache.get(query)
        if cached is not None:
            return cached
        result = self.execute(f"SELECT DISTINCT * FROM ({query})")
        values = DomainValues(columns=[n for n, _ in result.columns], rows=result.rows)
        self._domain_cache[query] = values
        return values

    def snapshot_catalog(self) -> CatalogSnapshot:
        with self._lock:
            try:
                tables = self._conn.execute(
                    "SELECT name FROM sqlite_master WHERE type IN ('table', 'view') "
                    "AND name NOT LIKE 'sqlite_%' ORDER BY name"
                ).fetchall()
                relations = []
                for (name,) in tables:
                    info = self._conn.execute(f"PRAGMA table_info({name!r})").fetchall()
                    attrs = tuple((row[1], (row[2] or "").lower()) for row in info)
                    relations.append((name, attrs))
            except sqlite3.Error as exc:
                raise BackendError(str(exc)) from None
        return CatalogSnapshot(relations=tuple(relations))

    # -- helpers built on the port -------------------------------------------

    def domain_contains(self, query: str, row: tuple,
                        members: Optional[DomainValues] = None) -> bool:
        """Membership check; probes with EXISTS above the size threshold."""
        values = members if members is not None else self.eval_query_domain(query)
        if len(values) <= self.probe_threshold:
            return values.contains(tuple(row))
        if len(values.columns) != len(row):
            return False
        conditions = " AND ".join(f"{_quote_ident(c)} = ?" for c in values.columns)
        probe = f"SELECT EXISTS(SELECT 1 FROM ({query}) WHERE {conditions})"
        result = self.execute(probe, tuple(_to_sql_param(v) for v in row))
        return bool(result.rows and result.rows[0][0])

    def invalidate_cache(self, query: Optional[str] = None):
        if query is None:
            self._domain_cache.clear()
        else:
            self._domain_cache.pop(query, None)

    def run_script(self, sql: str):
        """Execute a multi-statement fixture script."""
        with self._lock:
            try:
                self._conn.executescript(sql)
                self._conn.commit()
            except sqlite3.Error as exc:
                raise BackendError(str(exc)) from None
        self.invalidate_cache()


_IDENT_OK = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


def _quote_ident(name: str) -> str:
    if _IDENT_OK.match(name):
        return name
    return '"' + name.replace('"', '""') + '"'


def _to_sql_param(value: Value):
    if isinstance(value, (int, float, str)):
        return value
    return render_value(value)


def open_backend(conn: str) -> SqliteBackend:
    """Open a backend from a connection string (a path or ':memory:')."""
    if conn.startswith("sqlite://"):
        conn = conn[len("sqlite://"):]
    return SqliteBackend(conn or ":memory:")
