"""Shipped fixtures: grammar files, SQL datasets, and a dbt-style project."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from ..backend import SqliteBackend

GRAMMARS = ("drought", "drought_live", "crossfilter", "querybuilder", "fig4a", "products")
DATASETS = ("drought", "flights", "catalog")


def fixture_dir() -> Path:
    return Path(resources.files(__package__))


def grammar_text(name: str) -> str:
    return (fixture_dir() / f"{name}.dig").read_text(encoding="utf-8")


def grammar_path(name: str) -> Path:
    return fixture_dir() / f"{name}.dig"


def dataset_sql(name: str) -> str:
    return (fixture_dir() / "sql" / f"{name}.sql").read_text(encoding="utf-8")


def dbt_project_dir() -> Path:
    return fixture_dir() / "dbt_profit"


def fixture_backend(*datasets: str, database: str = ":memory:") -> SqliteBackend:
    """An in-process backend with the named datasets loaded (default: all)."""
    backend = SqliteBackend(database)
    for name in datasets or DATASETS:
        backend.run_script(dataset_sql(name))
    return backend
