"""CLI smoke tests (each subcommand end to end on the fixtures)."""

import json

import pytest

from dig import fixtures
from dig.cli import main


@pytest.fixture()
def drought_path():
    return str(fixtures.grammar_path("drought"))


def run(capsys, *argv) -> tuple[int, str]:
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out


class TestCommands:
    def test_parse_roundtrips(self, capsys, drought_path):
        code, out = run(capsys, "parse", drought_path)
        assert code == 0
        assert "t:rel = 'chirps' | 'evi'" in out

    def test_validate_ok(self, capsys, drought_path):
        code, out = run(capsys, "validate", drought_path)
        assert code == 0
        assert out.strip() == "ok"

    def test_validate_failure_exit_code(self, capsys, tmp_path):
        bad = tmp_path / "bad.dig"
        bad.write_text("q = missing\n")
        code, out = run(capsys, "validate", str(bad))
        assert code == 1
        assert "undefined-rule" in out

    def test_vars_text_json_csv(self, capsys, drought_path):
        code, out = run(capsys, "vars", drought_path)
        assert code == 0 and "predicate-domain" in out
        code, out = run(capsys, "vars", drought_path, "--format", "json")
        rows = json.loads(out)
        assert [r["name"] for r in rows] == ["t", "s", "e"]
        assert "$s <= $e" in rows[1]["constraints"]
        code, out = run(capsys, "vars", drought_path, "--format", "csv")
        assert out.splitlines()[0].startswith("name,kind,domain")

    def test_enumerate(self, capsys, drought_path):
        code, out = run(capsys, "enumerate", drought_path)
        assert code == 0
        assert "total: 1332" in out

    def test_enumerate_list(self, capsys, tmp_path):
        g = tmp_path / "g.dig"
        g.write_text("q = 'a' | 'b'\n")
        code, out = run(capsys, "enumerate", str(g), "--list")
        assert out.splitlines()[1:] == ["q: 2", "  a", "  b"]

    def test_synth_writes_spec(self, capsys, drought_path, tmp_path):
        out_path = tmp_path / "spec.json"
        code, out = run(capsys, "synth", drought_path, "-o", str(out_path))
        assert code == 0
        spec = json.loads(out_path.read_text())
        assert [i["widget_type"] for i in spec["interactions"]] == [
            "dropdown", "range-slider",
        ]

    def test_translate_dbt(self, capsys, tmp_path):
        out_path = tmp_path / "profit.dig"
        code, out = run(capsys, "translate-dbt", str(fixtures.dbt_project_dir()),
                        "-o", str(out_path))
        assert code == 0
        text = out_path.read_text()
        assert "q = 'SELECT cty, sum(profit) FROM ' region ' WHERE age > ' age" in text

    def test_tutorial(self, capsys, drought_path, tmp_path):
        spec_path = tmp_path / "spec.json"
        run(capsys, "synth", drought_path, "-o", str(spec_path))
        start = json.dumps({"bindings": {
            "t": {"type": "int", "value": 1},
            "s": {"type": "int", "value": 10},
            "e": {"type": "int", "value": 23},
        }})
        end = json.dumps({"bindings": {
            "t": {"type": "int", "value": 2},
            "s": {"type": "int", "value": 1},
            "e": {"type": "int", "value": 2},
        }})
        code, out = run(capsys, "tutorial", drought_path, "--spec", str(spec_path),
                        "--start", start, "--end", end)
        assert code == 0
        lines = out.strip().splitlines()
        assert len(lines) == 2
        assert "dropdown" in lines[0] and "evi" in lines[0]
        assert "range" in lines[1]

    def test_workload_with_figures(self, capsys, drought_path, tmp_path):
        trace_path = tmp_path / "trace.jsonl"
        figures = tmp_path / "figs"
        code, out = run(capsys, "workload", drought_path, "-n", "25",
                        "--seed", "5", "-o", str(trace_path),
                        "--figures", str(figures))
        assert code == 0
        lines = trace_path.read_text().splitlines()
        assert len(lines) == 25
        event = json.loads(lines[0])
        assert set(event) == {"t_offset_ms", "interaction", "delta", "queries"}
        pngs = sorted(p.name for p in figures.glob("*.png"))
        assert pngs == ["workload_interactions.png", "workload_think_times.png",
                        "workload_timeline.png"]

    def test_report_renders_csv_and_figure(self, capsys, tmp_path):
        out_dir = tmp_path / "report"
        code, out = run(
            capsys, "report", str(fixtures.grammar_path("drought_live")),
            "--db", "fixture:drought",
            "--bind", "t=2", "--bind", "s=1", "--bind", "e=2",
            "--out", str(out_dir),
        )
        assert code == 0
        assert (out_dir / "v_q.csv").exists()
        assert (out_dir / "v_q.png").exists()
        header = (out_dir / "v_q.csv").read_text().splitlines()[0]
        assert header.startswith("year,")

    def test_error_reporting(self, capsys, tmp_path):
        bad = tmp_path / "bad.dig"
        bad.write_text("q = 'unterminated\n")
        code = main(["parse", str(bad)])
        err = capsys.readouterr().err
        assert code == 1
        assert "error:" in err
