"""Command-line interface.

    dig parse <file>                    parse and pretty-print a grammar
    dig validate <file>                 static well-formedness report
    dig vars <file>                     choice-variable report (text/json/csv)
    dig enumerate <file> [--cap N]      count (and list) the query space
    dig synth <file> [-o spec.json]     synthesize an interface spec
    dig translate-dbt <dir> [-o out.dig]
    dig tutorial <file> --spec S --start A --end B
    dig workload <file> --spec S --model M -n N --seed K [--figures DIR]
    dig report <file> --bind name=value ... [--out DIR]
    dig serve [--db CONN] [--port P]

The database connection comes from --db or the DIG_DB environment variable;
`fixture:` loads the shipped datasets into an in-memory engine.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from .backend import SqliteBackend, open_backend
from .binding import BindingState
from .choices import ChoiceModel
from .dbt import load_project, translate_project
from .enumeration import enumerate_queries
from .errors import DigError
from .formatter import format_grammar
from .interface import InterfaceSpec, check_valid, synthesize, synthesize_default
from .parser import parse_grammar
from .validate import validate_grammar
from .values import value_from_json


def _read_grammar(path: str):
    source = Path(path).read_text(encoding="utf-8")
    return parse_grammar(source)


def _open_db(conn: str | None) -> SqliteBackend | None:
    conn = conn or os.environ.get("DIG_DB")
    if not conn:
        return None
    if conn.startswith("fixture:"):
        from . import fixtures

        names = [n for n in conn[len("fixture:"):].split(",") if n]
        return fixtures.fixture_backend(*names)
    return open_backend(conn)


def _load_state(model: ChoiceModel, path_or_json: str, backend) -> BindingState:
    text = path_or_json
    if Path(path_or_json).exists():
        text = Path(path_or_json).read_text(encoding="utf-8")
    data = json.loads(text)
    if "bindings" not in data:
        data = {"bindings": {
            name: dict(entry, provenance=entry.get("provenance", "direct"))
            for name, entry in data.items()
        }}
    return BindingState.from_json(model, data, backend)


def cmd_parse(args) -> int:
    ast = _read_grammar(args.file)
    sys.stdout.write(format_grammar(ast))
    return 0


def cmd_validate(args) -> int:
    ast = _read_grammar(args.file)
    report = validate_grammar(ast)
    print(report)
    return 0 if report.ok() else 1


def cmd_vars(args) -> int:
    ast = _read_grammar(args.file)
    model = ChoiceModel(ast, recursion="summary")
    rows = []
    for cv in model.variables:
        touching = [
            _fmt_constraint(rc) for rc in model.constraints if cv.qname in rc.involved()
        ]
        cls = model.class_of(cv.qname)
        rows.append({
            "name": str(cv.qname),
            "kind": cv.kind,
            "domain": str(cv.domain),
            "rule": cv.rule,
            "constraints": "; ".join(touching),
            "equality_class": ", ".join(sorted(str(q) for q in cls)) if len(cls) > 1 else "",
        })
    if args.format == "json":
        json.dump(rows, sys.stdout, indent=2)
        print()
    elif args.format == "csv":
        writer = csv.DictWriter(sys.stdout, fieldnames=list(rows[0]) if rows else
                                ["name", "kind", "domain", "rule", "constraints",
                                 "equality_class"])
        writer.writeheader()
        writer.writerows(rows)
    else:
        for row in rows:
            extra = f"  [= {row['equality_class']}]" if row["equality_class"] else ""
            cons = f"  where {row['constraints']}" if row["constraints"] else ""
            print(f"{row['name']:<30} {row['kind']:<17} {row['domain']}{cons}{extra}")
    return 0


def _fmt_constraint(rc) -> str:
    from .formatter import format_bool_expr

    return format_bool_expr(rc.constraint.expr)


def cmd_enumerate(args) -> int:
    ast = _read_grammar(args.file)
    backend = _open_db(args.db)
    model = ChoiceModel(ast, star_cap=args.star_cap)
    result = enumerate_queries(model, backend, cap=args.cap, star_max=args.star_cap)
    print(f"total: {result.count}")
    for rule, (count, queries) in result.per_rule.items():
        print(f"{rule}: {count}")
        if args.list and queries is not None:
            for query in queries:
                print(f"  {query}")
    return 0


def cmd_synth(args) -> int:
    ast = _read_grammar(args.file)
    backend = _open_db(args.db)
    if args.default:
        spec = synthesize_default(ast)
    else:
        spec = synthesize(ast, backend, recursion_strategy=args.recursion,
                          unroll_depth=args.depth)
    report = check_valid(spec, ast, backend)
    payload = json.dumps(spec.to_json(), indent=2)
    if args.output:
        Path(args.output).write_text(payload + "\n", encoding="utf-8")
        print(f"wrote {args.output} (valid: {report.ok()})")
    else:
        print(payload)
    return 0 if report.ok() else 1


def cmd_translate_dbt(args) -> int:
    project = load_project(args.project)
    ast = translate_project(project)
    text = format_grammar(ast)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
        print(f"wrote {args.output}")
    else:
        sys.stdout.write(text)
    report = validate_grammar(ast)
    if not report.ok():
        print(report, file=sys.stderr)
        return 1
    return 0


def cmd_tutorial(args) -> int:
    from .tutorial import plan_tutorial

    ast = _read_grammar(args.file)
    backend = _open_db(args.db)
    model = ChoiceModel(ast, recursion="summary")
    spec = InterfaceSpec.from_json(json.loads(Path(args.spec).read_text()))
    start = _load_state(model, args.start, backend)
    end = _load_state(model, args.end, backend)
    steps = plan_tutorial(model, spec, start, end, backend)
    if args.format == "json":
        json.dump([s.to_json() for s in steps], sys.stdout, indent=2)
        print()
    else:
        if not steps:
            print("nothing to do: the states already match")
        for i, step in enumerate(steps, start=1):
            print(f"{i}. {step.instruction}")
    return 0


def cmd_workload(args) -> int:
    from .report import render_workload_figures
    from .workload import UserModel, generate_workload, load_user_model

    ast = _read_grammar(args.file)
    backend = _open_db(args.db)
    model = ChoiceModel(ast, recursion="summary")
    if args.spec:
        spec = InterfaceSpec.from_json(json.loads(Path(args.spec).read_text()))
    else:
        spec = synthesize(model, backend)
    user_model = load_user_model(args.model) if args.model else UserModel()
    trace = generate_workload(model, spec, user_model, args.n, seed=args.seed,
                              backend=backend)
    text = trace.to_jsonl()
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
        print(f"wrote {len(trace.events)} events to {args.output}")
    else:
        sys.stdout.write(text)
    if args.figures:
        written = render_workload_figures(trace, Path(args.figures))
        for path in written:
            print(f"wrote {path}")
    return 0


def cmd_report(args) -> int:
    from .report import render_report

    ast = _read_grammar(args.file)
    backend = _open_db(args.db)
    if backend is None:
        print("report needs a database: pass --db or set DIG_DB", file=sys.stderr)
        return 2
    model = ChoiceModel(ast, recursion="summary")
    spec = synthesize(model, backend)
    state = BindingState(model, backend)
    for pair in args.bind or []:
        name, _, raw = pair.partition("=")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        if isinstance(value, dict):
            value = value_from_json(value)
        cv = model.lookup(name)
        from .binding import coerce_to_type
        from .choices import PredicateDom

        if isinstance(cv.domain, PredicateDom):
            value = coerce_to_type(value, cv.domain.base_type.name)
        state.bind(name, value)
    written = render_report(model, spec, state, backend, Path(args.out))
    for kind in ("csv", "figures"):
        for path in written[kind]:
            print(f"wrote {path}")
    for view in written["skipped"]:
        print(f"skipped {view}: reduction incomplete")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import DigServer, create_app

    backend = _open_db(args.db)
    server = DigServer(backend=backend, row_cap=args.row_cap)
    static = args.static
    if static is None:
        bundled = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        static = str(bundled) if bundled.is_dir() else None
    app = create_app(server, static_dir=static)
    for path in args.grammar or []:
        entry = server.load_grammar(Path(path).read_text(encoding="utf-8"),
                                    name=Path(path).stem)
        print(f"loaded grammar {entry.id} ({entry.name})")
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dig", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_db(p):
        p.add_argument("--db", help="database connection (path, sqlite://path, "
                                    "or fixture:[names]); default $DIG_DB")

    p = sub.add_parser("parse", help="parse and pretty-print a grammar")
    p.add_argument("file")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("validate", help="report well-formedness findings")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("vars", help="list choice variables")
    p.add_argument("file")
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p.set_defaults(func=cmd_vars)

    p = sub.add_parser("enumerate", help="count the query space")
    p.add_argument("file")
    p.add_argument("--cap", type=int, default=10000,
                   help="list queries only when count <= cap")
    p.add_argument("--list", action="store_true", help="print the queries")
    p.add_argument("--star-cap", type=int, default=4)
    add_db(p)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("synth", help="synthesize an interface spec")
    p.add_argument("file")
    p.add_argument("-o", "--output")
    p.add_argument("--default", action="store_true",
                   help="emit the text-input-at-root interface")
    p.add_argument("--recursion", choices=("instance-button", "unroll"),
                   default="instance-button")
    p.add_argument("--depth", type=int, default=2, help="unroll depth")
    add_db(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("translate-dbt", help="translate a templated model project")
    p.add_argument("project")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_translate_dbt)

    p = sub.add_parser("tutorial", help="plan steps between two states")
    p.add_argument("file")
    p.add_argument("--spec", required=True)
    p.add_argument("--start", required=True, help="state JSON (file or inline)")
    p.add_argument("--end", required=True)
    p.add_argument("--format", choices=("text", "json"), default="text")
    add_db(p)
    p.set_defaults(func=cmd_tutorial)

    p = sub.add_parser("workload", help="generate a simulated query workload")
    p.add_argument("file")
    p.add_argument("--spec", help="interface spec JSON (default: synthesize)")
    p.add_argument("--model", help="user model JSON (file or inline)")
    p.add_argument("-n", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.add_argument("--figures", help="directory for summary figures")
    add_db(p)
    p.set_defaults(func=cmd_workload)

    p = sub.add_parser("report", help="run the views and render results")
    p.add_argument("file")
    p.add_argument("--bind", action="append", metavar="NAME=VALUE")
    p.add_argument("--out", default="report")
    add_db(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--row-cap", type=int, default=500)
    p.add_argument("--static", help="directory with the built web client")
    p.add_argument("--grammar", action="append", help="grammar file to preload")
    add_db(p)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
