"""Translate templated SQL model projects into a grammar.

The template dialect is a small, documented subset of what dbt-style
projects use: literal SQL, `{{ ref("model") }}` / `{{ ref(var("x")) }}`
references, `{{ var("x") }}` substitutions, and `{% if %}/{% elif %}/
{% else %}/{% endif %}` branching over variable comparisons.  Everything
else is rejected with UnknownDirective.

Translation rules: literal SQL becomes literal terminals; a variable becomes
a terminal rule (a predicate domain built from its declared domain, an open
string with a warning when undeclared); ref("m") becomes a reference to
model m's rule, or to a relation-name rule when m is not a model; and
ref(var("x")) with an enumerated x becomes a selection over the referenced
rules.  A branch block becomes a selection with one alternative per branch;
the branch condition surfaces as that selection's choice variable.

A project directory holds one <name>.sql file per model under models/ plus
a vars.yml manifest:

    vars:
      region: {type: enum, values: [usa, eur]}
      age:    {type: int, min: 18, max: 30}     # or {type: int, predicate: "n > 0"}
      note:   {type: str}

translate_project also drives the expansion oracle used in tests: evaluating
the template under a concrete assignment must equal reducing the translated
grammar under the corresponding bindings.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import yaml

from .ast import (
    BoolExpr,
    Expr,
    GrammarAst,
    Literal,
    PredicateDomain,
    Ref,
    RuleDef,
    Selection,
    ValueType,
    compute_starting_rules,
    selection_of,
    sequence_of,
)
from .errors import CyclicRefError, UnknownDirectiveError, UnresolvedRefError
from .parser import parse_expression
from .values import Value, render_value

# ---------------------------------------------------------------------------
# Template AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Text:
    text: str


@dataclass(frozen=True)
class VarSub:
    var: str


@dataclass(frozen=True)
class RefModel:
    target: str


@dataclass(frozen=True)
class RefVar:
    var: str


@dataclass
class Branch:
    # (condition, body); condition None for the else branch
    cases: list[tuple[Optional[BoolExpr], list["TemplateNode"]]]


TemplateNode = Union[Text, VarSub, RefModel, RefVar, Branch]


@dataclass
class TemplatedModel:
    name: str
    source: str
    nodes: list[TemplateNode] = field(default_factory=list)

    def __post_init__(self):
        if not self.nodes:
            self.nodes = _parse_template(self.name, self.source)


@dataclass
class VarDecl:
    name: str
    type: str = "str"  # enum | int | float | str
    values: Optional[list] = None
    min: Optional[int] = None
    max: Optional[int] = None
    predicate: Optional[str] = None


@dataclass
class ProjectGraph:
    models: dict[str, TemplatedModel]
    vars: dict[str, VarDecl] = field(default_factory=dict)

    def referenced_models(self, model: TemplatedModel) -> list[str]:
        out = []

        def walk(nodes):
            for node in nodes:
                if isinstance(node, RefModel) and node.target in self.models:
                    out.append(node.target)
                elif isinstance(node, RefVar):
                    decl = self.vars.get(node.var)
                    if decl and decl.values:
                        out.extend(v for v in decl.values if v in self.models)
                elif isinstance(node, Branch):
                    for _, body in node.cases:
                        walk(body)

        walk(model.nodes)
        return out

    def check_acyclic(self):
        state: dict[str, int] = {}

        def visit(name: str, trail: list[str]):
            mark = state.get(name, 0)
            if mark == 1:
                raise CyclicRefError(trail[trail.index(name):] + [name])
            if mark == 2:
                return
            state[name] = 1
            for dep in self.referenced_models(self.models[name]):
                visit(dep, trail + [dep])
            state[name] = 2

        for name in self.models:
            visit(name, [name])


# ---------------------------------------------------------------------------
# Template parsing
# ---------------------------------------------------------------------------

_SEGMENT = re.compile(r"\{\{(.*?)\}\}|\{%(.*?)%\}", re.DOTALL)
_REF_MODEL = re.compile(r'^\s*ref\(\s*["\']([\w.]+)["\']\s*\)\s*$')
_REF_VAR = re.compile(r'^\s*ref\(\s*var\(\s*["\'](\w+)["\']\s*\)\s*\)\s*$')
_VAR_SUB = re.compile(r'^\s*var\(\s*["\'](\w+)["\']\s*\)\s*$')
_VAR_IN_COND = re.compile(r'var\(\s*["\'](\w+)["\']\s*\)')


def _parse_condition(model: str, text: str) -> BoolExpr:
    rewritten = _VAR_IN_COND.sub(lambda m: f"${m.group(1)}", text)
    rewritten = rewritten.replace("==", "=")
    try:
        return parse_expression(rewritten)
    except Exception:
        raise UnknownDirectiveError(model, text.strip()) from None


def _parse_template(model: str, source: str) -> list[TemplateNode]:
    tokens: list[tuple[str, object]] = []
    pos = 0
    for m in _SEGMENT.finditer(source):
        if m.start() > pos:
            tokens.append(("text", source[pos : m.start()]))
        expr, stmt = m.group(1), m.group(2)
        if expr is not None:
            ref_var = _REF_VAR.match(expr)
            ref_model = _REF_MODEL.match(expr)
            var_sub = _VAR_SUB.match(expr)
            if ref_var:
                tokens.append(("refvar", ref_var.group(1)))
            elif ref_model:
                tokens.append(("ref", ref_model.group(1)))
            elif var_sub:
                tokens.append(("var", var_sub.group(1)))
            else:
                raise UnknownDirectiveError(model, "{{" + expr + "}}")
        else:
            body = stmt.strip()
            if body.startswith("if "):
                tokens.append(("if", body[3:]))
            elif body.startswith("elif "):
                tokens.append(("elif", body[5:]))
            elif body == "else":
                tokens.append(("else", None))
            elif body == "endif":
                tokens.append(("endif", None))
            else:
                raise UnknownDirectiveError(model, "{%" + stmt + "%}")
        pos = m.end()
    if pos < len(source):
        tokens.append(("text", source[pos:]))

    def build(i: int, nested: bool) -> tuple[list[TemplateNode], int]:
        nodes: list[TemplateNode] = []
        while i < len(tokens):
            kind, payload = tokens[i]
            if kind == "text":
                if payload:
                    nodes.append(Text(str(payload)))
                i += 1
            elif kind == "var":
                nodes.append(VarSub(str(payload)))
                i += 1
            elif kind == "ref":
                nodes.append(RefModel(str(payload)))
                i += 1
            elif kind == "refvar":
                nodes.append(RefVar(str(payload)))
                i += 1
            elif kind == "if":
                cases = []
                cond = _parse_condition(model, str(payload))
                body, i = build(i + 1, True)
                cases.append((cond, body))
                while i < len(tokens) and tokens[i][0] == "elif":
                    cond = _parse_condition(model, str(tokens[i][1]))
                    body, i = build(i + 1, True)
                    cases.append((cond, body))
                if i < len(tokens) and tokens[i][0] == "else":
                    body, i = build(i + 1, True)
                    cases.append((None, body))
                if i >= len(tokens) or tokens[i][0] != "endif":
                    raise UnknownDirectiveError(model, "missing {% endif %}")
                i += 1
                nodes.append(Branch(cases))
            else:  # elif / else / endif close the enclosing block
                if not nested:
                    raise UnknownDirectiveError(model, "{% " + kind + " %} outside a block")
                return nodes, i
        if nested:
            raise UnknownDirectiveError(model, "missing {% endif %}")
        return nodes, i

    nodes, _ = build(0, False)
    return nodes


# ---------------------------------------------------------------------------
# Translation
# ---------------------------------------------------------------------------


def _var_rule(decl: VarDecl) -> RuleDef:
    name = decl.name
    if decl.type == "enum":
        values = [str(v) for v in (decl.values or [])]
        quoted = ", ".join(f"'{v}'" for v in values)
        predicate = parse_expression(f"v in [{quoted}]")
        return RuleDef(name=name, body=PredicateDomain("v", ValueType("str"), predicate))
    if decl.type in ("int", "float"):
        var = "n"
        if decl.predicate:
            predicate = parse_expression(decl.predicate)
        elif decl.min is not None and decl.max is not None:
            predicate = parse_expression(f"{var} >= {decl.min} and {var} <= {decl.max}")
        elif decl.min is not None:
            predicate = parse_expression(f"{var} >= {decl.min}")
        elif decl.max is not None:
            predicate = parse_expression(f"{var} <= {decl.max}")
        else:
            predicate = None
        return RuleDef(name=name, body=PredicateDomain(var, ValueType(decl.type), predicate))
    return RuleDef(name=name, body=PredicateDomain("v", ValueType("str"), None))


class _Translator:
    def __init__(self, project: ProjectGraph):
        self.project = project
        self.rules: dict[str, RuleDef] = {}
        self.done_models: set[str] = set()

    def ensure_var_rule(self, var: str, model: str) -> str:
        decl = self.project.vars.get(var)
        if decl is None:
            warnings.warn(
                f"model '{model}': variable '{var}' has no declared domain; "
                "treating it as an open string",
                stacklevel=2,
            )
            decl = VarDecl(name=var, type="str")
        if var not in self.rules:
            self.rules[var] = _var_rule(decl)
        return var

    def ensure_relation_rule(self, name: str) -> str:
        if name not in self.rules:
            self.rules[name] = RuleDef(
                name=name, body=Literal(name), type_tag=ValueType("rel")
            )
        return name

    def ensure_model(self, name: str):
        if name in self.done_models:
            return
        self.done_models.add(name)
        model = self.project.models[name]
        body = self.translate_nodes(model, model.nodes)
        self.rules[name] = RuleDef(name=name, body=body)

    def translate_nodes(self, model: TemplatedModel, nodes: list[TemplateNode]) -> Expr:
        parts: list[Expr] = []
        for node in nodes:
            if isinstance(node, Text):
                parts.append(Literal(node.text))
            elif isinstance(node, VarSub):
                parts.append(Ref(self.ensure_var_rule(node.var, model.name)))
            elif isinstance(node, RefModel):
                if node.target in self.project.models:
                    self.ensure_model(node.target)
                    parts.append(Ref(node.target))
                else:
                    parts.append(Ref(self.ensure_relation_rule(node.target)))
            elif isinstance(node, RefVar):
                decl = self.project.vars.get(node.var)
                if decl is None or decl.type != "enum" or not decl.values:
                    raise UnresolvedRefError(
                        model.name, f'ref(var("{node.var}"))',
                        "the variable needs an enumerated domain",
                    )
                alts: list[Expr] = []
                for value in decl.values:
                    value = str(value)
                    if value in self.project.models:
                        self.ensure_model(value)
                        alts.append(Ref(value))
                    else:
                        alts.append(Ref(self.ensure_relation_rule(value)))
                rule_name = node.var
                if rule_name not in self.rules:
                    self.rules[rule_name] = RuleDef(name=rule_name, body=selection_of(alts))
                parts.append(Ref(rule_name))
            elif isinstance(node, Branch):
                alts = []
                for _, body in node.cases:
                    alts.append(self.translate_nodes(model, body))
                parts.append(selection_of(alts) if len(alts) > 1 else alts[0])
            else:
                raise TypeError(f"unexpected template node {node!r}")
        if not parts:
            return Literal("")
        return sequence_of(parts)


def translate_model(model: TemplatedModel, project: ProjectGraph) -> dict[str, RuleDef]:
    """Translate one model; returns its rule plus the auxiliary rules."""
    translator = _Translator(project)
    translator.done_models.add(model.name)
    body = translator.translate_nodes(model, model.nodes)
    translator.rules[model.name] = RuleDef(name=model.name, body=body)
    return translator.rules


def translate_project(project: ProjectGraph) -> GrammarAst:
    """Translate every model; starting rules are the unreferenced models."""
    project.check_acyclic()
    translator = _Translator(project)
    for name in project.models:
        translator.ensure_model(name)
    rules = translator.rules
    return GrammarAst(
        rules=rules, starting_rules=compute_starting_rules(rules), constraints=()
    )


# ---------------------------------------------------------------------------
# Direct template expansion (the oracle the grammar path is checked against)
# ---------------------------------------------------------------------------


def expand_template(project: ProjectGraph, model_name: str,
                    assignment: dict[str, Value]) -> str:
    """Evaluate a model's template under a concrete variable assignment."""
    model = project.models[model_name]

    def eval_nodes(nodes: list[TemplateNode]) -> str:
        out: list[str] = []
        for node in nodes:
            if isinstance(node, Text):
                out.append(node.text)
            elif isinstance(node, VarSub):
                out.append(render_value(assignment[node.var]))
            elif isinstance(node, RefModel):
                if node.target in project.models:
                    out.append(expand_template(project, node.target, assignment))
                else:
                    out.append(node.target)
            elif isinstance(node, RefVar):
                target = str(assignment[node.var])
                if target in project.models:
                    out.append(expand_template(project, target, assignment))
                else:
                    out.append(target)
            elif isinstance(node, Branch):
                taken = None
                for cond, body in node.cases:
                    if cond is None:
                        taken = body
                        break
                    env = {(name,): value for name, value in assignment.items()}
                    from .ast import eval_expr

                    if bool(eval_expr(cond, env)):
                        taken = body
                        break
                if taken is not None:
                    out.append(eval_nodes(taken))
            else:
                raise TypeError(f"unexpected template node {node!r}")
        return "".join(out)

    return eval_nodes(model.nodes)


def assignments_over_domains(project: ProjectGraph,
                             used_vars: list[str]) -> list[dict[str, Value]]:
    """Every assignment of the named variables over their declared domains."""
    import itertools

    domains: list[list[Value]] = []
    for name in used_vars:
        decl = project.vars.get(name)
        if decl is None:
            raise UnresolvedRefError("<project>", name, "no declared domain")
        if decl.type == "enum" and decl.values:
            domains.append([str(v) for v in decl.values])
        elif decl.type == "int" and decl.min is not None and decl.max is not None:
            domains.append(list(range(decl.min, decl.max + 1)))
        else:
            raise UnresolvedRefError("<project>", name, "domain is not finite")
    out = []
    for combo in itertools.product(*domains):
        out.append(dict(zip(used_vars, combo)))
    return out


def used_variables(project: ProjectGraph) -> list[str]:
    seen: list[str] = []

    def walk(nodes):
        for node in nodes:
            if isinstance(node, (VarSub, RefVar)) and node.var not in seen:
                seen.append(node.var)
            elif isinstance(node, Branch):
                for cond, body in node.cases:
                    if cond is not None:
                        from .ast import expr_vars

                        for path in expr_vars(cond):
                            if path[0] not in seen:
                                seen.append(path[0])
                    walk(body)

    for model in project.models.values():
        walk(model.nodes)
    return seen


# ---------------------------------------------------------------------------
# Project directory loading
# ---------------------------------------------------------------------------


def load_project(path: str | Path) -> ProjectGraph:
    """Read models/*.sql and vars.yml from a project directory."""
    root = Path(path)
    models_dir = root / "models" if (root / "models").is_dir() else root
    models: dict[str, TemplatedModel] = {}
    for sql in sorted(models_dir.glob("*.sql")):
        name = sql.stem
        models[name] = TemplatedModel(name=name, source=sql.read_text().strip())
    variables: dict[str, VarDecl] = {}
    manifest = root / "vars.yml"
    if manifest.exists():
        data = yaml.safe_load(manifest.read_text()) or {}
        for name, spec in (data.get("vars") or {}).items():
            if isinstance(spec, dict):
                variables[name] = VarDecl(
                    name=name,
                    type=spec.get("type", "str"),
                    values=spec.get("values"),
                    min=spec.get("min"),
                    max=spec.get("max"),
                    predicate=spec.get("predicate"),
                )
            else:
                variables[name] = VarDecl(name=name, type=str(spec))
    return ProjectGraph(models=models, vars=variables)
