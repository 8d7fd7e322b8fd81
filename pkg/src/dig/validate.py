"""Static validation of a parsed grammar.

All findings go into the report; nothing raises.  An empty report means the
grammar is well-formed: every referenced rule exists, the declared starting
rules are exactly the unreferenced ones, every constraint variable resolves
to a choice variable (or one equality class), and type tags are consistent
with what the tagged rule can produce.
"""

from __future__ import annotations

import datetime
import re
from dataclasses import dataclass, field
from typing import Optional

from .ast import (
    GrammarAst,
    Literal,
    Loc,
    PredicateDomain,
    Ref,
    RuleDef,
    Selection,
    ValueType,
    walk_expr,
)
from .choices import _Extractor, _equality_classes, resolve_constraint_path
from .errors import UnresolvedConstraintVariableError

UNDEFINED_RULE = "undefined-rule"
STARTING_RULE_REFERENCED = "starting-rule-referenced"
UNRESOLVED_CONSTRAINT_VARIABLE = "unresolved-constraint-variable"
TYPE_TAG_VIOLATION = "type-tag-violation"
NO_STARTING_RULE = "no-starting-rule"


@dataclass(frozen=True)
class Finding:
    kind: str
    subject: str
    message: str
    loc: Optional[Loc] = field(default=None, compare=False)

    def __str__(self):
        where = f" (at {self.loc})" if self.loc else ""
        return f"{self.kind}: {self.message}{where}"


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    def ok(self) -> bool:
        return not self.findings

    def add(self, kind: str, subject: str, message: str, loc: Optional[Loc] = None):
        self.findings.append(Finding(kind, subject, message, loc))

    def of_kind(self, kind: str) -> list[Finding]:
        return [f for f in self.findings if f.kind == kind]

    def subjects(self, kind: str) -> set[str]:
        return {f.subject for f in self.findings if f.kind == kind}

    def __str__(self):
        if self.ok():
            return "ok"
        return "\n".join(str(f) for f in self.findings)


_IDENT_SHAPE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_INT_SHAPE = re.compile(r"[+-]?\d+\Z")
_FLOAT_SHAPE = re.compile(r"[+-]?\d+(\.\d+)?([eE][+-]?\d+)?\Z")


def _literal_fits(text: str, tag: ValueType) -> bool:
    if tag.name in ("rel", "attr"):
        return bool(_IDENT_SHAPE.match(text))
    if tag.name == "int":
        return bool(_INT_SHAPE.match(text))
    if tag.name == "float":
        return bool(_FLOAT_SHAPE.match(text))
    if tag.name == "date":
        try:
            datetime.date.fromisoformat(text)
            return True
        except ValueError:
            return False
    return True  # str: anything goes


def _check_type_tag(rule: RuleDef, report: ValidationReport):
    tag = rule.type_tag
    assert tag is not None
    # check direct literals and selection-of-literal alternatives; anything
    # deeper is a runtime concern
    direct: list[Literal] = []
    if isinstance(rule.body, Literal):
        direct = [rule.body]
    elif isinstance(rule.body, Selection):
        direct = [alt for alt in rule.body.alternatives if isinstance(alt, Literal)]
    for lit in direct:
        if not _literal_fits(lit.text, tag):
            report.add(
                TYPE_TAG_VIOLATION,
                rule.name,
                f"rule '{rule.name}' is tagged {tag} but alternative {lit.text!r} "
                f"cannot be a {tag}",
                lit.loc,
            )
    if isinstance(rule.body, PredicateDomain):
        base = rule.body.base_type
        if base.name != tag.name:
            report.add(
                TYPE_TAG_VIOLATION,
                rule.name,
                f"rule '{rule.name}' is tagged {tag} but its domain is typed {base}",
                rule.body.loc,
            )


def validate_grammar(ast: GrammarAst) -> ValidationReport:
    """Collect every well-formedness finding; never raises."""
    report = ValidationReport()

    # (a) undefined rule references (incl. attr[param] targets)
    referenced: set[str] = set()
    for rule in ast.rules.values():
        for node in walk_expr(rule.body):
            if isinstance(node, Ref):
                referenced.add(node.rule)
                if node.rule not in ast.rules:
                    report.add(
                        UNDEFINED_RULE, node.rule,
                        f"rule '{rule.name}' references undefined rule '{node.rule}'",
                        node.loc,
                    )
            elif isinstance(node, PredicateDomain):
                param = node.base_type.param
                if param is not None and param not in ast.rules:
                    report.add(
                        UNDEFINED_RULE, param,
                        f"attr[{param}] in rule '{rule.name}' names an undefined rule",
                        node.loc,
                    )
        if rule.type_tag is not None and rule.type_tag.param is not None:
            if rule.type_tag.param not in ast.rules:
                report.add(
                    UNDEFINED_RULE, rule.type_tag.param,
                    f"type tag attr[{rule.type_tag.param}] on rule '{rule.name}' "
                    "names an undefined rule",
                    rule.loc,
                )

    # (b) starting-rule closure: declared set must be the unreferenced set
    computed = tuple(name for name in ast.rules if name not in referenced)
    for name in ast.starting_rules:
        if name in referenced:
            report.add(
                STARTING_RULE_REFERENCED, name,
                f"declared starting rule '{name}' is referenced by another rule",
            )
        elif name not in ast.rules:
            report.add(UNDEFINED_RULE, name, f"declared starting rule '{name}' does not exist")
    for name in computed:
        if name not in ast.starting_rules:
            report.add(
                STARTING_RULE_REFERENCED, name,
                f"rule '{name}' is referenced by no other rule but is not declared "
                "as a starting rule",
            )
    if not computed:
        report.add(NO_STARTING_RULE, "", "no rule is unreferenced; the grammar has no root")

    # (c) constraint variables must resolve (skipped while refs are broken,
    # since extraction needs a closed rule set)
    if not report.of_kind(UNDEFINED_RULE) and computed:
        extractor = _Extractor(ast, recursion="summary", star_cap=8)
        extractor.run()
        classes = _equality_classes(extractor.variables, extractor.anchors)
        for constraint in ast.constraints:
            for path in constraint.var_paths():
                try:
                    resolve_constraint_path(tuple(path), extractor.variables, classes)
                except UnresolvedConstraintVariableError:
                    report.add(
                        UNRESOLVED_CONSTRAINT_VARIABLE, "/".join(path),
                        f"constraint variable ${'/$'.join(path)} does not resolve "
                        "to a choice variable",
                        constraint.loc,
                    )

    # (d) statically checkable type-tag violations
    for rule in ast.rules.values():
        if rule.type_tag is not None:
            _check_type_tag(rule, report)

    return report
