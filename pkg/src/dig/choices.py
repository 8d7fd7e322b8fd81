"""Choice model: the variables a grammar exposes and how they relate.

Every variability site (selection, zero-or-more, predicate domain, query
domain, regex terminal) reached from a starting rule yields one choice
variable per qualified path to it.  Path elements are reference names: the
user's $annotation when present, otherwise the referenced rule's name (with
a 1-based ordinal appended when the same rule is referenced more than once
in a rule body).  Sites sitting inline in a larger body get synthesized
elements (sel1, rep1, dom1, ...).  With a single starting rule, paths are
rooted at that rule's body; with several, the starting rule's name is the
first path element so variables stay unique grammar-wide.

Annotation names double as equality declarations: when two *different*
reference sites carry the same $name, the variables reached through them
(and all structurally corresponding descendants) must hold equal values.
A single annotated site reached through several paths does *not* imply
equality - qualification exists precisely to keep those apart.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

from .ast import (
    BoolExpr,
    ConstraintExpr,
    Expr,
    GrammarAst,
    Literal,
    PredicateDomain,
    QueryDomain,
    Ref,
    RegexTerm,
    RuleDef,
    Selection,
    Sequence,
    ValueType,
    ZeroOrMore,
    walk_expr,
)
from .errors import (
    RecursionUnboundedError,
    UnknownRuleError,
    UnknownVariableError,
    UnresolvedConstraintVariableError,
)

DEFAULT_STAR_CAP = 8


@dataclass(frozen=True, order=True)
class QualifiedName:
    path: tuple[str, ...]

    def __post_init__(self):
        if not self.path:
            raise ValueError("qualified name cannot be empty")

    def __str__(self) -> str:
        return "/".join(self.path)

    @classmethod
    def of(cls, *parts: str) -> "QualifiedName":
        return cls(tuple(parts))

    @classmethod
    def parse(cls, text: str) -> "QualifiedName":
        return cls(tuple(text.split("/")))

    def child(self, *parts: str) -> "QualifiedName":
        return QualifiedName(self.path + parts)

    def is_prefix_of(self, other: "QualifiedName") -> bool:
        return len(self.path) < len(other.path) and other.path[: len(self.path)] == self.path

    def has_suffix(self, suffix: tuple[str, ...]) -> bool:
        return len(self.path) >= len(suffix) and self.path[-len(suffix):] == suffix


# ---------------------------------------------------------------------------
# Domain descriptors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnumeratedInts:
    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("empty integer range")

    def __str__(self):
        return f"[{self.lo}, {self.hi}]"


@dataclass(frozen=True)
class PredicateDom:
    base_type: ValueType
    predicate: Optional[BoolExpr]
    var: str = "x"
    regex: Optional[str] = None  # set for regex terminals

    def __str__(self):
        return f"{{{self.var}:{self.base_type}}}" if self.regex is None else f"/{self.regex}/"


@dataclass(frozen=True)
class QueryDom:
    query: str

    def __str__(self):
        return "{ " + self.query + " }"


@dataclass(frozen=True)
class Naturals:
    cap: Optional[int] = None

    def __str__(self):
        return "count" if self.cap is None else f"count <= {self.cap}"


DomainDescriptor = Union[EnumeratedInts, PredicateDom, QueryDom, Naturals]

KIND_SELECTION = "selection"
KIND_STAR = "star"
KIND_PREDICATE = "predicate-domain"
KIND_QUERY = "query-domain"


@dataclass(frozen=True)
class ChoiceVariable:
    qname: QualifiedName
    kind: str
    domain: DomainDescriptor
    rule: str  # rule whose body holds the site
    site: Expr = field(compare=False, repr=False)

    def __str__(self):
        return f"{self.qname} [{self.kind} {self.domain}]"


# ---------------------------------------------------------------------------
# Extraction walk
# ---------------------------------------------------------------------------


def _ref_names(body: Expr) -> dict[int, str]:
    """Assign a path-element name to every Ref in a rule body (by identity)."""
    refs = [node for node in walk_expr(body) if isinstance(node, Ref)]
    totals: dict[str, int] = {}
    for ref in refs:
        if ref.annotation is None:
            totals[ref.rule] = totals.get(ref.rule, 0) + 1
    seen: dict[str, int] = {}
    names: dict[int, str] = {}
    for ref in refs:
        if ref.annotation is not None:
            names[id(ref)] = ref.annotation
        elif totals[ref.rule] == 1:
            names[id(ref)] = ref.rule
        else:
            seen[ref.rule] = seen.get(ref.rule, 0) + 1
            names[id(ref)] = f"{ref.rule}{seen[ref.rule]}"
    return names


def _inline_names(body: Expr) -> dict[int, str]:
    """Synthesized path elements for variability sites below a body's root."""
    counters = {"sel": 0, "rep": 0, "dom": 0}
    names: dict[int, str] = {}
    for node in walk_expr(body):
        if node is body:
            continue
        if isinstance(node, Selection):
            counters["sel"] += 1
            names[id(node)] = f"sel{counters['sel']}"
        elif isinstance(node, ZeroOrMore):
            counters["rep"] += 1
            names[id(node)] = f"rep{counters['rep']}"
        elif isinstance(node, (PredicateDomain, QueryDomain, RegexTerm)):
            counters["dom"] += 1
            names[id(node)] = f"dom{counters['dom']}"
    return names


@dataclass
class _AnnotationAnchor:
    name: str
    site_id: int  # identity of the annotated Ref node
    anchor: QualifiedName  # full path of the annotation element


class _Extractor:
    def __init__(self, ast: GrammarAst, recursion: str, star_cap: int):
        self.ast = ast
        self.recursion = recursion
        self.star_cap = star_cap
        self.variables: list[ChoiceVariable] = []
        self.anchors: list[_AnnotationAnchor] = []

    def run(self) -> list[ChoiceVariable]:
        roots = self.ast.starting_rules
        include_root = len(roots) > 1
        for root in roots:
            prefix = (root,) if include_root else ()
            self.visit_rule(root, prefix, (root,))
        return self.variables

    def visit_rule(self, rule_name: str, path: tuple[str, ...], stack: tuple[str, ...]):
        rule = self.ast.rules.get(rule_name)
        if rule is None:
            raise UnknownRuleError(rule_name)
        body = rule.body
        ctx = _RuleCtx(rule_name, _ref_names(body), _inline_names(body))
        self.visit_expr(body, path, stack, ctx, at_root=True)

    def visit_expr(self, expr: Expr, path, stack, ctx: "_RuleCtx", at_root: bool):
        if isinstance(expr, Literal):
            return
        if isinstance(expr, Ref):
            elem = ctx.ref_names[id(expr)]
            new_path = path + (elem,)
            if expr.annotation is not None:
                self.anchors.append(
                    _AnnotationAnchor(expr.annotation, id(expr), QualifiedName(new_path))
                )
            if expr.rule in stack:
                if self.recursion == "error":
                    raise RecursionUnboundedError(expr.rule)
                return  # summary form: cut the cycle
            self.visit_rule(expr.rule, new_path, stack + (expr.rule,))
            return
        if isinstance(expr, Sequence):
            for item in expr.items:
                self.visit_expr(item, path, stack, ctx, at_root=False)
            return
        # remaining node kinds are variability sites
        site_path = path if at_root else path + (ctx.inline_names[id(expr)],)
        if not site_path:
            # single-start grammar whose root body is itself a site: the
            # starting rule's own name anchors the path
            site_path = (ctx.rule,)
        if isinstance(expr, Selection):
            self.emit(site_path, KIND_SELECTION,
                      EnumeratedInts(1, len(expr.alternatives)), ctx.rule, expr)
            for alt in expr.alternatives:
                self.visit_expr(alt, site_path, stack, ctx, at_root=False)
            return
        if isinstance(expr, ZeroOrMore):
            self.emit(site_path, KIND_STAR, Naturals(self.star_cap), ctx.rule, expr)
            self.visit_expr(expr.body, site_path, stack, ctx, at_root=False)
            return
        if isinstance(expr, PredicateDomain):
            self.emit(site_path, KIND_PREDICATE,
                      PredicateDom(expr.base_type, expr.predicate, expr.var), ctx.rule, expr)
            return
        if isinstance(expr, RegexTerm):
            self.emit(site_path, KIND_PREDICATE,
                      PredicateDom(ValueType("str"), None, "s", regex=expr.pattern),
                      ctx.rule, expr)
            return
        if isinstance(expr, QueryDomain):
            self.emit(site_path, KIND_QUERY, QueryDom(expr.query), ctx.rule, expr)
            return
        raise TypeError(f"unexpected node {expr!r}")

    def emit(self, path, kind, domain, rule, site):
        self.variables.append(
            ChoiceVariable(qname=QualifiedName(tuple(path)), kind=kind,
                           domain=domain, rule=rule, site=site)
        )


@dataclass
class _RuleCtx:
    rule: str
    ref_names: dict[int, str]
    inline_names: dict[int, str]


def extract_choice_variables(
    ast: GrammarAst, recursion: str = "error", star_cap: int = DEFAULT_STAR_CAP
) -> list[ChoiceVariable]:
    """One ChoiceVariable per (qualified path, variability site), AST order.

    recursion="error" raises RecursionUnboundedError on recursive grammars;
    recursion="summary" cuts cycles and returns the variables of a single
    unrolling level (what an instance-button interface shows).
    """
    extractor = _Extractor(ast, recursion, star_cap)
    extractor.run()
    return extractor.variables


# ---------------------------------------------------------------------------
# Constraint graph
# ---------------------------------------------------------------------------


@dataclass
class ResolvedConstraint:
    constraint: ConstraintExpr
    # per VarRef path in the expression: the variables it denotes (one
    # variable, or the members of one equality class)
    bindings: dict[tuple[str, ...], tuple[QualifiedName, ...]]

    def involved(self) -> list[QualifiedName]:
        out: list[QualifiedName] = []
        for names in self.bindings.values():
            for name in names:
                if name not in out:
                    out.append(name)
        return out


@dataclass
class ConstraintGraph:
    equality_classes: list[frozenset[QualifiedName]]
    general_constraints: list[ResolvedConstraint]

    def class_of(self, qname: QualifiedName) -> frozenset[QualifiedName]:
        for cls in self.equality_classes:
            if qname in cls:
                return cls
        return frozenset((qname,))


def _equality_classes(
    variables: list[ChoiceVariable], anchors: list[_AnnotationAnchor]
) -> list[frozenset[QualifiedName]]:
    by_name: dict[str, list[_AnnotationAnchor]] = {}
    for anchor in anchors:
        by_name.setdefault(anchor.name, []).append(anchor)

    parent: dict[QualifiedName, QualifiedName] = {}

    def find(x: QualifiedName) -> QualifiedName:
        root = x
        while parent.get(root, root) != root:
            root = parent[root]
        while parent.get(x, x) != x:
            parent[x], x = root, parent[x]
        return root

    def union(a: QualifiedName, b: QualifiedName):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    var_names = [v.qname for v in variables]
    for name, group in by_name.items():
        if len({a.site_id for a in group}) < 2:
            continue  # one site, possibly many paths: no equality implied
        first = group[0]
        for other in group[1:]:
            # align structurally corresponding descendants of the anchors
            for qname in var_names:
                if qname == first.anchor or first.anchor.is_prefix_of(qname):
                    rel = qname.path[len(first.anchor.path):]
                    mate = QualifiedName(other.anchor.path + rel)
                    if mate in var_names:
                        union(qname, mate)

    groups: dict[QualifiedName, set[QualifiedName]] = {}
    for v in var_names:
        groups.setdefault(find(v), set()).add(v)
    return [frozenset(members) for _, members in sorted(groups.items()) if len(members) > 1]


def resolve_constraint_path(
    path: tuple[str, ...],
    variables: list[ChoiceVariable],
    classes: list[frozenset[QualifiedName]],
) -> tuple[QualifiedName, ...]:
    """Resolve a constraint variable path to one variable or one class.

    Paths match by exact qualified name or by suffix; a suffix that touches
    several variables resolves only if they are all one equality class.
    """
    exact = [v.qname for v in variables if v.qname.path == tuple(path)]
    if len(exact) == 1:
        return (exact[0],)
    matches = [v.qname for v in variables if v.qname.has_suffix(tuple(path))]
    if len(matches) == 1:
        return (matches[0],)
    if matches:
        for cls in classes:
            if set(matches) <= cls:
                return tuple(sorted(matches))
    raise UnresolvedConstraintVariableError("/".join(path))


def build_constraint_graph(ast: GrammarAst, recursion: str = "error") -> ConstraintGraph:
    """Equality classes from shared annotation names plus resolved constraints."""
    extractor = _Extractor(ast, recursion, DEFAULT_STAR_CAP)
    extractor.run()
    variables = extractor.variables
    classes = _equality_classes(variables, extractor.anchors)
    resolved: list[ResolvedConstraint] = []
    for constraint in ast.constraints:
        bindings: dict[tuple[str, ...], tuple[QualifiedName, ...]] = {}
        for path in constraint.var_paths():
            if tuple(path) not in bindings:
                bindings[tuple(path)] = resolve_constraint_path(tuple(path), variables, classes)
        resolved.append(ResolvedConstraint(constraint=constraint, bindings=bindings))
    return ConstraintGraph(equality_classes=classes, general_constraints=resolved)


# ---------------------------------------------------------------------------
# Dependency order
# ---------------------------------------------------------------------------


@dataclass
class DependencyOrder:
    """Forest over choice variables: ancestors gate their descendants."""

    parents: dict[QualifiedName, QualifiedName]

    def parent(self, qname: QualifiedName) -> Optional[QualifiedName]:
        return self.parents.get(qname)

    def ancestors(self, qname: QualifiedName) -> Iterator[QualifiedName]:
        cur = self.parents.get(qname)
        while cur is not None:
            yield cur
            cur = self.parents.get(cur)

    def precedes(self, a: QualifiedName, b: QualifiedName) -> bool:
        return a in set(self.ancestors(b))

    def pairs(self) -> list[tuple[QualifiedName, QualifiedName]]:
        return sorted(self.parents.items())


def dependency_order(ast: GrammarAst, recursion: str = "error") -> DependencyOrder:
    """Ancestor relation: selections/repetitions gate the variables inside
    their alternatives/bodies.  Consistent with qualified-name prefixes."""
    variables = extract_choice_variables(ast, recursion=recursion)
    gates = {
        v.qname: v for v in variables if v.kind in (KIND_SELECTION, KIND_STAR)
    }
    parents: dict[QualifiedName, QualifiedName] = {}
    for v in variables:
        best: Optional[QualifiedName] = None
        for gate in gates.values():
            if gate.qname.is_prefix_of(v.qname):
                if best is None or len(gate.qname.path) > len(best.path):
                    best = gate.qname
        if best is not None:
            parents[v.qname] = best
    return DependencyOrder(parents=parents)


# ---------------------------------------------------------------------------
# Structural path resolution
#
# Maps runtime paths (which may contain repetition instance indexes and
# recursion levels never listed statically) to the variability site they
# denote.  The walk is driven by the path, so it terminates even on
# recursive grammars.
# ---------------------------------------------------------------------------


def variable_for_site(site: Expr, qname: QualifiedName, rule: str,
                      star_cap: int = DEFAULT_STAR_CAP) -> ChoiceVariable:
    if isinstance(site, Selection):
        return ChoiceVariable(qname, KIND_SELECTION,
                              EnumeratedInts(1, len(site.alternatives)), rule, site)
    if isinstance(site, ZeroOrMore):
        return ChoiceVariable(qname, KIND_STAR, Naturals(star_cap), rule, site)
    if isinstance(site, PredicateDomain):
        return ChoiceVariable(qname, KIND_PREDICATE,
                              PredicateDom(site.base_type, site.predicate, site.var),
                              rule, site)
    if isinstance(site, RegexTerm):
        return ChoiceVariable(qname, KIND_PREDICATE,
                              PredicateDom(ValueType("str"), None, "s", regex=site.pattern),
                              rule, site)
    if isinstance(site, QueryDomain):
        return ChoiceVariable(qname, KIND_QUERY, QueryDom(site.query), rule, site)
    raise TypeError(f"not a variability site: {site!r}")


_SITE_TYPES = (Selection, ZeroOrMore, PredicateDomain, QueryDomain, RegexTerm)


def resolve_path(ast: GrammarAst, qname: QualifiedName,
                 star_cap: int = DEFAULT_STAR_CAP) -> ChoiceVariable:
    """Resolve any runtime path to its variability site, or raise."""

    def in_rule(rule_name: str, elems: tuple[str, ...]) -> Optional[ChoiceVariable]:
        rule = ast.rules.get(rule_name)
        if rule is None:
            return None
        body = rule.body
        ctx = _RuleCtx(rule_name, _ref_names(body), _inline_names(body))
        return walk(body, elems, ctx, at_root=True)

    def walk(expr: Expr, elems, ctx: _RuleCtx, at_root: bool) -> Optional[ChoiceVariable]:
        if isinstance(expr, Literal):
            return None
        if isinstance(expr, Ref):
            elem = ctx.ref_names[id(expr)]
            if elems and elems[0] == elem:
                return in_rule(expr.rule, elems[1:])
            return None
        if isinstance(expr, Sequence):
            for item in expr.items:
                found = walk(item, elems, ctx, at_root=False)
                if found is not None:
                    return found
            return None
        # variability sites
        if at_root:
            rest = elems
        else:
            name = ctx.inline_names[id(expr)]
            if not elems or elems[0] != name:
                return None
            rest = elems[1:]
        if not rest:
            return variable_for_site(expr, qname, ctx.rule, star_cap)
        if isinstance(expr, Selection):
            for alt in expr.alternatives:
                found = walk(alt, rest, ctx, at_root=False)
                if found is not None:
                    return found
            return None
        if isinstance(expr, ZeroOrMore):
            inner = rest[1:] if rest[0].isdigit() else rest
            return walk(expr.body, inner, ctx, at_root=False)
        return None

    roots = ast.starting_rules
    path = qname.path
    if len(roots) > 1:
        if path and path[0] in roots:
            found = in_rule(path[0], path[1:])
            if found is not None:
                return found
    else:
        for root in roots:
            found = in_rule(root, path)
            if found is not None:
                return found
            # single-start grammar whose root body is itself a site
            if path == (root,) and isinstance(ast.rules[root].body, _SITE_TYPES):
                return variable_for_site(ast.rules[root].body, qname, root, star_cap)
    raise UnknownVariableError(str(qname))


# ---------------------------------------------------------------------------
# Bundle used by the runtime modules
# ---------------------------------------------------------------------------


class ChoiceModel:
    """Grammar + extracted variables + constraint graph, resolved once."""

    def __init__(self, ast: GrammarAst, recursion: str = "error",
                 star_cap: int = DEFAULT_STAR_CAP):
        self.ast = ast
        self.star_cap = star_cap
        extractor = _Extractor(ast, recursion, star_cap)
        extractor.run()
        self.variables = extractor.variables
        self.by_qname = {v.qname: v for v in self.variables}
        self.classes = _equality_classes(self.variables, extractor.anchors)
        self._class_index = {q: cls for cls in self.classes for q in cls}
        self.constraints: list[ResolvedConstraint] = []
        for constraint in ast.constraints:
            bindings = {}
            for path in constraint.var_paths():
                if tuple(path) not in bindings:
                    bindings[tuple(path)] = resolve_constraint_path(
                        tuple(path), self.variables, self.classes
                    )
            self.constraints.append(ResolvedConstraint(constraint, bindings))
        self.order = dependency_order(ast, recursion=recursion)

    def graph(self) -> ConstraintGraph:
        return ConstraintGraph(self.classes, self.constraints)

    def class_of(self, qname: QualifiedName) -> frozenset[QualifiedName]:
        return self._class_index.get(qname, frozenset((qname,)))

    def lookup(self, name: str) -> ChoiceVariable:
        """Find a variable by full qualified name or unambiguous suffix."""
        qname = QualifiedName.parse(name)
        if qname in self.by_qname:
            return self.by_qname[qname]
        matches = [v for v in self.variables if v.qname.has_suffix(qname.path)]
        if len(matches) == 1:
            return matches[0]
        raise UnknownVariableError(name)
