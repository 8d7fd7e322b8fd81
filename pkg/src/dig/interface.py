"""Interface specs: views, interactions, mappings - plus validity checking
and automatic synthesis.

An interaction is modeled by the state it can express: a widget type and a
domain with named attributes.  A mapping sends interaction attributes to the
attributes of one choice variable; an interaction covers a variable when
every variable attribute is mapped and the projected interaction domain is a
superset of the variable's domain.  An interface is valid when every choice
variable is covered and every starting rule is rendered by a view.

The serialized form (see to_json/from_json) is versioned and is the contract
consumed by the web client: top-level fields views[], interactions[],
mappings[] with the widget_type strings used below.
"""

from __future__ import annotations

import datetime
import re
from dataclasses import dataclass, field
from typing import Any, Optional

from .ast import Compare, GrammarAst, Literal, Selection, walk_expr
from .choices import (
    KIND_PREDICATE,
    KIND_QUERY,
    KIND_SELECTION,
    KIND_STAR,
    ChoiceModel,
    ChoiceVariable,
    EnumeratedInts,
    Naturals,
    PredicateDom,
    QualifiedName,
    QueryDom,
)
from .enumeration import _domain_values
from .errors import BackendUnavailableError, InfiniteDomainError
from .formatter import format_expr
from .rewrite import factor_rewrite, recursive_rule_sets, unroll_recursion
from .values import render_value

__all__ = [
    "InteractionDecl", "MappingDecl", "ViewDecl", "InterfaceSpec",
    "covers", "check_valid", "synthesize", "synthesize_default",
    "factor_rewrite", "ValidityReport",
]

SPEC_VERSION = 1

WIDGET_TYPES = (
    "dropdown", "radio", "slider", "range-slider", "text-input",
    "checkbox", "button-add-instance", "date-picker",
)
VIEW_TYPES = ("table", "bar-chart", "line-chart", "text")


# -- attribute domains -------------------------------------------------------


@dataclass(frozen=True)
class IntRange:
    lo: int
    hi: int

    def to_json(self):
        return {"kind": "int-range", "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class NumRange:
    lo: float
    hi: float

    def to_json(self):
        return {"kind": "num-range", "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class Enumerated:
    values: tuple[str, ...]  # canonical text forms

    def to_json(self):
        return {"kind": "enum", "values": list(self.values)}


@dataclass(frozen=True)
class AnyText:
    def to_json(self):
        return {"kind": "text"}


@dataclass(frozen=True)
class AnyDate:
    def to_json(self):
        return {"kind": "date"}


@dataclass(frozen=True)
class CountRange:
    cap: int

    def to_json(self):
        return {"kind": "count", "cap": self.cap}


def _attr_domain_from_json(data: dict) -> Any:
    kind = data["kind"]
    if kind == "int-range":
        return IntRange(data["lo"], data["hi"])
    if kind == "num-range":
        return NumRange(data["lo"], data["hi"])
    if kind == "enum":
        return Enumerated(tuple(data["values"]))
    if kind == "text":
        return AnyText()
    if kind == "date":
        return AnyDate()
    if kind == "count":
        return CountRange(data["cap"])
    raise ValueError(f"unknown attribute domain {kind!r}")


# -- declarations -------------------------------------------------------------


@dataclass
class InteractionDecl:
    id: str
    widget_type: str
    domain: dict[str, Any]  # attribute name -> attribute domain
    label: str = ""
    options: list[str] = field(default_factory=list)  # display strings
    target_rule: Optional[str] = None  # text inputs parse against this rule
    spawn_rule: Optional[str] = None  # add-instance buttons instantiate this
    debounce_ms: int = 0

    def __post_init__(self):
        if self.widget_type not in WIDGET_TYPES:
            raise ValueError(f"unknown widget type {self.widget_type!r}")
        if not self.domain:
            raise ValueError("interaction domain schema cannot be empty")
        if self.widget_type == "range-slider":
            if set(self.domain) != {"lo", "hi"} or self.domain["lo"] != self.domain["hi"]:
                raise ValueError("a range slider needs lo/hi over one numeric domain")

    def to_json(self):
        out = {
            "id": self.id,
            "widget_type": self.widget_type,
            "label": self.label,
            "domain": {name: dom.to_json() for name, dom in self.domain.items()},
        }
        if self.options:
            out["options"] = list(self.options)
        if self.target_rule:
            out["target_rule"] = self.target_rule
        if self.spawn_rule:
            out["spawn_rule"] = self.spawn_rule
        if self.debounce_ms:
            out["debounce_ms"] = self.debounce_ms
        return out

    @classmethod
    def from_json(cls, data: dict) -> "InteractionDecl":
        return cls(
            id=data["id"],
            widget_type=data["widget_type"],
            domain={n: _attr_domain_from_json(d) for n, d in data["domain"].items()},
            label=data.get("label", ""),
            options=list(data.get("options", [])),
            target_rule=data.get("target_rule"),
            spawn_rule=data.get("spawn_rule"),
            debounce_ms=data.get("debounce_ms", 0),
        )


@dataclass
class MappingDecl:
    interaction_id: str
    variable: str  # qualified name
    attrs: dict[str, str]  # interaction attribute -> variable attribute

    def __post_init__(self):
        targets = list(self.attrs.values())
        if len(set(targets)) != len(targets):
            raise ValueError("attribute map must be injective per target variable")

    def to_json(self):
        return {
            "interaction": self.interaction_id,
            "variable": self.variable,
            "attrs": dict(self.attrs),
        }

    @classmethod
    def from_json(cls, data: dict) -> "MappingDecl":
        return cls(data["interaction"], data["variable"], dict(data["attrs"]))


@dataclass
class ViewDecl:
    id: str
    starting_rule: str
    view_type: str = "table"

    def __post_init__(self):
        if self.view_type not in VIEW_TYPES:
            raise ValueError(f"unknown view type {self.view_type!r}")

    def to_json(self):
        return {"id": self.id, "starting_rule": self.starting_rule,
                "view_type": self.view_type}

    @classmethod
    def from_json(cls, data: dict) -> "ViewDecl":
        return cls(data["id"], data["starting_rule"], data.get("view_type", "table"))


@dataclass
class InterfaceSpec:
    views: list[ViewDecl]
    interactions: list[InteractionDecl]
    mappings: list[MappingDecl]
    layout: dict[str, Any] = field(default_factory=dict)

    def to_json(self):
        out = {
            "version": SPEC_VERSION,
            "views": [v.to_json() for v in self.views],
            "interactions": [i.to_json() for i in self.interactions],
            "mappings": [m.to_json() for m in self.mappings],
        }
        if self.layout:
            out["layout"] = self.layout
        return out

    @classmethod
    def from_json(cls, data: dict) -> "InterfaceSpec":
        version = data.get("version", SPEC_VERSION)
        if version != SPEC_VERSION:
            raise ValueError(f"unsupported interface spec version {version}")
        return cls(
            views=[ViewDecl.from_json(v) for v in data.get("views", [])],
            interactions=[InteractionDecl.from_json(i) for i in data.get("interactions", [])],
            mappings=[MappingDecl.from_json(m) for m in data.get("mappings", [])],
            layout=dict(data.get("layout", {})),
        )

    def interaction(self, interaction_id: str) -> InteractionDecl:
        for it in self.interactions:
            if it.id == interaction_id:
                return it
        raise KeyError(interaction_id)

    def mappings_for(self, interaction_id: str) -> list[MappingDecl]:
        return [m for m in self.mappings if m.interaction_id == interaction_id]


# -- choice-variable attribute schemas ----------------------------------------

_SELECT_LIST = re.compile(r"(?is)^\s*select\s+(.*?)\s+from\s")


def query_domain_columns(query: str) -> list[str]:
    """Column names of a domain query, read off the SELECT list."""
    m = _SELECT_LIST.match(query)
    if not m:
        return ["value"]
    cols = []
    for item in m.group(1).split(","):
        token = item.strip().split()[-1]
        token = token.split(".")[-1]
        cols.append(token if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", token) else "value")
    return cols or ["value"]


def variable_attrs(cv: ChoiceVariable) -> list[str]:
    if cv.kind == KIND_SELECTION:
        return ["index"]
    if cv.kind == KIND_STAR:
        return ["count"]
    if cv.kind == KIND_QUERY:
        cols = query_domain_columns(cv.domain.query)
        return cols if len(cols) > 1 else ["value"]
    return ["value"]


def _variable_value_set(cv: ChoiceVariable, backend) -> Optional[list]:
    """Enumerable values of the variable's domain, or None if open."""
    try:
        return _domain_values(cv.site, cv.qname, backend)
    except (InfiniteDomainError, BackendUnavailableError):
        return None
    except TypeError:
        return None


def _int_bounds(values: list) -> Optional[tuple[int, int]]:
    if values and all(isinstance(v, int) and not isinstance(v, bool) for v in values):
        return min(values), max(values)
    return None


# -- coverage ------------------------------------------------------------------


def _attr_superset(attr_dom: Any, cv: ChoiceVariable, cv_attr: str, backend) -> bool:
    if isinstance(attr_dom, AnyText):
        # text inputs can express any term (parsed and validated downstream)
        return True
    domain = cv.domain
    if isinstance(domain, EnumeratedInts):
        if isinstance(attr_dom, IntRange):
            return attr_dom.lo <= domain.lo and domain.hi <= attr_dom.hi
        if isinstance(attr_dom, NumRange):
            return attr_dom.lo <= domain.lo and domain.hi <= attr_dom.hi
        if isinstance(attr_dom, Enumerated):
            return {str(i) for i in range(domain.lo, domain.hi + 1)} <= set(attr_dom.values)
        return False
    if isinstance(domain, Naturals):
        if isinstance(attr_dom, CountRange):
            return True  # covers up to the synthesis cap by design decision
        if isinstance(attr_dom, IntRange):
            return domain.cap is not None and attr_dom.lo <= 0 and domain.cap <= attr_dom.hi
        return False
    if isinstance(domain, QueryDom):
        values = _variable_value_set(cv, backend)
        if values is None:
            return False  # open without a backend: only text covers
        columns = query_domain_columns(domain.query)
        if len(columns) > 1:
            try:
                idx = columns.index(cv_attr)
            except ValueError:
                return False
            member = {render_value(v[idx]) for v in values}
        else:
            member = {render_value(v) for v in values}
        if isinstance(attr_dom, Enumerated):
            return member <= set(attr_dom.values)
        if isinstance(attr_dom, AnyDate):
            return all(_is_dateish(v) for v in member)
        bounds = _int_bounds([v for v in values if isinstance(v, int)])
        if bounds and isinstance(attr_dom, (IntRange, NumRange)):
            return attr_dom.lo <= bounds[0] and bounds[1] <= attr_dom.hi
        return False
    if isinstance(domain, PredicateDom):
        base = domain.base_type.name
        if isinstance(attr_dom, AnyDate):
            return base == "date"
        values = _variable_value_set(cv, backend)
        if values is None:
            return False
        if isinstance(attr_dom, Enumerated):
            return {render_value(v) for v in values} <= set(attr_dom.values)
        if isinstance(attr_dom, (IntRange, NumRange)):
            bounds = _int_bounds(values)
            if bounds is None:
                return all(
                    isinstance(v, (int, float)) and attr_dom.lo <= v <= attr_dom.hi
                    for v in values
                )
            return attr_dom.lo <= bounds[0] and bounds[1] <= attr_dom.hi
        return False
    return False


def _is_dateish(text: str) -> bool:
    try:
        datetime.date.fromisoformat(text)
        return True
    except ValueError:
        return False


def covers(interaction: InteractionDecl, mapping: MappingDecl, cv: ChoiceVariable,
           backend=None) -> bool:
    """True iff the interaction can express every value of cv's domain."""
    if mapping.interaction_id != interaction.id or mapping.variable != str(cv.qname):
        return False
    needed = set(variable_attrs(cv))
    mapped = set(mapping.attrs.values())
    if not needed <= mapped:
        return False
    for i_attr, c_attr in mapping.attrs.items():
        if c_attr not in needed:
            continue
        attr_dom = interaction.domain.get(i_attr)
        if attr_dom is None:
            return False
        if not _attr_superset(attr_dom, cv, c_attr, backend):
            return False
    return True


@dataclass
class ValidityReport:
    uncovered: list[str] = field(default_factory=list)
    unrendered: list[str] = field(default_factory=list)
    problems: list[str] = field(default_factory=list)

    def ok(self) -> bool:
        return not (self.uncovered or self.unrendered or self.problems)

    def to_json(self):
        return {
            "ok": self.ok(),
            "uncovered": list(self.uncovered),
            "unrendered": list(self.unrendered),
            "problems": list(self.problems),
        }


def check_valid(spec: InterfaceSpec, model_or_ast, backend=None) -> ValidityReport:
    """Report uncovered choice variables and unrendered starting rules."""
    model = _as_model(model_or_ast)
    report = ValidityReport()
    interactions = {i.id: i for i in spec.interactions}
    for m in spec.mappings:
        if m.interaction_id not in interactions:
            report.problems.append(f"mapping references unknown interaction '{m.interaction_id}'")
    for view in spec.views:
        if view.starting_rule not in model.ast.rules:
            report.problems.append(f"view '{view.id}' renders unknown rule '{view.starting_rule}'")
    rendered = {v.starting_rule for v in spec.views}
    for rule in model.ast.starting_rules:
        if rule not in rendered:
            report.unrendered.append(rule)
    for cv in model.variables:
        hit = False
        for m in spec.mappings:
            if m.variable != str(cv.qname):
                continue
            interaction = interactions.get(m.interaction_id)
            if interaction and covers(interaction, m, cv, backend):
                hit = True
                break
        if not hit:
            report.uncovered.append(str(cv.qname))
    return report


def _as_model(model_or_ast) -> ChoiceModel:
    if isinstance(model_or_ast, ChoiceModel):
        return model_or_ast
    return ChoiceModel(model_or_ast, recursion="summary")


# -- synthesis -----------------------------------------------------------------


def _ident(qname: QualifiedName) -> str:
    return str(qname).replace("/", "_")


def _vars_under_rule(model: ChoiceModel, rule: str) -> list[ChoiceVariable]:
    if len(model.ast.starting_rules) > 1:
        return [v for v in model.variables if v.qname.path[0] == rule]
    return list(model.variables)


def synthesize_default(ast: GrammarAst) -> InterfaceSpec:
    """The guaranteed-valid interface: a text input parsing each starting
    rule that has any variability, one table view per starting rule."""
    model = _as_model(ast)
    views = [
        ViewDecl(id=f"v_{rule}", starting_rule=rule, view_type="table")
        for rule in ast.starting_rules
    ]
    interactions: list[InteractionDecl] = []
    mappings: list[MappingDecl] = []
    for rule in ast.starting_rules:
        reach = _vars_under_rule(model, rule)
        if not reach:
            continue
        interaction = InteractionDecl(
            id=f"i_{rule}_input",
            widget_type="text-input",
            domain={"text": AnyText()},
            label=f"{rule} query",
            target_rule=rule,
        )
        interactions.append(interaction)
        for cv in reach:
            mappings.append(MappingDecl(interaction.id, str(cv.qname),
                                        {"text": variable_attrs(cv)[0]}))
    return InterfaceSpec(views=views, interactions=interactions, mappings=mappings)


def _selection_labels(cv: ChoiceVariable) -> list[str]:
    site = cv.site
    assert isinstance(site, Selection)
    labels = []
    for alt in site.alternatives:
        labels.append(alt.text if isinstance(alt, Literal) else format_expr(alt))
    return labels


def _range_slider_pairs(model: ChoiceModel, backend) -> dict[QualifiedName, tuple]:
    """Variable pairs (a <= b) with identical bounded numeric domains."""
    pairs: dict[QualifiedName, tuple] = {}
    for rc in model.constraints:
        expr = rc.constraint.expr
        if not isinstance(expr, Compare) or expr.op not in ("<=", "<"):
            continue
        paths = rc.constraint.var_paths()
        if len(paths) != 2:
            continue
        sides = list(rc.bindings.values())
        if len(sides) != 2 or any(len(s) != 1 for s in sides):
            continue
        a, b = sides[0][0], sides[1][0]
        cva, cvb = model.by_qname.get(a), model.by_qname.get(b)
        if cva is None or cvb is None or cva.kind != KIND_PREDICATE:
            continue
        if cva.domain != cvb.domain:
            continue
        va = _variable_value_set(cva, backend)
        if va is None or _int_bounds(va) is None:
            continue
        if a in pairs or b in pairs:
            continue
        pairs[a] = (a, b, _int_bounds(va))
        pairs[b] = (a, b, _int_bounds(va))
    return pairs


def _rule_is_typed(model: ChoiceModel, cv: ChoiceVariable) -> bool:
    rule = model.ast.rules.get(cv.rule)
    return rule is not None and rule.type_tag is not None and rule.type_tag.name in (
        "rel", "attr",
    )


def synthesize(ast_or_model, backend=None, *, recursion_strategy: str = "instance-button",
               unroll_depth: int = 2) -> InterfaceSpec:
    """Build a valid interface for the grammar, deterministically.

    Widget policy: relation/attribute-typed selections become dropdowns
    (a table picker), other selections radios up to 4 alternatives and
    dropdowns up to 100; bounded numeric domains become sliders, with two
    identically-bounded variables joined by an order constraint merged into
    one range slider; enumerable query domains and membership predicates up
    to 100 values become dropdowns populated from the backend; date domains
    get date pickers; repetitions and recursive branches get add-instance
    buttons; everything else falls back to a validated text input.
    """
    if isinstance(ast_or_model, ChoiceModel):
        model = ast_or_model
        ast = model.ast
    else:
        ast = ast_or_model
        if recursion_strategy == "unroll" and recursive_rule_sets(ast):
            ast = unroll_recursion(ast, unroll_depth)
        model = ChoiceModel(ast, recursion="summary")

    recursive_rules = set().union(*recursive_rule_sets(ast)) if recursive_rule_sets(ast) else set()

    views = [
        ViewDecl(id=f"v_{rule}", starting_rule=rule, view_type=_view_type_for(ast, rule))
        for rule in ast.starting_rules
    ]
    interactions: list[InteractionDecl] = []
    mappings: list[MappingDecl] = []
    covered: set[QualifiedName] = set()
    slider_pairs = _range_slider_pairs(model, backend)

    def add(interaction: InteractionDecl, members: list[ChoiceVariable], attrs_for):
        interactions.append(interaction)
        for member in members:
            mappings.append(MappingDecl(interaction.id, str(member.qname),
                                        dict(attrs_for(member))))
            covered.add(member.qname)

    for cv in model.variables:
        if cv.qname in covered:
            continue
        members = sorted(self_class(model, cv), key=lambda v: v.qname)
        rep = members[0]
        name = _ident(rep.qname)
        label = rep.qname.path[-1]

        if cv.qname in slider_pairs:
            a, b, (lo, hi) = slider_pairs[cv.qname]
            lo_members = sorted(self_class(model, model.by_qname[a]), key=lambda v: v.qname)
            hi_members = sorted(self_class(model, model.by_qname[b]), key=lambda v: v.qname)
            interaction = InteractionDecl(
                id=f"i_{_ident(a)}_{_ident(b)}",
                widget_type="range-slider",
                domain={"lo": IntRange(lo, hi), "hi": IntRange(lo, hi)},
                label=f"{a.path[-1]}..{b.path[-1]}",
                debounce_ms=150,
            )
            interactions.append(interaction)
            for member in lo_members:
                mappings.append(MappingDecl(interaction.id, str(member.qname), {"lo": "value"}))
                covered.add(member.qname)
            for member in hi_members:
                mappings.append(MappingDecl(interaction.id, str(member.qname), {"hi": "value"}))
                covered.add(member.qname)
            continue

        if cv.kind == KIND_SELECTION:
            n = cv.domain.hi
            labels = _selection_labels(rep)
            if _rule_is_typed(model, rep):
                widget = "dropdown"
            elif n <= 4:
                widget = "radio"
            elif n <= 100:
                widget = "dropdown"
            else:
                widget = None
            if widget is not None:
                interaction = InteractionDecl(
                    id=f"i_{name}", widget_type=widget,
                    domain={"index": IntRange(1, n)},
                    label=label, options=labels,
                )
                add(interaction, members, lambda m: {"index": "index"})
                site = rep.site
                if isinstance(site, Selection) and any(
                    _alt_recursive(alt, recursive_rules) for alt in site.alternatives
                ):
                    button = InteractionDecl(
                        id=f"i_{name}_nest",
                        widget_type="button-add-instance",
                        domain={"index": IntRange(1, n)},
                        label=f"add {label}",
                        spawn_rule=rep.rule,
                    )
                    interactions.append(button)
                    for member in members:
                        mappings.append(
                            MappingDecl(button.id, str(member.qname), {"index": "index"})
                        )
                continue

        if cv.kind == KIND_STAR:
            cap = cv.domain.cap or 8
            interaction = InteractionDecl(
                id=f"i_{name}", widget_type="button-add-instance",
                domain={"count": CountRange(cap)},
                label=f"add {label}",
            )
            add(interaction, members, lambda m: {"count": "count"})
            continue

        values = _variable_value_set(cv, backend)
        if cv.kind == KIND_QUERY and backend is None:
            raise BackendUnavailableError(
                f"synthesize a widget for query domain '{cv.qname}'"
            )
        base = cv.domain.base_type.name if isinstance(cv.domain, PredicateDom) else None
        if base == "date" or (
            cv.kind == KIND_QUERY and values is not None
            and values and all(_is_dateish(render_value(v)) for v in values)
        ):
            domain = Enumerated(tuple(render_value(v) for v in values)) if values else AnyDate()
            interaction = InteractionDecl(
                id=f"i_{name}", widget_type="date-picker",
                domain={"value": domain}, label=label,
            )
            add(interaction, members, lambda m: {"value": "value"})
            continue
        if values is not None and base in ("int", "float") and _int_bounds(values) and \
                len(values) == (_int_bounds(values)[1] - _int_bounds(values)[0] + 1):
            lo, hi = _int_bounds(values)
            interaction = InteractionDecl(
                id=f"i_{name}", widget_type="slider",
                domain={"value": IntRange(lo, hi)}, label=label, debounce_ms=150,
            )
            add(interaction, members, lambda m: {"value": "value"})
            continue
        if values is not None and len(values) <= 100:
            cols = variable_attrs(cv)
            if len(cols) > 1:
                domain = {
                    col: Enumerated(tuple(sorted({render_value(v[i]) for v in values})))
                    for i, col in enumerate(cols)
                }
                interaction = InteractionDecl(
                    id=f"i_{name}", widget_type="dropdown", domain=domain,
                    label=label, options=[render_value(tuple(v)) for v in values],
                )
                add(interaction, members, lambda m: {c: c for c in cols})
            else:
                rendered = [render_value(v) for v in values]
                interaction = InteractionDecl(
                    id=f"i_{name}", widget_type="dropdown",
                    domain={"value": Enumerated(tuple(rendered))},
                    label=label, options=rendered,
                )
                add(interaction, members, lambda m: {"value": "value"})
            continue

        target = rep.rule if _site_is_rule_body(ast, rep) else None
        interaction = InteractionDecl(
            id=f"i_{name}", widget_type="text-input",
            domain={"text": AnyText()}, label=label, target_rule=target,
        )
        add(interaction, members, lambda m: {"text": variable_attrs(m)[0]})

    return InterfaceSpec(views=views, interactions=interactions, mappings=mappings)


def self_class(model: ChoiceModel, cv: ChoiceVariable) -> list[ChoiceVariable]:
    return [model.by_qname[q] for q in model.class_of(cv.qname) if q in model.by_qname]


def _alt_recursive(alt, recursive_rules: set[str]) -> bool:
    from .ast import Ref

    return any(
        isinstance(node, Ref) and node.rule in recursive_rules for node in walk_expr(alt)
    )


def _site_is_rule_body(ast: GrammarAst, cv: ChoiceVariable) -> bool:
    rule = ast.rules.get(cv.rule)
    return rule is not None and rule.body is cv.site


_AGG_SHAPE = re.compile(r"(?is)^\s*select\s+[A-Za-z_][\w]*\s*,\s*[A-Za-z_][\w]*\s*\(")


def _view_type_for(ast: GrammarAst, rule: str) -> str:
    """Bar chart for aggregation-shaped queries, table otherwise."""
    texts = [n.text for n in walk_expr(ast.rules[rule].body) if isinstance(n, Literal)]
    joined = " ".join(texts)
    if re.search(r"(?i)\bgroup\s+by\b", joined):
        return "bar-chart"
    if texts and _AGG_SHAPE.match(texts[0]):
        return "bar-chart"
    return "table"
