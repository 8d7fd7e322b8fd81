"""Grammar rewrites: recursion unrolling and literal factoring.

unroll_recursion replaces every recursive cycle with depth-limited copies so
the result is a plain hierarchical grammar accepting exactly the original
strings of nesting <= depth.  factor_rewrite splits selections over literal
strings into sequence-of-selections form (common prefix, suffix, or a
cross-product infix) whenever doing so preserves the reduced language
exactly; it creates fresh rules for the factored sides so each side becomes
its own choice variable.
"""

from __future__ import annotations

from dataclasses import replace

from .ast import (
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
    ZeroOrMore,
    selection_of,
    sequence_of,
    walk_expr,
)
from .errors import NoBaseCaseError

# ---------------------------------------------------------------------------
# Recursion unrolling
# ---------------------------------------------------------------------------


def _ref_graph(ast: GrammarAst) -> dict[str, set[str]]:
    return {
        name: {r for r in (n.rule for n in walk_expr(rule.body) if isinstance(n, Ref))
               if r in ast.rules}
        for name, rule in ast.rules.items()
    }


def _sccs(graph: dict[str, set[str]]) -> list[set[str]]:
    """Tarjan's strongly connected components, iterative."""
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    counter = [0]
    out: list[set[str]] = []

    def strongconnect(root: str):
        work = [(root, iter(sorted(graph[root])))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for succ in it:
                if succ not in index:
                    index[succ] = low[succ] = counter[0]
                    counter[0] += 1
                    stack.append(succ)
                    on_stack.add(succ)
                    work.append((succ, iter(sorted(graph[succ]))))
                    advanced = True
                    break
                if succ in on_stack:
                    low[node] = min(low[node], index[succ])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                component = set()
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    component.add(member)
                    if member == node:
                        break
                out.append(component)

    for name in graph:
        if name not in index:
            strongconnect(name)
    return out


def recursive_rule_sets(ast: GrammarAst) -> list[set[str]]:
    """SCCs that actually recurse (size > 1, or a self-loop)."""
    graph = _ref_graph(ast)
    cycles = []
    for scc in _sccs(graph):
        if len(scc) > 1:
            cycles.append(scc)
        else:
            only = next(iter(scc))
            if only in graph[only]:
                cycles.append(scc)
    return cycles


def is_recursive(ast: GrammarAst) -> bool:
    return bool(recursive_rule_sets(ast))


def _reaches(expr: Expr, targets: set[str]) -> bool:
    return any(isinstance(n, Ref) and n.rule in targets for n in walk_expr(expr))


def referenced_rules_of(expr: Expr) -> list[str]:
    return [n.rule for n in walk_expr(expr) if isinstance(n, Ref)]


def _retarget(expr: Expr, mapping: dict[str, str]) -> Expr:
    """Rename references per `mapping`, leaving everything else alone."""
    if isinstance(expr, Ref):
        if expr.rule in mapping:
            return Ref(mapping[expr.rule], expr.annotation, loc=expr.loc)
        return expr
    if isinstance(expr, Sequence):
        return Sequence(tuple(_retarget(i, mapping) for i in expr.items))
    if isinstance(expr, Selection):
        return Selection(tuple(_retarget(a, mapping) for a in expr.alternatives))
    if isinstance(expr, ZeroOrMore):
        return ZeroOrMore(_retarget(expr.body, mapping))
    return expr


def _drop_recursive(expr: Expr, scc: set[str]) -> Expr | None:
    """Base-level body: remove selection alternatives that re-enter the SCC;
    a repetition whose body re-enters can only repeat zero times.  None
    means the expression cannot exist without re-entering the cycle."""
    if isinstance(expr, Selection):
        kept = [
            _drop_recursive(alt, scc)
            for alt in expr.alternatives
            if not _reaches(alt, scc)
        ]
        kept = [k for k in kept if k is not None]
        if not kept:
            return None
        return selection_of(kept)
    if isinstance(expr, Sequence):
        items = [_drop_recursive(i, scc) for i in expr.items]
        if any(i is None for i in items):
            return None
        return sequence_of(items)  # type: ignore[arg-type]
    if isinstance(expr, ZeroOrMore):
        if _reaches(expr.body, scc):
            return Literal("")
        return expr
    if isinstance(expr, Ref) and expr.rule in scc:
        return None
    return expr


def unroll_recursion(ast: GrammarAst, depth: int) -> GrammarAst:
    """Rewrite recursive cycles into `depth` nested copies.

    The original rule names stay as the entry points (carrying the full
    budget); fresh rules <name>_<k> carry the remaining budget k.  At budget
    zero the recursive alternatives are removed; a recursive rule with no
    non-recursive alternative raises NoBaseCase.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    cycles = recursive_rule_sets(ast)
    if not cycles:
        return GrammarAst(rules=dict(ast.rules), starting_rules=ast.starting_rules,
                          constraints=ast.constraints)

    taken = set(ast.rules)
    copy_name: dict[tuple[str, int], str] = {}

    def name_for(rule: str, budget: int) -> str:
        if budget == depth:
            return rule
        key = (rule, budget)
        if key not in copy_name:
            candidate = f"{rule}_{budget}"
            while candidate in taken:
                candidate += "_"
            taken.add(candidate)
            copy_name[key] = candidate
        return copy_name[key]

    new_rules: dict[str, RuleDef] = {}
    dead: dict[str, str] = {}  # dropped copy -> original rule name
    for name, rule in ast.rules.items():
        scc = next((s for s in cycles if name in s), None)
        if scc is None:
            new_rules[name] = rule
            continue
        for budget in range(depth, -1, -1):
            copy = name_for(name, budget)
            if budget == 0:
                body = _drop_recursive(rule.body, scc)
                if body is None:
                    dead[copy] = name  # fine unless something reachable needs it
                    continue
            else:
                mapping = {r: name_for(r, budget - 1) for r in scc}
                body = _retarget(rule.body, mapping)
            new_rules[copy] = RuleDef(name=copy, body=body, type_tag=rule.type_tag,
                                      loc=rule.loc)

    # dead-rule elimination to a fixpoint: a selection alternative needing a
    # dead rule disappears, a repetition over one collapses to zero copies,
    # and a rule left with nothing becomes dead itself
    changed = True
    while changed:
        changed = False
        for name, rule in list(new_rules.items()):
            body = _drop_recursive(rule.body, set(dead))
            if body is None:
                origin = next(
                    (dead[t] for t in referenced_rules_of(rule.body) if t in dead),
                    dead.get(name, name),
                )
                dead[name] = origin
                del new_rules[name]
                changed = True
            elif body != rule.body:
                new_rules[name] = RuleDef(name=name, body=body,
                                          type_tag=rule.type_tag, loc=rule.loc)
                changed = True

    for root in ast.starting_rules:
        if root in dead:
            raise NoBaseCaseError(dead[root])

    reachable: set[str] = set()
    frontier = [n for n in ast.starting_rules if n in new_rules]
    while frontier:
        current = frontier.pop()
        if current in reachable:
            continue
        reachable.add(current)
        for target in referenced_rules_of(new_rules[current].body):
            if target not in reachable and target in new_rules:
                frontier.append(target)
    pruned = {name: rule for name, rule in new_rules.items() if name in reachable}
    from .ast import compute_starting_rules

    return GrammarAst(rules=pruned, starting_rules=compute_starting_rules(pruned),
                      constraints=ast.constraints)


# ---------------------------------------------------------------------------
# Factoring rewrite
# ---------------------------------------------------------------------------


def _literal_string(expr: Expr) -> str | None:
    """The constant string an expression always reduces to, if any."""
    if isinstance(expr, Literal):
        return expr.text
    if isinstance(expr, Sequence):
        parts = [_literal_string(i) for i in expr.items]
        if all(p is not None for p in parts):
            return "".join(parts)  # type: ignore[arg-type]
    return None


def _common_prefix(strings: list[str]) -> str:
    if not strings:
        return ""
    first = min(strings)
    last = max(strings)
    i = 0
    while i < len(first) and first[i] == last[i]:
        i += 1
    return first[:i]


def _split_infix(strings: list[str]) -> tuple[list[str], str, list[str]] | None:
    """Find a separator giving an exact cross-product factorization."""
    alts = list(dict.fromkeys(strings))
    base = alts[0]
    candidates = []
    for length in range(len(base), 0, -1):
        for start in range(0, len(base) - length + 1):
            candidates.append(base[start : start + length])
    seen = set()
    for sep in candidates:
        if sep in seen:
            continue
        seen.add(sep)
        pairs = []
        ok = True
        for alt in alts:
            at = alt.find(sep)
            if at < 0:
                ok = False
                break
            pairs.append((alt[:at], alt[at + len(sep):]))
        if not ok:
            continue
        lefts = list(dict.fromkeys(l for l, _ in pairs))
        rights = list(dict.fromkeys(r for _, r in pairs))
        if len(lefts) < 2 or len(rights) < 2:
            continue
        if len(set(pairs)) == len(lefts) * len(rights):
            return lefts, sep, rights
    return None


class _Factorer:
    def __init__(self, ast: GrammarAst):
        self.rules = dict(ast.rules)
        self.taken = set(ast.rules)

    def fresh(self, base: str) -> str:
        candidate = base
        n = 1
        while candidate in self.taken:
            n += 1
            candidate = f"{base}{n}"
        self.taken.add(candidate)
        return candidate

    def add_rule(self, base: str, body: Expr) -> str:
        name = self.fresh(base)
        self.rules[name] = RuleDef(name=name, body=body)
        return name

    def factor_selection(self, expr: Selection, owner: str) -> Expr:
        strings = [_literal_string(alt) for alt in expr.alternatives]
        if any(s is None for s in strings):
            return Selection(tuple(self.factor(alt, owner) for alt in expr.alternatives))
        alts = list(dict.fromkeys(strings))  # set semantics on the language
        if len(alts) < 2:
            return Literal(alts[0])
        prefix = _common_prefix(alts)
        suffix = _common_prefix([a[len(prefix):][::-1] for a in alts])[::-1]
        middles = [a[len(prefix): len(a) - len(suffix)] for a in alts]
        pieces: list[Expr] = []
        if prefix:
            pieces.append(Literal(prefix))
        split = _split_infix(middles) if len(set(middles)) == len(middles) else None
        if split is not None:
            lefts, sep, rights = split
            left_rule = self.add_rule(
                f"{owner}_l", self.factor_selection(
                    Selection(tuple(Literal(l) for l in lefts)), owner) if len(lefts) > 1
                else Literal(lefts[0]),
            )
            right_rule = self.add_rule(
                f"{owner}_r", self.factor_selection(
                    Selection(tuple(Literal(r) for r in rights)), owner) if len(rights) > 1
                else Literal(rights[0]),
            )
            pieces.append(Ref(left_rule))
            if sep:
                pieces.append(Literal(sep))
            pieces.append(Ref(right_rule))
        else:
            if len(set(middles)) == 1:
                if middles[0]:
                    pieces.append(Literal(middles[0]))
            else:
                pieces.append(Selection(tuple(Literal(m) for m in dict.fromkeys(middles))))
        if suffix:
            pieces.append(Literal(suffix))
        if not pieces:
            return Literal("")
        return sequence_of(pieces)

    def factor(self, expr: Expr, owner: str) -> Expr:
        if isinstance(expr, Selection):
            return self.factor_selection(expr, owner)
        if isinstance(expr, Sequence):
            return sequence_of([self.factor(i, owner) for i in expr.items])
        if isinstance(expr, ZeroOrMore):
            return ZeroOrMore(self.factor(expr.body, owner))
        return expr


def factor_rewrite(ast: GrammarAst) -> GrammarAst:
    """Factor literal selections; the reduced query language is preserved.

    A selection over literal strings is rewritten into (prefix, left-side
    selection, infix, right-side selection, suffix) whenever the alternatives
    form an exact cross product around a common infix; the sides become
    fresh rules (<rule>_l, <rule>_r).  Selections sharing only a prefix or
    suffix have it lifted out.  Anything that does not factor is returned
    unchanged.
    """
    factorer = _Factorer(ast)
    for name, rule in list(ast.rules.items()):
        new_body = factorer.factor(rule.body, name)
        if new_body != rule.body:
            factorer.rules[name] = replace(rule, body=new_body)
    from .ast import compute_starting_rules

    return GrammarAst(
        rules=factorer.rules,
        starting_rules=compute_starting_rules(factorer.rules),
        constraints=ast.constraints,
    )
