"""Exception types shared across the package.

Every failure mode callers are expected to catch gets its own class; all
inherit from DigError so a bare `except DigError` catches anything raised
by this package on purpose.
"""

from __future__ import annotations


class DigError(Exception):
    """Base class for all errors raised by this package."""


class DigSyntaxError(DigError):
    """Source text does not parse.

    Carries the position and the set of token descriptions that would have
    been acceptable at that position.
    """

    def __init__(self, message: str, line: int, col: int, expected: tuple[str, ...] = ()):
        self.line = line
        self.col = col
        self.expected = tuple(sorted(set(expected)))
        detail = f"line {line}, col {col}: {message}"
        if self.expected:
            detail += " (expected " + " or ".join(self.expected) + ")"
        super().__init__(detail)


class DuplicateRuleError(DigError):
    def __init__(self, name: str, line: int):
        self.name = name
        self.line = line
        super().__init__(f"line {line}: rule '{name}' is defined twice")


class UnknownRuleError(DigError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown rule '{name}'")


class UnknownVariableError(DigError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown choice variable '{name}'")


class UnresolvedConstraintVariableError(DigError):
    def __init__(self, path: str):
        self.path = path
        super().__init__(f"constraint variable '{path}' does not resolve to a choice variable")


class DomainError(DigError):
    """A value was rejected by a choice variable's domain."""

    def __init__(self, qname: str, value: object, reason: str):
        self.qname = qname
        self.value = value
        self.reason = reason
        super().__init__(f"value {value!r} rejected for '{qname}': {reason}")


class UnboundParameterError(DigError):
    """An attr[r] value was checked before its relation variable was bound."""

    def __init__(self, qname: str, param: str):
        self.qname = qname
        self.param = param
        super().__init__(f"cannot validate '{qname}': parameterizing relation '{param}' is unbound")


class TextParseError(DigError):
    """Free-text input failed to parse against a subgrammar."""

    def __init__(self, message: str, pos: int, expected: tuple[str, ...] = ()):
        self.pos = pos
        self.expected = tuple(sorted(set(expected)))
        detail = f"at position {pos}: {message}"
        if self.expected:
            detail += " (expected " + " or ".join(self.expected) + ")"
        super().__init__(detail)


class IncompleteError(DigError):
    """Reduction was requested while choice variables are still unbound."""

    def __init__(self, rule: str, unbound: list[str]):
        self.rule = rule
        self.unbound = list(unbound)
        super().__init__(f"cannot reduce '{rule}': unbound variables {', '.join(unbound)}")


class ViolationsPresentError(DigError):
    def __init__(self, violations):
        self.violations = list(violations)
        msgs = "; ".join(v.message for v in self.violations)
        super().__init__(f"constraint violations present: {msgs}")


class RecursionUnboundedError(DigError):
    def __init__(self, rule: str):
        self.rule = rule
        super().__init__(
            f"rule '{rule}' is recursive; unroll the grammar or request the recursion summary"
        )


class NoBaseCaseError(DigError):
    def __init__(self, rule: str):
        self.rule = rule
        super().__init__(f"recursive rule '{rule}' has no non-recursive alternative to unroll to")


class InfiniteDomainError(DigError):
    def __init__(self, qname: str, reason: str):
        self.qname = qname
        super().__init__(f"domain of '{qname}' is not enumerable: {reason}")


class BackendError(DigError):
    """The database rejected a statement; carries the engine's message."""


class BackendUnavailableError(DigError):
    def __init__(self, what: str):
        super().__init__(f"a database backend is required to {what}")


class TimeoutError_(BackendError):
    def __init__(self, query: str, seconds: float):
        super().__init__(f"query exceeded {seconds:g}s: {query[:120]}")


class UnresolvedRefError(DigError):
    def __init__(self, model: str, target: str, reason: str = ""):
        self.model = model
        self.target = target
        msg = f"model '{model}' references unresolved target '{target}'"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)


class CyclicRefError(DigError):
    def __init__(self, cycle: list[str]):
        self.cycle = list(cycle)
        super().__init__("model references form a cycle: " + " -> ".join(self.cycle))


class UnknownDirectiveError(DigError):
    def __init__(self, model: str, directive: str):
        super().__init__(f"model '{model}': unsupported template directive {directive!r}")


class UnknownGrammarError(DigError):
    def __init__(self, grammar_id: str):
        super().__init__(f"unknown grammar '{grammar_id}'")


class UnknownSessionError(DigError):
    def __init__(self, session_id: str):
        super().__init__(f"unknown session '{session_id}'")


class UnreachableStateError(DigError):
    def __init__(self, qname: str):
        super().__init__(f"no interaction covers variable '{qname}'")


class InvalidStateError(DigError):
    def __init__(self, reason: str):
        super().__init__(reason)


class DomainSamplingFailure(DigError):
    def __init__(self, qname: str, attempts: int):
        super().__init__(f"could not sample a valid value for '{qname}' after {attempts} attempts")
