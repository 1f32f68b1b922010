class ExprError(Exception):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError, ValueError):
    """Malformed source text.

    ``offset`` is the 0-based character position where parsing stopped and
    ``expected`` the set of tokens that would have been accepted there.
    """

    def __init__(self, message: str, source: str, offset: int, expected=()):
        self.source = source
        self.offset = offset
        self.expected = frozenset(expected)
        exp = ", ".join(sorted(self.expected))
        detail = f"{message} at offset {offset}"
        if exp:
            detail += f" (expected one of: {exp})"
        super().__init__(detail)


class UnknownFunctionError(ExprSyntaxError):
    def __init__(self, name: str, source: str, offset: int):
        self.name = name
        super().__init__(f"unknown function {name!r}", source, offset)


class UnboundSymbolError(ExprError, KeyError):
    def __init__(self, names):
        self.names = tuple(sorted(names))
        super().__init__(f"unbound symbol(s): {', '.join(self.names)}")

    def __str__(self):
        return self.args[0]


class ExprDomainError(ExprError, ArithmeticError):
    """Evaluation left the real domain of an operation.

    Carries the offending subexpression and the point as a symbol binding.
    """

    def __init__(self, reason: str, node, point: dict):
        self.reason = reason
        self.node = node
        self.point = dict(point)
        pt = ", ".join(f"{k}={v!r}" for k, v in sorted(self.point.items()))
        super().__init__(f"{reason} in {node} at ({pt})")
