"""Small arithmetic-expression language for user-declared maps.

Grammar: numbers, names, ``+ - * / ^`` (``**`` accepted), unary minus,
parentheses and calls to ``sin cos exp sqrt``.  Constants ``pi`` and ``e``.
Expressions compile to closures evaluated against a math namespace, so the
same source runs on float arrays and on extended-precision arrays.
"""
from __future__ import annotations

import ast
import math
from typing import Callable, Mapping

from .errors import SchemaError

FUNCTIONS = ("sin", "cos", "exp", "sqrt")
CONSTANTS = {"e": math.e}

_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
    ast.Pow: lambda a, b: a ** b,
}


class Expression:
    """Compiled expression over named variables."""

    def __init__(self, source: str, variables: tuple[str, ...], params: Mapping[str, float] | None = None):
        self.source = source
        self.variables = tuple(variables)
        self.params = dict(params or {})
        try:
            tree = ast.parse(source.replace("^", "**"), mode="eval")
        except SyntaxError as exc:
            raise SchemaError(f"cannot parse expression {source!r}: {exc.msg}") from exc
        self._fn = self._compile(tree.body)

    def _compile(self, node) -> Callable:
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            value = float(node.value)
            return lambda env, xp: value
        if isinstance(node, ast.Name):
            name = node.id
            if name in self.variables:
                return lambda env, xp: env[name]
            if name in self.params:
                value = float(self.params[name])
                return lambda env, xp: value
            if name == "pi":
                return lambda env, xp: xp.pi
            if name in CONSTANTS:
                value = CONSTANTS[name]
                return lambda env, xp: value
            raise SchemaError(f"unknown name {name!r} in {self.source!r}")
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            op = _BINOPS[type(node.op)]
            left, right = self._compile(node.left), self._compile(node.right)
            return lambda env, xp: op(left(env, xp), right(env, xp))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            inner = self._compile(node.operand)
            if isinstance(node.op, ast.USub):
                return lambda env, xp: -inner(env, xp)
            return inner
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and not node.keywords:
            fname = node.func.id
            if fname not in FUNCTIONS or len(node.args) != 1:
                raise SchemaError(f"unsupported call {fname!r} in {self.source!r}")
            arg = self._compile(node.args[0])
            return lambda env, xp: getattr(xp, fname)(arg(env, xp))
        raise SchemaError(f"unsupported syntax in {self.source!r}")

    def __call__(self, env: Mapping, xp) -> object:
        return self._fn(env, xp)


def compile_vector(sources, variables, params=None) -> Callable:
    """Compile component expressions into ``z -> stacked components``."""
    from ._backend import stack_last  # noqa: PLC0415

    exprs = [Expression(s, tuple(variables), params) for s in sources]

    def fn(z, xp):
        env = {name: z[..., k] for k, name in enumerate(variables)}
        zero = z[..., 0] * 0
        return stack_last([e(env, xp) + zero for e in exprs])

    return fn
