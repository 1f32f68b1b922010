"""Random expression generators shared by the exprkit tests."""

import numpy as np

from stackel.exprkit import Expr, Program, diff, num, sym, to_source

SYMS = ("u", "v", "w")

# unary wrappers that are finite and smooth everywhere on the reals
_SAFE_UNARY = (
    lambda a: Expr("sin", (a,)),
    lambda a: Expr("cos", (a,)),
    lambda a: Expr("atan", (a,)),
    lambda a: Expr("neg", (a,)),
    lambda a: Expr("exp", (Expr("sin", (a,)),)),
    lambda a: Expr("log", (Expr("add", (num(1.5), Expr("sin", (a,)))),)),
    lambda a: Expr("sqrt", (Expr("add", (num(1.0), Expr("mul", (a, a)))),)),
    lambda a: Expr("sinh", (Expr("cos", (a,)),)),
    lambda a: Expr("cosh", (Expr("sin", (a,)),)),
)


def smooth_expr(rng: np.random.Generator, depth: int = 4) -> Expr:
    """A random expression that is finite and smooth on all of R^3."""
    if depth == 0 or rng.random() < 0.2:
        if rng.random() < 0.6:
            return sym(SYMS[rng.integers(len(SYMS))])
        return num(float(np.round(rng.uniform(-3, 3), 2)))
    r = rng.random()
    if r < 0.35:
        return _SAFE_UNARY[rng.integers(len(_SAFE_UNARY))](smooth_expr(rng, depth - 1))
    a, b = smooth_expr(rng, depth - 1), smooth_expr(rng, depth - 1)
    op = ("add", "sub", "mul", "div", "pow")[rng.integers(5)]
    if op == "div":
        # denominator bounded away from zero
        b = Expr("add", (num(2.0), Expr("sin", (b,))))
    elif op == "pow":
        if rng.random() < 0.5:
            b = num(float(rng.integers(0, 4)))
        else:
            a = Expr("add", (num(1.5), Expr("cos", (a,))))
            b = Expr("atan", (b,))
    return Expr(op, (a, b))


def any_expr(rng: np.random.Generator, depth: int = 4) -> Expr:
    """A random tree of any shape, including negative literals and pi."""
    if depth == 0 or rng.random() < 0.25:
        r = rng.random()
        if r < 0.5:
            return sym(SYMS[rng.integers(len(SYMS))])
        if r < 0.55:
            return Expr("pi")
        return num(float(np.round(rng.uniform(-5, 5), int(rng.integers(0, 4)))))
    ops = ("neg", "sin", "cos", "tan", "sinh", "cosh", "exp", "log", "sqrt", "atan",
           "add", "sub", "mul", "div", "pow")
    op = ops[rng.integers(len(ops))]
    if op in ("add", "sub", "mul", "div", "pow"):
        return Expr(op, (any_expr(rng, depth - 1), any_expr(rng, depth - 1)))
    return Expr(op, (any_expr(rng, depth - 1),))


def fd_agree(e, s, x, h=1e-5):
    """Symbolic derivative and central difference of ``e`` along ``s`` at ``x``."""
    prog = Program([e, diff(e, s)], SYMS)
    k = SYMS.index(s)
    xp, xm = x.copy(), x.copy()
    xp[k] += h
    xm[k] -= h
    vals = prog.evaluate(np.vstack([x, xp, xm]))
    exact = vals[0, 1]
    fd = (vals[1, 0] - vals[2, 0]) / (2 * h)
    return exact, fd


# fuzzing

_ALPHABET = list("uvw0123456789.+-*/^()eE ") + ["sin", "log", "sqrt", "pi", "foo", "_", "$", "é"]


def _mutate(rng, text):
    chars = list(text)
    for _ in range(int(rng.integers(1, 4))):
        r = rng.random()
        pos = int(rng.integers(0, len(chars) + 1))
        if r < 0.4 and chars:
            del chars[min(pos, len(chars) - 1)]
        elif r < 0.8:
            chars.insert(pos, _ALPHABET[rng.integers(len(_ALPHABET))])
        elif chars:
            i, j = rng.integers(0, len(chars), size=2)
            chars[i], chars[j] = chars[j], chars[i]
    return "".join(chars)


def fuzz_corpus(n, seed=7):
    rng = np.random.default_rng(seed)
    out = ["", " ", "(", ")", "()", "1e999", "-", "^", "u^", "sin", "sin()", "((((u)))", "1..2", "u v",
           "(" * 500 + "u" + ")" * 500, "-" * 1000 + "u", "2^" * 400 + "2"]
    while len(out) < n:
        base = to_source(any_expr(rng, int(rng.integers(1, 5))))
        out.append(_mutate(rng, base) if rng.random() < 0.8 else base)
    return out[:n]
