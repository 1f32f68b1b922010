"""Numpy implementation of the kernels, used when the extension is missing.

Programs are evaluated instruction by instruction over all points at once.
Error reporting matches the compiled kernel: the first failing point, and
the first failing instruction at that point.
"""

import numpy as np

from ._opcodes import (
    ADD, ATAN, CONST, COS, COSH, DIV, EXP, LOG, MUL, NEG, POW, SIN, SINH, SQRT, SUB, SYM, TAN,
    E_DIV0, E_LOG, E_NONFINITE, E_POWNEG, E_POWZERO, E_SQRT,
)

_UNARY = {NEG: np.negative, SIN: np.sin, COS: np.cos, TAN: np.tan, SINH: np.sinh,
          COSH: np.cosh, EXP: np.exp, LOG: np.log, SQRT: np.sqrt, ATAN: np.arctan}
_BINARY = {ADD: np.add, SUB: np.subtract, MUL: np.multiply, DIV: np.divide, POW: np.power}


def _run(ops, ia, ib, consts, X):
    npts = X.shape[0]
    n = len(ops)
    reg = np.empty((n, npts))
    first_bad = np.full(npts, -1, dtype=np.int64)
    first_code = np.zeros(npts, dtype=np.int64)
    with np.errstate(all="ignore"):
        for k in range(n):
            op = int(ops[k])
            bad = None
            if op == CONST:
                r = np.full(npts, consts[k])
            elif op == SYM:
                r = X[:, ia[k]]
            elif op in _UNARY:
                x = reg[ia[k]]
                r = _UNARY[op](x)
                if op == LOG:
                    bad = (x <= 0, E_LOG)
                elif op == SQRT:
                    bad = (x < 0, E_SQRT)
            else:
                x, y = reg[ia[k]], reg[ib[k]]
                if op == DIV:
                    zero = y == 0
                    r = np.where(zero, 0.0, np.divide(x, np.where(zero, 1.0, y)))
                    bad = (zero, E_DIV0)
                elif op == POW:
                    r = np.power(x, y)
                    neg = (x < 0) & (np.floor(y) != y)
                    codes = np.where(neg, E_POWNEG, np.where((x == 0) & (y < 0), E_POWZERO, 0))
                    bad = (codes != 0, codes)
                else:
                    r = _BINARY[op](x, y)
            code = np.zeros(npts, dtype=np.int64)
            if bad is not None:
                code = np.where(bad[0], bad[1], 0)
            code = np.where((code == 0) & ~np.isfinite(r), E_NONFINITE, code)
            fresh = (code != 0) & (first_bad < 0)
            if fresh.any():
                first_bad[fresh] = k
                first_code[fresh] = code[fresh]
            reg[k] = r
    return reg, first_bad, first_code


def eval_program(ops, ia, ib, consts, outs, X):
    X = np.ascontiguousarray(X, dtype=float)
    reg, first_bad, first_code = _run(ops, ia, ib, consts, X)
    Y = reg[np.asarray(outs, dtype=np.intp)].T.copy() if len(outs) else np.empty((X.shape[0], 0))
    failed = np.nonzero(first_bad >= 0)[0]
    if failed.size:
        i = int(failed[0])
        return Y, (i, int(first_bad[i]), int(first_code[i]))
    return Y, None


def rk4(ops, ia, ib, consts, outs, x0, h, nsteps, y0, dy0):
    # coefficients at all stage abscissae in one vectorized pass
    nodes = x0 + h * np.arange(2 * nsteps + 1) / 2.0
    X = nodes.reshape(-1, 1)
    reg, first_bad, first_code = _run(ops, ia, ib, consts, X)
    f = reg[outs[0]]
    q = reg[outs[1]]
    xs = np.empty(nsteps + 1)
    ys = np.empty(nsteps + 1)
    dys = np.empty(nsteps + 1)
    xs[0], ys[0], dys[0] = x0, y0, dy0
    y, z = float(y0), float(dy0)
    for s in range(nsteps):
        i0, i1, i2 = 2 * s, 2 * s + 1, 2 * s + 2
        for m in (i0, i1, i2):
            if first_bad[m] >= 0:
                return xs, ys, dys, (float(nodes[m]), int(first_bad[m]), int(first_code[m]))
        f0, f1, f2 = f[i0], f[i1], f[i2]
        q0, q1, q2 = q[i0], q[i1], q[i2]
        k1y = z
        k1z = -f0 * z - q0 * y
        k2y = z + 0.5 * h * k1z
        k2z = -f1 * k2y - q1 * (y + 0.5 * h * k1y)
        k3y = z + 0.5 * h * k2z
        k3z = -f1 * k3y - q1 * (y + 0.5 * h * k2y)
        k4y = z + h * k3z
        k4z = -f2 * k4y - q2 * (y + h * k3y)
        y = y + h / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y)
        z = z + h / 6.0 * (k1z + 2 * k2z + 2 * k3z + k4z)
        xs[s + 1] = x0 + (s + 1) * h
        ys[s + 1] = y
        dys[s + 1] = z
    return xs, ys, dys, None
