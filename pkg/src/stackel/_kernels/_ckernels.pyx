# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled interpreter for register programs, plus a fixed-step RK4 driver."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, tan, sinh, cosh, exp, log, sqrt, atan, pow, floor, isfinite

cnp.import_array()

cdef enum:
    CONST = 0
    SYM = 1
    NEG = 2
    SIN = 3
    COS = 4
    TAN = 5
    SINH = 6
    COSH = 7
    EXP = 8
    LOG = 9
    SQRT = 10
    ATAN = 11
    ADD = 12
    SUB = 13
    MUL = 14
    DIV = 15
    POW = 16


cdef inline int run_point(const int[:] ops, const int[:] ia, const int[:] ib,
                          const double[:] consts, const double* xrow,
                          double* reg, int n, int* bad) noexcept nogil:
    cdef int k, op, code
    cdef double x, y, r
    for k in range(n):
        op = ops[k]
        code = 0
        if op == CONST:
            r = consts[k]
        elif op == SYM:
            r = xrow[ia[k]]
        else:
            x = reg[ia[k]]
            if op == NEG:
                r = -x
            elif op == SIN:
                r = sin(x)
            elif op == COS:
                r = cos(x)
            elif op == TAN:
                r = tan(x)
            elif op == SINH:
                r = sinh(x)
            elif op == COSH:
                r = cosh(x)
            elif op == EXP:
                r = exp(x)
            elif op == LOG:
                if x <= 0:
                    code = 3
                r = log(x)
            elif op == SQRT:
                if x < 0:
                    code = 2
                r = sqrt(x)
            elif op == ATAN:
                r = atan(x)
            else:
                y = reg[ib[k]]
                if op == ADD:
                    r = x + y
                elif op == SUB:
                    r = x - y
                elif op == MUL:
                    r = x * y
                elif op == DIV:
                    if y == 0:
                        code = 1
                        r = 0.0
                    else:
                        r = x / y
                else:
                    if x < 0 and floor(y) != y:
                        code = 4
                    elif x == 0 and y < 0:
                        code = 5
                    r = pow(x, y)
        if code == 0 and not isfinite(r):
            code = 6
        if code != 0:
            bad[0] = k
            return code
        reg[k] = r
    return 0


def eval_program(const int[:] ops, const int[:] ia, const int[:] ib,
                 const double[:] consts, const int[:] outs, const double[:, ::1] X):
    """Evaluate the program at every row of X.

    Returns (Y, err) where err is None or (point, instruction, code) for the
    first failing point.
    """
    cdef Py_ssize_t npts = X.shape[0], nout = outs.shape[0], i, j
    cdef int n = ops.shape[0], code = 0, bad = -1
    cdef cnp.ndarray[double, ndim=1] regbuf = np.empty(max(n, 1))
    cdef double* reg = <double*> regbuf.data
    Y = np.empty((npts, nout))
    cdef double[:, ::1] Yv = Y
    cdef double dummy = 0.0
    cdef const double* row
    with nogil:
        for i in range(npts):
            if X.shape[1] > 0:
                row = &X[i, 0]
            else:
                row = &dummy
            code = run_point(ops, ia, ib, consts, row, reg, n, &bad)
            if code != 0:
                break
            for j in range(nout):
                Yv[i, j] = reg[outs[j]]
    if code != 0:
        return Y, (int(i), int(bad), int(code))
    return Y, None


def rk4(const int[:] ops, const int[:] ia, const int[:] ib, const double[:] consts,
        const int[:] outs, double x0, double h, int nsteps, double y0, double dy0):
    """Integrate y'' + f(x) y' + q(x) y = 0 where the program maps x to (f, q).

    Returns (xs, ys, dys, err) with err None or (x, instruction, code).
    """
    cdef int n = ops.shape[0], code = 0, bad = -1, s, m
    cdef cnp.ndarray[double, ndim=1] regbuf = np.empty(max(n, 1))
    cdef double* reg = <double*> regbuf.data
    xs = np.empty(nsteps + 1)
    ys = np.empty(nsteps + 1)
    dys = np.empty(nsteps + 1)
    cdef double[::1] xv = xs, yv = ys, dv = dys
    cdef double x, y, z, xm, f[3], q[3], pts[3]
    cdef double k1y, k1z, k2y, k2z, k3y, k3z, k4y, k4z
    cdef int fo = outs[0], qo = outs[1]
    x = x0
    y = y0
    z = dy0
    xv[0] = x
    yv[0] = y
    dv[0] = z
    with nogil:
        for s in range(nsteps):
            pts[0] = x
            pts[1] = x + 0.5 * h
            pts[2] = x + h
            for m in range(3):
                code = run_point(ops, ia, ib, consts, &pts[m], reg, n, &bad)
                if code != 0:
                    xm = pts[m]
                    break
                f[m] = reg[fo]
                q[m] = reg[qo]
            if code != 0:
                break
            k1y = z
            k1z = -f[0] * z - q[0] * y
            k2y = z + 0.5 * h * k1z
            k2z = -f[1] * k2y - q[1] * (y + 0.5 * h * k1y)
            k3y = z + 0.5 * h * k2z
            k3z = -f[1] * k3y - q[1] * (y + 0.5 * h * k2y)
            k4y = z + h * k3z
            k4z = -f[2] * k4y - q[2] * (y + h * k3y)
            y = y + h / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y)
            z = z + h / 6.0 * (k1z + 2 * k2z + 2 * k3z + k4z)
            x = x0 + (s + 1) * h
            xv[s + 1] = x
            yv[s + 1] = y
            dv[s + 1] = z
    if code != 0:
        return xs, ys, dys, (float(xm), int(bad), int(code))
    return xs, ys, dys, None
