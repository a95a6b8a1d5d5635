# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-atom summation kernels.

Mirror of ``_kernels_fallback``: same stack program format, same
binary-exponentiation sequence, same chunked left-to-right accumulation.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, exp, fabs, isfinite, log, sin, sqrt

cnp.import_array()

NAME = "compiled"

# Keep equal to _tape.CHUNK_CELLS and _tape.MAX_STACK.
DEF CHUNK_C = 262144
DEF MAX_STACK_C = 64

cdef enum:
    OP_CONST = 0
    OP_VAR = 1
    OP_NEG = 2
    OP_ADD = 3
    OP_SUB = 4
    OP_MUL = 5
    OP_DIV = 6
    OP_POW = 7
    OP_SIN = 8
    OP_COS = 9
    OP_EXP = 10
    OP_LOG = 11
    OP_ABS = 12
    OP_SQRT = 13
    OP_MIN2 = 14
    OP_MAX2 = 15


cdef inline double ipow(double x, long e) noexcept nogil:
    cdef double acc = 0.0
    cdef double base = x
    cdef long n
    cdef bint have = 0
    if e == 0:
        return 1.0
    n = e if e > 0 else -e
    while n:
        if n & 1:
            if have:
                acc = acc * base
            else:
                acc = base
                have = 1
        n >>= 1
        if n:
            base = base * base
    if e < 0:
        return 1.0 / acc
    return acc


cdef inline double eval_point(const cnp.int32_t* ops, const cnp.int32_t* iargs,
                              const double* consts, Py_ssize_t nops,
                              double t) noexcept nogil:
    cdef double stack[MAX_STACK_C]
    cdef int sp = 0
    cdef Py_ssize_t k
    cdef cnp.int32_t op
    cdef double a, b
    for k in range(nops):
        op = ops[k]
        if op == OP_CONST:
            stack[sp] = consts[iargs[k]]
            sp += 1
        elif op == OP_VAR:
            stack[sp] = t
            sp += 1
        elif op == OP_NEG:
            stack[sp - 1] = -stack[sp - 1]
        elif op == OP_ADD:
            sp -= 1
            stack[sp - 1] = stack[sp - 1] + stack[sp]
        elif op == OP_SUB:
            sp -= 1
            stack[sp - 1] = stack[sp - 1] - stack[sp]
        elif op == OP_MUL:
            sp -= 1
            stack[sp - 1] = stack[sp - 1] * stack[sp]
        elif op == OP_DIV:
            sp -= 1
            stack[sp - 1] = stack[sp - 1] / stack[sp]
        elif op == OP_POW:
            stack[sp - 1] = ipow(stack[sp - 1], iargs[k])
        elif op == OP_SIN:
            stack[sp - 1] = sin(stack[sp - 1])
        elif op == OP_COS:
            stack[sp - 1] = cos(stack[sp - 1])
        elif op == OP_EXP:
            stack[sp - 1] = exp(stack[sp - 1])
        elif op == OP_LOG:
            stack[sp - 1] = log(stack[sp - 1])
        elif op == OP_ABS:
            stack[sp - 1] = fabs(stack[sp - 1])
        elif op == OP_SQRT:
            stack[sp - 1] = sqrt(stack[sp - 1])
        elif op == OP_MIN2:
            sp -= 1
            a = stack[sp - 1]
            b = stack[sp]
            stack[sp - 1] = a if a < b else b
        elif op == OP_MAX2:
            sp -= 1
            a = stack[sp - 1]
            b = stack[sp]
            stack[sp - 1] = a if a > b else b
    return stack[0]


cdef Py_ssize_t _eval_buf(const cnp.int32_t* ops, const cnp.int32_t* iargs,
                          const double* consts, Py_ssize_t nops,
                          const double* ts, double* out, Py_ssize_t n) noexcept nogil:
    """Evaluate all points; returns the first non-finite index or -1."""
    cdef Py_ssize_t i
    cdef Py_ssize_t bad = -1
    for i in range(n):
        out[i] = eval_point(ops, iargs, consts, nops, ts[i])
        if bad < 0 and not isfinite(out[i]):
            bad = i
    return bad


cdef _domain_error(double t):
    raise ValueError(f"kernel evaluation left the real domain at t={t!r}")


def eval_many(prog, ts):
    """Evaluate the program at every point; non-finite results raise."""
    cdef cnp.ndarray[double, ndim=1] ts_arr = np.ascontiguousarray(ts, dtype=np.float64)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] ops = prog.ops
    cdef cnp.ndarray[cnp.int32_t, ndim=1] iargs = prog.iargs
    cdef cnp.ndarray[double, ndim=1] consts = prog.consts
    cdef Py_ssize_t n = ts_arr.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t bad
    cdef const double* cp = &consts[0] if consts.shape[0] else NULL
    with nogil:
        bad = _eval_buf(&ops[0], &iargs[0], cp, ops.shape[0], &ts_arr[0], &out[0], n)
    if bad >= 0:
        _domain_error(float(ts_arr[bad]))
    return out


def _sum_impl(prog, xs, crit_ts, crit_vals, long s, bint prefixes):
    cdef cnp.ndarray[double, ndim=1] xs_arr = np.ascontiguousarray(xs, dtype=np.float64)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] ops = prog.ops
    cdef cnp.ndarray[cnp.int32_t, ndim=1] iargs = prog.iargs
    cdef cnp.ndarray[double, ndim=1] consts = prog.consts
    cdef Py_ssize_t nops = ops.shape[0]
    cdef Py_ssize_t n = xs_arr.shape[0] - 1

    cdef const double* cp = &consts[0] if consts.shape[0] else NULL
    cdef const cnp.int32_t* opp = &ops[0]
    cdef const cnp.int32_t* iap = &iargs[0]
    cdef const double* xp = &xs_arr[0]

    cdef cnp.ndarray[double, ndim=1] vals_arr
    cdef double* vp = NULL
    cdef Py_ssize_t bad = -1

    # Critical points: cell assignment computed exactly as in the fallback.
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ccells
    cdef cnp.ndarray[double, ndim=1] cvals
    cdef Py_ssize_t ncrit = 0
    cdef const cnp.int64_t* ccp = NULL
    cdef const double* cvp = NULL
    if crit_ts is not None and len(crit_ts):
        ccells = np.clip(
            np.searchsorted(xs_arr, np.asarray(crit_ts, dtype=np.float64), side="right") - 1,
            0, n - 1,
        ).astype(np.int64)
        cvals = np.ascontiguousarray(crit_vals, dtype=np.float64)
        ncrit = ccells.shape[0]
        ccp = &ccells[0]
        cvp = &cvals[0]

    cdef cnp.ndarray[double, ndim=1] pref_l_arr, pref_u_arr
    cdef double* plp = NULL
    cdef double* pup = NULL
    if prefixes:
        pref_l_arr = np.empty(max(n, 0), dtype=np.float64)
        pref_u_arr = np.empty(max(n, 0), dtype=np.float64)
        if n > 0:
            plp = &pref_l_arr[0]
            pup = &pref_u_arr[0]

    if s == 0:
        vals_arr = np.empty(n + 1, dtype=np.float64)
        vp = &vals_arr[0]
        with nogil:
            bad = _eval_buf(opp, iap, cp, nops, xp, vp, n + 1)
        if bad >= 0:
            _domain_error(float(xs_arr[bad]))

    cdef double lo_total = 0.0, up_total = 0.0
    cdef double local_l, local_u, m, big, dx, a, b, step, t, v
    cdef double bad_t = 0.0
    cdef Py_ssize_t c0, c1, k, i, ci = 0
    cdef bint failed = 0

    with nogil:
        c0 = 0
        while c0 < n and not failed:
            c1 = c0 + CHUNK_C
            if c1 > n:
                c1 = n
            local_l = 0.0
            local_u = 0.0
            for k in range(c0, c1):
                if s == 0:
                    a = vp[k]
                    b = vp[k + 1]
                    m = a if a < b else b
                    big = a if a > b else b
                    while ci < ncrit and ccp[ci] == k:
                        v = cvp[ci]
                        if v < m:
                            m = v
                        if v > big:
                            big = v
                        ci += 1
                else:
                    a = xp[k]
                    b = xp[k + 1]
                    step = (b - a) / s
                    m = 0.0
                    big = 0.0
                    for i in range(s + 1):
                        t = a + i * step
                        v = eval_point(opp, iap, cp, nops, t)
                        if not isfinite(v):
                            failed = 1
                            bad_t = t
                            break
                        if i == 0:
                            m = v
                            big = v
                        else:
                            if v < m:
                                m = v
                            if v > big:
                                big = v
                    if failed:
                        break
                dx = xp[k + 1] - xp[k]
                local_l = local_l + m * dx
                local_u = local_u + big * dx
                if prefixes:
                    plp[k] = lo_total + local_l
                    pup[k] = up_total + local_u
            lo_total = lo_total + local_l
            up_total = up_total + local_u
            c0 = c1

    if failed:
        _domain_error(float(bad_t))
    if prefixes:
        return pref_l_arr, pref_u_arr
    return lo_total, up_total


def darboux_endpoint(prog, xs):
    """Lower/upper sums with per-cell extrema at the cell endpoints."""
    return _sum_impl(prog, xs, None, None, 0, False)


def darboux_critical(prog, xs, crit_ts, crit_vals):
    """Endpoint extrema folded with interior critical values per cell."""
    return _sum_impl(prog, xs, crit_ts, crit_vals, 0, False)


def darboux_sampled(prog, xs, s):
    """Per-cell extrema sampled at s and 2s subintervals; returns widenings."""
    l1, u1 = _sum_impl(prog, xs, None, None, s, False)
    l2, u2 = _sum_impl(prog, xs, None, None, 2 * s, False)
    return l2, u2, abs(l2 - l1), abs(u2 - u1)


def prefix_endpoint(prog, xs):
    return _sum_impl(prog, xs, None, None, 0, True)


def prefix_critical(prog, xs, crit_ts, crit_vals):
    return _sum_impl(prog, xs, crit_ts, crit_vals, 0, True)


def prefix_sampled(prog, xs, s):
    l1, u1 = _sum_impl(prog, xs, None, None, s, False)
    pl, pu = _sum_impl(prog, xs, None, None, 2 * s, True)
    wl = abs(float(pl[-1]) - l1) if len(pl) else 0.0
    wu = abs(float(pu[-1]) - u1) if len(pu) else 0.0
    return pl, pu, wl, wu
