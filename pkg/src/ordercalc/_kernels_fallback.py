"""Pure-numpy implementation of the per-atom summation kernels.

This module mirrors ``_kernels.pyx`` operation for operation: same stack
program format, same binary-exponentiation sequence for ``^``, same
chunked left-to-right accumulation order.  Arithmetic-only kernels agree
bitwise with the compiled backend; transcendental calls may differ in the
last ulp (numpy's SIMD routines vs libm).
"""

from __future__ import annotations

import numpy as np

from ._tape import (
    CHUNK_CELLS,
    OP_ABS,
    OP_ADD,
    OP_CONST,
    OP_COS,
    OP_DIV,
    OP_EXP,
    OP_LOG,
    OP_MAX2,
    OP_MIN2,
    OP_MUL,
    OP_NEG,
    OP_POW,
    OP_SIN,
    OP_SQRT,
    OP_SUB,
    OP_VAR,
    Program,
)

NAME = "numpy"


def _ipow_array(x: np.ndarray, e: int) -> np.ndarray:
    # Same multiplication sequence as the compiled backend's ipow.
    if e == 0:
        return np.ones_like(x)
    n = -e if e < 0 else e
    acc = None
    base = x
    while n:
        if n & 1:
            acc = base if acc is None else acc * base
        n >>= 1
        if n:
            base = base * base
    return 1.0 / acc if e < 0 else acc


def _run(prog: Program, ts: np.ndarray) -> np.ndarray:
    stack: list[np.ndarray] = []
    ops, iargs, consts = prog.ops, prog.iargs, prog.consts
    with np.errstate(all="ignore"):
        for k in range(len(ops)):
            op = ops[k]
            if op == OP_CONST:
                stack.append(np.full(ts.shape, consts[iargs[k]]))
            elif op == OP_VAR:
                stack.append(ts)
            elif op == OP_NEG:
                stack.append(-stack.pop())
            elif op == OP_ADD:
                b = stack.pop()
                stack.append(stack.pop() + b)
            elif op == OP_SUB:
                b = stack.pop()
                stack.append(stack.pop() - b)
            elif op == OP_MUL:
                b = stack.pop()
                stack.append(stack.pop() * b)
            elif op == OP_DIV:
                b = stack.pop()
                stack.append(stack.pop() / b)
            elif op == OP_POW:
                stack.append(_ipow_array(stack.pop(), int(iargs[k])))
            elif op == OP_SIN:
                stack.append(np.sin(stack.pop()))
            elif op == OP_COS:
                stack.append(np.cos(stack.pop()))
            elif op == OP_EXP:
                stack.append(np.exp(stack.pop()))
            elif op == OP_LOG:
                stack.append(np.log(stack.pop()))
            elif op == OP_ABS:
                stack.append(np.abs(stack.pop()))
            elif op == OP_SQRT:
                stack.append(np.sqrt(stack.pop()))
            elif op == OP_MIN2:
                b = stack.pop()
                stack.append(np.minimum(stack.pop(), b))
            elif op == OP_MAX2:
                b = stack.pop()
                stack.append(np.maximum(stack.pop(), b))
            else:
                raise ValueError(f"bad opcode {op}")
    out = stack.pop()
    if out is ts:
        out = ts.copy()
    return out


def eval_many(prog: Program, ts: np.ndarray) -> np.ndarray:
    """Evaluate the program at every point; non-finite results raise."""
    ts = np.ascontiguousarray(ts, dtype=np.float64)
    out = _run(prog, ts)
    _check_finite(out, ts)
    return out


def _check_finite(vals: np.ndarray, ts: np.ndarray) -> None:
    bad = ~np.isfinite(vals)
    if bad.any():
        i = int(np.argmax(bad))
        t = float(ts.ravel()[i])
        raise ValueError(f"kernel evaluation left the real domain at t={t!r}")


def _crit_cells(xs: np.ndarray, crit_ts: np.ndarray) -> np.ndarray:
    n = len(xs) - 1
    return np.clip(np.searchsorted(xs, crit_ts, side="right") - 1, 0, n - 1)


def _cell_minmax(
    xs: np.ndarray,
    c0: int,
    c1: int,
    crit_ts: np.ndarray | None,
    crit_vals: np.ndarray | None,
    crit_cells: np.ndarray | None,
    vals: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    v = vals[c0 : c1 + 1]
    m = np.minimum(v[:-1], v[1:])
    big = np.maximum(v[:-1], v[1:])
    if crit_ts is not None and len(crit_ts):
        sel = (crit_cells >= c0) & (crit_cells < c1)
        if sel.any():
            local = crit_cells[sel] - c0
            np.minimum.at(m, local, crit_vals[sel])
            np.maximum.at(big, local, crit_vals[sel])
    return m, big


def _values(prog: Program | None, ts: np.ndarray, evalf) -> np.ndarray:
    if evalf is not None:
        return np.asarray(evalf(ts), dtype=np.float64)
    with np.errstate(all="ignore"):
        out = _run(prog, ts)
    _check_finite(out, ts)
    return out


def _sampled_minmax(
    prog: Program | None, xs: np.ndarray, c0: int, c1: int, s: int, evalf
) -> tuple[np.ndarray, np.ndarray]:
    a = xs[c0:c1]
    b = xs[c0 + 1 : c1 + 1]
    step = (b - a) / s
    pts = a[:, None] + np.arange(s + 1)[None, :] * step[:, None]
    fv = _values(prog, pts.ravel(), evalf).reshape(c1 - c0, s + 1)
    return fv.min(axis=1), fv.max(axis=1)


def _sum_cells(
    prog: Program | None,
    xs: np.ndarray,
    crit_ts: np.ndarray | None = None,
    crit_vals: np.ndarray | None = None,
    s: int = 0,
    prefixes: bool = False,
    evalf=None,
):
    """Shared chunked accumulation for all Darboux strategies.

    ``s == 0`` selects endpoint/critical extrema; ``s > 0`` samples ``s``
    subintervals per cell.  Returns totals (L, U) or prefix arrays.
    ``evalf`` substitutes a callable for the program (callable kernels).
    """
    n = len(xs) - 1
    crit_cells = None
    if crit_ts is not None and len(crit_ts):
        crit_cells = _crit_cells(xs, crit_ts)
    else:
        crit_ts = None

    lo_total = 0.0
    up_total = 0.0
    pref_l = np.empty(n) if prefixes else None
    pref_u = np.empty(n) if prefixes else None

    vals = None
    if s == 0:
        vals = _values(prog, xs, evalf)

    for c0 in range(0, max(n, 1), CHUNK_CELLS):
        c1 = min(c0 + CHUNK_CELLS, n)
        if c1 <= c0:
            break
        if s == 0:
            m, big = _cell_minmax(xs, c0, c1, crit_ts, crit_vals, crit_cells, vals)
        else:
            m, big = _sampled_minmax(prog, xs, c0, c1, s, evalf)
        dx = xs[c0 + 1 : c1 + 1] - xs[c0:c1]
        cl = np.add.accumulate(m * dx)
        cu = np.add.accumulate(big * dx)
        if prefixes:
            pref_l[c0:c1] = lo_total + cl
            pref_u[c0:c1] = up_total + cu
        lo_total = lo_total + cl[-1]
        up_total = up_total + cu[-1]

    if prefixes:
        return pref_l, pref_u
    return float(lo_total), float(up_total)


def darboux_endpoint(prog: Program, xs: np.ndarray):
    """Lower/upper sums with per-cell extrema at the cell endpoints."""
    return _sum_cells(prog, xs)


def darboux_critical(prog: Program, xs: np.ndarray, crit_ts, crit_vals):
    """Endpoint extrema folded with interior critical values per cell."""
    return _sum_cells(prog, xs, crit_ts=crit_ts, crit_vals=crit_vals)


def darboux_sampled(prog: Program, xs: np.ndarray, s: int):
    """Per-cell extrema sampled at s and 2s subintervals.

    Returns the 2s sums plus |difference| between the two passes as a
    measured widening for each of L and U.
    """
    l1, u1 = _sum_cells(prog, xs, s=s)
    l2, u2 = _sum_cells(prog, xs, s=2 * s)
    return l2, u2, abs(l2 - l1), abs(u2 - u1)


def prefix_endpoint(prog: Program, xs: np.ndarray):
    return _sum_cells(prog, xs, prefixes=True)


def prefix_critical(prog: Program, xs: np.ndarray, crit_ts, crit_vals):
    return _sum_cells(prog, xs, crit_ts=crit_ts, crit_vals=crit_vals, prefixes=True)


def prefix_sampled(prog: Program, xs: np.ndarray, s: int):
    l1, u1 = _sum_cells(prog, xs, s=s)
    pl, pu = _sum_cells(prog, xs, s=2 * s, prefixes=True)
    wl = abs(float(pl[-1]) - l1) if len(pl) else 0.0
    wu = abs(float(pu[-1]) - u1) if len(pu) else 0.0
    return pl, pu, wl, wu


# Callable-kernel variants: same shapes, ``evalf`` instead of a program.
# Only this backend offers them; compiled code cannot call back cheaply.

def darboux_endpoint_fn(evalf, xs):
    return _sum_cells(None, xs, evalf=evalf)


def darboux_sampled_fn(evalf, xs, s: int):
    l1, u1 = _sum_cells(None, xs, s=s, evalf=evalf)
    l2, u2 = _sum_cells(None, xs, s=2 * s, evalf=evalf)
    return l2, u2, abs(l2 - l1), abs(u2 - u1)


def prefix_endpoint_fn(evalf, xs):
    return _sum_cells(None, xs, prefixes=True, evalf=evalf)


def prefix_sampled_fn(evalf, xs, s: int):
    l1, u1 = _sum_cells(None, xs, s=s, evalf=evalf)
    pl, pu = _sum_cells(None, xs, s=2 * s, prefixes=True, evalf=evalf)
    wl = abs(float(pl[-1]) - l1) if len(pl) else 0.0
    wu = abs(float(pu[-1]) - u1) if len(pu) else 0.0
    return pl, pu, wl, wu
