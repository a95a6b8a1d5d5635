"""Shared test oracles: adaptive Simpson quadrature and a random AST generator.

The quadrature oracle is deliberately independent of the package's own
summation machinery (plain Python floats, recursive Simpson with Richardson
acceleration).
"""

from __future__ import annotations

import math
import random

from ordercalc import expr as ex


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-10) -> float:
    """Classic adaptive Simpson quadrature; signed in the endpoint order."""
    if a == b:
        return 0.0
    if a > b:
        return -adaptive_simpson(f, b, a, tol)

    def simpson(x0, f0, x2, f2, x1, f1):
        return (x2 - x0) / 6.0 * (f0 + 4.0 * f1 + f2)

    def recurse(x0, f0, x2, f2, x1, f1, whole, eps, depth):
        lm = 0.5 * (x0 + x1)
        rm = 0.5 * (x1 + x2)
        flm, frm = f(lm), f(rm)
        left = simpson(x0, f0, x1, f1, lm, flm)
        right = simpson(x1, f1, x2, f2, rm, frm)
        delta = left + right - whole
        if depth <= 0 or abs(delta) <= 15.0 * eps:
            return left + right + delta / 15.0
        return recurse(x0, f0, x1, f1, lm, flm, left, 0.5 * eps, depth - 1) + recurse(
            x1, f1, x2, f2, rm, frm, right, 0.5 * eps, depth - 1
        )

    mid = 0.5 * (a + b)
    fa, fb, fm = f(a), f(b), f(mid)
    whole = simpson(a, fa, b, fb, mid, fm)
    return recurse(a, fa, b, fb, mid, fm, whole, tol, 48)


def central_difference(f, t: float, h: float = 1e-6) -> float:
    return (f(t + h) - f(t - h)) / (2.0 * h)


# --------------------------------------------------------------------------
# Random expression ASTs
# --------------------------------------------------------------------------

_SMOOTH_CALLS = ("sin", "cos", "exp", "log", "sqrt")
_ALL_CALLS = _SMOOTH_CALLS + ("abs",)


def random_expr(rng: random.Random, depth: int = 4, smooth_only: bool = False) -> ex.Expr:
    """A random AST mirroring what the parser can produce (no negative Const)."""
    if depth <= 0 or rng.random() < 0.3:
        if rng.random() < 0.5:
            return ex.Var()
        return ex.Const(round(rng.uniform(0.0, 9.75) * 4) / 4)
    roll = rng.random()
    if roll < 0.18:
        return ex.Neg(random_expr(rng, depth - 1, smooth_only))
    if roll < 0.60:
        op = rng.choice((ex.Add, ex.Sub, ex.Mul, ex.Div))
        return op(
            random_expr(rng, depth - 1, smooth_only),
            random_expr(rng, depth - 1, smooth_only),
        )
    if roll < 0.78:
        return ex.Pow(random_expr(rng, depth - 1, smooth_only), rng.randint(0, 4))
    if not smooth_only and rng.random() < 0.25:
        name = rng.choice(("min", "max"))
        return ex.Call(
            name,
            (
                random_expr(rng, depth - 1, smooth_only),
                random_expr(rng, depth - 1, smooth_only),
            ),
        )
    name = rng.choice(_SMOOTH_CALLS if smooth_only else _ALL_CALLS)
    return ex.Call(name, (random_expr(rng, depth - 1, smooth_only),))
