import math

import numpy as np
import pytest

from helpers import adaptive_simpson
from ordercalc.expr import eval_expr, parse
from ordercalc.functions import LatticeFunction, ScalarKernel
from ordercalc.integrate import (
    DarbouxSums,
    IntegralResult,
    ToleranceSchedule,
    darboux_sums,
    integrate,
    riemann_sum,
    signed_integrate,
    split_integrate,
)
from ordercalc.lattice import Band, Element, OrderInterval, totord
from ordercalc.partitions import Partition, common_refinement, refines, tag, uniform


def E(*coords):
    return Element(coords)


def interval(lo, hi):
    return OrderInterval(Element(lo), Element(hi))


UNIT2 = interval((0, 0), (1, 1))
SWAP_P = Partition((E(0, 0), E(1, 0), E(1, 1)), UNIT2)
SWAP_Q = Partition((E(0, 0), E(0, 1), E(1, 1)), UNIT2)


def random_partition(rng, iv, max_interior=4) -> Partition:
    n = int(rng.integers(0, max_interior + 1))
    pts = [iv.sample(rng) for _ in range(n)]
    return Partition(tuple(totord([iv.lo, iv.hi, *pts])), iv)


# -- Darboux sums -------------------------------------------------------------

def test_swap_staircase_sums_are_exact():
    swap = LatticeFunction.swap()
    assert darboux_sums(swap, SWAP_P).lower == E(0, 1)
    assert darboux_sums(swap, SWAP_Q).upper == E(1, 0)
    assert not darboux_sums(swap, SWAP_P).lower.leq(darboux_sums(swap, SWAP_Q).upper)


def test_constant_kernel_darboux_collapse():
    f = LatticeFunction.coordinatewise(ScalarKernel.constant(3.0), dim=2)
    iv = interval((0, 1), (2, 4))
    for n in (1, 3, 8):
        sums = darboux_sums(f, uniform(iv, n))
        assert sums.lower == sums.upper == E(6.0, 9.0)


def test_corner_path_rejects_high_dimension():
    f = LatticeFunction.general(lambda x: x, dim=4)
    iv = interval((0, 0, 0, 0), (1, 1, 1, 1))
    with pytest.raises(ValueError):
        darboux_sums(f, uniform(iv, 2))


def test_darboux_sums_validation():
    with pytest.raises(ValueError):
        DarbouxSums(lower=E(1, 1), upper=E(0, 0))


# -- Riemann sums --------------------------------------------------------------

def test_riemann_midpoint_identity():
    f = LatticeFunction.coordinatewise("t", dim=2)
    tagged = tag(uniform(UNIT2, 2), "midpoint")
    assert riemann_sum(f, tagged) == E(0.5, 0.5)


def test_riemann_constant_any_tags():
    f = LatticeFunction.coordinatewise(ScalarKernel.constant(2.5), dim=2)
    iv = interval((0, 0), (2, 2))
    for rule in ("left", "right", "midpoint", "random"):
        tagged = tag(uniform(iv, 3), rule, seed=5)
        assert riemann_sum(f, tagged) == E(5.0, 5.0)


def test_riemann_left_tags_quarter_grid():
    f = LatticeFunction.coordinatewise("t^2", dim=1)
    tagged = tag(uniform(interval((0,), (1,)), 4), "left")
    assert riemann_sum(f, tagged) == E(0.21875)


# -- integrate ------------------------------------------------------------------

def test_integrate_identity_kernel():
    f = LatticeFunction.coordinatewise("t", dim=2)
    result = integrate(f, UNIT2, ToleranceSchedule(1e-6, 24))
    assert result.converged and result.extrema_method == "exact"
    assert np.allclose(result.value.data, 0.5, atol=2e-6)
    assert result.lower.leq(result.value) and result.value.leq(result.upper)


def test_integrate_square_kernel_anisotropic_box():
    f = LatticeFunction.coordinatewise("t^2", dim=2)
    result = integrate(f, interval((0, 0), (2, 1)))
    assert result.converged
    assert result.value[0] == pytest.approx(8.0 / 3.0, rel=1e-6)
    assert result.value[1] == pytest.approx(1.0 / 3.0, rel=1e-6)


def test_integrate_swap_never_converges():
    result = integrate(LatticeFunction.swap(), UNIT2, ToleranceSchedule(1e-6, 24))
    assert not result.converged
    assert result.extrema_method == "corner"
    assert np.all(result.gap.data >= 1.0)  # stalls at the staircase envelope


def test_integrate_swap_gap_positive_at_every_depth():
    for depth in range(0, 7):
        result = integrate(
            LatticeFunction.swap(), UNIT2, ToleranceSchedule(1e-6, max(depth, 1))
        )
        assert not result.converged
        assert np.all(result.gap.data >= 0.99)


def test_integrate_degenerate_interval_is_exact_zero():
    f = LatticeFunction.coordinatewise("exp(t)", dim=2)
    x = E(0.3, -0.7)
    result = integrate(f, OrderInterval(x, x))
    assert result.converged and result.depth == 0
    assert result.value == E(0, 0) and result.gap == E(0, 0)


def test_integrate_reports_nonconvergence_instead_of_raising():
    f = LatticeFunction.coordinatewise("t", dim=1)
    result = integrate(f, interval((0,), (1,)), ToleranceSchedule(1e-12, 4))
    assert not result.converged
    assert result.depth == 4


def test_integrate_workers_bitwise_deterministic():
    f = LatticeFunction.coordinatewise(["t^2", "sin(t)", "exp(t)"], dim=3)
    iv = interval((0, 0, 0), (1, 2, 1))
    sched = ToleranceSchedule(1e-4, 18)
    seq = integrate(f, iv, sched, workers=1)
    par = integrate(f, iv, sched, workers=3)
    assert seq.value == par.value
    assert seq.lower == par.lower and seq.upper == par.upper
    assert seq.depth == par.depth


def test_integrate_result_serialization():
    f = LatticeFunction.coordinatewise("t", dim=1)
    d = integrate(f, interval((0,), (1,))).to_dict()
    assert set(d) >= {"value", "lower", "upper", "gap", "depth", "converged", "tol"}
    assert isinstance(d["value"], list)


def test_integrate_matches_simpson_oracle_spot():
    cases = [
        ("sin(t)", 0.0, 2.0),
        ("exp(t)", -1.0, 1.0),
        ("3*t^2 - 2*t", -0.5, 1.5),
    ]
    for src, a, b in cases:
        f = LatticeFunction.coordinatewise(src, dim=1)
        got = integrate(f, interval((a,), (b,))).value[0]
        expr = parse(src)
        want = adaptive_simpson(lambda t: eval_expr(expr, t), a, b)
        assert got == pytest.approx(want, abs=1e-6 * (1 + abs(want)))


# -- Darboux monotonicity, sandwich, algebra -----------------------------------

EXACT_KERNELS = ["t", "t^2", "t^3 - t", "2*t + 1"]


def test_darboux_net_monotone_under_refinement():
    rng = np.random.default_rng(123)
    f = LatticeFunction.coordinatewise(["t^2", "t^3 - t"], dim=2)
    iv = interval((-1, -1), (1.5, 2))
    slack = 1e-12
    for _ in range(120):
        p = random_partition(rng, iv)
        q = common_refinement(p, random_partition(rng, iv))
        assert refines(p, q)
        sp, sq = darboux_sums(f, p), darboux_sums(f, q)
        assert np.all(sp.lower.data <= sq.lower.data + slack)
        assert np.all(sq.upper.data <= sp.upper.data + slack)


def test_sandwich_lower_riemann_upper():
    rng = np.random.default_rng(321)
    f = LatticeFunction.coordinatewise(["t^2", "t"], dim=2)
    iv = interval((-1, 0), (1, 2))
    slack = 1e-12
    for k in range(100):
        p = random_partition(rng, iv)
        tagged = tag(p, "random", seed=k)
        sums = darboux_sums(f, p)
        r = riemann_sum(f, tagged)
        assert np.all(sums.lower.data <= r.data + slack)
        assert np.all(r.data <= sums.upper.data + slack)


def test_darboux_riemann_agreement_along_refinement():
    f = LatticeFunction.coordinatewise("t^2", dim=2)
    result = integrate(f, UNIT2, ToleranceSchedule(1e-5, 20))
    assert result.converged
    for k in (2, 5, 8):
        p = uniform(UNIT2, 1 << k)
        sums = darboux_sums(f, p)
        r = riemann_sum(f, tag(p, "midpoint"))
        gap_k = sums.upper - sums.lower
        assert np.all(np.abs(r.data - result.value.data) <= gap_k.data + 1e-5)


def test_linearity_of_the_integral():
    iv = interval((0, 0), (1, 2))
    sched = ToleranceSchedule(1e-6, 24)
    f = LatticeFunction.coordinatewise("t^2", dim=2)
    g = LatticeFunction.coordinatewise("sin(t)", dim=2)
    fg = LatticeFunction.coordinatewise("t^2 + sin(t)", dim=2)
    vf = integrate(f, iv, sched).value
    vg = integrate(g, iv, sched).value
    vfg = integrate(fg, iv, sched).value
    tol = 3 * 1e-6 * (1 + np.abs(vfg.data))
    assert np.all(np.abs(vfg.data - (vf + vg).data) <= tol)


def test_scaling_by_an_element():
    iv = interval((0, 0), (1, 1))
    sched = ToleranceSchedule(1e-6, 24)
    f = LatticeFunction.coordinatewise("t^2", dim=2)
    scaled = LatticeFunction.coordinatewise(["2*t^2", "-3*t^2"], dim=2)
    c = E(2.0, -3.0)
    vs = integrate(scaled, iv, sched).value
    vf = integrate(f, iv, sched).value
    tol = 4 * 1e-6 * (1 + np.abs(vs.data))
    assert np.all(np.abs(vs.data - (c * vf).data) <= tol)


def test_monotonicity_and_triangle_inequality():
    iv = interval((-1, -1), (1, 1))
    sched = ToleranceSchedule(1e-6, 24)
    f = LatticeFunction.coordinatewise("t^3 - t", dim=2)
    g = LatticeFunction.coordinatewise("t^3 - t + 1", dim=2)
    vf = integrate(f, iv, sched).value
    vg = integrate(g, iv, sched).value
    assert np.all(vf.data <= vg.data + 2e-6)
    absf = LatticeFunction.coordinatewise("abs(t^3 - t)", dim=2)
    va = integrate(absf, iv, sched).value
    assert np.all(np.abs(vf.data) <= va.data + 2e-6 * (1 + np.abs(va.data)))


def test_product_of_integrable_kernels_integrates():
    iv = interval((0, 0), (1, 1))
    f = LatticeFunction.coordinatewise("t^2", dim=2)
    g = LatticeFunction.coordinatewise("sin(t)", dim=2)
    prod = f.product(g)
    result = integrate(prod, iv)
    assert result.converged
    want = adaptive_simpson(lambda t: t * t * math.sin(t), 0.0, 1.0)
    assert result.value[0] == pytest.approx(want, abs=1e-6 * (1 + abs(want)))


def test_monotone_kernel_exact_gap_law():
    f = LatticeFunction.coordinatewise(ScalarKernel.identity(), dim=3)
    iv = interval((0, -1, 2), (1, 3, 2.5))
    width = iv.hi - iv.lo
    fb = f.eval(iv.hi) - f.eval(iv.lo)
    for n in (1, 2, 4, 8, 16):
        sums = darboux_sums(f, uniform(iv, n))
        gap = sums.upper - sums.lower
        law = (1.0 / n) * (width * fb)
        assert np.all(np.abs(gap.data - law.data) <= 1e-12)


def test_projection_compatibility_of_integrals():
    # Intervals agreeing on a band have integrals agreeing on that band.
    sched = ToleranceSchedule(1e-7, 24)
    f = LatticeFunction.coordinatewise("t^2", dim=3)
    band = Band({0, 2}, 3)
    a, b = E(0, 0, 1), E(1, 2, 3)
    c, d = E(0, -5, 1), E(1, 7, 3)  # same on atoms 0 and 2
    ia = integrate(f, OrderInterval(a, b), sched).value
    ic = integrate(f, OrderInterval(c, d), sched).value
    pa, pc = band.project(ia), band.project(ic)
    assert np.all(np.abs(pa.data - pc.data) <= 1e-6 * (1 + np.abs(pa.data)))


def test_uniform_limit_stability():
    iv = interval((0, 0), (1, 1))
    sched = ToleranceSchedule(1e-7, 24)
    base = integrate(LatticeFunction.coordinatewise("t^2", dim=2), iv, sched).value
    for n in (10, 100, 1000):
        eps = 1.0 / n
        fn = LatticeFunction.coordinatewise(f"t^2 + 1/{n}", dim=2)
        vn = integrate(fn, iv, sched).value
        bound = eps * (iv.hi - iv.lo).data + 2e-6
        assert np.all(np.abs(vn.data - base.data) <= bound)


# -- signed integrals -----------------------------------------------------------

def test_signed_identity_kernel_incomparable_endpoints():
    f = LatticeFunction.coordinatewise("t", dim=2)
    result = signed_integrate(f, E(1, 0), E(0, 1))
    assert np.allclose(result.value.data, [-0.5, 0.5], atol=2e-6)
    assert result.converged


def test_signed_equal_endpoints_exact_zero():
    f = LatticeFunction.coordinatewise("exp(t)", dim=2)
    x = E(0.25, -1.5)
    result = signed_integrate(f, x, x)
    assert result.value == E(0, 0)
    assert result.gap == E(0, 0)


def test_signed_matches_plain_integral_when_ordered():
    f = LatticeFunction.coordinatewise("t^2", dim=2)
    a, b = E(0, 0), E(1, 2)
    signed = signed_integrate(f, a, b)
    plain = integrate(f, OrderInterval(a, b))
    assert signed.value == plain.value


def test_signed_antisymmetry_exact_on_random_pairs():
    rng = np.random.default_rng(777)
    f = LatticeFunction.coordinatewise(["t", "t^2", "t^3 - t"], dim=3)
    sched = ToleranceSchedule(1e-4, 16)
    for _ in range(50):
        a = Element(rng.uniform(-1, 1, 3))
        b = Element(rng.uniform(-1, 1, 3))
        ab = signed_integrate(f, a, b, sched)
        ba = signed_integrate(f, b, a, sched)
        assert ab.value == -1.0 * ba.value  # exact band swap
        # |signed| identity per atom, exact
        box = integrate(f, OrderInterval(a.inf(b), a.sup(b)), sched)
        assert abs(ab.value) == abs(box.value)


def test_signed_abs_identity_per_atom():
    rng = np.random.default_rng(778)
    f = LatticeFunction.coordinatewise(["t^2", "t"], dim=2)
    sched = ToleranceSchedule(1e-5, 18)
    for _ in range(50):
        a = Element(rng.uniform(-1, 1, 2))
        b = Element(rng.uniform(-1, 1, 2))
        signed = signed_integrate(f, a, b, sched)
        box = integrate(f, OrderInterval(a.inf(b), a.sup(b)), sched)
        eq_atoms = a.data == b.data
        want = np.where(eq_atoms, 0.0, np.abs(box.value.data))
        assert np.array_equal(np.abs(signed.value.data), want)


# -- split ------------------------------------------------------------------------

def test_split_diagonal_midpoint():
    f = LatticeFunction.coordinatewise("t", dim=2)
    left, right = split_integrate(f, UNIT2, E(0.5, 0.5))
    assert np.allclose(left.value.data, 0.125, atol=2e-6)
    assert np.allclose(right.value.data, 0.375, atol=2e-6)


def test_split_at_lo_is_zero_plus_whole():
    f = LatticeFunction.coordinatewise("t^2", dim=2)
    left, right = split_integrate(f, UNIT2, UNIT2.lo)
    assert left.value == E(0, 0)
    whole = integrate(f, UNIT2)
    assert np.allclose(right.value.data, whole.value.data, atol=4e-6)


def test_split_non_diagonal_point_additive():
    f = LatticeFunction.coordinatewise("t", dim=2)
    c = E(0.5, 0.2)
    left, right = split_integrate(f, UNIT2, c, ToleranceSchedule(1e-6, 24))
    whole = integrate(f, UNIT2, ToleranceSchedule(1e-6, 24))
    total = left.value + right.value
    assert np.all(np.abs(total.data - whole.value.data) <= 2e-6 * (1 + np.abs(whole.value.data)))
    # per-atom scalar splits
    assert left.value[0] == pytest.approx(0.5**2 / 2, abs=2e-6)
    assert left.value[1] == pytest.approx(0.2**2 / 2, abs=2e-6)


def test_split_rejects_outside_point():
    f = LatticeFunction.coordinatewise("t", dim=2)
    with pytest.raises(ValueError):
        split_integrate(f, UNIT2, E(2, 0.5))
