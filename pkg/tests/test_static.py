import itertools
import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from strutnet import (CrossSection, FeOrders, Material, MixedSolution, SingularSystemError,
                      StaticProblem, check_solution, convergence_rate, convergence_study, error_norms,
                      layout, refine, single_strut, solve_static, zigzag_cylinder)
from strutnet.loads import ConstantLoad, bulge_load
from strutnet.static import NotNestedError
from conftest import UNIT_MATERIAL, UNIT_SECTION, StrutwiseLoad, graph


def total_size(net, orders):
    return layout(net, orders).total


def small_cylinder():
    return zigzag_cylinder(4, 3, 1.0, 2.0, cross_section=UNIT_SECTION, material=UNIT_MATERIAL)


def test_zero_load_gives_exact_zero():
    sol = solve_static(StaticProblem(small_cylinder(), FeOrders(1), None))
    assert sol.is_zero()
    assert sol.info.residual == 0.0


def test_free_beam_against_closed_form():
    """Free-free straight beam under a zero-mean transverse cosine load."""
    length, ei = 2.0, 1.0 / 12.0
    net = refine(single_strut((0, 0, 0), (length, 0, 0), CrossSection.square(1.0), Material(1.0, 1.0)), 16)
    kw = 2 * np.pi / length

    def load(x):
        return np.column_stack([0 * x[:, 0], np.cos(kw * x[:, 0]), 0 * x[:, 0]])

    sol = solve_static(StaticProblem(net, FeOrders(1), load))
    # EI w'''' = -f with free ends and zero mean; the linear term balances the end moments
    slope = -length / (2 * ei * kw**2)

    def w(x, offset=0.0):
        return np.cos(kw * x) / (ei * kw**4) + x**2 / (2 * ei * kw**2) + slope * x + offset

    xs = np.linspace(0, length, 200001)
    offset = -trapezoid(w(xs), xs) / length
    x = net.positions[:, 0]
    exact = w(x, offset)
    assert np.abs(sol.U[:, 1] - exact).max() <= 2e-5 * np.abs(exact).max()
    rotation = -kw * np.sin(kw * x) / (ei * kw**4) + x / (ei * kw**2) + slope
    assert np.abs(sol.Omega[:, 2] - rotation).max() <= 2e-5 * np.abs(rotation).max()
    np.testing.assert_allclose(sol.U[:, [0, 2]], 0.0, atol=1e-12 * np.abs(exact).max())


@pytest.mark.parametrize("k,exact", [(3, True), (1, False)])
def test_polynomial_exactness_under_refinement(k, exact):
    # strut-wise constant loads give quartic displacements, captured exactly from k = 3
    net = zigzag_cylinder(3, 2, 1.0, 2.0, end_ring=False, cross_section=UNIT_SECTION, material=UNIT_MATERIAL)
    load = StrutwiseLoad(net, np.random.default_rng(3).normal(size=(net.n_struts, 3)))
    coarse = solve_static(StaticProblem(net, FeOrders(k), load))
    fine = solve_static(StaticProblem(refine(net, 2), FeOrders(k), load))
    report = error_norms(coarse, fine)
    if exact:
        assert report.max_relative() <= 1e-8
    else:
        assert report.relative("u", "L2") > 1e-3


def test_uniform_load_is_carried_by_mean_multiplier_alone():
    net = small_cylinder()
    sol = solve_static(StaticProblem(net, FeOrders(2), ConstantLoad((0.3, -1.0, 0.5))))
    np.testing.assert_allclose(sol.alpha, [-0.3, 1.0, -0.5], rtol=1e-12)
    # bending displacement scale |f| L^4 / EI of the struts
    scale = net.lengths.mean()**4 / (UNIT_MATERIAL.young_modulus * UNIT_SECTION.inertia_n)
    assert np.abs(sol.u).max() <= 1e-12 * scale
    assert np.abs(sol.P_plus).max() <= 1e-12 * net.lengths.mean()


def test_constraints_hold_for_bulge_load():
    net = zigzag_cylinder(6, 4, 1.5e-3, 6e-3)
    sol = solve_static(StaticProblem(net, FeOrders(1), bulge_load(6e-3)))
    diag = check_solution(net, sol)
    for name, value, scale in diag.items():
        assert value <= 1e-9 * scale, name
    assert sol.info.residual <= 1e-10


def test_check_detects_corrupted_vertex_displacement():
    net = small_cylinder()
    sol = solve_static(StaticProblem(net, FeOrders(1), ConstantLoad((0, 1, 0))))
    before = check_solution(net, sol)
    sol.U[2, 1] += 1e-3
    after = check_solution(net, sol)
    assert after.continuity_u == pytest.approx(1e-3, rel=1e-6)
    assert before.continuity_u < 1e-12
    assert not after.passed()


def test_unbalanced_load_is_absorbed_by_mean_multiplier():
    net = small_cylinder()
    value = np.array([0.0, 2.0, 0.0])
    sol = solve_static(StaticProblem(net, FeOrders(1), ConstantLoad(value)))
    assert np.abs(sol.alpha).max() > 0
    # the mean multiplier carries the resultant force per unit length
    np.testing.assert_allclose(sol.alpha, -value, rtol=1e-8, atol=1e-12)
    assert check_solution(net, sol).passed()


def test_self_stressed_network_is_singular():
    rng = np.random.default_rng(0)
    net = graph(rng.normal(size=(5, 3)), list(itertools.combinations(range(5), 2)))
    with pytest.raises(SingularSystemError) as err:
        solve_static(StaticProblem(net, FeOrders(1), ConstantLoad((0, 1, 0)), method="dense"))
    assert err.value.kernel_dimension >= 1


def test_decode_encode_round_trip(rng):
    net = small_cylinder()
    orders = FeOrders(2)
    sol = MixedSolution.decode(net, orders, rng.normal(size=total_size(net, orders)))
    np.testing.assert_array_equal(MixedSolution.decode(net, orders, sol.encode()).encode(), sol.encode())
    with pytest.raises(ValueError):
        MixedSolution.decode(net, orders, np.zeros(5))


def test_error_norms_of_identical_solutions_vanish(rng):
    net = small_cylinder()
    orders = FeOrders(1)
    sol = MixedSolution.decode(net, orders, rng.normal(size=total_size(net, orders)))
    report = error_norms(sol, sol)
    assert report.max_relative() <= 1e-14


def test_error_norms_of_constant_offset():
    net = small_cylinder()
    orders = FeOrders(1)
    zero = MixedSolution.decode(net, orders, np.zeros(total_size(net, orders)))
    shifted = MixedSolution.decode(net, orders, np.zeros(total_size(net, orders)))
    shifted.u[:] = [0.3, 0.0, 0.4]
    report = error_norms(shifted, zero)
    assert report.error("u", "L2") == pytest.approx(0.5 * math.sqrt(net.total_length), rel=1e-13)
    assert report.error("u", "H1") == pytest.approx(0.0, abs=1e-14)


def test_error_norms_across_refinement():
    net = small_cylinder()
    orders = FeOrders(1)
    coarse = MixedSolution.decode(net, orders, np.zeros(total_size(net, orders)))
    fine_net = refine(net, 2)
    fine = MixedSolution.decode(fine_net, orders, np.zeros(total_size(fine_net, orders)))
    # a linear field along each coarse strut restricts exactly
    coarse.u[:, :, 0] = [0.0, 0.5, 1.0]
    fine.u[:, :, 0] = np.array([[0.0, 0.25, 0.5], [0.5, 0.75, 1.0]])[np.arange(fine_net.n_struts) % 2]
    report = error_norms(coarse, fine)
    assert report.error("u", "L2") == pytest.approx(0.0, abs=1e-14)
    assert report.error("u", "H1") == pytest.approx(0.0, abs=1e-12)


def test_non_nested_reference_rejected():
    a = small_cylinder()
    b = zigzag_cylinder(4, 3, 1.1, 2.0, cross_section=UNIT_SECTION, material=UNIT_MATERIAL)
    orders = FeOrders(1)
    sa = MixedSolution.decode(a, orders, np.zeros(total_size(a, orders)))
    sb = MixedSolution.decode(refine(b, 2), orders, np.zeros(total_size(refine(b, 2), orders)))
    with pytest.raises(NotNestedError):
        error_norms(sa, sb)
    with pytest.raises(NotNestedError):
        convergence_study(a, orders, None, [1, 3], 4)


def test_rate_formula():
    assert convergence_rate(0.041110796760794, 0.015348501778952, 1.0, 0.5) == pytest.approx(1.4214, abs=1e-4)
    assert convergence_rate(1.0, 0.25, 2.0, 1.0) == pytest.approx(2.0)
    assert convergence_rate(0.1, 0.1, 1.0, 0.5) == 0.0
    assert convergence_rate(0.0, 0.1, 1.0, 0.5) is None


def test_convergence_study_rows_and_rates():
    net = small_cylinder()
    rows = convergence_study(net, FeOrders(1), ConstantLoad((0, 1, 0)), [1, 2], 4)
    assert [r.splits for r in rows[:2]] == [1, 1]
    by_level = {}
    for r in rows:
        by_level.setdefault(r.level, {})[(r.quantity, r.norm)] = r
    for key, r in by_level[1].items():
        prev = by_level[0][key]
        if isinstance(r.rate, float) and not isinstance(prev.rate, str):
            assert r.rate == pytest.approx(math.log(r.error / prev.error) / math.log(r.h / prev.h))
