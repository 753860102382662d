import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from kirchfrac.benchmark import (
    BUBBLE_GRADSQ,
    CSV_HEADER,
    ManufacturedProblem,
    bubble,
    bubble_grad,
    bubble_laplacian,
    rate,
    solve_and_measure,
    source_eval,
    table_time_graded,
    table_time_uniform,
    uniform_time_steps,
    verify_manufactured,
)
from kirchfrac.exceptions import ParameterDomainError


def test_source_examples():
    # frozen from the closed form evaluated independently with mpmath
    assert source_eval(0.5, 0.5, 0.5, 1.0) == pytest.approx(0.4109447383963529, rel=1e-14)
    # on the boundary only the diffusion and memory terms survive
    t, a = 0.7, 0.4
    coeff = t**a + t ** (3 * a) / 45 - t ** (1 + a) / (1 + a)
    assert source_eval(a, 0.0, 0.3, t) == pytest.approx(-coeff * 2 * (0.09 - 0.3), rel=1e-14)
    # at t = 0 only the Caputo term survives
    assert source_eval(0.6, 0.5, 0.5, 0.0) == pytest.approx(math.gamma(1.6) / 16, rel=1e-14)


def test_source_against_finite_differences():
    alpha, x, y = 0.6, 0.3, 0.7
    t = 0.45
    step = 1e-4
    lap = ((bubble(x + step, y) - 2 * bubble(x, y) + bubble(x - step, y))
           + (bubble(x, y + step) - 2 * bubble(x, y) + bubble(x, y - step))) / step**2
    assert lap == pytest.approx(bubble_laplacian(x, y), rel=1e-6)
    g = bubble_grad(x, y)
    assert g[0] == pytest.approx((bubble(x + step, y) - bubble(x - step, y)) / (2 * step), rel=1e-7)
    xs = np.linspace(0, 1, 2001)
    X, Y = np.meshgrid(xs, xs)
    gx, gy = bubble_grad(X, Y)
    assert trapezoid(trapezoid(gx**2 + gy**2, xs), xs) == pytest.approx(BUBBLE_GRADSQ, rel=1e-5)
    assert source_eval(alpha, x, y, t) == pytest.approx(
        math.gamma(1 + alpha) * bubble(x, y)
        - (t**alpha + t ** (3 * alpha) / 45 - t ** (1 + alpha) / (1 + alpha)) * lap, rel=1e-6)


@pytest.mark.parametrize("alpha", [0.4, 0.5, 0.6])
def test_manufactured_residual(alpha):
    out = verify_manufactured(alpha)
    assert out["samples"] == 125
    assert out["max_residual"] <= 1e-10


def test_exact_solution_callables():
    problem = ManufacturedProblem(0.5)
    assert problem.exact(0.25)(0.5, 0.5) == pytest.approx(0.5 * 0.0625)
    gx, gy = problem.exact_grad(1.0)(0.0, 0.5)
    assert gx == pytest.approx(0.25) and gy == pytest.approx(0.0)


def test_rate_examples():
    assert rate(4e-2, 1e-2, 0.5, 0.25) == pytest.approx(2.0)
    assert rate(5.71e-3, 1.51e-3, 1 / 4, 1 / 8) == pytest.approx(1.9189, abs=1e-4)
    with pytest.raises(ParameterDomainError):
        rate(0.0, 1.0, 0.5, 0.25)


def test_uniform_time_steps():
    assert [uniform_time_steps(M, 0.6) for M in (3, 5, 9, 17)] == [6, 14, 38, 112]
    assert [uniform_time_steps(M, 0.4) for M in (3, 5, 9, 17)] == [15, 55, 243, 1191]


def test_errors_decay_with_refinement():
    coarse = solve_and_measure(0.5, 5, 8, 4.0, "graded")
    fine = solve_and_measure(0.5, 9, 16, 4.0, "graded")
    assert fine.error_l2 < coarse.error_l2 and fine.error_h1 < coarse.error_h1
    assert coarse.levels_l2.shape == (8,)


def test_table_csv_shape():
    table = table_time_graded(0.6, MN_list=(3, 5))
    lines = table.to_csv().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 3
    first = lines[1].split(",")
    assert first[0:2] == ["3", "3"] and first[6] == "" and first[4] == "two_part"
    assert "two_part" in table.to_text()
    with pytest.raises(ParameterDomainError):
        table_time_graded(0.6, mesh_kind="uniform")


@pytest.mark.slow
def test_uniform_time_rates_largest_run():
    # outside the gate: N runs up to 1191 on M = 17
    table = table_time_uniform(0.4)
    assert [row.N for row in table.rows] == [15, 55, 243, 1191]
    rates = [row.rate_h1 for row in table.rows[1:]]
    assert all(0.3 <= x <= 0.5 for x in rates), rates
