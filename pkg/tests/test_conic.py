"""Conic layer: solver oracles, residual gates, and validation errors."""

import numpy as np
import pytest

from staraoi.conic import (COMPLEX_VECTOR, HERMITIAN, SCALAR, ConicProblem,
                           DiagConstraint, INFEASIBLE, LinConstraint, LinExpr,
                           OPTIMAL, PSDConstraint, SOCConstraint, VarBlock,
                           linexpr_value, solve_conic, validate_problem)


def _scalar_problem(constraints):
    return ConicProblem([VarBlock("x", SCALAR, 1)], LinExpr({"x": -1.0}),
                        constraints)


def test_minimize_with_lower_bound():
    # minimize x subject to x >= 3, posed as maximize -x
    problem = _scalar_problem([LinConstraint(LinExpr({"x": 1.0}, -3.0))])
    solution = solve_conic(problem)
    assert solution.status == OPTIMAL
    assert solution.values["x"] == pytest.approx(3.0, abs=1e-6)
    assert solution.objective == pytest.approx(-3.0, abs=1e-6)


def test_correlation_matrix_offdiagonal():
    # maximize tr(C X) with C = [[0,1],[1,0]] over PSD X with unit diagonal;
    # brute force over 2x2 correlation matrices puts the optimum at 2.
    c = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    problem = ConicProblem(
        [VarBlock("x", HERMITIAN, 2)], LinExpr({"x": c}),
        [PSDConstraint("x"), DiagConstraint({"x": 1.0}, np.ones(2))])
    solution = solve_conic(problem)
    assert solution.status == OPTIMAL
    assert solution.objective == pytest.approx(2.0, abs=1e-6)
    assert solution.values["x"][0, 1] == pytest.approx(1.0, abs=1e-6)


def test_infeasible_box():
    problem = _scalar_problem([LinConstraint(LinExpr({"x": 1.0}, -1.0)),
                               LinConstraint(LinExpr({"x": -1.0}))])
    solution = solve_conic(problem)
    assert solution.status == INFEASIBLE
    assert solution.values == {}
    assert np.isnan(solution.objective)


def test_second_order_cone():
    # maximize Re(c^H w) over the unit ball: optimum is |c| at w = c / |c|.
    c = np.array([3.0, 4.0], dtype=complex)
    problem = ConicProblem(
        [VarBlock("w", COMPLEX_VECTOR, 2)], LinExpr({"w": c}),
        [SOCConstraint(LinExpr({}, 1.0), ("w",))])
    solution = solve_conic(problem)
    assert solution.status == OPTIMAL
    assert solution.objective == pytest.approx(5.0, abs=1e-6)
    np.testing.assert_allclose(solution.values["w"], c / 5.0, atol=1e-6)


def test_residuals_within_gate():
    # equality and inequality residuals on the returned point stay small
    problem = ConicProblem(
        [VarBlock("x", SCALAR, 1), VarBlock("y", SCALAR, 1)],
        LinExpr({"x": 1.0, "y": 1.0}),
        [LinConstraint(LinExpr({"x": 1.0, "y": 2.0}, -4.0), sense="eq"),
         LinConstraint(LinExpr({"x": -1.0}, 1.5)),
         LinConstraint(LinExpr({"y": -1.0}, 2.0))])
    solution = solve_conic(problem)
    assert solution.status == OPTIMAL
    x, y = solution.values["x"], solution.values["y"]
    assert abs(x + 2 * y - 4.0) <= 1e-7
    assert x <= 1.5 + 1e-7 and y <= 2.0 + 1e-7
    assert solution.objective == pytest.approx(2.75, abs=1e-6)


def test_shared_diagonal_budget():
    # two PSD blocks sharing one diagonal budget: pushing all mass into the
    # block under the objective drives its trace to the full budget
    problem = ConicProblem(
        [VarBlock("a", HERMITIAN, 2), VarBlock("b", HERMITIAN, 2)],
        LinExpr({"a": np.eye(2, dtype=complex)}),
        [PSDConstraint("a"), PSDConstraint("b"),
         DiagConstraint({"a": 1.0, "b": 1.0}, np.ones(2))])
    solution = solve_conic(problem)
    assert solution.status == OPTIMAL
    assert solution.objective == pytest.approx(2.0, abs=1e-6)
    np.testing.assert_allclose(np.real(np.diag(solution.values["a"] +
                                               solution.values["b"])),
                               1.0, atol=1e-7)


def test_determinism():
    c = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    problem = ConicProblem(
        [VarBlock("x", HERMITIAN, 2)], LinExpr({"x": c}),
        [PSDConstraint("x"), DiagConstraint({"x": 1.0}, np.ones(2))])
    first = solve_conic(problem)
    second = solve_conic(problem)
    assert first.objective == second.objective
    np.testing.assert_array_equal(first.values["x"], second.values["x"])


def test_linexpr_value():
    expr = LinExpr({"x": 2.0, "w": np.array([1.0 + 1j, 0.0])}, 0.5)
    values = {"x": 3.0, "w": np.array([2.0 - 1j, 5.0])}
    # Re((1-1j)(2-1j)) = Re(1 - 3j) = 1
    assert linexpr_value(expr, values) == pytest.approx(7.5, rel=1e-12)
    with pytest.raises(ValueError):
        LinExpr({"x": 1.0}).add("x", 2.0)


def test_validation_errors():
    blocks = [VarBlock("x", SCALAR, 1), VarBlock("w", COMPLEX_VECTOR, 2),
              VarBlock("p", HERMITIAN, 2)]
    with pytest.raises(ValueError):
        validate_problem(ConicProblem(blocks, LinExpr({"ghost": 1.0}), []))
    with pytest.raises(ValueError):
        validate_problem(ConicProblem(blocks, LinExpr(),
                                      [PSDConstraint("w")]))
    with pytest.raises(ValueError):
        validate_problem(ConicProblem(blocks, LinExpr(),
                                      [SOCConstraint(LinExpr({"x": 1.0}), ("p",))]))
    with pytest.raises(ValueError):
        validate_problem(ConicProblem(blocks, LinExpr(),
                                      [SOCConstraint(LinExpr({"x": 1.0}), ())]))
    with pytest.raises(ValueError):
        validate_problem(ConicProblem(blocks, LinExpr(),
                                      [DiagConstraint({"p": 1.0}, np.ones(3))]))
    with pytest.raises(ValueError):
        validate_problem(ConicProblem(blocks, LinExpr(),
                                      [LinConstraint(LinExpr({"x": 1.0}),
                                                     sense="le")]))
    with pytest.raises(ValueError):
        VarBlock("bad", "tensor", 2)
