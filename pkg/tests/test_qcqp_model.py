import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from qcqpcert.conic import Sense
from qcqpcert.examples_bench import example41, instance_files
from qcqpcert.qcqp_model import (InstanceError, QcqpInstance, QuadraticForm, brute_force_zeta,
                                 eval_constraint, feasibility_residual, homogenize, lagrangian,
                                 multiplier_combination, parse_instance, serialize_instance)

INSTANCES = Path(__file__).resolve().parents[1] / "instances"


def doc(**over):
    base = {"n": 1, "objective": {"A": [[1]], "b": [0], "c": 0},
            "constraints": [{"A": [[1]], "b": [-2.5], "c": 4, "sense": "leq"}]}
    base.update(over)
    return base


def test_parse_minimal_document():
    inst = parse_instance(json.dumps(doc()))
    assert inst.n == 1 and inst.m == 1 and not inst.nonneg_vars
    assert inst.constraints[0][1] == Sense.LEQ
    assert eval_constraint(inst, 1, [2.0]) == pytest.approx(4 - 10 + 4)


@pytest.mark.parametrize("bad, msg", [
    ({"n": 0}, "positive integer"),
    ({"n": True}, "positive integer"),
    ({"objective": {"A": [[1, 2], [2, 1]], "b": [0], "c": 0}}, "shape"),
    ({"objective": {"A": [[1]], "b": [0, 1], "c": 0}}, "length"),
    ({"objective": {"A": [[1]], "b": [0], "c": "x"}}, "finite number"),
    ({"constraints": [{"A": [[1]], "b": [0], "c": 0, "sense": "geq"}]}, "sense"),
    ({"constraints": {}}, "list"),
    ({"extra": 1}, "unknown"),
    ({"nonneg_vars": True}, "'eq' constraints"),
])
def test_parse_rejects(bad, msg):
    with pytest.raises(InstanceError, match=msg):
        parse_instance(doc(**bad))


def test_parse_rejects_asymmetric_and_non_json():
    d = {"n": 2, "objective": {"A": [[0, 1], [0, 0]], "b": [0, 0], "c": 0}}
    with pytest.raises(InstanceError, match="symmetric"):
        parse_instance(d)
    with pytest.raises(InstanceError, match="invalid JSON"):
        parse_instance("{not json")
    with pytest.raises(InstanceError):
        parse_instance({"n": 1})


def test_objective_constant_becomes_shift():
    inst = parse_instance(doc(objective={"A": [[1]], "b": [0], "c": 3.5}))
    assert inst.objective.c == 0.0 and inst.objective_shift == 3.5
    back = parse_instance(serialize_instance(inst))
    assert back == inst


@pytest.mark.parametrize("name", sorted(instance_files()))
def test_schema_roundtrip_on_corpus(name):
    inst = instance_files()[name]
    assert parse_instance(json.dumps(serialize_instance(inst))) == inst


@pytest.mark.parametrize("name", sorted(instance_files()))
def test_shipped_instance_files_are_current(name):
    shipped = parse_instance((INSTANCES / name).read_text())
    assert shipped == instance_files()[name]


@st.composite
def instance_and_point(draw):
    n = draw(st.integers(1, 3))
    m = draw(st.integers(0, 3))
    el = st.floats(-5, 5, allow_nan=False)

    def form():
        B = draw(arrays(np.float64, (n, n), elements=el))
        return QuadraticForm((B + B.T) / 2, draw(arrays(np.float64, n, elements=el)), draw(el))

    inst = QcqpInstance(n, form(), tuple((form(), Sense.LEQ) for _ in range(m)))
    u = draw(arrays(np.float64, n, elements=el))
    y = draw(arrays(np.float64, m, elements=st.floats(0, 5)))
    return inst, u, y


@given(instance_and_point())
def test_homogenized_forms_agree_with_quadratics(data):
    inst, u, _ = data
    hom = homogenize(inst)
    x = np.concatenate([[1.0], u])
    X = np.outer(x, x)
    for k, q in enumerate(inst.forms()):
        assert np.sum(hom.Qs[k] * X) == pytest.approx(q(u), rel=1e-9, abs=1e-9)
    assert np.sum(hom.H * X) == 1.0
    assert hom.dim == inst.n + 1 and hom.m == inst.m


@given(instance_and_point())
def test_lagrangian_is_the_weighted_sum(data):
    inst, u, y = data
    L = lagrangian(inst, u, y)
    direct = inst.objective(u) + sum(yk * q(u) for yk, (q, _) in zip(y, inst.constraints))
    assert L.value == pytest.approx(direct, rel=1e-9, abs=1e-9)
    A, b, _ = multiplier_combination(inst, y)
    assert np.allclose(L.hess, 2 * A) and np.allclose(L.grad, 2 * (A @ u + b))


def test_feasibility_residual():
    inst, _ = example41(1.0)
    assert feasibility_residual(inst, [1.0]) == 0.0
    assert feasibility_residual(inst, [0.0]) == pytest.approx(4.0)   # q1(0) = 4 alpha, q2(0) < 0
    assert feasibility_residual(inst, [2.5]) == pytest.approx(0.25)  # q2(2.5) = -(0.5)(-0.5)
    with pytest.raises(ValueError):
        feasibility_residual(inst, [1.0, 2.0])


@pytest.mark.parametrize("alpha, u, zeta", [(1.0, 1.0, 1.0), (2.5, 3.0, 9.0), (5.0, 4.0, 16.0)])
def test_grid_oracle_on_example41(alpha, u, zeta):
    inst, _ = example41(alpha)
    est = brute_force_zeta(inst, (-10, 10), 401)
    assert est.feasible_found
    assert est.upper_bound == pytest.approx(zeta, abs=1e-9)
    assert est.argmin[0] == pytest.approx(u, abs=1e-9)


def test_grid_oracle_restores_equalities():
    # min -u1 u2 on u1 + u2 = 2, u >= 0: grid points only satisfy the line to cell accuracy
    inst = QcqpInstance(2, QuadraticForm([[0, -0.5], [-0.5, 0]], [0, 0]),
                        ((QuadraticForm(np.zeros((2, 2)), [0.5, 0.5], -2.0), Sense.EQ),),
                        nonneg_vars=True)
    est = brute_force_zeta(inst, (0, 10), 201)
    assert est.upper_bound == pytest.approx(-1.0, abs=1e-9)
    assert feasibility_residual(inst, est.argmin) <= 1e-12


def test_grid_oracle_infeasible_and_limits():
    inst = QcqpInstance(1, QuadraticForm([[1]], [0]), ((QuadraticForm([[0]], [0], 1.0), Sense.LEQ),))
    assert not brute_force_zeta(inst, (-1, 1), 11).feasible_found
    big = QcqpInstance(5, QuadraticForm(np.eye(5), np.zeros(5)))
    with pytest.raises(ValueError):
        brute_force_zeta(big)
    with pytest.raises(ValueError):
        brute_force_zeta(inst, (-1, 1), 5)
