import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import minimize_scalar

from factories import planted_A_prime
from qcqpcert.certifier import (CONDITIONS, FAILS, HOLDS, INCONCLUSIVE, CertifyOptions,
                                check_A_prime, check_diagram, check_saddle_point, certify,
                                kkt_multipliers, lagrangian_dual_value, polish_dual, values_close,
                                witness_A_to_B, witness_B_to_A)
from qcqpcert.conic import ConicCertificate
from qcqpcert.examples_bench import (certify_options_for, example41, example42, example43,
                                     example44, table1_statuses, trivial_instance)
from qcqpcert.qcqp_model import homogenize
from qcqpcert.sdp_relaxation import build_primal_sdp, sdp_kkt_residual
from qcqpcert.sdp_solver import solve_dual


def test_values_close():
    assert values_close(1.0, 1.0 + 1e-7)
    assert not values_close(1.0, 1.01)
    assert values_close(float("-inf"), float("-inf"))
    assert not values_close(float("-inf"), -1e12)


def test_check_A_prime_alpha1():
    inst, _ = example41(1.0)
    chk = check_A_prime(inst, [1.0], [2 / 3, 0.0])
    assert chk.status == HOLDS and chk.bar_status == HOLDS
    assert chk.hess_min_eig == pytest.approx(1 + 2 / 3)
    assert check_A_prime(inst, [1.0], [1.0, 0.0]).status == FAILS    # not stationary
    assert check_A_prime(inst, [0.0], [0.0, 0.0]).status == FAILS    # infeasible
    with pytest.raises(ValueError):
        check_A_prime(inst, [1.0], [1.0])


def test_psd_but_not_pd_at_alpha2():
    # alpha = 2, u = 2, y1 = 5 forces y2 = 2 y1 - 4 = 6 and hess 2 (1 + y1 - y2) = 0
    inst, _ = example41(2.0)
    chk = check_A_prime(inst, [2.0], [5.0, 6.0])
    assert chk.status == HOLDS and chk.bar_status == FAILS
    assert check_saddle_point(inst, [2.0], [5.0, 6.0]).status == HOLDS


def test_kkt_multipliers_alpha1():
    y, res = kkt_multipliers(example41(1.0)[0], [1.0])
    assert np.allclose(y, [2 / 3, 0.0], atol=1e-12) and res <= 1e-12


@given(st.floats(0, 6), st.floats(0, 5), st.floats(0, 5))
def test_dual_function_matches_direct_minimization(alpha, y1, y2):
    inst, _ = example41(alpha)
    forms = [inst.objective] + [q for q, _ in inst.constraints]
    w = [1.0, y1, y2]
    a = sum(wk * f.A[0, 0] for wk, f in zip(w, forms))
    phi = lagrangian_dual_value(inst, [y1, y2])
    if a < -1e-6:
        assert phi == float("-inf")
    elif a > 1e-3:
        ref = minimize_scalar(lambda u: sum(wk * f([u]) for wk, f in zip(w, forms)),
                              bracket=(-100, 100), tol=1e-12).fun
        assert phi == pytest.approx(ref, rel=1e-7, abs=1e-7)


def test_dual_function_closed_form_value():
    assert lagrangian_dual_value(example41(1.0)[0], [2 / 3, 0.0]) == pytest.approx(1.0, abs=1e-12)


def test_witness_roundtrip_and_refusals():
    inst, _ = example41(1.0)
    cert = witness_A_to_B(inst, [1.0], [2 / 3, 0.0])
    u, y = witness_B_to_A(inst, cert)
    assert np.allclose(u, [1.0]) and np.allclose(y, [2 / 3, 0.0])
    with pytest.raises(ValueError):
        witness_A_to_B(inst, [1.0], [1.0, 0.0])
    rank2 = ConicCertificate(np.eye(2), cert.y, cert.s, cert.S)
    assert witness_B_to_A(inst, rank2) is None


def test_polish_dual_sharpens_solver_multipliers():
    inst, _ = example41(1.0)
    hom = homogenize(inst)
    D = solve_dual(build_primal_sdp(hom))
    x = np.array([1.0, 1.0])
    c = polish_dual(hom, x, D.certificate)
    assert sdp_kkt_residual(hom, c).max() <= 1e-10
    assert c.y[0] == pytest.approx(2 / 3, abs=1e-10) and c.y[1] == 0.0


def test_diagram_checker_reports_broken_implications():
    st_ = dict.fromkeys(CONDITIONS, HOLDS)
    assert check_diagram(st_, True, True) == []
    st_["C"] = FAILS
    got = check_diagram(st_, None, True)
    assert "B => C" in got and "minimizer and D => C" in got
    st_ = dict.fromkeys(CONDITIONS, FAILS)
    st_["C"] = st_["D"] = HOLDS
    assert check_diagram(st_, True, False) == ["Slater and C => B"]
    st_["B"] = INCONCLUSIVE
    assert check_diagram(st_, True, False) == []


@pytest.mark.parametrize("alpha", [0.0, 1.0, 2.0, 2.5, 3.0, 3.5, 4.0, 5.0])
def test_table1_example41(alpha):
    inst, row = example41(alpha)
    rep = certify(inst, CertifyOptions(minimizer=(row.u_star,)))
    want = table1_statuses(alpha)
    assert {k: rep.statuses[k] for k in "ABCDEF"} == want
    assert rep.statuses["A_bar"] == rep.statuses["B_bar"]
    assert rep.diagram_consistent and not rep.violations and not rep.internal_errors
    assert rep.values["eta_p"] == pytest.approx(row.eta_p, rel=1e-6, abs=1e-6)


@pytest.mark.parametrize("make", [example42, example43, example44])
def test_table1_fixed_examples(make):
    inst, rec = make()
    rep = certify(inst, certify_options_for(rec))
    assert {k: rep.statuses[k] for k in "ABCDEF"} == rec.statuses
    assert rep.diagram_consistent and not rep.internal_errors


def test_report_shape_and_witnesses():
    rep = certify(example41(1.0)[0])
    assert list(rep.statuses) == list(CONDITIONS)
    assert set(rep.witnesses) >= {"u", "y", "X", "S", "s"}
    assert rep.values["zeta_estimate"] == pytest.approx(1.0)
    assert rep.values["eta_d"] <= rep.values["eta_p"] + 1e-7
    assert rep.slater is not None and rep.slater.holds


def test_certify_rejects_equality_form():
    with pytest.raises(ValueError):
        certify(trivial_instance(nonneg=True))


def test_certify_without_constraints():
    rep = certify(trivial_instance())
    assert all(v == HOLDS for v in rep.statuses.values())


def test_planted_instances_hold_everything():
    rng = np.random.default_rng(11)
    for _ in range(4):
        inst, u, y = planted_A_prime(rng, strict=True)
        rep = certify(inst, CertifyOptions(minimizer=tuple(u)))
        assert all(rep.statuses[k] == HOLDS for k in CONDITIONS), rep.statuses
