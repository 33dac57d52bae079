import numpy as np
import pytest
from hypothesis import given, strategies as st

from factories import planted_A_prime
from qcqpcert.conic import ConicCertificate, Sense
from qcqpcert.certifier import witness_A_to_B
from qcqpcert.examples_bench import (example41, example43, example43_hand_certificate, example44,
                                     trivial_instance)
from qcqpcert.qcqp_model import homogenize
from qcqpcert.sdp_relaxation import (build_dual_sdp, build_primal_sdp, sdp_kkt_residual,
                                     slack_matrix, slater_diagnosis)


def test_slack_at_table2_multipliers_alpha1():
    # alpha = 1: y = (2/3, 0), s = zeta = 1 gives [[5/3, -5/3], [-5/3, 5/3]] by hand
    hom = homogenize(example41(1.0)[0])
    S = slack_matrix(hom, [2 / 3, 0.0], 1.0)
    assert np.allclose(S, np.array([[5, -5], [-5, 5]]) / 3, atol=1e-14)
    D = build_dual_sdp(hom)
    assert D.is_feasible([2 / 3, 0.0], 1.0)
    assert not D.is_feasible([2 / 3, 0.0], 1.01)
    assert not D.is_feasible([-0.1, 0.0], 0.0)
    assert D.objective([0, 0], 0.5) == 0.5 and D.nonneg_multipliers == (True, True)


@given(st.lists(st.floats(0, 4), min_size=2, max_size=2), st.floats(-5, 5), st.floats(0, 6))
def test_slack_is_the_homogenized_lagrangian(y, s, alpha):
    inst, _ = example41(alpha)
    hom = homogenize(inst)
    A, b, c = inst.objective.A.copy(), inst.objective.b.copy(), inst.objective.c
    for yk, (q, _) in zip(y, inst.constraints):
        A, b, c = A + yk * q.A, b + yk * q.b, c + yk * q.c
    want = np.array([[c - s, b[0]], [b[0], A[0, 0]]])
    assert np.allclose(slack_matrix(hom, y, s), want, atol=1e-12)


def test_slack_rejects_wrong_length():
    with pytest.raises(ValueError):
        slack_matrix(homogenize(example41(1.0)[0]), [1.0], 0.0)


def test_primal_problem_layout():
    hom = homogenize(example41(2.5)[0])
    P = build_primal_sdp(hom)
    assert P.dim == 2 and not P.nonneg_matrix
    assert [m.sense for m in P.maps] == [Sense.LEQ, Sense.LEQ, Sense.EQ]
    assert P.maps[-1].rhs == 1.0


def test_hand_certificate_example43_is_kkt():
    inst, _ = example43()
    res = sdp_kkt_residual(homogenize(inst), example43_hand_certificate())
    assert res.holds(1e-12)


def test_planted_witness_has_zero_kkt_residual():
    rng = np.random.default_rng(3)
    for _ in range(20):
        inst, u, y = planted_A_prime(rng, strict=False)
        cert = witness_A_to_B(inst, u, y)
        assert sdp_kkt_residual(homogenize(inst), cert).max() <= 1e-9


def test_kkt_residual_sees_each_defect():
    inst, _ = example41(1.0)
    hom = homogenize(inst)
    good = witness_A_to_B(inst, [1.0], [2 / 3, 0.0])
    assert sdp_kkt_residual(hom, good).max() <= 1e-12
    off = ConicCertificate(good.X, good.y, good.s + 0.1, slack_matrix(hom, good.y, good.s + 0.1))
    assert sdp_kkt_residual(hom, off).dual_feas > 1e-3
    wrong_x = ConicCertificate(np.outer([1, 2], [1, 2]), good.y, good.s, good.S)
    r = sdp_kkt_residual(hom, wrong_x)
    assert r.primal_feas > 1e-3 or r.complementarity_S > 1e-3
    with pytest.raises(ValueError):
        sdp_kkt_residual(hom, ConicCertificate(np.eye(3), good.y, 0.0, np.eye(3)))


@pytest.mark.parametrize("alpha", [0.0, 1.0, 2.5, 3.5, 5.0, 6.0])
def test_slater_holds_away_from_alpha4(alpha):
    hom = homogenize(example41(alpha)[0])
    d = slater_diagnosis(hom)
    assert d.holds and not d.inconclusive and d.m_minus == (1, 2)
    W = d.witness
    assert np.linalg.eigvalsh(W)[0] > 0
    assert W[0, 0] == pytest.approx(1.0, abs=1e-9)
    assert all(np.sum(Q * W) < 0 for Q in hom.Qs[1:])


def test_slater_fails_at_alpha4_with_single_point_feasible_set():
    # the relaxed set is X = [[1, 4], [4, 16]], where q_1 and q_2 are both tight
    d = slater_diagnosis(homogenize(example41(4.0)[0]))
    assert not d.holds and not d.inconclusive
    assert d.m_minus == (2,)


def test_slater_example44():
    d = slater_diagnosis(homogenize(example44()[0]))
    assert not d.holds and d.m_minus == (2,)


def test_slater_trivially_holds_without_constraints():
    d = slater_diagnosis(homogenize(trivial_instance()))
    assert d.holds and d.m_minus == ()
