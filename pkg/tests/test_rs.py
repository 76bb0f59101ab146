import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import brentq

from isk.errors import DegenerateError, DomainError
from isk.lattice import BoxGeometry
from isk.rs import (EstimatorConfig, curvature_check, evaluate_F, field_bank, fixed_point_qbar,
                    minimize_F, rs_pressure_prediction, sk_rs_reference)

from conftest import gauss_normal

FAST = EstimatorConfig(geometry=BoxGeometry.chain(200), n_samples=50)
ACCURATE = EstimatorConfig(geometry=BoxGeometry.chain(1000), n_samples=200)


def F_quad(q, beta, h):
    z, w = gauss_normal(120)
    x = h + beta * math.sqrt(q) * z
    return math.log(2) + float(w @ (np.logaddexp(x, -x) - math.log(2))) + beta**2 / 4 * (1 - q) ** 2


def normal_expect(f):
    return quad(lambda z: f(z) * math.exp(-z * z / 2) / math.sqrt(2 * math.pi), -12, 12,
                epsabs=1e-14, epsrel=1e-13, limit=200)[0]


def test_field_bank_is_standardized():
    bank = field_bank(FAST)
    assert np.mean(bank**2) == pytest.approx(1.0, abs=1e-12)
    half = len(bank) // 2
    assert np.allclose(bank[half:], -bank[:half])


@pytest.mark.parametrize("q", [0.0, 0.15, 0.5, 1.0])
def test_decoupled_functional_matches_quadrature(q):
    pt = evaluate_F(q, 0.0, 0.3, 0.4, ACCURATE)
    assert pt.engine == "factorized"
    assert pt.F_value == pytest.approx(F_quad(q, 0.3, 0.4), abs=max(3 * pt.stderr, 1e-6))


def test_transfer_and_enumeration_engines_agree():
    g = BoxGeometry.chain(10)
    a = evaluate_F(0.3, 0.2, 0.5, 0.3, EstimatorConfig(geometry=g, n_samples=20, engine="transfer"))
    b = evaluate_F(0.3, 0.2, 0.5, 0.3, EstimatorConfig(geometry=g, n_samples=20, engine="enumeration"))
    assert a.F_value == pytest.approx(b.F_value, abs=1e-10)


def test_functional_rejects_bad_q():
    with pytest.raises(DomainError):
        evaluate_F(1.2, 0.0, 0.3, 0.4, FAST)
    with pytest.raises(DomainError):
        evaluate_F(0.5, 0.2, 0.3, 0.4, EstimatorConfig(geometry=BoxGeometry.chain(10), engine="factorized"))


def test_flat_functional_without_coupling():
    vals = [evaluate_F(q, 0.1, 0.0, 0.4, FAST).F_value for q in (0.0, 0.4, 1.0)]
    assert np.ptp(vals) == 0.0
    with pytest.raises(DegenerateError):
        minimize_F(0.1, 0.0, 0.4, FAST)
    assert rs_pressure_prediction(0.1, 0.0, 0.4, FAST).mean == vals[0]


def test_sk_reference_matches_independent_root():
    beta, h = 0.3, 0.4
    q, p = sk_rs_reference(beta, h)
    root = brentq(lambda x: normal_expect(lambda z: math.tanh(h + beta * math.sqrt(x) * z) ** 2) - x,
                  1e-9, 1.0, xtol=1e-15)
    assert q == pytest.approx(root, abs=1e-10)
    logc = normal_expect(lambda z: math.log(math.cosh(h + beta * math.sqrt(root) * z)))
    assert p == pytest.approx(math.log(2) + logc + beta**2 / 4 * (1 - root) ** 2, abs=1e-10)


def test_sk_reference_order_invariance_and_edges():
    assert sk_rs_reference(0.5, 0.3, order=40)[0] == pytest.approx(sk_rs_reference(0.5, 0.3, order=80)[0],
                                                                   abs=1e-8)
    q, p = sk_rs_reference(0.5, 0.0)
    assert q == pytest.approx(0.0, abs=1e-12) and p == pytest.approx(math.log(2) + 0.0625)
    q, p = sk_rs_reference(0.0, 0.7)
    assert q == pytest.approx(math.tanh(0.7) ** 2) and p == pytest.approx(math.log(2 * math.cosh(0.7)))
    with pytest.raises(DomainError):
        sk_rs_reference(0.3, 0.4, order=20)


@pytest.mark.parametrize("beta,h", [(0.2, 0.2), (0.3, 0.4), (0.3, 0.8)])
def test_decoupled_minimizer_and_fixed_point(beta, h):
    q_ref, p_ref = sk_rs_reference(beta, h)
    sol = minimize_F(0.0, beta, h, ACCURATE)
    fp = fixed_point_qbar(0.0, beta, h, ACCURATE)
    assert sol.qbar == pytest.approx(q_ref, abs=1e-3)
    assert fp.q == pytest.approx(q_ref, abs=1e-3)
    assert sol.F_min == pytest.approx(p_ref, abs=1e-5)
    assert sol.unique
    assert np.all(sol.F_min <= sol.grid_F + 1e-12)


def test_zero_field_high_temperature_minimizer():
    sol = minimize_F(0.0, 0.5, 0.0, FAST)
    assert sol.qbar == pytest.approx(0.0, abs=1e-3)
    fp = fixed_point_qbar(0.0, 0.5, 0.0, FAST)
    assert fp.q == 0.0 and fp.trajectory == [0.0, 0.0]


def test_fixed_point_without_coupling_converges_in_one_step():
    fp = fixed_point_qbar(0.2, 0.0, 0.4, FAST)
    assert len(fp.trajectory) == 2 and fp.trajectory[0] == fp.trajectory[1]


def test_coupled_minimizer_agrees_with_fixed_point():
    sol = minimize_F(0.05, 0.3, 0.4, FAST)
    fp = fixed_point_qbar(0.05, 0.3, 0.4, FAST)
    assert abs(sol.qbar - fp.q) <= 1e-3
    assert sol.qbar > sk_rs_reference(0.3, 0.4)[0]


def test_finer_grid_never_raises_minimum():
    coarse = minimize_F(0.05, 0.3, 0.4, FAST, grid_step=0.05)
    fine = minimize_F(0.05, 0.3, 0.4, FAST, grid_step=0.01)
    assert fine.F_min <= coarse.F_min + 1e-9


def test_curvature():
    q = sk_rs_reference(0.3, 0.4)[0]
    c = curvature_check(0.0, 0.3, 0.4, q, ACCURATE)
    assert c.value > 0 and not c.degenerate and not c.at_boundary
    flat = curvature_check(0.1, 0.0, 0.4, 0.3, FAST)
    assert abs(flat.value) < 1e-9 and flat.degenerate
    edge = curvature_check(0.0, 1.0, 0.0, 0.0, ACCURATE)
    assert edge.at_boundary and edge.degenerate
