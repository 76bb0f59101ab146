"""The thirteen acceptance criteria, each at its stated tolerance and time budget.

Every test appends one ``C<k> PASS|FAIL`` line to the terminal summary.
"""

import math
import time
import warnings

import numpy as np
import pytest

from isk.disorder import sample_disorder
from isk.exact import (enumerate_model, interpolation_derivative_check, pressure, rfim_partition,
                       transfer_matrix_rfim_pressure)
from isk.fluctuations import (clt_test, ensemble_pressures, estimate_gamma, martingale_conditional_mean,
                              martingale_increments, variance_prediction,
                              variance_scaling)
from isk.hamiltonians import ModelParams, interpolating_model, rfim_model
from isk.lattice import BoxGeometry, InteractionKernel, dobrushin_coefficient_bound, uniqueness_check
from isk.mc import estimate_expectation, sweep_transition_matrix, thermo_integration_pressure
from isk.rs import EstimatorConfig, fixed_point_qbar, minimize_F, rs_pressure_prediction, sk_rs_reference

from conftest import ACCEPTANCE_LINES, gauss_normal, log_2cosh

pytestmark = pytest.mark.acceptance

NN1 = InteractionKernel.nearest_neighbor(1)
KAPPA, BETA, H = 0.05, 0.3, 0.4


class Criterion:
    """Times a block and records its verdict; fails the test if any check failed."""

    def __init__(self, number, name, budget):
        self.number, self.name, self.budget = number, name, budget
        self.checks = []
        self.notes = []

    def check(self, ok, text):
        self.checks.append((bool(ok), text))

    def note(self, text):
        self.notes.append(text)

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        if exc_type is None:
            self.check(elapsed < self.budget, f"runtime {elapsed:.1f}s < {self.budget:g}s")
        ok = exc_type is None and all(c[0] for c in self.checks)
        failed = [t for c, t in self.checks if not c]
        detail = "; ".join(t if c else f"NOT {t}" for c, t in self.checks)
        if exc_type is not None:
            detail = f"error {exc_type.__name__}: {exc}"
        extra = (" | " + "; ".join(self.notes)) if self.notes else ""
        ACCEPTANCE_LINES.append(f"C{self.number} {'PASS' if ok else 'FAIL'} {self.name} "
                                f"[{elapsed:.1f}s] {detail}{extra}")
        if exc_type is None:
            assert ok, "; ".join(failed)
        return False


def test_c01_free_spins():
    with Criterion(1, "free-spin exactness", 1.0) as c:
        g = BoxGeometry(1, 3)
        worst = 0.0
        for h in (0.0, 0.5, 1.0, 2.0):
            p = pressure(g, ModelParams(h=h), sample_disorder(g, 0, 0), NN1)
            worst = max(worst, abs(p - math.log(2 * math.cosh(h))))
        c.check(worst <= 1e-12, f"max error {worst:.1e} <= 1e-12")


def test_c02_oracle_triangle():
    with Criterion(2, "oracle triangle", 300.0) as c:
        g = BoxGeometry.chain(12)
        kappa, h, gamma = 0.5, 0.3, 1.0
        worst_tm, worst_z = 0.0, 0.0
        for idx in range(10):
            fields = sample_disorder(g, 0, idx).fields
            enum = rfim_partition(g, kappa, h, gamma, fields, NN1) / 12
            tm = float(transfer_matrix_rfim_pressure(12, kappa, h, gamma, fields, NN1))
            ti = thermo_integration_pressure(rfim_model(g, kappa, h, gamma, fields, NN1),
                                             n_sweeps=10_000, labels=("c2", idx)).pressure
            worst_tm = max(worst_tm, abs(enum - tm))
            worst_z = max(worst_z, abs(ti.mean - enum) / ti.stderr)
        c.check(worst_tm <= 1e-10, f"enumeration vs transfer {worst_tm:.1e} <= 1e-10")
        c.check(worst_z <= 3.0, f"MC worst |z| {worst_z:.2f} <= 3")


def test_c03_derivative_finite_difference():
    with Criterion(3, "interpolation derivative vs finite difference", 60.0) as c:
        g = BoxGeometry.chain(8)
        t_grid = np.round(np.arange(1, 10) / 10, 1)
        normwise, pointwise = 0.0, 0.0
        for params, q in ((ModelParams(KAPPA, BETA, H), 0.17), (ModelParams(0.3, 1.0, 0.2), 0.5)):
            samples = [sample_disorder(g, 0, k) for k in range(5)]
            chk = interpolation_derivative_check(t_grid, q, g, params, samples, NN1, step=1e-4)
            normwise = max(normwise, float(chk.normwise_rel_error.max()))
            pointwise = max(pointwise, float(chk.max_rel_error.max()))
        c.check(normwise <= 1e-6, f"normwise relative error {normwise:.1e} <= 1e-6")
        c.note(f"pointwise relative error {pointwise:.1e}")


def test_c04_averaged_identity():
    with Criterion(4, "disorder-averaged interpolation identity", 600.0) as c:
        g = BoxGeometry.chain(8)
        qbar = fixed_point_qbar(KAPPA, BETA, H, EstimatorConfig(geometry=g, n_samples=2000), tol=1e-6).q
        samples = [sample_disorder(g, 0, k) for k in range(500)]
        chk = interpolation_derivative_check([0.3, 0.5, 0.7], qbar, g, ModelParams(KAPPA, BETA, H),
                                             samples, NN1, finite_difference=False)
        z = np.abs(chk.z_scores)
        c.check(np.all(z <= 3.0), "residual |z| at t=0.3,0.5,0.7: " + ", ".join(f"{v:.2f}" for v in z))
        c.note(f"qbar_N {qbar:.4f}")


def test_c05_rs_formula():
    with Criterion(5, "RS pressure at desk scale", 1800.0) as c:
        inf_F = rs_pressure_prediction(KAPPA, BETA, H, EstimatorConfig()).mean
        sizes, gaps, errs = (13, 17, 21), [], []
        for n in sizes:
            ens = ensemble_pressures(BoxGeometry.chain(n), ModelParams(KAPPA, BETA, H), 2000)
            gaps.append(abs(ens.mean - inf_F))
            errs.append(math.sqrt(ens.variance / len(ens.values)))
        trend = np.polyfit(sizes, gaps, 1)[0]
        c.check(trend < 0, f"|E p_N - inf F| = {', '.join(f'{x:.5f}' for x in gaps)} shrinks in trend")
        bound = 5 / sizes[-1] + 3 * errs[-1]
        c.check(gaps[-1] <= bound, f"gap at 21 sites {gaps[-1]:.5f} <= {bound:.4f}")
        c.note(f"inf F {inf_F:.6f}")


def test_c06_decoupled_reduction():
    with Criterion(6, "kappa=0 reduction", 300.0) as c:
        worst = 0.0
        for beta in (0.2, 0.3):
            for h in (0.2, 0.4, 0.8):
                root = sk_rs_reference(beta, h)[0]
                fp = fixed_point_qbar(0.0, beta, h).q
                mn = minimize_F(0.0, beta, h).qbar
                worst = max(worst, abs(fp - root), abs(mn - root))
        c.check(worst <= 1e-3, f"max |q - root| {worst:.1e} <= 1e-3")


def test_c07_dobrushin():
    with Criterion(7, "Dobrushin threshold", 1.0) as c:
        exact = all(uniqueness_check(InteractionKernel.nearest_neighbor(d), 0.1).kappa1 == 1 / (4 * d)
                    for d in (1, 2, 3))
        c.check(exact, "kappa1 = 1/(4d) for d = 1, 2, 3")
        ok = True
        for kappa in np.linspace(0.0, 2.0, 10):
            for K in np.linspace(-2.5, 2.5, 10):
                kern = InteractionKernel(1, {(1,): K, (-1,): K}, (3.0, 0.1))
                ok &= dobrushin_coefficient_bound(kern, kappa, (1,)) <= 2 * kappa * abs(K) + 1e-15
        c.check(ok, "|tanh 2 kappa K| <= 2 kappa |K| on 100 grid points")


def test_c08_clt():
    with Criterion(8, "CLT at 16 spins", 3600.0) as c:
        g = BoxGeometry.chain(16)
        ens = ensemble_pressures(g, ModelParams(KAPPA, BETA, H, sk_diagonal=False), 2000)
        rep = clt_test(ens)
        qbar = fixed_point_qbar(KAPPA, BETA, H, EstimatorConfig(geometry=g, n_samples=2000), tol=1e-6).q
        gamma = estimate_gamma(KAPPA, BETA, H, qbar, n_outer=400, n_inner=400)
        pred = variance_prediction(gamma, BETA, qbar)
        rel = abs(ens.rescaled_variance - pred) / pred
        c.check(rep.ks_pvalue >= 0.01, f"KS p-value {rep.ks_pvalue:.4f} >= 0.01 (skewness {rep.skewness:.2f})")
        c.check(rel <= 0.30, f"|Lambda| Var {ens.rescaled_variance:.6f} vs prediction {pred:.6f}, "
                             f"relative gap {rel:.1%} <= 30%")
        diag = ensemble_pressures(g, ModelParams(KAPPA, BETA, H), 2000)
        c.note(f"with the diagonal SK terms: |Lambda| Var {diag.rescaled_variance:.6f}, "
               f"KS p {clt_test(diag).ks_pvalue:.3f}")


def test_c09_gamma_decoupled():
    with Criterion(9, "Gamma closed form at kappa=0", 300.0) as c:
        qbar = sk_rs_reference(BETA, H)[0]
        g = BETA * math.sqrt(qbar)
        z, w = gauss_normal(80)
        J0, J1 = np.meshgrid(z, z, indexing="ij")
        tilt = np.log(np.cosh(g * (J1 - J0)) + np.tanh(H + g * J0) * np.sinh(g * (J1 - J0)))
        reference = float(w @ (tilt @ w) ** 2)
        est = estimate_gamma(0.0, BETA, H, qbar).gamma.mean
        rel = abs(est - reference) / reference
        c.check(rel <= 0.02, f"Gamma {est:.8f} vs quadrature {reference:.8f}, relative {rel:.1e}")


def test_c10_self_averaging():
    with Criterion(10, "variance scaling slope", 1800.0) as c:
        geos = [BoxGeometry(1, N) for N in (4, 6, 8, 10)]
        rep = variance_scaling(geos, ModelParams(KAPPA, BETA, H, sk_diagonal=False), 1000)
        c.check(-1.25 <= rep.slope <= -0.75, f"slope {rep.slope:.3f} +- {rep.slope_stderr:.3f} in [-1.25, -0.75]")
        diag = variance_scaling(geos, ModelParams(KAPPA, BETA, H), 1000)
        c.note(f"with the diagonal SK terms: slope {diag.slope:.3f}")


def test_c11_martingale():
    with Criterion(11, "martingale decomposition at kappa=0", 300.0) as c:
        g = BoxGeometry.chain(16)
        n = 16
        z, w = gauss_normal(120)
        worst_sum, worst_cond = 0.0, 0.0
        for h, gamma in ((H, BETA * math.sqrt(0.15)), (0.2, 0.9)):
            mean_p = float(w @ log_2cosh(h + gamma * z))
            for idx in range(20 if h == H else 5):
                sample = sample_disorder(g, 0, idx)
                xi = martingale_increments(sample, 0.0, h, gamma, g)
                p = rfim_partition(g, 0.0, h, gamma, sample.fields, NN1) / n
                worst_sum = max(worst_sum, abs(xi.sum() - math.sqrt(n) * (p - mean_p)))
                for k in range(n):
                    worst_cond = max(worst_cond,
                                     abs(martingale_conditional_mean(sample, k, 0.0, h, gamma, g)))
        c.check(worst_sum <= 1e-6, f"telescoping error {worst_sum:.1e} <= 1e-6")
        c.check(worst_cond <= 1e-8, f"conditional means {worst_cond:.1e} <= 1e-8")


def test_c12_variance_positivity():
    with Criterion(12, "variance positivity", 300.0) as c:
        qbar = fixed_point_qbar(KAPPA, BETA, H, tol=1e-6).q
        pred = variance_prediction(estimate_gamma(KAPPA, BETA, H, qbar), BETA, qbar)
        c.check(pred > 0, f"prediction at h=0.4 {pred:.6f} > 0")
        q0 = fixed_point_qbar(KAPPA, BETA, 0.0).q
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            zero = variance_prediction(estimate_gamma(KAPPA, BETA, 0.0, q0), BETA, q0)
        c.check(q0 == 0.0 and zero == 0.0, f"at h=0: qbar {q0}, prediction {zero}")


def test_c13_sampler():
    with Criterion(13, "Metropolis sampler soundness", 600.0) as c:
        g2 = BoxGeometry.chain(2)
        model2 = interpolating_model(ModelParams(0.4, 0.8, 0.3), sample_disorder(g2, 0, 0), NN1, g2)
        P, pi = sweep_transition_matrix(model2)
        gap = float(np.abs(pi @ P - pi).sum())
        c.check(gap <= 1e-10, f"||pi P - pi||_1 = {gap:.1e} <= 1e-10")
        g = BoxGeometry.chain(12)
        worst = 0.0
        for idx in range(10):
            model = interpolating_model(ModelParams(0.3, 0.6, 0.2), sample_disorder(g, 0, idx), NN1, g)
            ex = enumerate_model(model)
            m_exact = float(ex.magnetizations.mean())
            e_exact = float(model.expectation(ex.correlations, ex.magnetizations)) / 12
            m = estimate_expectation(lambda S: S.mean(axis=1), model, n_sweeps=20_000, labels=("c13", idx))
            e = estimate_expectation(lambda S: model.energy(S) / 12, model, n_sweeps=20_000,
                                     labels=("c13", idx))
            worst = max(worst, abs(m.mean - m_exact) / m.stderr, abs(e.mean - e_exact) / e.stderr)
        c.check(worst <= 3.0, f"12-spin worst |z| {worst:.2f} <= 3 over 10 instances")
