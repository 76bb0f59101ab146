"""Sample-to-sample fluctuations of the pressure at 16 spins and beyond.

Compares |Lambda| Var(p) with the field-driven prediction, runs the normality
test, and fits the decay of the variance with volume.

    python3 demos/pressure_fluctuations.py
"""

from isk.fluctuations import (clt_test, ensemble_pressures, estimate_gamma, variance_prediction,
                              variance_scaling)
from isk.hamiltonians import ModelParams
from isk.lattice import BoxGeometry
from isk.rs import EstimatorConfig, fixed_point_qbar

kappa, beta, h = 0.05, 0.3, 0.4
geometry = BoxGeometry.chain(16)
params = ModelParams(kappa, beta, h, sk_diagonal=False)

ens = ensemble_pressures(geometry, params, 2000)
rep = clt_test(ens)
qbar = fixed_point_qbar(kappa, beta, h, EstimatorConfig(geometry=geometry, n_samples=2000),
                        tol=1e-6).q
gamma = estimate_gamma(kappa, beta, h, qbar, n_outer=400, n_inner=400)
pred = variance_prediction(gamma, beta, qbar)

print(f"16 spins, 2000 samples: mean pressure {ens.mean:.5f}")
print(f"  |Lambda| Var(p)   {ens.rescaled_variance:.6f} +- {16 * ens.variance_stderr:.6f}")
print(f"  Gamma             {gamma.gamma.mean:.6f} (qbar {qbar:.4f})")
print(f"  prediction        {pred:.6f}")
print(f"  KS p-value {rep.ks_pvalue:.3f}, skewness {rep.skewness:.2f}, "
      f"excess kurtosis {rep.excess_kurtosis:.2f}")

scaling = variance_scaling([BoxGeometry.chain(n) for n in (9, 13, 17, 21)], params, 500)
print("\nvolume   Var(p)")
for vol, var, se in scaling.table_rows():
    print(f"{vol:6.0f}   {var:.3e} +- {se:.1e}")
print(f"log-log slope {scaling.slope:.3f} +- {scaling.slope_stderr:.3f}")
