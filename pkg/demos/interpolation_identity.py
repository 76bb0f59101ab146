"""Watch the interpolation between the random-field chain and the full model.

For 8-spin samples the t-derivative of the mean pressure is compared with
the overlap-fluctuation expression, and the per-sample derivative with a
central finite difference.

    python3 demos/interpolation_identity.py
"""

import numpy as np

from isk.disorder import sample_disorder
from isk.exact import interpolation_derivative_check
from isk.hamiltonians import ModelParams
from isk.lattice import BoxGeometry, InteractionKernel

geometry = BoxGeometry.chain(8)
kernel = InteractionKernel.nearest_neighbor(1)
params = ModelParams(kappa=0.05, beta=0.3, h=0.4)
q = 0.17
samples = [sample_disorder(geometry, 0, k) for k in range(400)]
t_grid = np.linspace(0.1, 0.9, 9)

chk = interpolation_derivative_check(t_grid, q, geometry, params, samples[:10], kernel)
print(f"finite-difference agreement on 10 samples: worst normwise relative error "
      f"{chk.normwise_rel_error.max():.1e}")

chk = interpolation_derivative_check(t_grid, q, geometry, params, samples, kernel,
                                     finite_difference=False)
print(f"\n{'t':>4} {'d/dt p':>12} {'overlap form':>13} {'z':>6}")
for row in zip(chk.t, chk.mean_lhs, chk.mean_rhs, chk.z_scores):
    print("{:4.1f} {:12.7f} {:13.7f} {:6.2f}".format(*row))
