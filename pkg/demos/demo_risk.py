"""Risk identities and the Gauss-Markov comparison on a random model.

Builds the least-squares estimator for a random observation map, draws a
handful of oblique right inverses, and prints the bias-corrected MSE slack
of each against the least-squares baseline together with the bias-variance
identity residual.  The slack is never negative; equality happens exactly
when an alternative's adjoint action on the functional coincides with the
least-squares one.
"""

import numpy as np

from olskit import FiniteModel, gmt_compare, ols_build, random_right_inverse
from olskit.model import estimator_delta_norm, operator_norm

rng = np.random.default_rng(3)
n, p = 6, 3
a = rng.standard_normal((n, n))
model = FiniteModel(rng.standard_normal(n), a @ a.T / n)
g = rng.standard_normal((p, n))

est = ols_build(model, g)
f = rng.standard_normal(n)

alternatives = [est.gain] + [random_right_inverse(est, s) for s in range(6)]
report = gmt_compare(model, g, f, alternatives)

print(f"least-squares estvar {report.estvar_ols:.5f}, mse {report.mse_ols:.5f}")
print("\nalt   estvar      mse     mse-slack   identity   equality")
for i, row in enumerate(report.rows):
    print(f"{i:3d}  {row.estvar:8.5f} {row.mse:8.5f}  {row.mse_slack:9.2e} "
          f"{row.identity_residual:10.2e}   {row.equality}")

print(f"\noperator norm of the estimator  : {operator_norm(est):.4f}")
scaled = FiniteModel(model.mean, 10.0 * model.cov)
print(f"after scaling K by 10 it stays  : {operator_norm(ols_build(scaled, g)):.4f}")
print(f"estimator distance to itself    : {estimator_delta_norm(model, model, g):.1e}")
