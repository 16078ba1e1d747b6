"""Pointwise checks: orthogonal frames, vector identities, relaxed CR systems."""
# %%
import numpy as np

from conjpair import ExponentTriple, orthobasis_check, relaxed_cr_check, vector_identity_checks

e1, e2, e3 = np.eye(3)
print("orthobasis (e1, e2, e3):", orthobasis_check(e1, e2, e3))
print("orthobasis (e1, e2, 2 e3):", orthobasis_check(e1, e2, 2 * e3))

rng = np.random.default_rng(0)
v, w, u = rng.standard_normal((3, 10_000, 3))
ra, rb = vector_identity_checks(v, w, u)
print(f"vector identities on 10^4 triples: max residuals {ra.max():.1e}, {rb.max():.1e}")

# %% Relaxed Cauchy-Riemann systems J J^T = diag(det J ** (2 alpha_i))
half = ExponentTriple(0.5, 0.5, 0.0)
third = ExponentTriple(1 / 3, 1 / 3, 1 / 3)
for J, alpha in [(np.diag([2.0, 2.0, 1.0]), half), (np.diag([1.0, 2.0, 3.0]), half), (3 * np.eye(3), third)]:
    print(np.diag(J), tuple(round(a, 3) for a in alpha), "->", relaxed_cr_check(J, alpha))
