"""Weighted pairs: conductivity and gradient-norm modes.

In ``gamma`` mode the pair solves ``gamma grad u = grad v ^ grad w`` and
``grad v / gamma = grad w ^ grad u``. A layered conductivity that depends only
on ``x1`` still admits an exact pair; a spherical inclusion does not, and the
solver then returns the best discrete compromise with ``mu < 1``.
"""
# %%
import numpy as np

from conjpair import (
    InclusionGamma,
    SolverConfig,
    alternating_pair_solve,
    build_cube_mesh,
    make_gamma,
    residual_report,
)

mesh = build_cube_mesh(8)
x1, x2, x3 = (mesh.coordinate(k) for k in (1, 2, 3))

# %% An exact weighted triple: |grad w|^2 = 4
rep = residual_report(mesh, 2 * x1, x2, 2 * x3, mode="weighted_w2")
print(f"weighted_w2 triple (2 x1, x2, 2 x3): r1 = {rep.r1:.1e}, r2 = {rep.r2:.1e}")

# %% Layered conductivity: exact pair
layers = np.where(mesh.centroids[:, 0] < 0.5, 2.0, 1.0)
rep = alternating_pair_solve(mesh, x3, mode="gamma", gamma=layers)
res = residual_report(mesh, rep.u, rep.v, x3, layers, "gamma")
print(f"layers:    mu = {rep.mu:.12f}, sweeps {rep.iterations}, r1 = {res.r1:.1e}")

# %% Spherical inclusion: no exact pair
inclusion = make_gamma(InclusionGamma(), mesh)
rep = alternating_pair_solve(mesh, x3, mode="gamma", gamma=inclusion, cfg=SolverConfig(maxit=300))
res = residual_report(mesh, rep.u, rep.v, x3, inclusion, "gamma")
print(f"inclusion: mu = {rep.mu:.6f}, converged = {rep.converged}, r1 = {res.r1:.3f}, r2 = {res.r2:.3f}")
for note in rep.notes:
    print("  note:", note)
