"""Dirichlet-to-Neumann maps and the pairs they do not see.

Two conductivities are compared through their DtN maps, and for each one the
conjugate pairs for two different fields ``w`` are computed. Scaling the
conductivity by 2 scales the map by 2, so the relative distance is exactly 1/2.
"""
# %%
import numpy as np

from conjpair import ConstantGamma, DistToPoint, InclusionGamma, build_cube_mesh, make_gamma, sample_w
from conjpair.dtn import assemble_dtn, dtn_distance, dtn_experiment

mesh = build_cube_mesh(4)
one = make_gamma(ConstantGamma(1.0), mesh)
inclusion = make_gamma(InclusionGamma(inside=5.0), mesh)

# %% The maps themselves
lam = assemble_dtn(mesh, one)
z = mesh.vertices[lam.nodes, 0]
print(f"{lam.size} boundary nodes; energy of the x1 trace = {z @ lam.matrix @ z:.12f}")
print("eigenvalues (smallest 4):", np.round(np.linalg.eigvalsh(lam.matrix)[:4], 10))
print("distance(1, 2)         =", dtn_distance(lam, assemble_dtn(mesh, 2 * one)))
print("distance(1, inclusion) =", dtn_distance(lam, assemble_dtn(mesh, inclusion)))

# %% Distance table with pairs for every (gamma, w) cell
ws = [mesh.coordinate(3), sample_w(DistToPoint((0.5, 0.5, -2.0)), mesh)]
report, _ = dtn_experiment(mesh, [one, inclusion], ws, gamma_labels=["one", "inclusion"], w_labels=["x3", "dist"])
print(np.array(report.distances))
for cell in report.pairs:
    print(f"{cell['gamma']:>9} / {cell['w']:<4} mu = {cell['mu']:.6f}  r1 = {cell['r1']:.2e}")
