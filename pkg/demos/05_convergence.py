"""Refinement studies for conjugate solves.

The quadratic pair ``u = x1^2 - x2^2``, ``v = 2 x1 x2`` with ``w = x3`` is the
2D Cauchy-Riemann pair lifted to 3D. Measured against the exact gradient the
conjugate solve converges at first order in the energy norm; against the P1
interpolant the structured Kuhn mesh superconverges.
"""
# %%
from conjpair.studies import run_case

for reference in ("exact", "interpolated"):
    table = run_case("quadratic", [4, 8, 16, 32], reference=reference)
    print(f"\nquadratic pair, {reference} reference: fitted rate {table.rate:.3f}")
    for n, h, e, r in zip(table.levels, table.h, table.errors, table.rates):
        print(f"  n={n:3d} h={h:.4f} error={e:.3e} rate={'' if r is None else f'{r:.3f}'}")

# %% The affine pair is reproduced exactly at every level, so no rate is claimed
table = run_case("affine", [2, 4, 8])
print("\naffine:", [f"{e:.1e}" for e in table.errors], "|", table.note)

# %% Unitarity defect of the interpolated distance field on the ball
table = run_case("unitarity", [2, 3, 4])
print("unitarity:", [f"{e:.4f}" for e in table.errors], f"rate {table.rate:.3f}")
