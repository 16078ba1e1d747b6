"""
Refinement studies used by the convergence command and the acceptance suite.

Each case returns the per-level mesh sizes and errors; the rate itself is
fitted by :func:`conjpair.verify.convergence_study`.

Cases
-----
quadratic
    ``v = 2 x1 x2``, ``w = x3`` on the cube. The conjugate is
    ``u = x1^2 - x2^2``. Error is the energy norm of ``u_h - u`` where the
    reference is either the exact gradient (``reference="exact"``) or the
    gradient of the nodal interpolant of ``u`` (``"interpolated"``).
affine
    ``v = x2``, ``w = x3``; the conjugate ``x1`` is represented exactly.
unitarity
    Max over elements of ``| |grad w_h| - 1 |`` for ``w`` the distance to
    ``(0, 0, -2)`` on the ball.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidParameterError
from .fields import DistToPoint, sample_w, unitarity_report
from .mesh import Mesh, build_ball_mesh, build_cube_mesh, element_gradients
from .solver import SolverConfig, conjugate_of, gradient_l2
from .verify import ConvergenceTable, convergence_study

CASES = ("quadratic", "affine", "unitarity")
REFERENCES = ("exact", "interpolated")


def energy_error_linear_field(mesh: Mesh, G, field_at) -> float:
    """L2 norm of ``G_e - F(x)`` for per-element constants ``G`` and an affine vector field ``F``.

    ``field_at`` maps (N, 3) points to (N, 3) values and must be affine, so
    the integrand is a quadratic and the per-element formula
    ``int f^2 = vol/20 (sum f_i^2 + (sum f_i)^2)`` for linear ``f`` is exact.
    """
    Fv = field_at(mesh.vertices)[mesh.tets]  # (M, 4, 3) vertex values
    f = G[:, None, :] - Fv
    per = (f**2).sum(axis=1) + f.sum(axis=1) ** 2  # (M, 3)
    return math.sqrt(float(per.sum(axis=1) @ mesh.volumes) / 20.0)


def quadratic_case(mesh: Mesh, reference: str = "exact", cfg: SolverConfig | None = None) -> float:
    x = mesh.vertices
    v = 2.0 * x[:, 0] * x[:, 1]
    w = x[:, 2].copy()
    u = conjugate_of(mesh, v, w, cfg=cfg)
    if reference == "interpolated":
        ref = mesh.remove_mean(x[:, 0] ** 2 - x[:, 1] ** 2)
        return gradient_l2(mesh, u - ref)
    if reference == "exact":
        G = element_gradients(mesh, u)
        return energy_error_linear_field(
            mesh, G, lambda p: np.column_stack([2 * p[:, 0], -2 * p[:, 1], np.zeros(len(p))])
        )
    raise InvalidParameterError(f"unknown reference {reference!r}; expected one of {REFERENCES}")


def affine_case(mesh: Mesh, cfg: SolverConfig | None = None) -> float:
    u = conjugate_of(mesh, mesh.coordinate(2), mesh.coordinate(3), cfg=cfg)
    return gradient_l2(mesh, u - mesh.remove_mean(mesh.coordinate(1)))


def unitarity_case(mesh: Mesh, point=(0.0, 0.0, -2.0)) -> float:
    return unitarity_report(mesh, sample_w(DistToPoint(point), mesh))[0]


def run_case(case: str, levels, reference: str = "exact", cfg: SolverConfig | None = None) -> ConvergenceTable:
    """Build the meshes, compute the per-level error and fit the rate."""
    if case not in CASES:
        raise InvalidParameterError(f"unknown case {case!r}; expected one of {CASES}")
    levels = [int(n) for n in levels]
    hs, errs = [], []
    for n in levels:
        mesh = build_ball_mesh(n) if case == "unitarity" else build_cube_mesh(n)
        if case == "quadratic":
            err = quadratic_case(mesh, reference, cfg)
        elif case == "affine":
            err = affine_case(mesh, cfg)
        else:
            err = unitarity_case(mesh)
        hs.append(mesh.h)
        errs.append(err)
    return convergence_study(levels, hs, errs)
