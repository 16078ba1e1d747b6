"""
Distance-type fields ``w`` with unit gradient, conductivities, and diagnostics.

A field ``w`` is described by a small spec object and sampled at the mesh
nodes; from then on only the nodal values (the P1 interpolant) are used, so
every discrete identity is checked against ``grad w_h``.

Axes are numbered 1, 2, 3 as in x1, x2, x3.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import BoundViolationError, DimensionError, InvalidSpecError
from .mesh import Domain, Mesh, element_gradients

DEFAULT_BOUND = 0.1


@dataclass(frozen=True)
class Coordinate:
    """``w = x_axis + offset``."""

    axis: int = 3
    offset: float = 0.0

    def __post_init__(self):
        if self.axis not in (1, 2, 3):
            raise InvalidSpecError(f"axis must be 1, 2 or 3, got {self.axis!r}")

    def evaluate(self, x):
        return x[:, self.axis - 1] + self.offset


@dataclass(frozen=True)
class DistToPoint:
    """``w = |x - point|``."""

    point: tuple = (0.0, 0.0, -2.0)

    def evaluate(self, x):
        return np.linalg.norm(x - np.asarray(self.point, dtype=float), axis=1)


@dataclass(frozen=True)
class DistToAxis:
    """``w`` = distance to the line through ``point`` with direction ``direction``."""

    point: tuple = (0.0, 0.0, -2.0)
    direction: tuple = (0.0, 1.0, 0.0)

    def __post_init__(self):
        if np.linalg.norm(self.direction) == 0:
            raise InvalidSpecError("line direction must be nonzero")

    def _unit(self):
        d = np.asarray(self.direction, dtype=float)
        return d / np.linalg.norm(d)

    def evaluate(self, x):
        r = x - np.asarray(self.point, dtype=float)
        d = self._unit()
        return np.linalg.norm(r - np.outer(r @ d, d), axis=1)


@dataclass(frozen=True, eq=False)
class Nodal:
    values: np.ndarray


WSpec = Union[Coordinate, DistToPoint, DistToAxis, Nodal]


def _point_in_domain(p, domain: Domain) -> bool:
    p = np.asarray(p, dtype=float)
    if domain is Domain.CUBE:
        return bool(np.all(p >= 0.0) and np.all(p <= 1.0))
    return bool(np.linalg.norm(p) <= 1.0)


def _line_meets_domain(a, d, domain: Domain) -> bool:
    a = np.asarray(a, dtype=float)
    d = np.asarray(d, dtype=float)
    d = d / np.linalg.norm(d)
    if domain is Domain.BALL:
        closest = a - (a @ d) * d
        return bool(np.linalg.norm(closest) <= 1.0)
    # slab clipping against [0,1]^3
    t0, t1 = -np.inf, np.inf
    for i in range(3):
        if d[i] == 0.0:
            if a[i] < 0.0 or a[i] > 1.0:
                return False
            continue
        lo, hi = sorted(((0.0 - a[i]) / d[i], (1.0 - a[i]) / d[i]))
        t0, t1 = max(t0, lo), min(t1, hi)
    return t0 <= t1


def validate_w(spec: WSpec, mesh: Mesh) -> None:
    if isinstance(spec, DistToPoint) and _point_in_domain(spec.point, mesh.domain):
        raise InvalidSpecError(
            f"reference point {spec.point} lies in the closed {mesh.domain.value}; w would not be smooth"
        )
    if isinstance(spec, DistToAxis) and _line_meets_domain(spec.point, spec.direction, mesh.domain):
        raise InvalidSpecError(f"reference line meets the closed {mesh.domain.value}")
    if isinstance(spec, Nodal) and np.shape(spec.values) != (mesh.n_vertices,):
        raise DimensionError(
            f"nodal w has shape {np.shape(spec.values)}, mesh has {mesh.n_vertices} vertices"
        )


def sample_w(spec: WSpec, mesh: Mesh) -> np.ndarray:
    """Nodal values of ``w`` (the Nodal variant is returned as given)."""
    validate_w(spec, mesh)
    if isinstance(spec, Nodal):
        values = np.asarray(spec.values, dtype=float)
    else:
        values = spec.evaluate(mesh.vertices)
    if not np.all(np.isfinite(values)):
        raise InvalidSpecError("w has non-finite nodal values")
    return values


def gradient_norms(mesh: Mesh, w) -> np.ndarray:
    return np.linalg.norm(element_gradients(mesh, w), axis=1)


def unitarity_report(mesh: Mesh, w) -> tuple[float, float]:
    """Max and mean over elements of ``| |grad w_h| - 1 |``."""
    dev = np.abs(gradient_norms(mesh, w) - 1.0)
    return float(dev.max()), float(dev.mean())


@dataclass(frozen=True)
class ConstantGamma:
    value: float = 1.0


@dataclass(frozen=True)
class InclusionGamma:
    """Two-phase conductivity: ``inside`` where the centroid is within ``radius`` of ``center``."""

    center: tuple = (0.5, 0.5, 0.5)
    radius: float = 0.25
    inside: float = 2.0
    outside: float = 1.0


@dataclass(frozen=True)
class GradNormGamma:
    """``gamma = |grad w_h|**power`` per element (power 1 or 2)."""

    power: int = 1


GammaSpec = Union[ConstantGamma, InclusionGamma, GradNormGamma]


def make_gamma(spec: GammaSpec, mesh: Mesh, w=None, bound: float = DEFAULT_BOUND) -> np.ndarray:
    """Per-element conductivity, checked against ``bound <= gamma <= 1/bound``."""
    if not 0.0 < bound <= 1.0:
        raise InvalidSpecError(f"bound constant must lie in (0, 1], got {bound}")
    if isinstance(spec, ConstantGamma):
        gamma = np.full(mesh.n_tets, float(spec.value))
    elif isinstance(spec, InclusionGamma):
        dist = np.linalg.norm(mesh.centroids - np.asarray(spec.center, dtype=float), axis=1)
        gamma = np.where(dist < spec.radius, float(spec.inside), float(spec.outside))
    elif isinstance(spec, GradNormGamma):
        if w is None:
            raise InvalidSpecError("gradient-norm conductivity needs w")
        if spec.power not in (1, 2):
            raise InvalidSpecError("gradient-norm power must be 1 or 2")
        gamma = gradient_norms(mesh, w) ** spec.power
    else:
        raise InvalidSpecError(f"unknown conductivity spec {spec!r}")
    lo, hi = bound, 1.0 / bound
    bad = (gamma < lo) | (gamma > hi) | ~np.isfinite(gamma)
    if np.any(bad):
        raise BoundViolationError(
            f"{int(bad.sum())} element(s) outside [{lo:g}, {hi:g}] (range {gamma.min():g}..{gamma.max():g})"
        )
    return gamma
