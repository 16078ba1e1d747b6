"""
Residual checks for conjugate pairs and the pointwise algebra behind them.

Weights follow the solver modes. With ``a`` the weight on ``u`` and ``d`` the
weight on ``v``, a pair is conjugate when, element by element,

    a grad u = grad v ^ grad w,      d grad v = grad w ^ grad u.

``unitary``: a = d = 1. ``gamma``: a = gamma, d = 1/gamma.
``weighted_w2``: a = 1, d = |grad w|^2. ``gamma_absw``: a = d = |grad w|.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .errors import DegenerateFieldError, DomainError, InvalidParameterError
from .fields import gradient_norms
from .forms import _check_nodal
from .mesh import Mesh, element_gradients

MODES = ("unitary", "weighted_w2", "gamma", "gamma_absw")


def mode_weights(mesh: Mesh, w, mode: str, gamma=None):
    """Per-element weights ``(a, d)`` on ``u`` and ``v`` for ``mode``."""
    if mode == "unitary":
        one = np.ones(mesh.n_tets)
        return one, one
    if mode == "gamma":
        if gamma is None:
            raise InvalidParameterError("mode 'gamma' needs a conductivity field")
        gamma = np.broadcast_to(np.asarray(gamma, dtype=float), (mesh.n_tets,))
        return gamma, 1.0 / gamma
    gn = gradient_norms(mesh, w)
    if mode == "weighted_w2":
        return np.ones(mesh.n_tets), gn**2
    if mode == "gamma_absw":
        return gn, gn
    raise InvalidParameterError(f"unknown mode {mode!r}; expected one of {MODES}")


def _l2(mesh, F):
    F = np.asarray(F)
    sq = F**2 if F.ndim == 1 else (F**2).sum(axis=1)
    return math.sqrt(float(sq @ mesh.volumes))


@dataclass
class ResidualReport:
    r1: float
    r2: float
    orth: float
    det_mean: float
    norm_gap: float
    r1_abs: float
    r2_abs: float
    orth_abs: float
    energy_u: float
    energy_v: float

    def to_dict(self):
        return asdict(self)


def residual_report(mesh: Mesh, u, v, w, gamma=None, mode: str = "unitary") -> ResidualReport:
    """Relative L2 residuals of the conjugacy identities, from exact P1 gradients."""
    _check_nodal(mesh, u, v, w)
    a, d = mode_weights(mesh, w, mode, gamma)
    gu = element_gradients(mesh, u)
    gv = element_gradients(mesh, v)
    gw = element_gradients(mesh, w)
    nu, nv = _l2(mesh, gu), _l2(mesh, gv)
    if nu == 0.0 or nv == 0.0:
        raise DegenerateFieldError("u or v has zero gradient; residuals are undefined")
    r1_abs = _l2(mesh, a[:, None] * gu - np.cross(gv, gw))
    r2_abs = _l2(mesh, d[:, None] * gv - np.cross(gw, gu))
    orth_abs = _l2(mesh, np.einsum("ec,ec->e", gv, gw))
    det = np.einsum("ec,ec->e", gu, np.cross(gv, gw))
    eu = float((a * (gu**2).sum(axis=1)) @ mesh.volumes)
    ev = float((d * (gv**2).sum(axis=1)) @ mesh.volumes)
    return ResidualReport(
        r1=r1_abs / nu,
        r2=r2_abs / nv,
        orth=orth_abs / nv,
        det_mean=float(det @ mesh.volumes) / mesh.total_volume,
        norm_gap=abs(eu - ev) / (0.5 * (eu + ev)),
        r1_abs=r1_abs,
        r2_abs=r2_abs,
        orth_abs=orth_abs,
        energy_u=eu,
        energy_v=ev,
    )


def harmonicity_residual(K, u, interior) -> float:
    """Size of ``(K u)`` on interior nodes, relative to ``|K| |u|`` (0 for discrete harmonic ``u``)."""
    Ku = K @ u
    scale = np.linalg.norm(abs(K) @ np.abs(u))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(Ku[interior]) / scale)


def orthobasis_check(gu, gv, gw):
    """Deviations of a gradient triple from the conjugacy consequences.

    Returns ``((gu.gv, gu.gw, gv.gw), |gu|^2 - det, |gv|^2 - det)`` with
    ``det = det(gu, gv, gw)``.
    """
    gu, gv, gw = (np.asarray(x, dtype=float) for x in (gu, gv, gw))
    det = float(np.dot(gu, np.cross(gv, gw)))
    dots = (float(gu @ gv), float(gu @ gw), float(gv @ gw))
    return dots, float(gu @ gu) - det, float(gv @ gv) - det


def vector_identity_checks(v, w, u):
    """Residuals of the two cross-product identities, relative to the natural scale.

    (a) ``|v^w|^2 + (v.w)^2 - |v|^2 |w|^2``
    (b) ``w^(v^u) - (w.u) v + (w.v) u``

    (b) is the triple-product expansion; with ``u = w`` it reads
    ``w^(v^w) = |w|^2 v - (v.w) w``, the form used to derive
    ``grad w ^ grad u = |grad w|^2 grad v``.
    Works on single 3-vectors or on stacks of shape (n, 3).
    """
    v, w, u = (np.asarray(x, dtype=float) for x in (v, w, u))
    vw = np.cross(v, w)
    nv2 = (v * v).sum(axis=-1)
    nw2 = (w * w).sum(axis=-1)
    a = (vw * vw).sum(axis=-1) + (v * w).sum(axis=-1) ** 2 - nv2 * nw2
    wu = (w * u).sum(axis=-1)[..., None]
    wv = (w * v).sum(axis=-1)[..., None]
    b = np.cross(w, np.cross(v, u)) - wu * v + wv * u
    scale_b = np.sqrt(nv2 * nw2 * (u * u).sum(axis=-1))
    return _relative(np.abs(a), nv2 * nw2), _relative(np.linalg.norm(b, axis=-1), scale_b)


def _relative(num, scale):
    num, scale = np.asarray(num, dtype=float), np.asarray(scale, dtype=float)
    out = np.where(scale > 0, num / np.where(scale > 0, scale, 1.0), num)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ExponentTriple:
    a1: float
    a2: float
    a3: float

    def __post_init__(self):
        vals = (self.a1, self.a2, self.a3)
        if min(vals) < 0 or abs(sum(vals) - 1.0) > 1e-12:
            raise InvalidParameterError(f"exponents must be >= 0 and sum to 1, got {vals}")

    def __iter__(self):
        return iter((self.a1, self.a2, self.a3))


def _power(base: float, e: float) -> float:
    # route small-denominator exponents through exact roots so that e.g. 8**(2/3) == 4
    if e == 0:
        return 1.0
    frac = Fraction(e).limit_denominator(12)
    if abs(float(frac) - e) > 1e-15:
        return base**e
    p, q = frac.numerator, frac.denominator
    if q == 1:
        return base**p
    root = math.sqrt(base) if q == 2 else float(np.cbrt(base)) if q == 3 else base ** (1.0 / q)
    return root**p


def relaxed_cr_check(J, alpha=ExponentTriple(0.5, 0.5, 0.0)) -> float:
    """Frobenius norm of ``J J^T - diag(det(J)^(2 alpha_i))``."""
    J = np.asarray(J, dtype=float)
    if J.shape != (3, 3):
        raise InvalidParameterError(f"expected a 3x3 matrix, got shape {J.shape}")
    if not isinstance(alpha, ExponentTriple):
        alpha = ExponentTriple(*alpha)
    # triple product rather than LU, so diagonal inputs give exact determinants
    det = float(J[0] @ np.cross(J[1], J[2]))
    exps = [2.0 * a for a in alpha]
    if det <= 0 and any(e != int(e) for e in exps):
        raise DomainError(f"det(J) = {det:g} <= 0 with a fractional exponent")
    target = np.diag([_power(det, e) for e in exps])
    return float(np.linalg.norm(J @ J.T - target))


@dataclass
class BoundaryResidual:
    values: np.ndarray  # (grad v ^ grad w) . n per face
    phi: np.ndarray  # |grad w ^ n| per face
    degenerate: np.ndarray  # phi <= threshold

    @property
    def max_abs(self) -> float:
        ok = ~self.degenerate
        return float(np.abs(self.values[ok]).max()) if ok.any() else 0.0

    def l2(self, areas) -> float:
        ok = ~self.degenerate
        return math.sqrt(float((self.values[ok] ** 2) @ areas[ok]))


def boundary_tangential_residual(mesh: Mesh, v, w, degenerate_tol: float = 1e-10) -> BoundaryResidual:
    """Face values of ``(grad v_h ^ grad w_h) . n`` and the tangent weight ``phi``."""
    _check_nodal(mesh, v, w)
    gv = element_gradients(mesh, v)[mesh.face_tet]
    gw = element_gradients(mesh, w)[mesh.face_tet]
    values = np.einsum("fc,fc->f", np.cross(gv, gw), mesh.normals)
    phi = np.linalg.norm(np.cross(gw, mesh.normals), axis=1)
    return BoundaryResidual(values=values, phi=phi, degenerate=phi <= degenerate_tol)


@dataclass
class ConvergenceTable:
    levels: list
    h: list
    errors: list
    rates: list  # per-level rate against the previous level, first entry None
    rate: float | None  # least-squares slope, None when not claimed
    note: str = ""

    def rows(self):
        return list(zip(self.levels, self.h, self.errors, self.rates))

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["level", "h", "error", "rate"])
            for lv, h, e, r in self.rows():
                writer.writerow([lv, f"{h:.17g}", f"{e:.17g}", "" if r is None else f"{r:.17g}"])


def convergence_study(levels, h, errors, roundoff: float = 1e-12) -> ConvergenceTable:
    """Observed rates of ``errors`` against mesh sizes ``h``.

    A least-squares slope of log(error) vs log(h) is claimed only when there
    are at least three levels, errors decrease monotonically, and they sit
    above ``roundoff``.
    """
    levels, h, errors = list(levels), [float(x) for x in h], [float(e) for e in errors]
    if len(levels) < 3:
        raise InvalidParameterError("a convergence study needs at least 3 levels")
    rates = [None]
    for i in range(1, len(errors)):
        if errors[i] > 0 and errors[i - 1] > 0:
            rates.append(math.log(errors[i - 1] / errors[i]) / math.log(h[i - 1] / h[i]))
        else:
            rates.append(None)
    if max(errors) <= roundoff:
        return ConvergenceTable(levels, h, errors, [None] * len(errors), None, "errors at round-off level")
    if any(b >= a for a, b in zip(errors, errors[1:])):
        return ConvergenceTable(levels, h, errors, rates, None, "error sequence is not monotone")
    slope = float(np.polyfit(np.log(h), np.log(errors), 1)[0])
    return ConvergenceTable(levels, h, errors, rates, slope)
