"""
Conjugate solves and the constrained pair problem.

Given ``v`` and ``w``, the conjugate ``u`` is the mean-zero solution of the
pure Neumann problem

    \\int a grad u . grad U = \\int (grad v ^ grad w) . grad U    for all U,

which in matrix form reads ``K_a u = B v``. The dual solve is
``K_d v = B^T u``. Alternating the two is power iteration on
``T = K_d^+ B^T K_a^+ B``, which is self-adjoint and positive semidefinite in
the ``K_d`` inner product. Its top eigenvector maximises

    mu = u^T B v / (1/2 u^T K_a u + 1/2 v^T K_d v),

the ratio of the coupling integral to the joint energy. A pair with
``mu = 1`` satisfies the pointwise identities exactly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    CompatibilityError,
    DegenerateFieldError,
    InvalidParameterError,
    SizeError,
)
from .forms import _check_nodal, assemble_cross_load, assemble_det_form, assemble_stiffness
from .linalg import pcg
from .mesh import Mesh, element_gradients
from .verify import MODES, mode_weights, residual_report

log = logging.getLogger(__name__)

DEFAULT_SEED = 42
MAX_RESTARTS = 3


@dataclass
class SolverConfig:
    tol: float = 1e-10
    vector_tol: float = 1e-8
    maxit: int = 500
    cg_tol: float = 1e-12
    cg_maxit: int | None = None
    mode: str = "unitary"
    seed: int = DEFAULT_SEED
    noise: float = 1e-3

    def __post_init__(self):
        if self.tol <= 0 or self.cg_tol <= 0 or self.vector_tol <= 0:
            raise InvalidParameterError("tolerances must be positive")
        if self.maxit < 1:
            raise InvalidParameterError("maxit must be at least 1")
        if self.cg_maxit is not None and self.cg_maxit < 1:
            raise InvalidParameterError("cg_maxit must be at least 1")
        if self.mode not in MODES:
            raise InvalidParameterError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.noise < 0:
            raise InvalidParameterError("noise amplitude must be nonnegative")


@dataclass
class PairSolveReport:
    u: np.ndarray
    v: np.ndarray
    mu: float
    iterations: int
    converged: bool
    mode: str
    residual_history: list = field(default_factory=list)
    mu_history: list = field(default_factory=list)
    step_history: list = field(default_factory=list)
    restarts: int = 0
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {
            "mode": self.mode,
            "mu": self.mu,
            "iterations": self.iterations,
            "converged": self.converged,
            "restarts": self.restarts,
            "residuals": [list(r) for r in self.residual_history],
            "mu_history": list(self.mu_history),
            "step_history": list(self.step_history),
            "notes": list(self.notes),
        }


def _mean_zero(values, mass=None):
    if mass is None:
        return values - values.mean()
    return values - (mass @ values) / mass.sum()


def solve_neumann(K, f, cfg: SolverConfig | None = None, mass=None, x0=None) -> np.ndarray:
    """Mean-zero solution of the singular system ``K x = f``.

    ``K`` must have exactly the constants as kernel. ``mass`` (the integrals
    of the hat functions) selects the volume-weighted mean; without it the
    plain nodal mean is used.
    """
    cfg = cfg or SolverConfig()
    f = np.asarray(f, dtype=float)
    scale = np.abs(f).sum()
    if abs(f.sum()) > 1e-10 * max(scale, 1.0):
        raise CompatibilityError(f"load is not orthogonal to constants (sum = {f.sum():.3e})")
    f = f - f.mean()
    x, _, _ = pcg(
        K,
        f,
        x0=None if x0 is None else x0 - x0.mean(),
        tol=cfg.cg_tol,
        maxit=cfg.cg_maxit,
        project=lambda r: r - r.mean(),
    )
    return _mean_zero(x, mass)


def conjugate_of(mesh: Mesh, v, w, gamma=None, cfg: SolverConfig | None = None, weight=None) -> np.ndarray:
    """Mean-zero ``u`` with ``weight grad u`` the projection of ``grad v ^ grad w``.

    ``weight`` defaults to ``gamma`` (or 1 when both are omitted).
    """
    _check_nodal(mesh, v, w)
    if weight is None:
        weight = 1.0 if gamma is None else gamma
    K = assemble_stiffness(mesh, weight)
    f = assemble_cross_load(mesh, v, w)
    return solve_neumann(K, f, cfg, mass=mesh.nodal_mass)


def dual_conjugate_of(mesh: Mesh, u, w, gamma=None, cfg: SolverConfig | None = None, weight=None) -> np.ndarray:
    """Mean-zero ``v`` with ``weight grad v`` the projection of ``grad w ^ grad u``.

    ``weight`` defaults to ``1/gamma`` (or 1 when both are omitted).
    """
    _check_nodal(mesh, u, w)
    if weight is None:
        weight = 1.0 if gamma is None else 1.0 / np.asarray(gamma, dtype=float)
    K = assemble_stiffness(mesh, weight)
    # grad w ^ grad u = -(grad u ^ grad w)
    f = assemble_cross_load(mesh, u, w, sign=-1)
    return solve_neumann(K, f, cfg, mass=mesh.nodal_mass)


def default_v0(mesh: Mesh, seed: int = DEFAULT_SEED, noise: float = 1e-3) -> np.ndarray:
    """Nodal ``x2`` plus a fixed pseudo-random perturbation."""
    rng = np.random.default_rng(seed)
    x2 = mesh.coordinate(2)
    amp = noise * max(np.ptp(x2), 1.0)
    return x2 + amp * rng.standard_normal(mesh.n_vertices)


@dataclass
class PairOperators:
    """Assembled pieces of the pair problem for one mesh, w and mode."""

    Ka: sp.csr_matrix
    Kd: sp.csr_matrix
    B: sp.csr_matrix
    a: np.ndarray
    d: np.ndarray


def pair_operators(mesh: Mesh, w, mode: str = "unitary", gamma=None) -> PairOperators:
    a, d = mode_weights(mesh, w, mode, gamma)
    return PairOperators(
        Ka=assemble_stiffness(mesh, a),
        Kd=assemble_stiffness(mesh, d),
        B=assemble_det_form(mesh, w),
        a=a,
        d=d,
    )


def _energy(K, x):
    return math.sqrt(max(float(x @ (K @ x)), 0.0))


def alternating_pair_solve(
    mesh: Mesh,
    w,
    mode: str | None = None,
    v0=None,
    cfg: SolverConfig | None = None,
    gamma=None,
) -> PairSolveReport:
    """Dominant conjugate pair by alternating conjugate and dual solves.

    Each sweep maps ``v -> u = K_a^+ B v -> v' = K_d^+ B^T u`` and rescales
    to unit joint energy. ``mu`` is the Rayleigh estimate of the returned
    pair. Iteration stops once the relative change of ``mu`` is below
    ``cfg.tol`` and the normalised iterate moves by less than
    ``cfg.vector_tol`` in energy norm; ``mu`` alone settles quadratically
    faster than the pair itself.
    A starting vector with no coupling (e.g. a function of ``w``) is replaced
    by a seeded random vector, at most three times.
    """
    cfg = cfg or SolverConfig()
    mode = mode or cfg.mode
    if mode not in MODES:
        raise InvalidParameterError(f"unknown mode {mode!r}; expected one of {MODES}")
    _check_nodal(mesh, w)
    ops = pair_operators(mesh, w, mode, gamma)
    mass = mesh.nodal_mass
    notes = []

    v = default_v0(mesh, cfg.seed, cfg.noise) if v0 is None else np.asarray(v0, dtype=float).copy()
    _check_nodal(mesh, v)

    restarts = 0
    while True:
        v = _mean_zero(v, mass)
        nv = _energy(ops.Kd, v)
        u = solve_neumann(ops.Ka, ops.B @ v, cfg, mass) if nv > 0 else np.zeros_like(v)
        nu = _energy(ops.Ka, u)
        if nv > 0 and nu > 1e-10 * nv:
            break
        if restarts == MAX_RESTARTS:
            raise DegenerateFieldError(
                f"starting vector has no coupling with w after {MAX_RESTARTS} restarts"
            )
        restarts += 1
        seed = cfg.seed + restarts
        notes.append(f"restart {restarts}: start vector has no coupling with w; reseeded with {seed}")
        log.info(notes[-1])
        v = np.random.default_rng(seed).standard_normal(mesh.n_vertices)

    mu_hist, res_hist, eta_hist = [], [], []
    mu_prev = None
    converged = False
    it = 0
    for it in range(1, cfg.maxit + 1):
        mu = nu / nv
        u = u / nu
        v = v / nv
        rep = residual_report(mesh, u, v, w, gamma, mode)
        mu_hist.append(mu)
        res_hist.append((rep.r1, rep.r2))
        v_next = solve_neumann(ops.Kd, ops.B.T @ u, cfg, mass, x0=mu * v)
        nv_next = _energy(ops.Kd, v_next)
        if nv_next == 0.0:
            raise DegenerateFieldError("iteration collapsed to a constant field")
        # power-iteration residual: how far the normalised iterate still moves
        eta = _energy(ops.Kd, v_next / nv_next - v)
        eta_hist.append(eta)
        if mu_prev is not None and abs(mu - mu_prev) <= cfg.tol * mu and eta <= cfg.vector_tol:
            converged = True
            break
        mu_prev = mu
        v, nv = v_next, nv_next
        u = solve_neumann(ops.Ka, ops.B @ v, cfg, mass, x0=u)
        nu = _energy(ops.Ka, u)
        if nu == 0.0:
            raise DegenerateFieldError("iteration collapsed to a constant field")

    if not converged:
        notes.append(
            f"no convergence in {cfg.maxit} sweeps (last relative mu change "
            f"{abs(mu_hist[-1] - mu_hist[-2]) / mu_hist[-1] if len(mu_hist) > 1 else float('nan'):.3e}, "
            f"iterate change {eta_hist[-1]:.3e})"
        )
    return PairSolveReport(
        u=u,
        v=v,
        mu=mu_hist[-1],
        iterations=it,
        converged=converged,
        mode=mode,
        residual_history=res_hist,
        mu_history=mu_hist,
        step_history=eta_hist,
        restarts=restarts,
        notes=notes,
    )


@dataclass
class DenseSpectrum:
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # columns z = (u, v), K-orthonormal, mean-zero

    @property
    def top(self) -> float:
        return float(self.eigenvalues[-1])

    def top_space(self, rtol: float = 1e-8) -> np.ndarray:
        lam = self.eigenvalues
        keep = lam >= lam[-1] - rtol * max(abs(lam[-1]), 1.0)
        return self.eigenvectors[:, keep]


def dense_eig_oracle(Ka, Kd, B, max_dof: int = 3000) -> DenseSpectrum:
    """All eigenpairs of ``[[0, B], [B^T, 0]] z = theta diag(K_a, K_d) z``.

    Computed densely on the complement of the constants. The spectrum is
    symmetric about 0 and its largest value equals the top ``mu``.
    """
    n = Ka.shape[0]
    dof = 2 * (n - 1)
    if dof > max_dof:
        raise SizeError(f"dense oracle limited to {max_dof} unknowns, problem has {dof}")
    Q = sla.null_space(np.ones((1, n)))  # orthonormal basis of mean-zero vectors
    dense = lambda M: M.toarray() if sp.issparse(M) else np.asarray(M)
    Ka_r = Q.T @ dense(Ka) @ Q
    Kd_r = Q.T @ dense(Kd) @ Q
    B_r = Q.T @ dense(B) @ Q
    m = n - 1
    A = np.zeros((2 * m, 2 * m))
    A[:m, m:] = B_r
    A[m:, :m] = B_r.T
    K = sla.block_diag(Ka_r, Kd_r)
    lam, Y = sla.eigh(A, K)
    Z = np.vstack([Q @ Y[:m], Q @ Y[m:]])
    return DenseSpectrum(eigenvalues=lam, eigenvectors=Z)


def energy_angle(Ka, Kd, z, basis) -> float:
    """Angle in the block energy inner product between ``z`` and ``span(basis)``.

    ``basis`` columns must be orthonormal in that inner product.
    """
    n = Ka.shape[0]

    def K(x):
        return np.concatenate([Ka @ x[:n], Kd @ x[n:]])

    z = np.asarray(z, dtype=float)
    coeff = basis.T @ K(z)
    r = z - basis @ coeff
    nz = math.sqrt(z @ K(z))
    nr = math.sqrt(max(r @ K(r), 0.0))
    return math.asin(min(nr / nz, 1.0))


def _psi_matrix(wv, k):
    if k == 1:
        return np.ones((wv.size, 1))
    lo, hi = wv.min(), wv.max()
    knots = np.linspace(lo, hi, k)
    step = knots[1] - knots[0]
    if step == 0:
        return np.ones((wv.size, 1))
    return np.clip(1.0 - np.abs(wv[:, None] - knots[None, :]) / step, 0.0, None)


@dataclass
class HwSolution:
    values: np.ndarray
    dimension: int
    deflated: int


def solve_in_hw(mesh: Mesh, w, K, f, bins: int, return_info: bool = False):
    """Galerkin solve of ``K v = f`` on interior hats plus ``bins`` functions of ``w``.

    The extra basis functions are 1D piecewise-linear hats on uniform knots
    over the range of ``w``, sampled at the nodes through ``w``. Columns that
    are linearly dependent on the rest are dropped and counted in
    ``deflated``. The solution is fixed by a zero volume mean.
    """
    _check_nodal(mesh, w, f)
    if bins < 1:
        raise InvalidParameterError("bins must be at least 1")
    wv = np.asarray(w, dtype=float)
    psi = _psi_matrix(wv, bins)
    k = psi.shape[1]
    bnd = mesh.boundary_nodes
    # interior hats span everything away from the boundary, so independence
    # of the extra columns is decided by their boundary rows
    psi_b = psi[bnd]
    _, R, piv = sla.qr(psi_b, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int((diag > 1e-10 * diag[0]).sum()) if diag.size and diag[0] > 0 else 0
    keep = np.sort(piv[:rank])
    deflated = k - rank
    if deflated:
        log.info("solve_in_hw: dropped %d dependent w-columns", deflated)
    psi = psi[:, keep]

    inner = mesh.interior_nodes
    n = mesh.n_vertices
    E = sp.csr_matrix((np.ones(inner.size), (inner, np.arange(inner.size))), shape=(n, inner.size))
    P = sp.hstack([E, sp.csr_matrix(psi)]).tocsr()
    A = (P.T @ K @ P).tocsr()
    rhs = P.T @ np.asarray(f, dtype=float)
    q = P.T @ mesh.nodal_mass
    dim = P.shape[1]
    S = sp.bmat([[A, sp.csr_matrix(q[:, None])], [sp.csr_matrix(q[None, :]), None]]).tocsc()
    sol = spla.spsolve(S, np.concatenate([rhs, [0.0]]))
    values = P @ sol[:dim]
    if return_info:
        return HwSolution(values=values, dimension=dim, deflated=deflated)
    return values


def gradient_l2(mesh: Mesh, values) -> float:
    g = element_gradients(mesh, values)
    return math.sqrt(float((g**2).sum(axis=1) @ mesh.volumes))
