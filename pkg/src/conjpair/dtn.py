"""
Discrete Dirichlet-to-Neumann maps and a conductivity fingerprinting harness.

The DtN matrix of a per-element conductivity is the Schur complement of the
weighted stiffness matrix onto the boundary nodes,

    Lambda = A_bb - A_bi A_ii^{-1} A_ib,

so that ``g @ Lambda @ g`` is the Dirichlet energy of the discrete
gamma-harmonic extension of boundary data ``g``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .errors import ConjPairError, IncompatibilityError
from .forms import assemble_stiffness
from .mesh import Mesh
from .solver import SolverConfig, alternating_pair_solve
from .verify import residual_report

log = logging.getLogger(__name__)


@dataclass(eq=False)
class DtnMatrix:
    matrix: np.ndarray  # (m, m) over boundary nodes
    nodes: np.ndarray  # global index of each boundary row

    @property
    def size(self) -> int:
        return self.nodes.size


def _split(mesh, gamma):
    A = assemble_stiffness(mesh, gamma).tocsr()
    b = mesh.boundary_nodes
    i = mesh.interior_nodes
    return A, b, i


def assemble_dtn(mesh: Mesh, gamma, cfg: SolverConfig | None = None) -> DtnMatrix:
    """Dense DtN matrix for per-element conductivity ``gamma``.

    The interior block is factorised once and reused for every boundary
    column.
    """
    A, b, i = _split(mesh, gamma)
    Abb = A[b][:, b].toarray()
    if i.size == 0:
        lam = Abb
    else:
        Aii = A[i][:, i].tocsc()
        Aib = A[i][:, b].toarray()
        solve = spla.factorized(Aii)
        X = np.column_stack([solve(Aib[:, j]) for j in range(b.size)])
        lam = Abb - Aib.T @ X
    lam = 0.5 * (lam + lam.T)
    return DtnMatrix(matrix=lam, nodes=np.array(b))


def harmonic_extension(mesh: Mesh, gamma, g) -> np.ndarray:
    """Nodal gamma-harmonic field with boundary values ``g`` (ordered as ``mesh.boundary_nodes``)."""
    A, b, i = _split(mesh, gamma)
    x = np.zeros(mesh.n_vertices)
    x[b] = g
    if i.size:
        rhs = -(A[i][:, b] @ np.asarray(g, dtype=float))
        x[i] = spla.spsolve(A[i][:, i].tocsc(), rhs)
    return x


def dtn_distance(lam1: DtnMatrix, lam2: DtnMatrix) -> float:
    """Relative Frobenius distance on mean-zero boundary data.

    Both maps are deflated by the projector onto the complement of the
    constants, and the difference is divided by the larger of the two
    deflated norms, so the distance is symmetric and lies in [0, 2].
    """
    if lam1.size != lam2.size or not np.array_equal(lam1.nodes, lam2.nodes):
        raise IncompatibilityError("DtN maps live on different boundary node sets")
    m = lam1.size
    P = np.eye(m) - np.full((m, m), 1.0 / m)
    a = P @ lam1.matrix @ P
    b = P @ lam2.matrix @ P
    scale = max(np.linalg.norm(a), np.linalg.norm(b))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(a - b) / scale)


@dataclass
class ExperimentReport:
    gamma_labels: list
    w_labels: list
    distances: list  # len(gamma) x len(gamma); None where a map failed
    pairs: list  # one dict per (gamma, w)
    failures: list = field(default_factory=list)

    def to_dict(self):
        return {
            "gammas": list(self.gamma_labels),
            "ws": list(self.w_labels),
            "distance_norm": "deflated Frobenius, relative to the larger map",
            "distances": self.distances,
            "pairs": self.pairs,
            "failures": self.failures,
        }


def dtn_experiment(
    mesh: Mesh,
    gammas,
    ws,
    cfg: SolverConfig | None = None,
    gamma_labels=None,
    w_labels=None,
    keep_fields: bool = False,
) -> tuple[ExperimentReport, list]:
    """Pairwise DtN distances plus a conjugate pair for every (gamma, w).

    Returns the report and the list of assembled maps (None where assembly
    failed). A failure in one cell is recorded and the rest still run.
    """
    cfg = cfg or SolverConfig()
    gammas = [np.asarray(g, dtype=float) for g in gammas]
    ws = [np.asarray(w, dtype=float) for w in ws]
    gamma_labels = list(gamma_labels or [f"gamma{k}" for k in range(len(gammas))])
    w_labels = list(w_labels or [f"w{k}" for k in range(len(ws))])
    failures = []

    maps = []
    for label, g in zip(gamma_labels, gammas):
        try:
            maps.append(assemble_dtn(mesh, g, cfg))
        except (ConjPairError, ValueError, RuntimeError) as exc:
            failures.append({"cell": f"dtn[{label}]", "error": str(exc)})
            maps.append(None)

    n = len(maps)
    dist = [[None] * n for _ in range(n)]
    for p in range(n):
        for q in range(n):
            if maps[p] is None or maps[q] is None:
                continue
            try:
                dist[p][q] = dtn_distance(maps[p], maps[q])
            except ConjPairError as exc:
                failures.append({"cell": f"distance[{p}][{q}]", "error": str(exc)})

    pairs = []
    for gl, g in zip(gamma_labels, gammas):
        for wl, w in zip(w_labels, ws):
            cell = {"gamma": gl, "w": wl}
            try:
                rep = alternating_pair_solve(mesh, w, "gamma", cfg=cfg, gamma=g)
                res = residual_report(mesh, rep.u, rep.v, w, g, "gamma")
                cell.update(
                    mu=rep.mu,
                    iterations=rep.iterations,
                    converged=rep.converged,
                    r1=res.r1,
                    r2=res.r2,
                    orth=res.orth,
                )
                if keep_fields:
                    cell["u"], cell["v"] = rep.u, rep.v
            except (ConjPairError, ValueError, RuntimeError) as exc:
                cell["error"] = str(exc)
                failures.append({"cell": f"pair[{gl}][{wl}]", "error": str(exc)})
            pairs.append(cell)

    report = ExperimentReport(gamma_labels, w_labels, dist, pairs, failures)
    return report, maps
