"""
Assembly of the bilinear and linear forms on P1 fields.

P1 gradients are constant on each tetrahedron, so every form here is an exact
per-element sum, with no quadrature. Matrices are returned as
``scipy.sparse.csr_matrix``.

The coupling form

    b(u, v) = \\int det(grad u, grad v, grad w) dx = \\int grad u . (grad v ^ grad w) dx

is stored as the skew matrix ``B`` with ``u @ B @ v == b(u, v)``.
"""

import numpy as np
import scipy.sparse as sp

from .errors import BoundViolationError, DimensionError
from .mesh import Mesh, element_gradients


def _check_nodal(mesh, *fields):
    for f in fields:
        if np.shape(f) != (mesh.n_vertices,):
            raise DimensionError(
                f"nodal field of shape {np.shape(f)} does not match {mesh.n_vertices} vertices"
            )


def _element_weights(mesh, weight):
    if weight is None:
        return np.ones(mesh.n_tets)
    weight = np.broadcast_to(np.asarray(weight, dtype=float), (mesh.n_tets,))
    return weight


def _scatter(mesh, local):
    rows = np.repeat(mesh.tets, 4, axis=1).ravel()
    cols = np.tile(mesh.tets, (1, 4)).ravel()
    n = mesh.n_vertices
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def assemble_stiffness(mesh: Mesh, weight=None) -> sp.csr_matrix:
    """Weighted stiffness matrix ``K[i, j] = sum_e weight_e grad phi_i . grad phi_j vol_e``.

    ``weight`` is a per-element array (or scalar); ``None`` means 1.
    """
    weight = _element_weights(mesh, weight)
    if not np.all(weight > 0):
        raise BoundViolationError("stiffness weight must be positive on every element")
    g = mesh.basis_gradients
    local = np.einsum("eic,ejc->eij", g, g) * (weight * mesh.volumes)[:, None, None]
    K = _scatter(mesh, local)
    return ((K + K.T) * 0.5).tocsr()


def assemble_det_form(mesh: Mesh, w) -> sp.csr_matrix:
    """Skew matrix of the determinant coupling form against ``w``."""
    _check_nodal(mesh, w)
    g = mesh.basis_gradients
    gw = element_gradients(mesh, w)
    # B_e[i, j] = vol_e * g_i . (g_j ^ gw)
    gjw = np.cross(g, gw[:, None, :])
    local = np.einsum("eic,ejc->eij", g, gjw) * mesh.volumes[:, None, None]
    B = _scatter(mesh, local)
    # exact antisymmetry: (a - b) and (b - a) are exact negatives in IEEE arithmetic
    return ((B - B.T) * 0.5).tocsr()


def cross_field(mesh: Mesh, v, w) -> np.ndarray:
    """Per-element ``grad v_h ^ grad w_h``."""
    return np.cross(element_gradients(mesh, v), element_gradients(mesh, w))


def assemble_vector_load(mesh: Mesh, field) -> np.ndarray:
    """Load ``f_i = \\int F . grad phi_i`` of a per-element (or constant) vector field ``F``."""
    F = np.broadcast_to(np.asarray(field, dtype=float), (mesh.n_tets, 3))
    local = np.einsum("ec,eic->ei", F, mesh.basis_gradients) * mesh.volumes[:, None]
    f = np.zeros(mesh.n_vertices)
    np.add.at(f, mesh.tets.ravel(), local.ravel())
    return f


def assemble_cross_load(mesh: Mesh, v, w, sign: int = 1) -> np.ndarray:
    """Load vector ``f_i = sign * \\int (grad v ^ grad w) . grad phi_i``."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    _check_nodal(mesh, v, w)
    return sign * assemble_vector_load(mesh, cross_field(mesh, v, w))


def weak_divergence_residual(mesh: Mesh, v, w) -> float:
    """Largest normalised weak divergence of ``grad v ^ grad w`` over interior hats.

    For interior node ``i`` the value is
    ``|int C . grad phi_i| / int |C| |grad phi_i|`` with ``C`` the cross field,
    and the maximum over interior nodes is returned (0 when ``C`` vanishes).
    """
    _check_nodal(mesh, v, w)
    C = cross_field(mesh, v, w)
    g = mesh.basis_gradients
    signed = np.einsum("ec,eic->ei", C, g) * mesh.volumes[:, None]
    scale = (
        np.linalg.norm(C, axis=1)[:, None] * np.linalg.norm(g, axis=2) * mesh.volumes[:, None]
    )
    num = np.zeros(mesh.n_vertices)
    den = np.zeros(mesh.n_vertices)
    np.add.at(num, mesh.tets.ravel(), signed.ravel())
    np.add.at(den, mesh.tets.ravel(), scale.ravel())
    inner = mesh.interior_nodes
    if inner.size == 0:
        return 0.0
    num, den = np.abs(num[inner]), den[inner]
    ratio = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    return float(ratio.max())


def det_integral(mesh: Mesh, u, v, w) -> float:
    """``\\int det(grad u, grad v, grad w)`` summed element by element."""
    _check_nodal(mesh, u, v, w)
    G = np.stack(
        [element_gradients(mesh, u), element_gradients(mesh, v), element_gradients(mesh, w)],
        axis=1,
    )
    return float(np.linalg.det(G) @ mesh.volumes)


def coupling(B, u, v) -> float:
    """``u @ B @ v`` for skew ``B``, summed over the upper triangle.

    Each stored pair contributes ``B[i, j] (u_i v_j - u_j v_i)``, so
    ``coupling(B, u, u)`` is exactly zero in floating point.
    """
    T = sp.triu(B, k=1).tocoo()
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return float(T.data @ (u[T.row] * v[T.col] - u[T.col] * v[T.row]))
