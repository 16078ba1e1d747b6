"""Diagonally preconditioned conjugate gradients, with an optional kernel projection."""

import numpy as np

from .errors import NonConvergenceError


def pcg(A, b, x0=None, tol=1e-12, maxit=None, project=None):
    """Solve ``A x = b`` for symmetric positive (semi)definite ``A``.

    Stops when ``||b - A x|| <= tol * ||b||``. ``project``, if given, is applied
    to every residual and search direction; pass the projector onto the
    complement of the kernel for singular consistent systems.

    Returns ``(x, iterations, relative_residual)``; raises
    :class:`NonConvergenceError` when ``maxit`` is exhausted.
    """
    n = b.shape[0]
    maxit = 10 * n if maxit is None else maxit
    proj = project if project is not None else (lambda r: r)
    bnorm = np.linalg.norm(b)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    if bnorm == 0.0:
        return np.zeros(n), 0, 0.0
    diag = A.diagonal()
    dinv = np.divide(1.0, diag, out=np.zeros_like(diag), where=diag > 0)

    r = proj(b - A @ x)
    rel = np.linalg.norm(r) / bnorm
    if rel <= tol:
        return x, 0, rel
    z = proj(dinv * r)
    p = z.copy()
    rz = r @ z
    for it in range(1, maxit + 1):
        Ap = A @ p
        pAp = p @ Ap
        if pAp <= 0:
            break
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        r = proj(r)
        rel = np.linalg.norm(r) / bnorm
        if rel <= tol:
            # recompute the true residual to guard against drift
            rt = proj(b - A @ x)
            rel = np.linalg.norm(rt) / bnorm
            if rel <= tol:
                return x, it, rel
            r = rt
        z = proj(dinv * r)
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise NonConvergenceError(
        f"CG did not reach relative residual {tol:g} in {maxit} iterations (last {rel:.3e})",
        residual=rel,
    )
