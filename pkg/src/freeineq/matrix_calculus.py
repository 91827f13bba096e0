"""Trace functions of matrices and calculus on SU(n).

The Riemannian metric on SU(n) is ``<A, B> = Re Tr(A^* B)`` on the Lie algebra
(unnormalized trace), for which the Ricci curvature is ``(n / 2) Id``.  A
potential ``Q`` on the circle acts on unitaries through the eigenangles, and
``Q'`` always denotes the angle derivative.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

__all__ = [
    "BranchError",
    "SuTangentBasis",
    "DividedDifferenceTable",
    "divided_difference",
    "trace_derivative",
    "trace_hessian",
    "eigenangles",
    "unitary_function",
    "su_potential",
    "su_gradient",
    "su_hessian",
    "hessian_lower_bound",
    "ricci_su",
    "bakry_emery_constant",
    "geodesic_distance_su",
    "relative_fisher_matrix_norm",
    "random_su",
]


class BranchError(ValueError):
    """The principal logarithm is ambiguous (eigenvalue at or near -1)."""


# ---------------------------------------------------------------- bases


@dataclass(frozen=True, eq=False)
class SuTangentBasis:
    """Orthonormal basis ``Y_k = i X_k`` of su(n), ``X_k`` generalized Gell-Mann.

    Orthonormal for ``Re Tr(A^* B)``; ``basis`` has shape ``(n^2 - 1, n, n)``.
    """

    n: int
    basis: np.ndarray

    @classmethod
    def build(cls, n):
        if n < 2:
            raise ValueError("SU(n) needs n >= 2")
        mats = []
        for j in range(n):
            for k in range(j + 1, n):
                sym = np.zeros((n, n), dtype=complex)
                sym[j, k] = sym[k, j] = 1.0 / np.sqrt(2.0)
                anti = np.zeros((n, n), dtype=complex)
                anti[j, k], anti[k, j] = -1j / np.sqrt(2.0), 1j / np.sqrt(2.0)
                mats += [sym, anti]
        for l in range(1, n):
            diag = np.zeros(n)
            diag[:l] = 1.0
            diag[l] = -float(l)
            mats.append(np.diag(diag / np.sqrt(l * (l + 1.0))).astype(complex))
        herm = np.array(mats)
        return cls(n, 1j * herm)

    @property
    def dim(self):
        return self.basis.shape[0]

    def combine(self, coords):
        """``sum_k coords[k] Y_k``."""
        return np.tensordot(np.asarray(coords, dtype=float), self.basis, axes=1)

    def gram(self):
        flat = self.basis.reshape(self.dim, -1)
        return np.real(flat.conj() @ flat.T)


# ---------------------------------------------------- divided differences


def _first(f, df, a, b, tol):
    a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
    out = np.empty(a.shape)
    near = np.abs(a - b) <= tol * (1.0 + np.maximum(np.abs(a), np.abs(b)))
    out[near] = df(0.5 * (a[near] + b[near]))
    far = ~near
    out[far] = (f(a[far]) - f(b[far])) / (a[far] - b[far])
    return out


def divided_difference(f, df, d2f, points, tol=1e-7):
    """First or second divided difference with confluent limits.

    Parameters
    ----------
    f, df, d2f : callable
        The function and its first two derivatives (``d2f`` only for order 2).
    points : sequence of 2 or 3 floats

    Returns
    -------
    float
        ``f^[1](a, b)`` (equal to ``f'(a)`` when ``a == b``) or
        ``f^[2](a, b, c)`` (equal to ``f''(a) / 2`` when all coincide).
    """
    pts = np.sort(np.asarray(points, dtype=float))
    if pts.size == 2:
        return float(_first(f, df, pts[0], pts[1], tol))
    if pts.size != 3:
        raise ValueError("orders 1 and 2 are supported")
    x0, x1, x2 = pts
    if x2 - x0 <= tol * (1.0 + abs(x0) + abs(x2)):
        return float(0.5 * d2f(x1))
    return float((_first(f, df, x1, x2, tol) - _first(f, df, x0, x1, tol)) / (x2 - x0))


@dataclass(frozen=True, eq=False)
class DividedDifferenceTable:
    """Tables ``first[i, j] = f^[1](x_i, x_j)`` and ``second[i, j, k]`` on points."""

    points: np.ndarray
    first: np.ndarray
    second: np.ndarray = None

    @classmethod
    def build(cls, f, df, points, d2f=None, tol=1e-7):
        x = np.asarray(points, dtype=float)
        first = _first(f, df, x[:, None], x[None, :], tol)
        second = None
        if d2f is not None:
            n = x.size
            second = np.empty((n, n, n))
            for idx in np.ndindex(n, n, n):
                second[idx] = divided_difference(f, df, d2f, x[list(idx)], tol)
        return cls(x, first, second)


# --------------------------------------------------- trace derivatives


def _eigh(a):
    a = np.asarray(a)
    if not np.allclose(a, a.conj().T, atol=1e-10 * max(1.0, np.abs(a).max())):
        raise ValueError("matrix must be self-adjoint")
    return np.linalg.eigh(a)


def trace_derivative(df, a, h):
    """``d/dt Tr f(A + t H)`` at ``t = 0``, equal to ``Tr(f'(A) H)``.

    Parameters
    ----------
    df : callable
        Derivative ``f'`` (vectorized).
    a, h : ndarray
        Self-adjoint matrices.
    """
    lam, u = _eigh(a)
    h_rot = u.conj().T @ np.asarray(h) @ u
    return float(np.real(np.dot(df(lam), np.diag(h_rot))))


def trace_hessian(df, d2f, a, h1, h2):
    """``d^2/ds dt Tr f(A + s H1 + t H2)`` at 0.

    Equals ``sum_ij (f')^[1](l_i, l_j) (U^* H1 U)_ij (U^* H2 U)_ji`` in the
    eigenbasis of ``A``.
    """
    lam, u = _eigh(a)
    first = _first(df, d2f, lam[:, None], lam[None, :], 1e-7)
    r1 = u.conj().T @ np.asarray(h1) @ u
    r2 = u.conj().T @ np.asarray(h2) @ u
    return float(np.real(np.sum(first * r1 * r2.T)))


# ------------------------------------------------------- unitary calculus


def eigenangles(u):
    """Eigenangles in ``(-pi, pi]`` and an orthonormal eigenbasis of a unitary."""
    t, z = linalg.schur(np.asarray(u, dtype=complex), output="complex")
    return np.angle(np.diag(t)), z


def unitary_function(g, u):
    """``V diag(g(theta)) V^*`` for ``U = V diag(e^{i theta}) V^*``."""
    theta, z = eigenangles(u)
    return (z * g(theta)) @ z.conj().T


def su_potential(q, u):
    """``Psi(U) = Tr Q(U) = sum_j Q(theta_j)``."""
    theta, _ = eigenangles(u)
    return float(np.sum(q(theta)))


def _check_branch(theta, margin):
    if margin > 0 and np.any(np.pi - np.abs(theta) < margin):
        raise BranchError("an eigenvalue lies within the branch-cut margin of -1")


def su_gradient(dq, u, branch_margin=0.0):
    """Gradient ``i (Q'(U) - Tr(Q'(U)) I / n)`` of ``Psi`` at ``U``.

    The gradient is a traceless skew-Hermitian matrix ``G`` with
    ``d/dt Psi(U e^{tY}) = Re Tr(G^* Y)`` for ``Y`` in su(n).
    """
    theta, z = eigenangles(u)
    _check_branch(theta, branch_margin)
    n = theta.size
    d = dq(theta)
    herm = (z * d) @ z.conj().T
    return 1j * (herm - np.trace(herm) / n * np.eye(n))


def su_hessian(q, u, basis=None, step=1e-4):
    """Hessian of ``Psi`` in the normal coordinates ``x -> U exp(sum x_k Y_k)``.

    Central second differences; these coordinates are normal because the
    geodesics of a bi-invariant metric are one-parameter subgroups.
    """
    u = np.asarray(u, dtype=complex)
    basis = SuTangentBasis.build(u.shape[0]) if basis is None else basis
    dim = basis.dim
    psi = lambda x: su_potential(q, u @ linalg.expm(basis.combine(x)))  # noqa: E731
    eye = np.eye(dim) * step
    hess = np.empty((dim, dim))
    center = psi(np.zeros(dim))
    for k in range(dim):
        hess[k, k] = (psi(eye[k]) - 2.0 * center + psi(-eye[k])) / step**2
        for l in range(k + 1, dim):
            val = (
                psi(eye[k] + eye[l]) - psi(eye[k] - eye[l])
                - psi(-eye[k] + eye[l]) + psi(-eye[k] - eye[l])
            ) / (4.0 * step**2)
            hess[k, l] = hess[l, k] = val
    return hess


def hessian_lower_bound(q, rho, u, basis=None, step=1e-4, branch_margin=1e-3):
    """Smallest eigenvalue of the Hessian of ``Psi`` at ``U``.

    Returns
    -------
    dict
        ``eigmin``, ``rho`` and ``slack = eigmin - rho``.

    Raises
    ------
    BranchError
        When an eigenvalue of ``U`` is within ``branch_margin`` of ``-1``;
        callers retry at a rotated point.
    """
    theta, _ = eigenangles(u)
    _check_branch(theta, branch_margin)
    eigmin = float(np.linalg.eigvalsh(su_hessian(q, u, basis, step)).min())
    return {"eigmin": eigmin, "rho": float(rho), "slack": eigmin - float(rho)}


def ricci_su(n):
    """Ricci curvature constant ``n / 2`` of SU(n) for the trace metric."""
    if n < 2:
        raise ValueError("SU(n) needs n >= 2")
    return n / 2.0


def bakry_emery_constant(n, rho):
    """``n / 2 + n rho``: lower bound of ``Ric + Hess(n Psi)`` on SU(n)."""
    return ricci_su(n) + n * float(rho)


def geodesic_distance_su(u, v, tol=1e-9):
    """Geodesic distance ``||A||_HS`` with ``V = U exp(i A)``, ``A`` traceless.

    The principal eigenangles ``phi`` of ``U^* V`` sum to ``2 pi m``; the
    traceless branch of smallest norm subtracts ``2 pi`` from the ``m``
    largest angles (or adds it to the ``-m`` smallest).

    Raises
    ------
    BranchError
        When an eigenangle of ``U^* V`` is within ``tol`` of ``pi``.
    """
    w = np.asarray(u, dtype=complex).conj().T @ np.asarray(v, dtype=complex)
    phi = np.sort(np.angle(np.linalg.eigvals(w)))
    if np.any(np.pi - np.abs(phi) < tol):
        raise BranchError("U^* V has an eigenvalue at -1; the geodesic is not unique")
    m = int(np.round(phi.sum() / (2.0 * np.pi)))
    if m > 0:
        phi[-m:] -= 2.0 * np.pi
    elif m < 0:
        phi[:-m] += 2.0 * np.pi
    return float(np.sqrt(np.sum(phi**2)))


def relative_fisher_matrix_norm(dq_mu, dq, u):
    """``n^2 Tr(D^2) - n (Tr D)^2`` with ``D = Q_mu'(U) - Q'(U)``.

    Computed from the eigenangles of ``U`` (or directly from an angle vector).
    It is the squared norm of the gradient of the log density ratio of the
    two special unitary ensembles.
    """
    u = np.asarray(u)
    theta = u if u.ndim == 1 else eigenangles(u)[0]
    d = dq_mu(theta) - dq(theta)
    n = theta.size
    return float(n * n * np.sum(d * d) - n * np.sum(d) ** 2)


def random_su(n, rng, scale=None):
    """Haar-random SU(n) element, or ``exp`` of a Gaussian su(n) element of size ``scale``."""
    if scale is not None:
        basis = SuTangentBasis.build(n)
        return linalg.expm(basis.combine(scale * rng.standard_normal(basis.dim)))
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return q / np.linalg.det(q) ** (1.0 / n)
