"""Quadratic Wasserstein distances in one dimension.

The cost convention is ``W(mu, nu)^2 = inf int (1/2) d(x, y)^2 dpi``, with
``d`` the absolute difference on the line and the angular distance on the
circle (the chord length for :func:`wasserstein_T_chord`).

On the line the monotone (quantile) coupling is optimal.  On the circle the
optimal cost is a minimum over a rotation parameter ``theta`` of quantile
couplings between the periodic lift of the quantile functions,
``(1/2) int_0^1 (F_mu^{-1}(t) - F_nu^{-1}(t + theta))^2 dt``, which is convex
in ``theta``.  Both fast paths are shadowed by a linear-programming oracle.
"""

import itertools
from dataclasses import dataclass

import numpy as np
from scipy import optimize, sparse

from ._validation import DomainError
from .measures import EmpiricalMeasure, GridMeasure, QuantileTable, cdf_quantile

__all__ = [
    "DiscreteMeasure",
    "CouplingPlan",
    "as_discrete",
    "quantile_table",
    "wasserstein_R",
    "wasserstein_T_geodesic",
    "wasserstein_T_chord",
    "discrete_ot",
    "angular_distance",
    "optimal_matching_distance",
    "matching_brute_force",
    "check_matrix_contraction",
    "check_su_matching_bound",
]

TWO_PI = 2.0 * np.pi
_GAUSS2 = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Finitely many weighted atoms; weights sum to one."""

    atoms: np.ndarray
    weights: np.ndarray
    domain: str = "real"

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float).ravel()
        weights = np.asarray(self.weights, dtype=float).ravel()
        if atoms.shape != weights.shape or atoms.size == 0:
            raise ValueError("atoms and weights must be nonempty and of equal length")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-10:
            raise ValueError("weights must be nonnegative and sum to one")
        if self.domain == "circle":
            atoms = np.mod(atoms + np.pi, TWO_PI) - np.pi
        order = np.argsort(atoms, kind="stable")
        object.__setattr__(self, "atoms", atoms[order])
        object.__setattr__(self, "weights", weights[order])


@dataclass(frozen=True)
class CouplingPlan:
    """Summary of an optimal coupling.

    ``kind`` is ``"monotone"`` (line), ``"rotated-monotone"`` (circle, with the
    optimal ``shift``) or ``"discrete"`` (LP, with ``pairs``).
    """

    kind: str
    cost: float
    shift: float = 0.0
    pairs: int = 0

    @property
    def distance(self):
        return float(np.sqrt(max(self.cost, 0.0)))

    def to_dict(self):
        return {"kind": self.kind, "cost": self.cost, "shift": self.shift, "pairs": self.pairs}


def as_discrete(mu):
    """Atoms at cell midpoints (grid input) or the equal-weight atoms."""
    if isinstance(mu, DiscreteMeasure):
        return mu
    if isinstance(mu, EmpiricalMeasure):
        return DiscreteMeasure(mu.atoms, np.full(mu.size, 1.0 / mu.size), mu.domain)
    keep = mu.masses > 0
    w = mu.masses[keep]
    return DiscreteMeasure(mu.midpoints[keep], w / w.sum(), mu.domain)


def quantile_table(mu):
    """Piecewise-linear quantile function of any supported measure type."""
    if isinstance(mu, DiscreteMeasure):
        t = np.concatenate([[0.0], np.cumsum(mu.weights)])
        t[-1] = 1.0
        return QuantileTable(t, mu.atoms, mu.atoms)
    return cdf_quantile(mu)


def _domain(mu):
    return mu.domain


def _segment_integral(breaks, f, g):
    """``int (f - g)^2`` over ``[breaks[0], breaks[-1]]`` for piecewise-linear f, g.

    Both functions must be linear between consecutive breaks; two-point Gauss
    nodes make the integral exact and never touch a break.
    """
    lo, hi = breaks[:-1], breaks[1:]
    span = hi - lo
    keep = span > 0
    lo, span = lo[keep], span[keep]
    total = 0.0
    for node in _GAUSS2:
        t = lo + node * span
        total += 0.5 * float(np.dot(span, (f(t) - g(t)) ** 2))
    return total


def wasserstein_R(mu, nu, return_plan=False):
    """Quadratic Wasserstein distance on the line through the quantile coupling.

    Parameters
    ----------
    mu, nu : GridMeasure, EmpiricalMeasure or DiscreteMeasure
        Measures on the line or the half-line.

    Returns
    -------
    float or CouplingPlan

    Examples
    --------
    >>> from freeineq.measures import EmpiricalMeasure
    >>> round(wasserstein_R(EmpiricalMeasure([0.0]), EmpiricalMeasure([1.0])), 6)
    0.707107
    """
    if _domain(mu) == "circle" or _domain(nu) == "circle":
        raise DomainError("use wasserstein_T_geodesic or wasserstein_T_chord on the circle")
    tm, tn = quantile_table(mu), quantile_table(nu)
    breaks = np.union1d(tm.t, tn.t)
    cost = 0.5 * _segment_integral(breaks, tm.quantile, tn.quantile)
    plan = CouplingPlan("monotone", cost)
    return plan if return_plan else plan.distance


def _lifted(table):
    """Quantile function extended by ``F^{-1}(t + 1) = F^{-1}(t) + 2 pi``."""

    def q(u):
        k = np.floor(u)
        return table.quantile(u - k) + TWO_PI * k

    return q


def _rotation_cost(tm, tn, theta):
    qm, qn = tm.quantile, _lifted(tn)
    shifted = tn.t[None, :] - theta + np.arange(-2, 3)[:, None]
    inside = shifted[(shifted > 0) & (shifted < 1)]
    breaks = np.union1d(tm.t, inside)
    return 0.5 * _segment_integral(breaks, qm, lambda t: qn(t + theta))


def _golden(func, lo, hi, tol=1e-12, max_iter=200):
    ratio = (np.sqrt(5.0) - 1.0) / 2.0
    c, d = hi - ratio * (hi - lo), lo + ratio * (hi - lo)
    fc, fd = func(c), func(d)
    for _ in range(max_iter):
        if hi - lo < tol:
            break
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - ratio * (hi - lo)
            fc = func(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + ratio * (hi - lo)
            fd = func(d)
    x = 0.5 * (lo + hi)
    return x, func(x)


def _is_convex_sequence(values, rtol=1e-9):
    second = values[2:] - 2.0 * values[1:-1] + values[:-2]
    return bool(np.all(second >= -rtol * (1.0 + np.abs(values).max())))


def wasserstein_T_geodesic(mu, nu, scan=64, return_plan=False):
    """Quadratic Wasserstein distance on the circle for the angular metric.

    The rotation parameter is located by a coarse scan of ``scan + 1`` values
    on ``[-1, 1]`` followed by golden-section refinement.  If the scanned
    costs are not convex (they should be) a 16x finer scan is used instead.
    """
    if _domain(mu) != "circle" or _domain(nu) != "circle":
        raise DomainError("wasserstein_T_geodesic expects circle measures")
    tm, tn = quantile_table(mu), quantile_table(nu)
    cost = lambda th: _rotation_cost(tm, tn, th)  # noqa: E731
    grid = np.linspace(-1.0, 1.0, scan + 1)
    values = np.array([cost(th) for th in grid])
    if not _is_convex_sequence(values):
        grid = np.linspace(-1.0, 1.0, 16 * scan + 1)
        values = np.array([cost(th) for th in grid])
    k = int(np.argmin(values))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    theta, best = _golden(cost, lo, hi)
    if values[k] < best:
        theta, best = grid[k], values[k]
    plan = CouplingPlan("rotated-monotone", float(best), shift=float(theta))
    return plan if return_plan else plan.distance


def angular_distance(x, y):
    """Geodesic distance on the circle between angles, in ``[0, pi]``."""
    d = np.abs(np.mod(np.asarray(x) - np.asarray(y) + np.pi, TWO_PI) - np.pi)
    return d


def discrete_ot(a, b, cost):
    """Exact discrete optimal transport by linear programming (HiGHS).

    Parameters
    ----------
    a, b : ndarray
        Source and target weights.
    cost : ndarray, shape (len(a), len(b))

    Returns
    -------
    value : float
    plan : ndarray
    """
    m, n = cost.shape
    rows = sparse.kron(sparse.eye(m), np.ones((1, n)))
    cols = sparse.kron(np.ones((1, m)), sparse.eye(n))
    a_eq = sparse.vstack([rows, cols]).tocsr()
    b_eq = np.concatenate([a, b])
    res = optimize.linprog(
        cost.ravel(), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs"
    )
    if res.status != 0:
        raise RuntimeError(f"transport LP failed: {res.message}")
    return float(res.fun), res.x.reshape(m, n)


def wasserstein_T_chord(mu, nu, max_points=512, return_plan=False):
    """Wasserstein distance on the circle for the chord metric ``|zeta - eta|``.

    Exact LP on the atoms (cell midpoints for grid input); at most
    ``max_points`` atoms per measure.
    """
    if _domain(mu) != "circle" or _domain(nu) != "circle":
        raise DomainError("wasserstein_T_chord expects circle measures")
    dm, dn = as_discrete(mu), as_discrete(nu)
    if max(dm.atoms.size, dn.atoms.size) > max_points:
        raise ValueError(f"chord LP supports at most {max_points} atoms per measure")
    cost = 1.0 - np.cos(dm.atoms[:, None] - dn.atoms[None, :])
    value, plan = discrete_ot(dm.weights, dn.weights, cost)
    result = CouplingPlan("discrete", value, pairs=int(np.count_nonzero(plan > 1e-14)))
    return result if return_plan else result.distance


def matching_brute_force(zeta, eta):
    """Optimal matching distance by enumerating all permutations."""
    zeta, eta = np.asarray(zeta, dtype=float), np.asarray(eta, dtype=float)
    n = zeta.size
    perms = np.array(list(itertools.permutations(range(n))))
    sq = angular_distance(zeta[None, :], eta[perms]) ** 2
    return float(np.sqrt(sq.sum(axis=1).min()))


def optimal_matching_distance(zeta, eta, check=None):
    """``min over permutations sqrt(sum_i d(zeta_i, eta_sigma(i))^2)`` on the torus.

    The fast path tries the ``n`` cyclic shifts of the angle-sorted matching.
    With ``check`` (default: ``n <= 8``) the result is compared with the
    assignment-problem optimum and a mismatch raises ``AssertionError``.
    """
    zeta = np.sort(np.mod(np.asarray(zeta, dtype=float), TWO_PI))
    eta = np.sort(np.mod(np.asarray(eta, dtype=float), TWO_PI))
    if zeta.shape != eta.shape or zeta.ndim != 1:
        raise ValueError("optimal matching needs two angle vectors of equal length")
    n = zeta.size
    shifts = (np.arange(n)[:, None] + np.arange(n)[None, :]) % n
    fast = float(np.sqrt((angular_distance(zeta[None, :], eta[shifts]) ** 2).sum(axis=1).min()))
    if check is None:
        check = n <= 8
    if check:
        sq = angular_distance(zeta[:, None], eta[None, :]) ** 2
        r, c = optimize.linear_sum_assignment(sq)
        exact = float(np.sqrt(sq[r, c].sum()))
        if abs(fast - exact) > 1e-10 * (1.0 + exact):
            raise AssertionError(f"cyclic matching {fast!r} differs from optimum {exact!r}")
    return fast


def _eig_discrete(mats, weights):
    n = mats[0].shape[0]
    atoms = np.concatenate([np.linalg.eigvalsh(m) for m in mats])
    w = np.repeat(np.asarray(weights, dtype=float) / n, n)
    return DiscreteMeasure(atoms, w / w.sum())


def check_matrix_contraction(mats_mu, weights_mu, mats_nu, weights_nu):
    """Slack of the eigenvalue contraction ``W(mu^, nu^) <= W(mu~, nu~) / sqrt(n)``.

    ``mu~`` and ``nu~`` are discrete measures on self-adjoint ``n x n``
    matrices, ``mu^`` and ``nu^`` their mean eigenvalue distributions.  The
    matrix distance uses the cost ``||A - B||_HS^2 / 2`` and is solved by LP.

    Returns
    -------
    dict
        ``lhs`` (eigenvalue side), ``rhs`` (matrix side over ``sqrt(n)``),
        ``slack = rhs - lhs``.
    """
    mats_mu = [np.asarray(m) for m in mats_mu]
    mats_nu = [np.asarray(m) for m in mats_nu]
    n = mats_mu[0].shape[0]
    cost = np.array(
        [[0.5 * np.linalg.norm(a - b, "fro") ** 2 for b in mats_nu] for a in mats_mu]
    )
    value, _ = discrete_ot(np.asarray(weights_mu, float), np.asarray(weights_nu, float), cost)
    rhs = np.sqrt(max(value, 0.0)) / np.sqrt(n)
    lhs = wasserstein_R(_eig_discrete(mats_mu, weights_mu), _eig_discrete(mats_nu, weights_nu))
    return {"lhs": float(lhs), "rhs": float(rhs), "slack": float(rhs - lhs)}


def check_su_matching_bound(u, v):
    """Slack of ``delta(lambda(U), lambda(V)) <= d(U, V)`` on SU(n).

    Returns
    -------
    dict
        ``lhs`` (matching distance of eigenangles), ``rhs`` (geodesic
        distance), ``slack``, and ``flag`` set when the branch is ambiguous.
    """
    from .matrix_calculus import BranchError, geodesic_distance_su

    try:
        rhs = geodesic_distance_su(u, v)
    except BranchError:
        return {"lhs": float("nan"), "rhs": float("nan"), "slack": float("nan"), "flag": True}
    lhs = optimal_matching_distance(np.angle(np.linalg.eigvals(u)), np.angle(np.linalg.eigvals(v)))
    return {"lhs": lhs, "rhs": float(rhs), "slack": float(rhs - lhs), "flag": False}
