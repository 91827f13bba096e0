"""Equilibrium measures and normalization constants.

The weighted energy ``E_Q(mu) = -Sigma(mu) + int Q dmu`` restricted to step
densities on a grid is a convex quadratic in the cell masses ``w``:
``E(w) = -w^T K w + q^T w`` with ``K`` the exact cell-pair log kernel and
``q`` the cell averages of ``Q``.  It is minimized over the probability
simplex by projected gradient with Barzilai-Borwein steps, then polished by
solving the KKT system on the active set.
"""

import inspect
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.signal import fftconvolve

from ._validation import DomainError, check_cells
from .measures import (
    GridMeasure,
    fold_square,
    make_free_poisson,
    make_nu_lambda,
    make_semicircle,
)
from .potentials import squared_argument
from .quadrature import LogPotential, circle_kernel_spectrum, line_kernel

__all__ = [
    "EquilibriumResult",
    "EquilibriumSolver",
    "ConvergenceError",
    "solve_equilibrium",
    "closed_form_equilibrium",
    "euler_lagrange_residual",
    "default_window",
    "project_simplex",
]


class ConvergenceError(RuntimeError):
    """The solver stopped before meeting its optimality tolerance."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (KKT residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True, eq=False)
class EquilibriumResult:
    """Equilibrium measure with its normalization constant.

    Attributes
    ----------
    measure : GridMeasure
    B : float
        ``-E_Q(mu_Q)``; on the half-line this is the half-line constant.
    residual : float
        Euler-Lagrange residual, see :func:`euler_lagrange_residual`.
    iterations : int
    converged : bool
    source : str
        ``"solver"`` or ``"closed-form"``.
    symmetrized : GridMeasure or None
        Half-line problems only: the equilibrium of ``Q(s^2) / 2`` on the line,
        whose image under ``s -> s^2`` is ``measure``.
    """

    measure: GridMeasure
    B: float
    residual: float
    iterations: int
    converged: bool
    source: str
    symmetrized: GridMeasure = None


def default_window(potential):
    """Grid interval used when none is given.

    Line: ``center -/+ (4 / sqrt(rho) + 1)``, twice the semicircle radius plus
    one.  Half-line: ``[0, 8 / rho + 1]``.  Circle: ``[-pi, pi)``.
    """
    if potential.domain == "circle":
        return -np.pi, np.pi
    rho = potential.rho
    if not rho > 0:
        raise DomainError("a positive convexity constant is needed to size the window")
    if potential.domain == "halfline":
        return 0.0, 8.0 / rho + 1.0
    center = float(potential.params.get("center", 0.0))
    half = 4.0 / np.sqrt(rho) + 1.0
    return center - half, center + half


def project_simplex(v):
    """Euclidean projection onto ``{w >= 0, sum w = 1}`` (sort-based)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    k = np.nonzero(u - css / idx > 0)[0][-1]
    tau = css[k] / (k + 1.0)
    return np.maximum(v - tau, 0.0)


class _Kernel:
    """Cell-pair log kernel in mass coordinates, with fast and dense forms."""

    def __init__(self, domain, cells, width):
        self.domain = domain
        self.cells = cells
        if domain == "circle":
            self._spec = circle_kernel_spectrum(cells)
        else:
            self._row = line_kernel(cells, width)
            self._full = np.concatenate([self._row[:0:-1], self._row])

    def matvec(self, w):
        if self.domain == "circle":
            return np.real(np.fft.ifft(self._spec * np.fft.fft(w)))
        n = self.cells
        return fftconvolve(w, self._full)[n - 1 : 2 * n - 1]

    def dense(self, idx):
        if self.domain == "circle":
            col = np.real(np.fft.ifft(self._spec))
            diff = (idx[:, None] - idx[None, :]) % self.cells
            return col[diff]
        return linalg.toeplitz(self._row)[np.ix_(idx, idx)]


def _kkt_violation(w, grad, support_tol=0.0):
    """Multiplier and worst violation of the optimality conditions."""
    on = w > support_tol
    lam = float(np.dot(w, grad))
    inside = np.max(np.abs(grad[on] - lam)) if np.any(on) else 0.0
    outside = np.max(np.maximum(lam - grad[~on], 0.0)) if np.any(~on) else 0.0
    return lam, max(inside, outside)


def _active_set_polish(kernel, q, w, max_rounds=60):
    """Solve the KKT system on the support, then fix sign and multiplier violations."""
    n = q.size
    support = np.flatnonzero(w > 1e-14 * w.max())
    for _ in range(max_rounds):
        k = support.size
        system = np.zeros((k + 1, k + 1))
        system[:k, :k] = -2.0 * kernel.dense(support)
        system[:k, k] = -1.0
        system[k, :k] = 1.0
        rhs = np.concatenate([-q[support], [1.0]])
        sol = np.linalg.solve(system, rhs)
        ws, lam = sol[:k], sol[k]
        if np.any(ws < 0):
            support = support[ws > 0]
            continue
        cand = np.zeros(n)
        cand[support] = ws
        grad = -2.0 * kernel.matvec(cand) + q
        outside = np.setdiff1d(np.arange(n), support)
        low = outside[grad[outside] < lam - 1e-12 * (1.0 + abs(lam))]
        if low.size == 0:
            return cand
        support = np.union1d(support, low)
    return None


def _minimize(kernel, q, tol, max_iter):
    n = q.size
    w = np.full(n, 1.0 / n)
    grad = -2.0 * kernel.matvec(w) + q
    step = 1.0 / (1.0 + np.abs(grad).max())
    iterations = 0
    for iterations in range(1, max_iter + 1):
        w_new = project_simplex(w - step * grad)
        grad_new = -2.0 * kernel.matvec(w_new) + q
        s, y = w_new - w, grad_new - grad
        w, grad = w_new, grad_new
        _, viol = _kkt_violation(w, grad)
        if viol < tol:
            break
        sy = float(np.dot(s, y))
        step = float(np.dot(s, s)) / sy if sy > 0 else 10.0 * step
    return w, iterations


def solve_equilibrium(potential, cells=2000, window=None, tol=1e-7, max_iter=3000, polish=True,
                      halfline_route="symmetrized"):
    """Minimize the weighted energy over step densities on a grid.

    Parameters
    ----------
    potential : Potential
        Its ``domain`` selects the problem.  On the line a finite ``window``
        plays the role of the restriction ``[-R, R]``.
    cells : int
    window : tuple of float, optional
        Grid interval; :func:`default_window` when omitted.
    tol : float
        Projected-gradient stopping tolerance on the KKT violation.
    polish : bool
        Finish with an exact active-set solve.
    halfline_route : {"symmetrized", "direct"}
        Half-line problems are solved either for ``Q(s^2) / 2`` on the line
        and folded back (``B = 2 B(Q~)``), or directly on the half-line grid.
        The first avoids the inverse square-root edge that equilibria of
        half-line problems typically have at 0.

    Returns
    -------
    EquilibriumResult

    Raises
    ------
    ConvergenceError
        When the final KKT violation exceeds ``1e-6``.
    """
    cells = check_cells(cells)
    a, b = default_window(potential) if window is None else map(float, window)
    if potential.domain == "circle":
        a, b = -np.pi, np.pi
    if potential.domain == "halfline" and halfline_route == "symmetrized":
        root = np.sqrt(b)
        line = solve_equilibrium(
            squared_argument(potential), cells + cells % 2, (-root, root), tol, max_iter, polish
        )
        return EquilibriumResult(
            fold_square(line.measure, cells, b),
            2.0 * line.B,
            2.0 * line.residual,
            line.iterations,
            True,
            "solver",
            line.measure,
        )
    if halfline_route not in ("symmetrized", "direct"):
        raise ValueError(f"unknown half-line route {halfline_route!r}")
    grid = GridMeasure.from_masses(potential.domain, a, b, np.ones(cells))
    kernel = _Kernel(potential.domain, cells, grid.width)
    nodes, weights = np.polynomial.legendre.leggauss(8)
    pts = 0.5 * grid.width * nodes[None, :] + grid.midpoints[:, None]
    q = 0.5 * (np.asarray(potential.value(pts), dtype=float) @ weights)

    w, iterations = _minimize(kernel, q, tol, max_iter)
    if polish:
        polished = _active_set_polish(kernel, q, w)
        if polished is not None:
            w = polished
    grad = -2.0 * kernel.matvec(w) + q
    _, viol = _kkt_violation(w, grad)
    scale = 1.0 + np.abs(grad).max()
    if viol > 1e-6 * scale:
        raise ConvergenceError("equilibrium solver did not converge", viol)
    mu = GridMeasure.from_masses(potential.domain, a, b, w)
    energy = -float(w @ kernel.matvec(w)) + float(q @ w)
    return EquilibriumResult(
        mu, -energy, euler_lagrange_residual(mu, potential), iterations, True, "solver"
    )


def closed_form_equilibrium(potential, cells=2000, window=None):
    """Exact equilibrium for the quadratic, cosine and linear half-line families.

    Returns ``None`` for other potentials.

    * ``rho (x - c)^2 / 2``: semicircle of radius ``2 / sqrt(rho)`` at ``c``,
      ``B = -log(rho) / 2 - 3/4``.
    * ``-(2 / lam) cos(theta - phase)``: ``nu_lam`` rotated by ``phase``,
      ``B = 1 / lam^2``.
    * ``rho x`` on the half-line: density ``(rho / 2pi) sqrt((4/rho - x) / x)``,
      ``B = -log(rho) - 3/2``.
    """
    family, params = potential.family, potential.params
    if family == "quadratic":
        rho, center = params["rho"], params.get("center", 0.0)
        a, b = default_window(potential) if window is None else window
        mu = make_semicircle(2.0 / np.sqrt(rho), cells, center=center, a=a, b=b)
        B = -0.5 * np.log(rho) - 0.75
    elif family == "cosine":
        lam = params["lambda"]
        mu = make_nu_lambda(lam, cells, phase=params.get("phase", 0.0))
        B = 0.0 if np.isinf(lam) else 1.0 / lam**2
    elif family == "linear-halfline":
        rho = params["rho"]
        b = default_window(potential)[1] if window is None else window[1]
        root = np.sqrt(b)
        sym = make_semicircle(2.0 / np.sqrt(rho), cells + cells % 2, a=-root, b=root)
        residual = 2.0 * euler_lagrange_residual(sym, squared_argument(potential))
        mu = make_free_poisson(rho, cells, b=b)
        return EquilibriumResult(
            mu, float(-np.log(rho) - 1.5), residual, 0, True, "closed-form", sym
        )
    else:
        return None
    return EquilibriumResult(
        mu, float(B), euler_lagrange_residual(mu, potential), 0, True, "closed-form"
    )


def euler_lagrange_residual(mu, potential, threshold=0.0):
    """``sup |Q - Q_mu - c|`` over cells with density above ``threshold``.

    ``Q_mu = 2 int log|x - y| dmu(y)`` is evaluated exactly at the midpoints
    and ``c`` is the mass-weighted mean of ``Q - Q_mu`` over those cells.

    For a half-line step measure whose density blows up at 0 the first cells
    dominate this sup; the residual stored by the solver is computed on the
    symmetrized problem instead.
    """
    on = mu.density > threshold
    if not np.any(on):
        raise ValueError("no cell has density above the threshold")
    diff = potential.value(mu.midpoints) - LogPotential(mu).on_grid()
    w = mu.masses[on]
    c = float(np.dot(w, diff[on]) / w.sum())
    return float(np.max(np.abs(diff[on] - c)))


class EquilibriumSolver:
    """Estimator-style wrapper around :func:`solve_equilibrium`.

    Parameters
    ----------
    cells, window, tol, max_iter, polish
        As in :func:`solve_equilibrium`.
    prefer_closed_form : bool
        Use the exact family solution when one exists.

    Attributes
    ----------
    measure_ : GridMeasure
    B_ : float
    residual_ : float
    n_iter_ : int
    source_ : str

    Examples
    --------
    >>> from freeineq.potentials import quadratic
    >>> solver = EquilibriumSolver(cells=400).fit(quadratic(1.0))
    >>> round(solver.B_, 3)
    -0.75
    """

    def __init__(self, cells=2000, window=None, tol=1e-7, max_iter=3000, polish=True,
                 prefer_closed_form=False):
        self.cells = cells
        self.window = window
        self.tol = tol
        self.max_iter = max_iter
        self.polish = polish
        self.prefer_closed_form = prefer_closed_form

    def get_params(self, deep=True):
        names = inspect.signature(type(self).__init__).parameters
        return {k: getattr(self, k) for k in names if k != "self"}

    def set_params(self, **params):
        valid = self.get_params()
        for key, value in params.items():
            if key not in valid:
                raise ValueError(f"invalid parameter {key!r}")
            setattr(self, key, value)
        return self

    def fit(self, potential):
        result = None
        if self.prefer_closed_form:
            result = closed_form_equilibrium(potential, self.cells, self.window)
        if result is None:
            result = solve_equilibrium(
                potential, self.cells, self.window, self.tol, self.max_iter, self.polish
            )
        self.result_ = result
        self.measure_ = result.measure
        self.B_ = result.B
        self.residual_ = result.residual
        self.n_iter_ = result.iterations
        self.source_ = result.source
        return self

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"EquilibriumSolver({args})"
