"""Probability measures on the line, the unit circle and the half-line.

The universal representation is :class:`GridMeasure`: a piecewise-constant
density on uniform cells.  On the circle the grid covers ``[-pi, pi)`` and the
density is taken against the normalized arc length ``dtheta / 2pi``, so the
uniform measure has density identically one.

Eigenvalue samples are held in :class:`EmpiricalMeasure` (equal-weight atoms).
"""

import csv
import hashlib
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from ._validation import (
    DomainError,
    check_cells,
    check_domain,
    check_positive,
)

__all__ = [
    "GridMeasure",
    "EmpiricalMeasure",
    "QuantileTable",
    "cdf_quantile",
    "make_uniform",
    "make_uniform_circle",
    "make_semicircle",
    "make_nu_lambda",
    "make_power_density",
    "make_free_poisson",
    "make_spike_measure",
    "symmetrize_sqrt",
    "pushforward_sqrt",
    "fold_square",
    "poisson_smooth",
    "mollify",
    "write_measure_csv",
    "read_measure_csv",
]

_MASS_TOL = 1e-12
TWO_PI = 2.0 * np.pi


@dataclass(frozen=True, eq=False)
class GridMeasure:
    """Piecewise-constant probability density on a uniform grid.

    Parameters
    ----------
    domain : {"real", "circle", "halfline"}
        Domain tag.  ``"circle"`` forces the interval ``[-pi, pi)``.
    a, b : float
        Interval end points.  For ``"halfline"`` ``a`` must be 0.
    density : array-like, shape (cells,)
        Density value on each cell; against ``dx`` on the line and half-line,
        against ``dtheta / 2pi`` on the circle.
    """

    domain: str
    a: float
    b: float
    density: np.ndarray = field(repr=False)

    def __post_init__(self):
        check_domain(self.domain)
        density = np.array(self.density, dtype=float)
        check_cells(density.size)
        if density.ndim != 1:
            raise ValueError("density must be one-dimensional")
        if not np.all(np.isfinite(density)) or np.any(density < 0):
            raise DomainError("density must be finite and nonnegative")
        a, b = float(self.a), float(self.b)
        if self.domain == "circle":
            if not (np.isclose(a, -np.pi, atol=1e-14) and np.isclose(b, np.pi, atol=1e-14)):
                raise DomainError("circle grids must cover [-pi, pi)")
            a, b = -np.pi, np.pi
        if not b > a:
            raise DomainError("need b > a")
        if self.domain == "halfline" and a != 0.0:
            raise DomainError("half-line grids start at 0")
        density.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "density", density)
        total = self.masses.sum()
        if abs(total - 1.0) > _MASS_TOL:
            raise DomainError(f"total mass {total!r} differs from 1")

    @classmethod
    def from_masses(cls, domain, a, b, masses):
        """Build a measure from per-cell masses, normalizing the total to one."""
        masses = np.asarray(masses, dtype=float)
        if np.any(masses < 0):
            if masses.min() < -1e-12 * masses.max():
                raise DomainError("negative cell mass")
            masses = np.clip(masses, 0.0, None)
        total = masses.sum()
        if not total > 0:
            raise DomainError("measure has zero mass")
        masses = masses / total
        h = (b - a) / masses.size
        scale = h / TWO_PI if domain == "circle" else h
        density = masses / scale
        # a last rescale absorbs rounding so the mass check holds to 1e-12
        density = density / (density.sum() * scale)
        return cls(domain, a, b, density)

    @classmethod
    def from_function(cls, domain, a, b, cells, pdf, order=8):
        """Cell averages of ``pdf`` by Gauss-Legendre quadrature, then normalized."""
        cells = check_cells(cells)
        edges = np.linspace(a, b, cells + 1)
        nodes, weights = np.polynomial.legendre.leggauss(order)
        lo, hi = edges[:-1, None], edges[1:, None]
        pts = 0.5 * (hi - lo) * nodes[None, :] + 0.5 * (hi + lo)
        vals = np.asarray(pdf(pts), dtype=float)
        masses = 0.5 * (hi[:, 0] - lo[:, 0]) * (vals @ weights)
        return cls.from_masses(domain, a, b, masses)

    @property
    def cells(self):
        return self.density.size

    @property
    def width(self):
        """Cell width (an angle on the circle)."""
        return (self.b - self.a) / self.cells

    @property
    def edges(self):
        return np.linspace(self.a, self.b, self.cells + 1)

    @property
    def midpoints(self):
        e = self.edges
        return 0.5 * (e[1:] + e[:-1])

    @property
    def cell_measure(self):
        """Reference measure of one cell: ``h`` or ``h / 2pi`` on the circle."""
        return self.width / TWO_PI if self.domain == "circle" else self.width

    @property
    def masses(self):
        """Probability of each cell."""
        return self.density * self.cell_measure

    def moment(self, k):
        """Exact ``k``-th moment of the step density (real and half-line)."""
        if self.domain == "circle":
            raise DomainError("moments are defined for line measures; use integrate()")
        e = self.edges
        k = int(k)
        cell_int = (e[1:] ** (k + 1) - e[:-1] ** (k + 1)) / (k + 1)
        return float(np.dot(self.density, cell_int))

    def integrate(self, func, order=6):
        """Integrate ``func`` against the measure with per-cell Gauss-Legendre."""
        nodes, weights = np.polynomial.legendre.leggauss(order)
        e = self.edges
        pts = 0.5 * self.width * nodes[None, :] + 0.5 * (e[1:] + e[:-1])[:, None]
        avg = 0.5 * (np.asarray(func(pts), dtype=float) @ weights)
        return float(np.dot(self.masses, avg))

    def support(self, threshold=0.0):
        """Smallest interval holding every cell with density above ``threshold``."""
        idx = np.flatnonzero(self.density > threshold)
        e = self.edges
        return float(e[idx[0]]), float(e[idx[-1] + 1])

    def digest(self):
        """Short stable hash of the measure, used in reports."""
        h = hashlib.sha256()
        h.update(f"{self.domain}|{self.a!r}|{self.b!r}|{self.cells}".encode())
        h.update(np.ascontiguousarray(self.density).tobytes())
        return h.hexdigest()[:16]

    def __repr__(self):
        return f"GridMeasure(domain={self.domain!r}, a={self.a:.6g}, b={self.b:.6g}, cells={self.cells})"


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """Equal-weight atoms, sorted ascending.

    On the circle atoms are angles reduced to ``[-pi, pi)``.
    """

    atoms: np.ndarray
    domain: str = "real"

    def __post_init__(self):
        check_domain(self.domain)
        atoms = np.asarray(self.atoms, dtype=float).ravel()
        if atoms.size == 0:
            raise ValueError("an empirical measure needs at least one atom")
        if self.domain == "circle":
            atoms = np.mod(atoms + np.pi, TWO_PI) - np.pi
        atoms = np.sort(atoms)
        atoms.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)

    @property
    def size(self):
        return self.atoms.size

    def moment(self, k):
        return float(np.mean(self.atoms ** k))

    def digest(self):
        h = hashlib.sha256(self.domain.encode())
        h.update(self.atoms.tobytes())
        return h.hexdigest()[:16]


class QuantileTable:
    """Piecewise-linear CDF and its exact inverse.

    The quantile function is stored as segments: on ``[t[k], t[k+1]]`` it runs
    linearly from ``x0[k]`` to ``x1[k]``.  Atoms are segments with
    ``x0 == x1``.
    """

    def __init__(self, t, x0, x1):
        self.t = np.asarray(t, dtype=float)
        self.x0 = np.asarray(x0, dtype=float)
        self.x1 = np.asarray(x1, dtype=float)

    def quantile(self, q):
        q = np.asarray(q, dtype=float)
        k = np.clip(np.searchsorted(self.t, q, side="right") - 1, 0, self.x0.size - 1)
        span = self.t[k + 1] - self.t[k]
        # masses below rounding leave zero-width segments
        safe = np.where(span > 0, span, 1.0)
        frac = np.where(span > 0, np.clip((q - self.t[k]) / safe, 0.0, 1.0), 0.0)
        return self.x0[k] + frac * (self.x1[k] - self.x0[k])

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for k in range(self.x0.size):
            lo, hi = self.x0[k], self.x1[k]
            mass = self.t[k + 1] - self.t[k]
            if hi > lo:
                out += mass * np.clip((x - lo) / (hi - lo), 0.0, 1.0)
            else:
                out += mass * (x >= lo)
        return np.clip(out, 0.0, 1.0)


def cdf_quantile(mu):
    """Quantile table of a grid or empirical measure.

    Zero-mass cells are dropped, so the quantile function jumps across gaps
    in the support.
    """
    if isinstance(mu, EmpiricalMeasure):
        n = mu.size
        t = np.arange(n + 1) / n
        return QuantileTable(t, mu.atoms, mu.atoms)
    masses = mu.masses
    keep = masses > 0
    e = mu.edges
    t = np.concatenate([[0.0], np.cumsum(masses[keep])])
    t[-1] = 1.0
    return QuantileTable(t, e[:-1][keep], e[1:][keep])


# ---------------------------------------------------------------- constructors


def make_uniform(a, b, cells, domain="real"):
    """Uniform probability on ``[a, b]``."""
    cells = check_cells(cells)
    return GridMeasure.from_masses(domain, a, b, np.full(cells, 1.0 / cells))


def make_uniform_circle(cells):
    """Normalized arc length ``dtheta / 2pi``."""
    return make_uniform(-np.pi, np.pi, cells, domain="circle")


def _semicircle_cdf(x, r, center=0.0):
    s = np.clip((np.asarray(x, dtype=float) - center) / r, -1.0, 1.0)
    return 0.5 + (s * np.sqrt(1.0 - s * s) + np.arcsin(s)) / np.pi


def make_semicircle(r, cells, center=0.0, a=None, b=None):
    """Semicircle law of radius ``r`` (variance ``r**2 / 4``).

    Cell values are exact cell averages of
    ``2 / (pi r^2) * sqrt(r^2 - (x - center)^2)``.  By default the grid is the
    support ``[center - r, center + r]``; a wider window may be given.

    Examples
    --------
    >>> mu = make_semicircle(2.0, 2000)
    >>> round(mu.moment(2), 6)
    1.0
    """
    r = check_positive(r, "r")
    cells = check_cells(cells)
    a = center - r if a is None else float(a)
    b = center + r if b is None else float(b)
    edges = np.linspace(a, b, cells + 1)
    return GridMeasure.from_masses("real", a, b, np.diff(_semicircle_cdf(edges, r, center)))


def make_nu_lambda(lam, cells, phase=0.0):
    """Circle measure ``(1 + (2 / lam) cos(theta - phase)) dtheta / 2pi``.

    ``lam = np.inf`` gives the uniform measure.
    """
    cells = check_cells(cells)
    if not lam >= 2:
        raise DomainError(f"lambda must be >= 2 for a nonnegative density, got {lam!r}")
    if np.isinf(lam):
        return make_uniform_circle(cells)
    edges = np.linspace(-np.pi, np.pi, cells + 1)
    # exact cell integrals of the density against dtheta / 2pi
    prim = edges + (2.0 / lam) * np.sin(edges - phase)
    return GridMeasure.from_masses("circle", -np.pi, np.pi, np.diff(prim) / TWO_PI)


def make_power_density(alpha, cells, b=1.0):
    """Half-line density ``(alpha + 1) x**alpha`` on ``(0, 1]``, zero beyond.

    ``b >= 1`` widens the grid; exact cell masses are used.
    """
    if not alpha > -1:
        raise DomainError(f"alpha must exceed -1 for integrability, got {alpha!r}")
    cells = check_cells(cells)
    edges = np.minimum(np.linspace(0.0, b, cells + 1), 1.0)
    return GridMeasure.from_masses("halfline", 0.0, b, np.diff(edges ** (alpha + 1.0)))


def make_free_poisson(rho, cells, b=None):
    """Law on the half-line whose square-root symmetrization is ``gamma_{0, 2/sqrt(rho)}``.

    Density ``(rho / 2pi) sqrt((4/rho - x) / x)`` on ``[0, 4 / rho]``; it is the
    minimizer of ``-Sigma(mu) + rho * int x dmu`` over measures on the half-line.
    """
    rho = check_positive(rho, "rho")
    cells = check_cells(cells)
    b = 4.0 / rho if b is None else float(b)
    edges = np.linspace(0.0, b, cells + 1)
    cdf = 2.0 * _semicircle_cdf(np.sqrt(edges), 2.0 / np.sqrt(rho)) - 1.0
    return GridMeasure.from_masses("halfline", 0.0, b, np.diff(cdf))


def make_spike_measure(k, n, cells):
    """Circle measure made of ``k`` equal blocks of density ``n``.

    Block ``j`` occupies ``[-pi + 2 pi j / k, -pi + 2 pi j / k + 2 pi / (k n)]``.
    ``cells`` must be a multiple of ``k * n`` so that blocks align with cells.
    """
    cells = check_cells(cells)
    if cells % (k * n):
        raise DomainError("cells must be a multiple of k * n")
    per_block = cells // (k * n)
    stride = cells // k
    density = np.zeros(cells)
    for j in range(k):
        density[j * stride : j * stride + per_block] = float(n)
    return GridMeasure("circle", -np.pi, np.pi, density)


# ------------------------------------------------------------------ transforms


def _step_cdf(mu, x):
    """CDF of the step density evaluated at ``x`` (exact, piecewise linear)."""
    e = mu.edges
    cum = np.concatenate([[0.0], np.cumsum(mu.masses)])
    return np.interp(x, e, cum)


def symmetrize_sqrt(mu, cells=None):
    """Symmetric measure on ``[-sqrt(b), sqrt(b)]`` with density ``|x| p(x^2)``.

    Cell masses are transferred exactly from the step CDF of ``mu``:
    ``mu_tilde([s1, s2]) = mu([s1^2, s2^2]) / 2`` for ``0 <= s1 < s2``.
    """
    if mu.domain != "halfline":
        raise DomainError("symmetrize_sqrt expects a half-line measure")
    cells = 2 * mu.cells if cells is None else check_cells(cells)
    if cells % 2:
        raise DomainError("use an even number of cells so 0 is a cell edge")
    c = np.sqrt(mu.b)
    pos = np.linspace(0.0, c, cells // 2 + 1)
    half = 0.5 * np.diff(_step_cdf(mu, pos ** 2))
    return GridMeasure.from_masses("real", -c, c, np.concatenate([half[::-1], half]))


def pushforward_sqrt(mu, cells=None):
    """Image of a half-line measure under ``x -> sqrt(x)``; density ``2 y p(y^2)``."""
    if mu.domain != "halfline":
        raise DomainError("pushforward_sqrt expects a half-line measure")
    cells = mu.cells if cells is None else check_cells(cells)
    c = np.sqrt(mu.b)
    y = np.linspace(0.0, c, cells + 1)
    return GridMeasure.from_masses("halfline", 0.0, c, np.diff(_step_cdf(mu, y ** 2)))


def fold_square(mu, cells=None, b=None):
    """Half-line image of a line measure under ``s -> s^2``.

    ``image([0, x]) = mu([-sqrt(x), sqrt(x)])``; the inverse of
    :func:`symmetrize_sqrt` on symmetric measures.  The grid is ``[0, b]`` with
    ``b`` defaulting to ``max(a^2, b^2)`` of ``mu``.
    """
    if mu.domain != "real":
        raise DomainError("fold_square expects a measure on the real line")
    cells = mu.cells if cells is None else check_cells(cells)
    b = max(mu.a**2, mu.b**2) if b is None else float(b)
    root = np.sqrt(np.linspace(0.0, b, cells + 1))
    cdf = _step_cdf(mu, root) - _step_cdf(mu, -root)
    return GridMeasure.from_masses("halfline", 0.0, b, np.diff(cdf))


def _poisson_cell_integral(u1, u2, r):
    """``int_{u1}^{u2} P_r(u) du / 2pi`` for ``-pi <= u1 <= u2 <= pi``."""
    k = (1.0 + r) / (1.0 - r)
    prim = lambda u: 2.0 * np.arctan(k * np.tan(0.5 * u))  # noqa: E731
    return (prim(u2) - prim(u1)) / TWO_PI


def poisson_smooth(mu, r):
    """Convolve a circle density with the Poisson kernel ``P_r``.

    Values are the exact convolution of the step density, sampled at cell
    midpoints, then renormalized.  The result is strictly positive.

    Parameters
    ----------
    mu : GridMeasure
        Circle measure.
    r : float
        Radius in ``(0, 1)``.
    """
    if mu.domain != "circle":
        raise DomainError("poisson_smooth expects a circle measure")
    if not 0.0 < r < 1.0:
        raise DomainError(f"r must lie in (0, 1), got {r!r}")
    n, h = mu.cells, mu.width
    offsets = np.arange(n) * h
    offsets = np.where(offsets > np.pi, offsets - TWO_PI, offsets)
    lo, hi = offsets - 0.5 * h, offsets + 0.5 * h
    kern = np.empty(n)
    for i in range(n):
        if hi[i] > np.pi:
            kern[i] = _poisson_cell_integral(lo[i], np.pi, r) + _poisson_cell_integral(
                -np.pi, hi[i] - TWO_PI, r
            )
        elif lo[i] < -np.pi:
            kern[i] = _poisson_cell_integral(-np.pi, hi[i], r) + _poisson_cell_integral(
                lo[i] + TWO_PI, np.pi, r
            )
        else:
            kern[i] = _poisson_cell_integral(lo[i], hi[i], r)
    smooth = np.real(np.fft.ifft(np.fft.fft(mu.density) * np.fft.fft(kern)))
    return GridMeasure.from_masses("circle", -np.pi, np.pi, np.clip(smooth, 0.0, None))


def _bump(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


_BUMP_MASS = 2.0 * integrate.quad(_bump, -1, 0, epsabs=0, epsrel=1e-13, limit=200)[0]


def _bump_cdf(u):
    """CDF of the unit bump ``exp(-1 / (1 - s^2))`` on ``(-1, 1)``."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    out = np.empty_like(u)
    for i, v in enumerate(u):
        if v <= -1:
            out[i] = 0.0
        elif v >= 1:
            out[i] = 1.0
        else:
            out[i] = integrate.quad(_bump, -1, v, epsabs=1e-16, epsrel=1e-12, limit=200)[0] / _BUMP_MASS
    return out


def mollify(mu, eps):
    """Convolve a line density with the normalized bump supported on ``(-eps, eps)``.

    The grid is extended by ``ceil(eps / h)`` cells on each side; values are the
    exact convolution of the step density at the new cell midpoints.
    """
    if mu.domain != "real":
        raise DomainError("mollify expects a measure on the real line")
    eps = check_positive(eps, "eps")
    h = mu.width
    pad = int(np.ceil(eps / h - 1e-9))
    n = mu.cells + 2 * pad
    a = mu.a - pad * h
    # kernel indexed by the offset m = i - j between output and input cells
    m = np.arange(-(pad + 1), pad + 2)
    kern = _bump_cdf((m * h + 0.5 * h) / eps) - _bump_cdf((m * h - 0.5 * h) / eps)
    src = np.concatenate([np.zeros(pad), mu.density, np.zeros(pad)])
    out = np.convolve(src, kern, mode="full")[pad + 1 : pad + 1 + n]
    return GridMeasure.from_masses("real", a, a + n * h, np.clip(out, 0.0, None) * h)


# ------------------------------------------------------------------------- I/O


def _atomic_write_text(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def measure_csv_text(mu, extra=None):
    """CSV text for a grid measure; ``extra`` maps column name to per-cell values."""
    extra = extra or {}
    lines = ["domain,cells,a,b", f"{mu.domain},{mu.cells},{mu.a!r},{mu.b!r}"]
    lines.append(",".join(["x", "density", *extra]))
    cols = [np.asarray(v, dtype=float) for v in extra.values()]
    for i, (x, d) in enumerate(zip(mu.midpoints, mu.density)):
        row = [repr(float(x)), repr(float(d))] + [repr(float(c[i])) for c in cols]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def write_measure_csv(mu, path, extra=None):
    """Write ``mu`` atomically to ``path`` (temporary file, then rename)."""
    _atomic_write_text(path, measure_csv_text(mu, extra))


def read_measure_csv(path):
    """Load a measure written by :func:`write_measure_csv`."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 3 or rows[0] != ["domain", "cells", "a", "b"]:
        raise ValueError(f"{path}: not a measure CSV (bad header)")
    domain, cells, a, b = rows[1]
    cells = int(cells)
    if rows[2][:2] != ["x", "density"]:
        raise ValueError(f"{path}: expected an x,density column header")
    body = rows[3:]
    if len(body) != cells:
        raise ValueError(f"{path}: expected {cells} rows, found {len(body)}")
    density = np.array([float(r[1]) for r in body])
    return GridMeasure(domain, float(a), float(b), density)
