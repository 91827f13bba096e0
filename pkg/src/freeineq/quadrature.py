"""Principal-value Hilbert transforms and logarithmic energies on grids.

Conventions
-----------
On the line the transform is ``(Hp)(x) = PV int p(t) / (x - t) dt``, which is
``pi`` times the usual normalization; its Fourier multiplier is
``-i pi sign(xi)``.  On the circle ``(Hp)(theta) = PV int p(theta - t) cot(t/2) dt / 2pi``
with density against ``dt / 2pi``; mode ``k`` is multiplied by ``-i sign(k)``.

Every log-kernel integral of a step density is computed in closed form, so the
energies below are exact for the grid measure itself.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import special
from scipy.interpolate import CubicSpline
from scipy.signal import fftconvolve

from ._validation import DomainError
from .measures import symmetrize_sqrt

__all__ = [
    "HilbertResult",
    "hilbert_R",
    "hilbert_R_direct",
    "hilbert_R_step",
    "hilbert_T",
    "hilbert_T_direct",
    "hilbert_halfline",
    "log_energy",
    "line_kernel",
    "circle_kernel_spectrum",
    "clausen",
    "LogPotential",
]

PAD_FACTOR = 8
_SERIES_FROM = 20


@dataclass(frozen=True, eq=False)
class HilbertResult:
    """Transform values at the cell midpoints of the input grid.

    ``flagged`` marks cells whose value is an extrapolation rather than a
    computed transform (only the half-line transform near 0 sets it).
    ``convention`` is ``pi-scaled-real`` or ``pi-scaled-halfline`` (pi times
    the standard Hilbert transform) or ``conjugate-circle``.
    """

    values: np.ndarray
    convention: str
    flagged: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.flagged is None:
            object.__setattr__(self, "flagged", np.zeros(self.values.shape, dtype=bool))


# ---------------------------------------------------------------- the line


def _odd_kernel_convolution(density):
    """``2 * sum_{m odd} p[i - m] / m`` via a zero-padded FFT.

    This lattice kernel is the inverse discrete-time Fourier transform of
    ``-i pi sign(omega)``, so applying it is the multiplier ``-i pi sign(xi)``
    on the padded extension.  It equals a midpoint rule for the odd part of
    ``t -> (p(x - t) - p(x + t)) / t`` and is spectrally accurate for smooth p.
    """
    n = density.size
    size = 1 << int(np.ceil(np.log2(PAD_FACTOR * n)))
    m = np.arange(size)
    m = np.where(m >= size // 2, m - size, m)
    kern = np.zeros(size)
    odd = (m % 2 != 0) & (np.abs(m) < n)
    kern[odd] = 2.0 / m[odd]
    padded = np.zeros(size)
    padded[:n] = density
    out = np.fft.irfft(np.fft.rfft(padded) * np.fft.rfft(kern), size)
    return out[:n]


def hilbert_R(mu):
    """Hilbert transform of a line density (spectral route).

    Parameters
    ----------
    mu : GridMeasure
        Measure on the real line or the half-line (the latter is treated as a
        line density vanishing on the negative axis).

    Returns
    -------
    HilbertResult
        ``values[i]`` approximates ``(Hp)(x_i)`` at the cell midpoints.

    Examples
    --------
    For the semicircle of radius 2 the transform is ``x / 2`` on the support.
    """
    if mu.domain == "circle":
        raise DomainError("use hilbert_T for circle measures")
    return HilbertResult(_odd_kernel_convolution(mu.density), "pi-scaled-real")


def _xlog_abs(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    nz = u != 0
    out[nz] = u[nz] * np.log(np.abs(u[nz]))
    return out


def _line_hat_g(u):
    """Second antiderivative of ``1 / u``."""
    return _xlog_abs(u) - u


def _circle_hat_g(u):
    """Second antiderivative of ``cot(u / 2) / 2pi`` (up to a linear term)."""
    return -clausen(u) / np.pi


def _hat_transform(mu, points, g):
    """Transform of the piecewise-linear interpolant of the cell values.

    A hat function of half-width ``h`` centred at ``c`` maps to
    ``(g(x - c + h) - 2 g(x - c) + g(x - c - h)) / h`` when ``g'' `` is the kernel.
    """
    x = np.atleast_1d(np.asarray(points, dtype=float))
    c, h = mu.midpoints, mu.width
    keep = np.flatnonzero(mu.density > 0)
    c, dens = c[keep], mu.density[keep]
    out = np.empty(x.size)
    for start in range(0, x.size, 256):
        u = x[start : start + 256, None] - c[None, :]
        out[start : start + 256] = ((g(u + h) - 2.0 * g(u) + g(u - h)) / h) @ dens
    return out


def hilbert_R_direct(mu, points=None):
    """Principal-value quadrature of the line transform.

    The density is replaced by the piecewise-linear interpolant of its cell
    values, whose transform is known in closed form; at a node the kernel is
    ``k(m) = (m+1) log|m+1| - 2m log|m| + (m-1) log|m-1|``, odd in the offset
    ``m`` so the singular cell pairs cancel.  Second-order accurate for smooth
    densities; ``points`` defaults to the cell midpoints.
    """
    if mu.domain == "circle":
        raise DomainError("use hilbert_T_direct for circle measures")
    if points is not None:
        return HilbertResult(_hat_transform(mu, points, _line_hat_g), "pi-scaled-real")
    n = mu.cells
    m = np.arange(-(n - 1), n).astype(float)
    kern = _xlog_abs(m + 1) - 2.0 * _xlog_abs(m) + _xlog_abs(m - 1)
    vals = fftconvolve(mu.density, kern)[n - 1 : 2 * n - 1]
    return HilbertResult(vals, "pi-scaled-real")


def hilbert_R_step(mu, points=None):
    """Exact transform of the step density itself.

    Each cell contributes ``p_j log|(x - a_j) / (x - b_j)|``.  Only first-order
    accurate as an approximation of a smooth density's transform, but exact
    for the grid measure.
    """
    if mu.domain == "circle":
        raise DomainError("use hilbert_T_direct for circle measures")
    if points is None:
        points = mu.midpoints
    x = np.atleast_1d(np.asarray(points, dtype=float))
    e = mu.edges
    out = np.empty(x.size)
    for start in range(0, x.size, 256):
        xs = x[start : start + 256, None]
        with np.errstate(divide="ignore"):
            terms = np.log(np.abs(xs - e[None, :-1])) - np.log(np.abs(xs - e[None, 1:]))
        terms[~np.isfinite(terms)] = 0.0
        out[start : start + 256] = terms @ mu.density
    return HilbertResult(out, "pi-scaled-real")


# ---------------------------------------------------------------- the circle


def hilbert_T(mu):
    """Conjugate function of a circle density: mode ``k`` times ``-i sign(k)``.

    The Nyquist mode (even cell counts) is annihilated together with mode 0,
    which keeps the transform real and makes ``int (Hp) p`` vanish exactly.
    """
    if mu.domain != "circle":
        raise DomainError("hilbert_T expects a circle measure")
    n = mu.cells
    spec = np.fft.rfft(mu.density)
    mult = np.full(spec.size, -1j)
    mult[0] = 0.0
    if n % 2 == 0:
        mult[-1] = 0.0
    return HilbertResult(np.fft.irfft(spec * mult, n), "conjugate-circle")


def hilbert_T_direct(mu, points=None):
    """Principal-value quadrature of the circle transform.

    Same construction as :func:`hilbert_R_direct` with the ``cot(t/2)`` kernel:
    the piecewise-linear interpolant of the cell values is transformed in
    closed form through the Clausen function.
    """
    if mu.domain != "circle":
        raise DomainError("hilbert_T_direct expects a circle measure")
    if points is not None:
        return HilbertResult(_hat_transform(mu, points, _circle_hat_g), "conjugate-circle")
    n, h = mu.cells, mu.width
    m = np.arange(n) * h
    kern = (_circle_hat_g(m + h) - 2.0 * _circle_hat_g(m) + _circle_hat_g(m - h)) / h
    vals = np.real(np.fft.ifft(np.fft.fft(mu.density) * np.fft.fft(kern)))
    return HilbertResult(vals, "conjugate-circle")


# ---------------------------------------------------------------- half-line


def hilbert_halfline(mu, refine=1):
    """Hilbert transform of a half-line density through the square-root map.

    The density is symmetrized to ``p~(s) = |s| p(s^2)``, transformed on the
    line, and mapped back with ``(Hp)(y) = (H p~)(sqrt(y)) / sqrt(y)``.

    Parameters
    ----------
    mu : GridMeasure
        Half-line measure.
    refine : int
        The symmetrized grid has ``2 * refine * mu.cells`` cells.

    Returns
    -------
    HilbertResult
        Values at the midpoints of ``mu``.  Cells whose ``sqrt(y)`` falls below
        one symmetrized cell width are flagged and carry the limit
        ``(H p~)'(0)`` estimated from the nearest unflagged values.
    """
    if mu.domain != "halfline":
        raise DomainError("hilbert_halfline expects a half-line measure")
    sym = symmetrize_sqrt(mu, cells=2 * refine * mu.cells)
    hs = hilbert_R(sym).values
    s_mid = sym.midpoints
    y = mu.midpoints
    root = np.sqrt(y)
    # transform of the symmetrized density is odd; interpolate it on s >= 0
    half = sym.cells // 2
    s_pos = np.concatenate([[0.0], s_mid[half:]])
    h_pos = np.concatenate([[0.0], hs[half:]])
    spline = CubicSpline(s_pos, h_pos)
    values = spline(root) / root
    flagged = root < sym.width
    if np.any(flagged):
        values[flagged] = spline(sym.width, 1)
    return HilbertResult(values, "pi-scaled-halfline", flagged)


# ---------------------------------------------------------- logarithmic energy


def _f2(u):
    """Second antiderivative of ``log|u|``: ``u^2 log|u| / 2 - 3 u^2 / 4``."""
    u = np.asarray(u, dtype=float)
    return 0.5 * u * _xlog_abs(u) - 0.75 * u * u


def line_kernel(cells, h):
    """Mean of ``log|x - y|`` over pairs of cells at offset ``m = 0 .. cells-1``.

    Exact second differences of the antiderivative for small offsets; the
    asymptotic series ``log(m h) - 1/(12 m^2) - 1/(60 m^4) - 1/(168 m^6)``
    beyond, which avoids cancellation.  The diagonal entry is
    ``log h - 3/2``.
    """
    m = np.arange(cells, dtype=float)
    out = np.empty(cells)
    small = m < _SERIES_FROM
    ms = m[small]
    out[small] = (_f2((ms + 1) * h) - 2.0 * _f2(ms * h) + _f2((ms - 1) * h)) / (h * h)
    mb = m[~small]
    out[~small] = np.log(mb * h) - 1 / (12 * mb**2) - 1 / (60 * mb**4) - 1 / (168 * mb**6)
    return out


def circle_kernel_spectrum(cells):
    """DFT of the circulant cell-averaged kernel ``log|e^{is} - e^{it}|``.

    With cell masses ``w`` the energy is ``sum_k spec[k] |W_k|^2 / cells`` where
    ``W = fft(w)``.  Each nonzero mode sums its aliases exactly with the
    Hurwitz zeta function.
    """
    k = np.arange(cells, dtype=float)
    spec = np.zeros(cells)
    q = k[1:] / cells
    spec[1:] = -(np.sin(np.pi * q) ** 2) * (special.zeta(3, q) + special.zeta(3, 1 - q)) / (
        2 * np.pi**2
    )
    return spec


def _rect_log_integral(a, b, c, d):
    """``int_a^b int_c^d log|x - y| dy dx`` for arrays of rectangles."""
    return _f2(b - c) - _f2(a - c) - _f2(b - d) + _f2(a - d)


def _same_grid(mu, nu):
    return mu.cells == nu.cells and mu.a == nu.a and mu.b == nu.b


def log_energy(mu, nu=None):
    """``int int log|x - y| dmu(x) dnu(y)`` computed exactly for step densities.

    Parameters
    ----------
    mu, nu : GridMeasure
        Measures on the same domain family; ``nu`` defaults to ``mu``.  Line
        measures may sit on different grids; circle measures need equal cell
        counts.

    Returns
    -------
    float

    Examples
    --------
    ``log_energy(make_semicircle(2, 2000))`` is ``-0.25`` up to ``1e-6``.
    """
    nu = mu if nu is None else nu
    line = {"real", "halfline"}
    if mu.domain == "circle" or nu.domain == "circle":
        if mu.domain != nu.domain:
            raise DomainError("cannot pair a circle measure with a line measure")
        if mu.cells != nu.cells:
            raise DomainError("circle energies need equal cell counts")
        wm = np.fft.fft(mu.masses)
        wn = wm if nu is mu else np.fft.fft(nu.masses)
        spec = circle_kernel_spectrum(mu.cells)
        val = float(np.sum(spec * np.real(wm * np.conj(wn))) / mu.cells)
        if nu is not mu:
            # symmetrize so that log_energy(mu, nu) == log_energy(nu, mu) bit for bit
            val = 0.5 * (val + float(np.sum(spec * np.real(wn * np.conj(wm))) / mu.cells))
        return val
    if mu.domain not in line or nu.domain not in line:
        raise DomainError("unsupported domains")
    if _same_grid(mu, nu):
        n = mu.cells
        row = line_kernel(n, mu.width)
        full = np.concatenate([row[:0:-1], row])
        wm, wn = mu.masses, nu.masses
        conv = fftconvolve(wn, full)[n - 1 : 2 * n - 1]
        val = float(wm @ conv)
        if nu is not mu:
            val = 0.5 * (val + float(wn @ fftconvolve(wm, full)[n - 1 : 2 * n - 1]))
        return val
    return 0.5 * (_cross_energy(mu, nu) + _cross_energy(nu, mu))


def _cross_energy(mu, nu):
    em, en = mu.edges, nu.edges
    keep_m = np.flatnonzero(mu.density > 0)
    keep_n = np.flatnonzero(nu.density > 0)
    total = 0.0
    for start in range(0, keep_m.size, 512):
        idx = keep_m[start : start + 512]
        a, b = em[idx][:, None], em[idx + 1][:, None]
        c, d = en[keep_n][None, :], en[keep_n + 1][None, :]
        block = _rect_log_integral(a, b, c, d)
        total += float(mu.density[idx] @ block @ nu.density[keep_n])
    return total


# ------------------------------------------------------------------ potentials

_BERNOULLI = np.abs(special.bernoulli(64)[2::2][:30])
_CLAUSEN_COEF = np.array(
    [_BERNOULLI[k - 1] / (2 * k * special.factorial(2 * k + 1)) for k in range(1, 31)]
)


def clausen(theta):
    """Clausen function ``Cl_2(theta) = sum_k sin(k theta) / k^2``.

    Uses the Bernoulli series ``theta - theta log|theta| + sum c_k theta^{2k+1}``
    after reduction to ``[-pi, pi)``.  Its derivative is
    ``-log|2 sin(theta / 2)|``.
    """
    t = np.mod(np.asarray(theta, dtype=float) + np.pi, 2 * np.pi) - np.pi
    t2 = t * t
    acc = np.zeros_like(t)
    for c in _CLAUSEN_COEF[::-1]:
        acc = acc * t2 + c
    return t - _xlog_abs(t) + acc * t * t2


class LogPotential:
    """``Q_mu(x) = 2 int log|x - y| dmu(y)`` for a grid measure.

    Values are exact for the step density at any point.  ``derivative`` returns
    ``Q_mu'``, which is ``2 Hp`` on the line and ``Hp`` on the circle, computed
    from the piecewise-linear interpolant of the cell values (second order).
    """

    def __init__(self, mu):
        self.mu = mu
        self._edges = mu.edges
        self._keep = np.flatnonzero(mu.density > 0)

    def _blocks(self, x, kernel):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        e, keep = self._edges, self._keep
        lo, hi, dens = e[keep], e[keep + 1], self.mu.density[keep]
        out = np.empty(x.size)
        for start in range(0, x.size, 256):
            xs = x[start : start + 256, None]
            out[start : start + 256] = kernel(xs, lo[None, :], hi[None, :]) @ dens
        return out

    def __call__(self, x):
        scalar = np.ndim(x) == 0
        if self.mu.domain == "circle":
            vals = self._blocks(x, lambda t, lo, hi: clausen(t - hi) - clausen(t - lo)) / np.pi
        else:
            f1 = lambda u: _xlog_abs(u) - u  # noqa: E731
            vals = 2.0 * self._blocks(x, lambda t, lo, hi: f1(t - lo) - f1(t - hi))
        return float(vals[0]) if scalar else vals

    def derivative(self, x):
        scalar = np.ndim(x) == 0
        if self.mu.domain == "circle":
            vals = hilbert_T_direct(self.mu, np.atleast_1d(x)).values
        else:
            vals = 2.0 * hilbert_R_direct(self.mu, np.atleast_1d(x)).values
        return float(vals[0]) if scalar else vals

    def on_grid(self):
        """Values at the cell midpoints of the underlying grid (FFT convolution)."""
        mu = self.mu
        n, h = mu.cells, mu.width
        if mu.domain == "circle":
            m = np.arange(n)
            kern = (clausen((m - 0.5) * h) - clausen((m + 0.5) * h)) / np.pi
            return np.real(np.fft.ifft(np.fft.fft(mu.density) * np.fft.fft(kern)))
        m = np.arange(-(n - 1), n).astype(float)
        f1 = lambda u: _xlog_abs(u) - u  # noqa: E731
        kern = 2.0 * (f1((m + 0.5) * h) - f1((m - 0.5) * h))
        return fftconvolve(mu.density, kern)[n - 1 : 2 * n - 1]
