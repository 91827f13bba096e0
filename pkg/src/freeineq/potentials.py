"""Confining potentials with their derivative and convexity constant.

On the circle a potential is a function of the angle, ``Q(e^{i theta})``, and
its derivative is taken in ``theta``.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from ._validation import DomainError, check_domain, check_positive

__all__ = [
    "Potential",
    "quadratic",
    "quartic",
    "cosine",
    "zero_circle",
    "cosine_mixture",
    "linear_halfline",
    "quadratic_halfline",
    "tabulated",
    "squared_argument",
    "kinked_quadratic",
    "mollified_potential",
    "measure_potential",
    "parse_potential",
    "check_convexity",
]


@dataclass(frozen=True, eq=False)
class Potential:
    """A potential ``Q`` on one of the three domains.

    Attributes
    ----------
    domain : str
        ``"real"``, ``"circle"`` or ``"halfline"``.
    value, derivative : callable
        Vectorized ``Q`` and ``Q'``.
    rho : float
        Convexity constant: ``Q(x) - rho x^2 / 2`` is convex (line), or
        ``Q(e^{it}) - rho t^2 / 2`` is convex (circle), or ``Q' >= rho``
        (half-line).
    family : str
        ``"quadratic"``, ``"cosine"``, ``"linear-halfline"`` or ``"custom"``.
    params : dict
        Family parameters, used to pick closed forms and in reports.
    """

    domain: str
    value: callable = field(repr=False)
    derivative: callable = field(repr=False)
    rho: float
    family: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        check_domain(self.domain)

    def __call__(self, x):
        return self.value(x)

    @property
    def label(self):
        if not self.params:
            return self.family
        args = ",".join(f"{k}={v!r}" for k, v in sorted(self.params.items()))
        return f"{self.family}:{args}"


def quadratic(rho, center=0.0):
    """``Q(x) = rho (x - center)^2 / 2`` on the line."""
    rho = check_positive(rho, "rho")
    return Potential(
        "real",
        lambda x: 0.5 * rho * (np.asarray(x) - center) ** 2,
        lambda x: rho * (np.asarray(x) - center),
        rho,
        "quadratic",
        {"rho": rho, "center": float(center)},
    )


def quartic(rho, coef):
    """``Q(x) = rho x^2 / 2 + coef x^4 / 4`` with ``coef >= 0``."""
    rho = check_positive(rho, "rho")
    if coef < 0:
        raise DomainError("quartic coefficient must be nonnegative")
    return Potential(
        "real",
        lambda x: 0.5 * rho * np.asarray(x) ** 2 + 0.25 * coef * np.asarray(x) ** 4,
        lambda x: rho * np.asarray(x) + coef * np.asarray(x) ** 3,
        rho,
        "custom",
        {"rho": rho, "quartic": float(coef)},
    )


def cosine(lam, phase=0.0):
    """``Q(e^{i theta}) = -(2 / lam) cos(theta - phase)``; equilibrium is ``nu_lam``.

    ``lam = np.inf`` is the zero potential.  The convexity constant is
    ``-2 / lam`` (the minimum of the second derivative).
    """
    if not lam > 0:
        raise DomainError("lambda must be positive")
    c = 0.0 if np.isinf(lam) else 2.0 / lam
    return Potential(
        "circle",
        lambda t: -c * np.cos(np.asarray(t) - phase),
        lambda t: c * np.sin(np.asarray(t) - phase),
        -c,
        "cosine",
        {"lambda": float(lam), "phase": float(phase)},
    )


def zero_circle():
    """The zero potential on the circle (equilibrium: uniform measure)."""
    return cosine(np.inf)


def cosine_mixture(coefs):
    """``Q(e^{i theta}) = sum_k c_k cos(k theta)`` for ``k = 1, 2, ...``.

    The convexity constant is the lower bound ``-sum_k k^2 |c_k|`` of
    ``Q''``.
    """
    coefs = np.asarray(coefs, dtype=float)
    ks = np.arange(1, coefs.size + 1)
    rho = -float(np.sum(ks**2 * np.abs(coefs)))

    def value(t):
        t = np.asarray(t, dtype=float)
        return sum(c * np.cos(k * t) for k, c in zip(ks, coefs))

    def deriv(t):
        t = np.asarray(t, dtype=float)
        return sum(-k * c * np.sin(k * t) for k, c in zip(ks, coefs))

    return Potential("circle", value, deriv, rho, "custom", {"cos": coefs.tolist()})


def linear_halfline(rho):
    """``Q(x) = rho x`` on the half-line; ``Q' = rho``."""
    rho = check_positive(rho, "rho")
    return Potential(
        "halfline",
        lambda x: rho * np.asarray(x, dtype=float),
        lambda x: np.full(np.shape(x), rho),
        rho,
        "linear-halfline",
        {"rho": rho},
    )


def quadratic_halfline(rho, coef):
    """``Q(x) = rho x + coef x^2`` on the half-line with ``coef >= 0``; ``Q' >= rho``."""
    rho = check_positive(rho, "rho")
    if coef < 0:
        raise DomainError("quadratic coefficient must be nonnegative")
    return Potential(
        "halfline",
        lambda x: rho * np.asarray(x, dtype=float) + coef * np.asarray(x, dtype=float) ** 2,
        lambda x: rho + 2.0 * coef * np.asarray(x, dtype=float),
        rho,
        "custom",
        {"rho": rho, "square": float(coef)},
    )


def kinked_quadratic(rho, kink):
    """``Q(x) = rho x^2 / 2 + kink |x|``: convex with constant ``rho`` but not C^1."""
    rho = check_positive(rho, "rho")
    if kink < 0:
        raise DomainError("kink coefficient must be nonnegative")
    return Potential(
        "real",
        lambda x: 0.5 * rho * np.asarray(x) ** 2 + kink * np.abs(x),
        lambda x: rho * np.asarray(x) + kink * np.sign(x),
        rho,
        "custom",
        {"rho": rho, "kink": float(kink)},
    )


def mollified_potential(potential, eps, nodes=64):
    """Convolution of a line potential with the bump ``exp(-1/(1-s^2))`` of width ``eps``.

    Convolution with a probability kernel keeps the convexity constant.
    """
    if potential.domain != "real":
        raise DomainError("mollified_potential expects a line potential")
    eps = check_positive(eps, "eps")
    s, w = np.polynomial.legendre.leggauss(nodes)
    w = w * np.exp(-1.0 / (1.0 - s**2))
    w = w / w.sum()
    shifts = eps * s
    q, dq = potential.value, potential.derivative

    def smooth(func):
        def inner(x):
            x = np.asarray(x, dtype=float)
            return np.tensordot(func(x[..., None] - shifts), w, axes=([-1], [0]))

        return inner

    params = dict(potential.params, mollified=float(eps))
    return Potential("real", smooth(q), smooth(dq), potential.rho, "custom", params)


def measure_potential(mu, window=None, points=4097):
    """``Q_mu(x) = 2 int log|x - y| dmu(y)`` as a cubic spline.

    ``mu`` is the equilibrium measure of ``Q_mu`` (on the circle, or on any
    interval containing its support).  Line splines cover ``window``
    (default: the grid of ``mu``); the circle spline is periodic.
    """
    from scipy.interpolate import CubicSpline

    from .quadrature import LogPotential

    exact = LogPotential(mu)
    if mu.domain == "circle":
        t = np.linspace(-np.pi, np.pi, points)
        vals = exact(t)
        vals[-1] = vals[0]
        spline = CubicSpline(t, vals, bc_type="periodic")
        wrap = lambda x: np.mod(np.asarray(x, dtype=float) + np.pi, 2.0 * np.pi) - np.pi  # noqa: E731
        value, deriv = (lambda x: spline(wrap(x))), (lambda x: spline(wrap(x), 1))
    else:
        lo, hi = (mu.a, mu.b) if window is None else window
        t = np.linspace(lo, hi, points)
        spline = CubicSpline(t, exact(t))
        value, deriv = spline, (lambda x: spline(x, 1))
    return Potential(mu.domain, value, deriv, 0.0, "custom", {"measure": mu.digest()})


def squared_argument(potential):
    """Line potential ``x -> Q(x^2) / 2`` built from a half-line potential.

    Its derivative is ``x Q'(x^2)``.  If ``Q`` is convex with ``Q' >= rho`` the
    result has convexity constant ``rho``.
    """
    if potential.domain != "halfline":
        raise DomainError("squared_argument expects a half-line potential")
    q, dq = potential.value, potential.derivative
    return Potential(
        "real",
        lambda x: 0.5 * q(np.asarray(x) ** 2),
        lambda x: np.asarray(x) * dq(np.asarray(x) ** 2),
        potential.rho,
        "custom",
        {"squared": potential.label},
    )


def tabulated(path, domain="real", rho=None):
    """Potential from a CSV with columns ``x,Q,dQ`` (linear interpolation).

    ``rho`` defaults to the smallest second difference of the table, which is
    conservative.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = [h.strip() for h in rows[0]]
    if header[:3] != ["x", "Q", "dQ"]:
        raise ValueError(f"{path}: expected header x,Q,dQ")
    data = np.array([[float(v) for v in r[:3]] for r in rows[1:] if r])
    x, q, dq = data.T
    if np.any(np.diff(x) <= 0):
        raise ValueError(f"{path}: x column must be increasing")
    if rho is None:
        rho = float(np.min(np.diff(dq) / np.diff(x)))
    return Potential(
        domain,
        lambda t: np.interp(t, x, q),
        lambda t: np.interp(t, x, dq),
        rho,
        "custom",
        {"file": str(path)},
    )


def parse_potential(spec):
    """Parse the potential mini-grammar.

    ``quadratic:rho=1``, ``cosine:lambda=8``, ``linear-halfline:rho=1``,
    ``zero`` (circle), ``quartic:rho=1,coef=0.2`` and ``file:<path>``.
    """
    spec = spec.strip()
    if spec == "zero":
        return zero_circle()
    name, _, rest = spec.partition(":")
    if name == "file":
        return tabulated(rest)
    params = {}
    for item in filter(None, rest.split(",")):
        key, sep, val = item.partition("=")
        if not sep:
            raise ValueError(f"malformed potential parameter {item!r}")
        params[key.strip()] = float(val)
    try:
        if name == "quadratic":
            return quadratic(params.pop("rho", 1.0), params.pop("center", 0.0))
        if name == "cosine":
            return cosine(params.pop("lambda"), params.pop("phase", 0.0))
        if name == "linear-halfline":
            return linear_halfline(params.pop("rho", 1.0))
        if name == "quartic":
            return quartic(params.pop("rho", 1.0), params.pop("coef"))
    except KeyError as exc:
        raise ValueError(f"potential {name!r} needs parameter {exc}") from None
    finally:
        if params:
            raise ValueError(f"unknown parameters {sorted(params)} for {name!r}")
    raise ValueError(f"unknown potential family {name!r}")


def check_convexity(potential, lo, hi, points=4001, tol=1e-8):
    """Second-difference test of the convexity hypothesis on ``[lo, hi]``.

    Line and circle: ``Q - rho t^2 / 2`` must have nonnegative second
    differences.  Half-line: ``Q'`` must be nondecreasing and at least ``rho``.

    Returns
    -------
    bool
    """
    t = np.linspace(lo, hi, points)
    if potential.domain == "halfline":
        dq = potential.derivative(t)
        return bool(np.all(dq >= potential.rho - tol) and np.all(np.diff(dq) >= -tol))
    g = potential.value(t) - 0.5 * potential.rho * t**2
    second = g[2:] - 2.0 * g[1:-1] + g[:-2]
    scale = max(1.0, float(np.max(np.abs(g))))
    return bool(np.all(second >= -tol * scale))
