"""Free entropy and free Fisher information functionals.

Every functional takes grid measures and returns a float, or the
:data:`PLUS_INFINITY` sentinel when the functional is infinite by definition
(for instance a Fisher information of a measure without a density).

Conventions
-----------
* ``sigma(mu) = int int log|x - y| dmu dmu``.
* Line Fisher information ``Phi = (4 pi^2 / 3) int p^3 dx = 4 int (Hp)^2 dmu``
  with ``Hp`` the unnormalized principal-value transform.
* Circle Fisher information ``F = (1/3)(-1 + int p^3 dzeta)`` with ``p``
  against ``dzeta = dtheta / 2pi``.
* Relative free entropies always take the normalization constant ``B``
  explicitly.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import DomainError
from .measures import EmpiricalMeasure, GridMeasure, symmetrize_sqrt
from .potentials import squared_argument
from .quadrature import (
    LogPotential,
    hilbert_halfline,
    hilbert_R,
    hilbert_T,
    log_energy,
)

__all__ = [
    "PLUS_INFINITY",
    "is_infinite",
    "FunctionalValue",
    "sigma",
    "chi",
    "weighted_energy",
    "relative_free_entropy",
    "relative_free_entropy_halfline_symmetrized",
    "fisher_R",
    "fisher_R_routes",
    "fisher_rel_R",
    "fisher_T",
    "fisher_T_routes",
    "fisher_rel_T",
    "fisher_halfline",
    "fisher_rel_halfline",
    "fisher_rel_halfline_symmetrized",
    "relative_entropy",
    "free_relative_entropy_two_measure",
    "log_potential",
    "evaluate",
    "FUNCTIONALS",
]

CHI_OFFSET = 0.75 + 0.5 * np.log(2.0 * np.pi)


class _PlusInfinity:
    """Tagged ``+inf``; arithmetic on it is an error by design."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "PLUS_INFINITY"

    def __str__(self):
        return "+inf"

    def __reduce__(self):
        return (_PlusInfinity, ())


PLUS_INFINITY = _PlusInfinity()


def is_infinite(value):
    return value is PLUS_INFINITY


@dataclass(frozen=True)
class FunctionalValue:
    """A named functional value with the digests of its inputs."""

    name: str
    value: object
    inputs: dict = field(default_factory=dict)

    def to_dict(self):
        value = "+inf" if is_infinite(self.value) else float(self.value)
        return {"name": self.name, "value": value, "inputs": dict(self.inputs)}


def _require_grid(mu):
    if not isinstance(mu, GridMeasure):
        raise TypeError(f"expected a GridMeasure, got {type(mu).__name__}")


def _require_match(mu, potential):
    if potential.domain != mu.domain:
        raise DomainError(f"potential lives on {potential.domain!r}, measure on {mu.domain!r}")


def _cube_integral(mu):
    """``int p^3`` against the reference measure of the domain (exact for steps)."""
    return float(np.sum(mu.density**3) * mu.cell_measure)


def _cell_average(mu, func, order=6):
    """Per-cell averages of ``func`` by Gauss-Legendre."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    pts = 0.5 * mu.width * nodes[None, :] + mu.midpoints[:, None]
    return 0.5 * (np.asarray(func(pts), dtype=float) @ weights)


# ------------------------------------------------------------------- entropy


def sigma(mu):
    """Free entropy ``int int log|x - y| dmu(x) dmu(y)``.

    Examples
    --------
    >>> from freeineq.measures import make_nu_lambda
    >>> round(sigma(make_nu_lambda(4, 1024)), 6)
    -0.0625
    """
    _require_grid(mu)
    return log_energy(mu)


def chi(mu):
    """``sigma(mu) + 3/4 + log(2 pi) / 2`` for a measure on the line."""
    _require_grid(mu)
    if mu.domain == "circle":
        raise DomainError("chi is defined for measures on the line")
    return sigma(mu) + CHI_OFFSET


def weighted_energy(mu, potential):
    """``-sigma(mu) + int Q dmu``."""
    _require_grid(mu)
    _require_match(mu, potential)
    return -sigma(mu) + mu.integrate(potential.value)


def relative_free_entropy(mu, potential, B):
    """``-sigma(mu) + int Q dmu + B``.

    On the half-line this is the half-line relative entropy, with ``B`` the
    half-line normalization constant.
    """
    return weighted_energy(mu, potential) + float(B)


def relative_free_entropy_halfline_symmetrized(mu, potential, B_plus):
    """``2 * relative_free_entropy`` of the symmetrized measure.

    Uses ``Q~(x) = Q(x^2) / 2`` on the line with constant ``B_plus / 2``.
    Agrees with :func:`relative_free_entropy` on the half-line.
    """
    if mu.domain != "halfline":
        raise DomainError("expects a half-line measure")
    sym = symmetrize_sqrt(mu)
    return 2.0 * relative_free_entropy(sym, squared_argument(potential), 0.5 * float(B_plus))


# ------------------------------------------------------------- Fisher: line


def fisher_R_routes(mu):
    """Both formulas for the line Fisher information.

    Returns
    -------
    tuple of float
        ``((4 pi^2 / 3) int p^3, 4 int (Hp)^2 dmu)``.
    """
    _require_grid(mu)
    if mu.domain == "circle":
        raise DomainError("use fisher_T on the circle")
    cube = 4.0 * np.pi**2 / 3.0 * _cube_integral(mu)
    hp = hilbert_R(mu).values
    return cube, 4.0 * float(np.dot(mu.masses, hp * hp))


def fisher_R(mu):
    """Free Fisher information ``(4 pi^2 / 3) int p^3 dx`` on the line.

    A half-line measure is treated as a line measure vanishing on the negative
    axis.  Atomic input gives :data:`PLUS_INFINITY`.
    """
    if isinstance(mu, EmpiricalMeasure):
        return PLUS_INFINITY
    _require_grid(mu)
    if mu.domain == "circle":
        raise DomainError("use fisher_T on the circle")
    return 4.0 * np.pi**2 / 3.0 * _cube_integral(mu)


def fisher_rel_R(mu, potential):
    """Relative free Fisher information ``4 int (Hp - Q'/2)^2 dmu`` on the line."""
    if isinstance(mu, EmpiricalMeasure):
        return PLUS_INFINITY
    _require_grid(mu)
    if mu.domain != "real":
        raise DomainError("fisher_rel_R expects a measure on the real line")
    _require_match(mu, potential)
    hp = hilbert_R(mu).values
    dq = _cell_average(mu, potential.derivative)
    return 4.0 * float(np.dot(mu.masses, (hp - 0.5 * dq) ** 2))


# ----------------------------------------------------------- Fisher: circle


def fisher_T_routes(mu):
    """``((1/3)(-1 + int p^3 dzeta), int (Hp)^2 dmu)`` on the circle."""
    _require_grid(mu)
    if mu.domain != "circle":
        raise DomainError("fisher_T expects a circle measure")
    cube = (_cube_integral(mu) - 1.0) / 3.0
    hp = hilbert_T(mu).values
    return cube, float(np.dot(mu.masses, hp * hp))


def fisher_T(mu):
    """Circle free Fisher information ``(1/3)(-1 + int p^3 dzeta)``."""
    if isinstance(mu, EmpiricalMeasure):
        return PLUS_INFINITY
    _require_grid(mu)
    if mu.domain != "circle":
        raise DomainError("fisher_T expects a circle measure")
    return (_cube_integral(mu) - 1.0) / 3.0


def fisher_rel_T(mu, potential):
    """``int (Hp - Q')^2 dmu - (int Q' dmu)^2`` with ``Q'`` taken in the angle."""
    if isinstance(mu, EmpiricalMeasure):
        return PLUS_INFINITY
    _require_grid(mu)
    if mu.domain != "circle":
        raise DomainError("fisher_rel_T expects a circle measure")
    _require_match(mu, potential)
    hp = hilbert_T(mu).values
    dq = _cell_average(mu, potential.derivative)
    w = mu.masses
    return float(np.dot(w, (hp - dq) ** 2) - np.dot(w, dq) ** 2)


# -------------------------------------------------------- Fisher: half-line


def fisher_halfline(mu):
    """Half-line Fisher information ``4 int x (Hp)^2 dmu``.

    Evaluated as the line Fisher information of the symmetrized measure,
    ``(4 pi^2 / 3) int p~^3``, which avoids the principal value entirely.
    """
    if isinstance(mu, EmpiricalMeasure):
        return PLUS_INFINITY
    _require_grid(mu)
    if mu.domain != "halfline":
        raise DomainError("fisher_halfline expects a half-line measure")
    return fisher_R(symmetrize_sqrt(mu))


def fisher_rel_halfline(mu, potential, refine=1):
    """``4 int x (Hp - Q'/2)^2 dmu`` through the half-line transform."""
    if isinstance(mu, EmpiricalMeasure):
        return PLUS_INFINITY
    _require_grid(mu)
    if mu.domain != "halfline":
        raise DomainError("fisher_rel_halfline expects a half-line measure")
    _require_match(mu, potential)
    hp = hilbert_halfline(mu, refine=refine).values
    x = mu.midpoints
    dq = _cell_average(mu, potential.derivative)
    return 4.0 * float(np.dot(mu.masses, x * (hp - 0.5 * dq) ** 2))


def fisher_rel_halfline_symmetrized(mu, potential):
    """Relative Fisher information of the symmetrized problem.

    ``fisher_rel_R(mu~, Q~)`` with ``Q~(x) = Q(x^2) / 2``; equal to
    :func:`fisher_rel_halfline` up to discretization.
    """
    if mu.domain != "halfline":
        raise DomainError("expects a half-line measure")
    return fisher_rel_R(symmetrize_sqrt(mu), squared_argument(potential))


# ---------------------------------------------------------- other entropies


def relative_entropy(mu, nu):
    """Classical relative entropy ``int log(dmu / dnu) dmu``.

    Both measures must share a grid.  Returns :data:`PLUS_INFINITY` when
    ``mu`` charges a cell where ``nu`` vanishes.
    """
    _require_grid(mu)
    _require_grid(nu)
    if (mu.domain, mu.a, mu.b, mu.cells) != (nu.domain, nu.a, nu.b, nu.cells):
        raise DomainError("relative_entropy needs both measures on one grid")
    w = mu.masses
    on = w > 0
    if np.any(nu.density[on] == 0):
        return PLUS_INFINITY
    ratio = mu.density[on] / nu.density[on]
    return float(np.dot(w[on], np.log(ratio)))


def free_relative_entropy_two_measure(mu, nu):
    """``-int int log|x - y| d(mu - nu)(x) d(mu - nu)(y)``.

    Nonnegative for probability measures with finite entropy.  When the
    support of ``mu`` lies in that of an equilibrium measure ``mu_Q`` it
    equals ``relative_free_entropy(mu, Q, B(Q))``.
    """
    _require_grid(mu)
    _require_grid(nu)
    if mu is nu:
        return 0.0
    return 2.0 * log_energy(mu, nu) - log_energy(mu) - log_energy(nu)


def log_potential(mu):
    """Logarithmic potential ``Q_mu(x) = 2 int log|x - y| dmu(y)``.

    Returns
    -------
    LogPotential
        Callable at arbitrary points, with ``.derivative`` and ``.on_grid``.
    """
    _require_grid(mu)
    return LogPotential(mu)


# ------------------------------------------------------------- dispatcher


def _fisher_any(mu):
    if mu.domain == "circle":
        return "F", fisher_T(mu)
    if mu.domain == "halfline":
        return "PhiPlus", fisher_halfline(mu)
    return "Phi", fisher_R(mu)


def _fisher_rel_any(mu, potential):
    if mu.domain == "circle":
        return "F_Q", fisher_rel_T(mu, potential)
    if mu.domain == "halfline":
        return "PhiPlus_Q", fisher_rel_halfline(mu, potential)
    return "Phi_Q", fisher_rel_R(mu, potential)


FUNCTIONALS = {
    "sigma": ("Sigma", False, False),
    "chi": ("Chi", False, False),
    "weighted_energy": ("E_Q", True, False),
    "relative_free_entropy": ("SigmaTilde_Q", True, True),
    "fisher": (None, False, False),
    "fisher_rel": (None, True, False),
}


def evaluate(name, mu, potential=None, B=None):
    """Evaluate a functional by name for the command line.

    Parameters
    ----------
    name : str
        One of :data:`FUNCTIONALS`.  ``fisher`` and ``fisher_rel`` dispatch on
        the domain of ``mu``.
    potential : Potential, optional
        Required by the weighted functionals.
    B : float, optional
        Required by ``relative_free_entropy``.

    Returns
    -------
    FunctionalValue
    """
    key = name.strip().lower().replace("-", "_")
    if key not in FUNCTIONALS:
        raise ValueError(f"unknown functional {name!r}; choose from {sorted(FUNCTIONALS)}")
    label, needs_q, needs_b = FUNCTIONALS[key]
    if needs_q and potential is None:
        raise ValueError(f"functional {name!r} needs a potential")
    if needs_b and B is None:
        raise ValueError(f"functional {name!r} needs B")
    inputs = {"measure": mu.digest()}
    if potential is not None:
        inputs["potential"] = potential.label
    if B is not None:
        inputs["B"] = float(B)
    if key == "sigma":
        value = sigma(mu)
    elif key == "chi":
        value = chi(mu)
    elif key == "weighted_energy":
        value = weighted_energy(mu, potential)
    elif key == "relative_free_entropy":
        value = relative_free_entropy(mu, potential, B)
        if mu.domain == "halfline":
            label = "SigmaTildePlus_Q"
    elif key == "fisher":
        label, value = _fisher_any(mu)
    else:
        if potential is None:
            raise ValueError("fisher_rel needs a potential")
        label, value = _fisher_rel_any(mu, potential)
    return FunctionalValue(label, value, inputs)
