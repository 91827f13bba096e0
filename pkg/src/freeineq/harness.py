"""Numerical verification of free log-Sobolev and transportation inequalities.

Every check produces a :class:`VerificationReport` written as ``lhs <= rhs``
(the smaller side of the inequality is always ``lhs``), so that
``slack = rhs - lhs`` and a report passes when ``slack >= -tol``.  Hypotheses
(convexity constants, admissible ``rho``) are checked before any evaluation;
inputs that violate them raise :class:`HypothesisError` rather than produce
a "failure".

Suites combine closed-form inputs with seed-pinned random admissible inputs;
see :data:`SUITES` and :func:`run_suite`.
"""

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import functionals as fn
from .equilibrium import closed_form_equilibrium, solve_equilibrium
from .matrix_calculus import relative_fisher_matrix_norm
from .measures import (
    GridMeasure,
    _atomic_write_text,
    make_free_poisson,
    make_nu_lambda,
    make_power_density,
    make_semicircle,
    make_spike_measure,
    make_uniform,
    make_uniform_circle,
    mollify,
    pushforward_sqrt,
)
from .potentials import (
    check_convexity,
    cosine,
    cosine_mixture,
    linear_halfline,
    measure_potential,
    quadratic,
    quadratic_halfline,
    quartic,
    squared_argument,
    zero_circle,
)
from .sampler import EnsembleSpec, QuadratureError, brute_mean, brute_normalizer, sample
from .transport import (
    DiscreteMeasure,
    wasserstein_R,
    wasserstein_T_chord,
    wasserstein_T_geodesic,
)

__all__ = [
    "VerificationReport",
    "HypothesisError",
    "equilibrium_for",
    "verify_lsi_R",
    "verify_voiculescu",
    "verify_lsi_T",
    "verify_tci_R",
    "verify_tci_T",
    "verify_halfline",
    "scaling_limit_entropy",
    "scaling_limit_fisher",
    "ratio_studies",
    "nu_lambda_entropy",
    "SUITES",
    "run_suite",
    "summarize",
    "summary_table",
    "write_reports",
]

CLOSED_TOL = 1e-4


class HypothesisError(ValueError):
    """Inputs violate the hypotheses of the inequality being verified."""


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else str(value)
    if fn.is_infinite(value):
        return "+inf"
    return value


@dataclass
class VerificationReport:
    """Outcome of one numerical check of ``lhs <= rhs``.

    Attributes
    ----------
    inequality : str
        Identifier such as ``"lsi-R"`` or ``"tci-T"``.
    case : str
        Input label, unique within a suite.
    lhs, rhs : float
    tol : float
    inputs : dict
        Measure digest, potential label, ``rho``, grid size, seed and the
        provenance of ``B``.
    vacuous : bool
        The right-hand side is infinite; excluded from pass statistics.
    checks : dict
        Named auxiliary conditions that must all hold.
    extras : dict
        Diagnostic values (routes, sequences, standard errors).
    runtime : float
        Seconds; never serialized, so that reports are byte-reproducible.
    """

    inequality: str
    case: str
    lhs: float
    rhs: float
    tol: float
    inputs: dict = field(default_factory=dict)
    vacuous: bool = False
    checks: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)
    runtime: float = 0.0

    @property
    def id(self):
        return f"{self.inequality}/{self.case}"

    @property
    def slack(self):
        if self.vacuous:
            return math.inf
        return float(self.rhs) - float(self.lhs)

    @property
    def passed(self):
        return bool(self.slack >= -self.tol and all(self.checks.values()))

    def to_dict(self):
        return _jsonable(
            {
                "id": self.id,
                "inequality": self.inequality,
                "case": self.case,
                "lhs": self.lhs,
                "rhs": "+inf" if self.vacuous else self.rhs,
                "slack": self.slack,
                "tol": self.tol,
                "pass": self.passed,
                "vacuous": self.vacuous,
                "inputs": self.inputs,
                "checks": self.checks,
                "extras": self.extras,
            }
        )


def _closed_tol(rhs):
    return CLOSED_TOL * (1.0 + abs(float(rhs)))


def _timed(build):
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        out = build(*args, **kwargs)
        elapsed = time.perf_counter() - start
        for report in out if isinstance(out, list) else [out]:
            report.runtime = elapsed
        return out

    wrapper.__name__ = build.__name__
    wrapper.__doc__ = build.__doc__
    wrapper.__wrapped__ = build
    return wrapper


# ----------------------------------------------------------- equilibria

_EQ_CACHE = {}


def equilibrium_for(potential, cells=2000):
    """Equilibrium measure and ``B`` for ``potential``, closed form when known.

    Results are cached per potential object.

    Returns
    -------
    EquilibriumResult
    """
    key = (potential, cells)
    if key not in _EQ_CACHE:
        result = closed_form_equilibrium(potential, cells=cells)
        if result is None:
            result = solve_equilibrium(potential, cells=cells)
        _EQ_CACHE[key] = result
    return _EQ_CACHE[key]


def _inputs(mu, potential, rho, eq=None, **more):
    out = {"measure": mu.digest(), "cells": getattr(mu, "cells", len(getattr(mu, "atoms", ())))}
    if potential is not None:
        out["potential"] = potential.label
    if rho is not None:
        out["rho"] = float(rho)
    if eq is not None:
        out["B"] = float(eq.B)
        out["B_source"] = eq.source
    out.update(more)
    return out


def _require_convex(potential, rho, lo, hi):
    probe = potential if rho == potential.rho else _with_rho(potential, rho)
    if not check_convexity(probe, lo, hi):
        raise HypothesisError(
            f"{potential.label} is not {rho}-convex on [{lo:.3g}, {hi:.3g}]"
        )


def _with_rho(potential, rho):
    return replace(potential, rho=float(rho))


def _rho(potential, rho):
    return float(potential.rho if rho is None else rho)


# ------------------------------------------------------------ line checks


@_timed
def verify_lsi_R(mu, potential, rho=None, case="", cells=2000):
    """``relative_free_entropy <= fisher_rel / (2 rho)`` on the line.

    Raises
    ------
    HypothesisError
        If ``rho <= 0`` or ``Q - rho x^2 / 2`` fails the second-difference
        convexity test on a window covering ``mu``.
    """
    rho = _rho(potential, rho)
    if rho <= 0:
        raise HypothesisError("the line LSI needs rho > 0")
    _require_convex(potential, rho, mu.a - 1.0, mu.b + 1.0)
    eq = equilibrium_for(potential, cells)
    lhs = fn.relative_free_entropy(mu, potential, eq.B)
    phi = fn.fisher_rel_R(mu, potential)
    vacuous = fn.is_infinite(phi)
    rhs = math.inf if vacuous else phi / (2.0 * rho)
    return VerificationReport(
        "lsi-R", case, lhs, rhs, _closed_tol(0.0 if vacuous else rhs),
        _inputs(mu, potential, rho, eq), vacuous,
    )


@_timed
def verify_voiculescu(mu, case=""):
    """``(1/2) log(2 pi e / Phi) <= chi`` for a measure on the line."""
    phi = fn.fisher_R(mu)
    if fn.is_infinite(phi) or phi <= 0:
        return VerificationReport(
            "voiculescu", case, -math.inf, math.inf, CLOSED_TOL, _inputs(mu, None, None), True
        )
    lhs = 0.5 * math.log(2.0 * math.pi * math.e / phi)
    rhs = fn.chi(mu)
    return VerificationReport(
        "voiculescu", case, lhs, rhs, _closed_tol(rhs), _inputs(mu, None, None),
        extras={"Phi": phi},
    )


@_timed
def verify_tci_R(mu, potential, rho=None, case="", cells=2000):
    """``W(mu, mu_Q) <= sqrt(relative_free_entropy / rho)`` on the line."""
    rho = _rho(potential, rho)
    if rho <= 0:
        raise HypothesisError("the line TCI needs rho > 0")
    _require_convex(potential, rho, mu.a - 1.0, mu.b + 1.0)
    eq = equilibrium_for(potential, cells)
    entropy = fn.relative_free_entropy(mu, potential, eq.B)
    lhs = wasserstein_R(mu, eq.measure)
    rhs = math.sqrt(max(entropy, 0.0) / rho)
    return VerificationReport(
        "tci-R", case, lhs, rhs, _closed_tol(rhs), _inputs(mu, potential, rho, eq),
        extras={"relative_entropy": entropy},
    )


# ---------------------------------------------------------- circle checks


def _coarse_atoms(mu, cells):
    """Cell masses of ``mu`` merged onto ``cells`` equal arcs, as discrete atoms."""
    if mu.cells % cells:
        raise ValueError("coarse cell count must divide the grid size")
    masses = mu.masses.reshape(cells, -1).sum(axis=1)
    mids = -np.pi + (np.arange(cells) + 0.5) * (2.0 * np.pi / cells)
    keep = masses > 0
    return DiscreteMeasure(mids[keep], masses[keep] / masses[keep].sum(), "circle")


def _require_circle_rho(potential, rho):
    if rho <= -0.5:
        raise HypothesisError("circle inequalities need rho > -1/2")
    _require_convex(potential, rho, -np.pi, np.pi)


@_timed
def verify_lsi_T(mu, potential, rho=None, case="", cells=2048):
    """``relative_free_entropy <= fisher_rel / (1 + 2 rho)`` on the circle."""
    rho = _rho(potential, rho)
    _require_circle_rho(potential, rho)
    eq = equilibrium_for(potential, cells)
    lhs = fn.relative_free_entropy(mu, potential, eq.B)
    f_q = fn.fisher_rel_T(mu, potential)
    vacuous = fn.is_infinite(f_q)
    rhs = math.inf if vacuous else f_q / (1.0 + 2.0 * rho)
    return VerificationReport(
        "lsi-T", case, lhs, rhs, _closed_tol(0.0 if vacuous else rhs),
        _inputs(mu, potential, rho, eq), vacuous,
    )


@_timed
def verify_tci_T(mu, potential, rho=None, case="", cells=2048, coarse=128):
    """``W(mu, mu_Q) <= sqrt(2 relative_free_entropy / (1 + 2 rho))`` on the circle.

    The chord-metric distance is computed by LP on ``coarse`` merged cells and
    compared with the geodesic distance of the same discrete pair; the
    ordering is recorded in ``checks["chord<=geodesic"]``.
    """
    rho = _rho(potential, rho)
    _require_circle_rho(potential, rho)
    eq = equilibrium_for(potential, cells)
    entropy = fn.relative_free_entropy(mu, potential, eq.B)
    lhs = wasserstein_T_geodesic(mu, eq.measure)
    rhs = math.sqrt(2.0 * max(entropy, 0.0) / (1.0 + 2.0 * rho))
    checks, extras = {}, {"relative_entropy": entropy}
    if mu.cells % coarse == 0 and eq.measure.cells % coarse == 0:
        dm, dn = _coarse_atoms(mu, coarse), _coarse_atoms(eq.measure, coarse)
        chord = wasserstein_T_chord(dm, dn)
        geo = wasserstein_T_geodesic(dm, dn)
        extras.update(chord=chord, geodesic_coarse=geo)
        checks["chord<=geodesic"] = bool(chord <= geo + 1e-9)
    return VerificationReport(
        "tci-T", case, lhs, rhs, _closed_tol(rhs), _inputs(mu, potential, rho, eq),
        checks=checks, extras=extras,
    )


# ------------------------------------------------------- half-line checks


@_timed
def verify_halfline(mu, potential, rho=None, case="", cells=2000):
    """The half-line LSI, TCI and entropy-Fisher bound.

    Returns three reports:

    * ``lsi-plus``: ``relative_free_entropy <= fisher_rel_halfline / rho``
      (needs ``Q`` convex with ``Q' >= rho``);
    * ``tci-plus``: ``W(mu^, mu_Q^) <= sqrt(relative_free_entropy / (2 rho))``
      where ``^`` is the image under ``x -> sqrt(x)`` (needs
      ``Q(x^2) - rho x^2`` convex);
    * ``chi-plus``: ``(1/2) log(2 pi e^{1/2} / PhiPlus^2) <= chi(mu)``.
    """
    rho = _rho(potential, rho)
    if rho <= 0:
        raise HypothesisError("half-line inequalities need rho > 0")
    if not check_convexity(_with_rho(potential, rho), 0.0, max(mu.b, 1.0)):
        raise HypothesisError(f"{potential.label}: Q' is not nondecreasing and >= rho")
    root = math.sqrt(max(mu.b, 1.0))
    _require_convex(squared_argument(potential), rho, -root, root)
    eq = equilibrium_for(potential, cells)
    inputs = _inputs(mu, potential, rho, eq)
    entropy = fn.relative_free_entropy(mu, potential, eq.B)
    sym_entropy = fn.relative_free_entropy_halfline_symmetrized(mu, potential, eq.B)
    phi_q = fn.fisher_rel_halfline(mu, potential)
    phi_q_sym = fn.fisher_rel_halfline_symmetrized(mu, potential)
    lsi = VerificationReport(
        "lsi-plus", case, entropy, phi_q / rho, _closed_tol(phi_q / rho), dict(inputs),
        extras={"relative_entropy_symmetrized": sym_entropy, "fisher_rel_symmetrized": phi_q_sym},
    )
    w = wasserstein_R(pushforward_sqrt(mu), pushforward_sqrt(eq.measure))
    t_rhs = math.sqrt(max(entropy, 0.0) / (2.0 * rho))
    tci = VerificationReport("tci-plus", case, w, t_rhs, _closed_tol(t_rhs), dict(inputs))
    phi_plus = fn.fisher_halfline(mu)
    c_lhs = 0.5 * math.log(2.0 * math.pi * math.sqrt(math.e) / phi_plus**2)
    c_rhs = fn.chi(mu)
    chi_rep = VerificationReport(
        "chi-plus", case, c_lhs, c_rhs, _closed_tol(c_rhs), dict(inputs),
        extras={"PhiPlus": phi_plus},
    )
    return [lsi, tci, chi_rep]


# ------------------------------------------------------ scaling studies


def _small_n_entropy(mu, potential, q_mu, n, radius):
    if mu.domain == "circle":
        spec_mu = EnsembleSpec("special-unitary", q_mu, n)
        spec_q = EnsembleSpec("special-unitary", potential, n)
    else:
        spec_mu = EnsembleSpec("restricted", q_mu, n, radius=radius)
        spec_q = EnsembleSpec("self-adjoint", potential, n)
    log_z_mu, mean = brute_mean(spec_mu, lambda x: potential.value(x) - q_mu.value(x))
    log_z_q = brute_normalizer(spec_q)
    return (log_z_q - log_z_mu) / n**2 + mean


@_timed
def scaling_limit_entropy(mu, potential, n_list=(2, 3), radius=None, case="", cells=2000):
    """Exact small-``n`` relative entropies of ensembles against the free limit.

    For each ``n`` computes ``(1/n^2)[log Z_n(Q) - log Z_n(Q_mu)] +
    int (Q - Q_mu) dlambda_n``, the normalized classical relative entropy of
    the ``Q_mu`` ensemble (restricted to ``[-radius, radius]`` on the line)
    with respect to the ``Q`` ensemble; ``lambda_n`` is the mean eigenvalue
    law of the former.  The report passes when the error against
    ``relative_free_entropy(mu)`` does not increase along ``n_list``.
    """
    if mu.domain == "real" and radius is None:
        radius = max(abs(mu.a), abs(mu.b))
    window = None if mu.domain == "circle" else (-radius, radius)
    q_mu = measure_potential(mu, window=window)
    eq = equilibrium_for(potential, cells)
    target = fn.relative_free_entropy(mu, potential, eq.B)
    values, partial = [], False
    for n in n_list:
        try:
            values.append(_small_n_entropy(mu, potential, q_mu, n, radius))
        except QuadratureError:
            partial = True
            break
    errors = [abs(v - target) for v in values]
    checks = {"converged": not partial, "monotone": all(np.diff(errors) <= 1e-12)}
    lhs, rhs = (errors[-1], errors[0]) if errors else (math.nan, math.nan)
    return VerificationReport(
        "scaling-entropy", case, lhs, rhs, 0.0,
        _inputs(mu, potential, None, eq, radius=radius),
        checks=checks,
        extras={"n": list(n_list[: len(values)]), "values": values, "target": target},
    )


def _batch_se(values, chains, batches=10):
    per = np.asarray(values).reshape(chains, -1)
    usable = per.shape[1] - per.shape[1] % batches
    means = per[:, :usable].reshape(chains, batches, -1).mean(axis=2).ravel()
    return float(means.std(ddof=1) / math.sqrt(means.size))


@_timed
def scaling_limit_fisher(
    mu, potential, n_list=(8, 16, 32), sweeps=2000, burn_in=200, chains=4, thin=5,
    seed=0, case="", q_mu=None,
):
    """Monte-Carlo scaled relative Fisher norms of special unitary ensembles.

    Samples the ``Q_mu`` ensemble and averages
    ``relative_fisher_matrix_norm(Q_mu', Q', U) / n^3``.  Standard errors use
    batch means (10 batches per chain).  The report compares the estimate at
    the largest ``n`` with ``fisher_rel_T(mu, Q)``: ``lhs`` is the absolute
    error and ``rhs`` three standard errors.
    """
    if mu.domain != "circle":
        raise ValueError("the Fisher scaling study runs on the circle")
    q_mu = measure_potential(mu) if q_mu is None else q_mu
    target = fn.fisher_rel_T(mu, potential)
    estimates, errors = [], []
    for k, n in enumerate(n_list):
        spec = EnsembleSpec("special-unitary", q_mu, n)
        run = sample(spec, sweeps, burn_in, seed=seed + 1000 * k, chains=chains, thin=thin)
        vals = [
            relative_fisher_matrix_norm(q_mu.derivative, potential.derivative, s.atoms) / n**3
            for s in run.samples
        ]
        estimates.append(float(np.mean(vals)))
        errors.append(_batch_se(vals, chains))
    return VerificationReport(
        "scaling-fisher", case, abs(estimates[-1] - target), 3.0 * errors[-1], 0.0,
        _inputs(mu, potential, None, None, seed=seed, sweeps=sweeps),
        extras={"n": list(n_list), "estimates": estimates, "std_errors": errors, "target": target},
    )


def nu_lambda_entropy(lam):
    """Closed form of the classical relative entropy of ``nu_lam`` to the uniform law."""
    root = math.sqrt(1.0 - 4.0 / lam**2)
    return (
        math.log(0.5 * (1.0 + root)) + 1.0 + 4.0 / (lam * math.sqrt(lam**2 - 4.0)) - 1.0 / root
    )


@_timed
def ratio_studies(cells=4000, circle_cells=8192):
    """Three ratio studies on closed-form families.

    * ``ratio-lsi``: ``relative_free_entropy / fisher_rel`` for the semicircle
      of radius ``2 / sqrt(alpha)`` and ``Q = rho x^2 / 2`` at
      ``alpha = rho (1 +- 0.01)``; within ``1e-3`` of ``1 / (4 rho)``.
    * ``ratio-spike``: ``-Sigma / S`` for ``k`` blocks of density ``n``;
      ``S = log n`` exactly and the ratio is within ``0.15`` of ``1/k`` at
      the largest ``n`` with a non-increasing error.
    * ``ratio-nu``: ``S(nu_lam) / (-Sigma(nu_lam))`` is decreasing in
      ``lam``.  It tends to 1, so the check is the trend only.
    """
    reports = []
    for rho in (1.0, 2.0, 4.0):
        pot = quadratic(rho)
        eq = equilibrium_for(pot, cells)
        for eps in (-0.01, 0.01):
            alpha = rho * (1.0 + eps)
            mu = make_semicircle(2.0 / math.sqrt(alpha), cells)
            ratio = fn.relative_free_entropy(mu, pot, eq.B) / fn.fisher_rel_R(mu, pot)
            reports.append(
                VerificationReport(
                    "ratio-lsi", f"rho={rho:g},alpha={alpha:.4g}",
                    abs(ratio - 0.25 / rho), 1e-3, 0.0, _inputs(mu, pot, rho, eq),
                    extras={"ratio": ratio, "limit": 0.25 / rho},
                )
            )
    for k in (2, 4):
        ns = (8, 16, 32)
        ratios, entropies = [], []
        for n in ns:
            mu = make_spike_measure(k, n, 256 * k * 4)
            s = fn.relative_entropy(mu, make_uniform_circle(mu.cells))
            entropies.append(s)
            ratios.append(-fn.sigma(mu) / s)
        errs = [abs(r - 1.0 / k) for r in ratios]
        reports.append(
            VerificationReport(
                "ratio-spike", f"k={k}", errs[-1], 0.15, 0.0, {"k": k, "n": list(ns)},
                checks={
                    "S=log(n)": all(abs(s - math.log(n)) <= 1e-10 for s, n in zip(entropies, ns)),
                    "improving": all(np.diff(errs) <= 0),
                },
                extras={"ratios": ratios, "entropies": entropies},
            )
        )
    lams = (4.0, 8.0, 16.0, 32.0)
    ratios, exact = [], []
    for lam in lams:
        mu = make_nu_lambda(lam, circle_cells)
        s = fn.relative_entropy(mu, make_uniform_circle(circle_cells))
        exact.append(nu_lambda_entropy(lam))
        ratios.append(s / (-fn.sigma(mu)))
    steps = np.diff(ratios)
    reports.append(
        VerificationReport(
            "ratio-nu", "lambda=4,8,16,32", float(steps.max()), 0.0, 0.0,
            {"lambda": list(lams), "cells": circle_cells},
            extras={"ratios": ratios, "closed_form_entropy": exact},
        )
    )
    return reports


# --------------------------------------------------------- random inputs


def _sc_pdf(x, r, c):
    s = np.clip(1.0 - ((x - c) / r) ** 2, 0.0, None)
    return 2.0 / (np.pi * r * r) * np.sqrt(s) * r


def _random_line_measure(rng, cells):
    kind = rng.integers(3)
    if kind == 0:
        r, c = rng.uniform(0.8, 3.0), rng.uniform(-0.8, 0.8)
        mu = make_semicircle(r, cells, center=c)
    elif kind == 1:
        r1, r2 = rng.uniform(0.5, 1.5, 2)
        c1, c2 = rng.uniform(-2.0, 2.0, 2)
        w = rng.uniform(0.2, 0.8)
        lo, hi = min(c1 - r1, c2 - r2), max(c1 + r1, c2 + r2)
        pdf = lambda x: w * _sc_pdf(x, r1, c1) + (1 - w) * _sc_pdf(x, r2, c2)  # noqa: E731
        mu = GridMeasure.from_function("real", lo, hi, cells, pdf)
    else:
        a = rng.uniform(0.5, 2.0)
        mu = make_uniform(-a, a * rng.uniform(0.5, 1.5), cells)
    return mollify(mu, rng.uniform(0.05, 0.4) * (mu.b - mu.a) / 4.0)


def _random_line_potential(rng):
    rho = rng.uniform(0.5, 2.5)
    if rng.random() < 0.6:
        return quadratic(rho, rng.uniform(-0.5, 0.5))
    return quartic(rho, rng.uniform(0.0, 0.15))


def _random_circle_measure(rng, cells):
    kind = rng.integers(3)
    if kind == 0:
        return make_nu_lambda(rng.uniform(2.5, 30.0), cells, phase=rng.uniform(-np.pi, np.pi))
    kappas = rng.uniform(0.1, 2.5, 2)
    phases = rng.uniform(-np.pi, np.pi, 2)
    w = 1.0 if kind == 1 else rng.uniform(0.2, 0.8)

    def pdf(t):
        return w * np.exp(kappas[0] * np.cos(t - phases[0])) + (1 - w) * np.exp(
            kappas[1] * np.cos(t - phases[1])
        )

    return GridMeasure.from_function("circle", -np.pi, np.pi, cells, pdf)


def _random_circle_potential(rng):
    kind = rng.integers(3)
    if kind == 0:
        return cosine(rng.uniform(4.5, 40.0), rng.uniform(-np.pi, np.pi))
    if kind == 1:
        return zero_circle()
    c1 = rng.uniform(-0.25, 0.25)
    c2 = rng.uniform(-1.0, 1.0) * (0.45 - abs(c1)) / 4.0
    return cosine_mixture([c1, c2])


def _random_halfline_measure(rng, cells):
    kind = rng.integers(3)
    if kind == 0:
        return make_free_poisson(rng.uniform(0.5, 3.0), cells)
    b = rng.uniform(0.5, 4.0)
    if kind == 1:
        a, c = rng.uniform(0.0, 2.0), rng.uniform(1.0, 3.0)
        pdf = lambda x: np.clip(x, 0, None) ** a * np.clip(b - x, 0, None) ** c  # noqa: E731
        return GridMeasure.from_function("halfline", 0.0, b, cells, pdf)
    return make_power_density(rng.uniform(0.0, 3.0), cells)


def _random_halfline_potential(rng):
    rho = rng.uniform(0.5, 2.0)
    if rng.random() < 0.6:
        return linear_halfline(rho)
    return quadratic_halfline(rho, rng.uniform(0.0, 0.3))


# ---------------------------------------------------------------- suites


def _closed_lsi_r():
    jobs = []
    for rho in (1.0, 2.0, 4.0):
        for alpha in (1.0, 2.0, 4.0):
            mu = make_semicircle(2.0 / math.sqrt(alpha), 2000)
            jobs.append(lambda mu=mu, rho=rho, alpha=alpha: verify_lsi_R(
                mu, quadratic(rho), case=f"closed:rho={rho:g},alpha={alpha:g}"))
    mu = make_semicircle(1.5, 2000, center=0.3)
    jobs.append(lambda: verify_lsi_R(mu, quadratic(1.0), case="closed:shifted-semicircle"))
    return jobs


def _closed_voiculescu():
    jobs = [
        lambda: verify_voiculescu(make_semicircle(2.0, 2000), case="closed:semicircle-r2"),
        lambda: verify_voiculescu(make_uniform(-1.0, 1.0, 2000), case="closed:uniform"),
    ]
    pdf = lambda x: 0.5 * _sc_pdf(x, 1.0, -1.2) + 0.5 * _sc_pdf(x, 1.0, 1.2)  # noqa: E731
    bimodal = mollify(GridMeasure.from_function("real", -2.2, 2.2, 2000, pdf), 0.2)
    jobs.append(lambda: verify_voiculescu(bimodal, case="closed:bimodal"))
    return jobs


def _closed_lsi_t():
    jobs = []
    for lam in (8.0, 16.0):
        for alpha in (4.0, 8.0, 16.0):
            mu = make_nu_lambda(alpha, 2048)
            jobs.append(lambda mu=mu, lam=lam, alpha=alpha: verify_lsi_T(
                mu, cosine(lam), case=f"closed:lambda={lam:g},alpha={alpha:g}"))
    jobs.append(lambda: verify_lsi_T(make_nu_lambda(4.0, 2048), zero_circle(), case="closed:nu4-zero"))
    return jobs


def _closed_tci_r():
    jobs = []
    for alpha in (0.25, 1.0, 4.0):
        mu = make_semicircle(2.0 / math.sqrt(alpha), 2000)
        jobs.append(lambda mu=mu, alpha=alpha: verify_tci_R(
            mu, quadratic(1.0), case=f"closed:alpha={alpha:g}"))
    mu = make_semicircle(2.0, 2000, center=0.3)
    jobs.append(lambda: verify_tci_R(mu, quadratic(1.0), case="closed:shifted-0.3"))
    return jobs


def _closed_tci_t():
    jobs = [
        lambda: verify_tci_T(make_nu_lambda(4.0, 2048), zero_circle(), case="closed:nu4-zero"),
        lambda: verify_tci_T(make_nu_lambda(8.0, 2048), cosine(8.0), case="closed:equilibrium"),
    ]
    for phase in (0.5, 1.5, 3.0):
        mu = make_nu_lambda(8.0, 2048, phase=phase)
        jobs.append(lambda mu=mu, phase=phase: verify_tci_T(
            mu, cosine(8.0), case=f"closed:rotated-{phase:g}"))
    return jobs


def _closed_halfline():
    jobs = []
    for alpha in (0.0, 1.0, 2.0):
        mu = make_power_density(alpha, 2000)
        jobs.append(lambda mu=mu, alpha=alpha: verify_halfline(
            mu, linear_halfline(1.0), case=f"closed:power-alpha={alpha:g}"))
    pot = linear_halfline(1.0)
    jobs.append(lambda: verify_halfline(equilibrium_for(pot).measure, pot, case="closed:equilibrium"))
    return jobs


def _random_jobs(verify, make_measure, make_potential, count, rng, cells):
    jobs = []
    for i in range(count):
        mu, pot = make_measure(rng, cells), make_potential(rng)
        jobs.append(lambda mu=mu, pot=pot, i=i: verify(mu, pot, case=f"random-{i:03d}"))
    return jobs


def _suite_jobs(name, rng, cells, n_random):
    if name == "lsi-r":
        return _closed_lsi_r() + _random_jobs(
            verify_lsi_R, _random_line_measure, _random_line_potential, n_random, rng, cells)
    if name == "tci-r":
        return _closed_tci_r() + _random_jobs(
            verify_tci_R, _random_line_measure, _random_line_potential, n_random, rng, cells)
    if name == "voiculescu":
        jobs = _closed_voiculescu()
        for i in range(n_random):
            mu = _random_line_measure(rng, cells)
            jobs.append(lambda mu=mu, i=i: verify_voiculescu(mu, case=f"random-{i:03d}"))
        return jobs
    circle_cells = 1 << int(round(math.log2(max(cells, 128))))
    if name == "lsi-t":
        return _closed_lsi_t() + _random_jobs(
            verify_lsi_T, _random_circle_measure, _random_circle_potential, n_random, rng,
            circle_cells)
    if name == "tci-t":
        return _closed_tci_t() + _random_jobs(
            verify_tci_T, _random_circle_measure, _random_circle_potential, n_random, rng,
            circle_cells)
    if name == "halfline":
        return _closed_halfline() + _random_jobs(
            verify_halfline, _random_halfline_measure, _random_halfline_potential, n_random,
            rng, cells)
    if name == "scaling":
        smooth = mollify(make_semicircle(2.0, 2000), 0.5)
        seeds = [int(v) for v in rng.integers(2**31, size=2)]
        return [
            lambda: scaling_limit_entropy(
                make_nu_lambda(8.0, 1024), zero_circle(), case="nu8-zero"),
            lambda: scaling_limit_entropy(
                smooth, quadratic(1.0), radius=2.5, case="mollified-semicircle"),
            lambda: scaling_limit_fisher(
                make_nu_lambda(8.0, 1024), zero_circle(), seed=seeds[0],
                case="nu8-zero"),
            lambda: scaling_limit_fisher(
                make_nu_lambda(16.0, 1024), cosine(8.0), seed=seeds[1],
                case="nu16-cos8"),
        ]
    if name == "ratios":
        return [ratio_studies]
    raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")


SUITES = ("lsi-r", "lsi-t", "tci-r", "tci-t", "halfline", "voiculescu", "scaling", "ratios")


def _workers(workers):
    if workers is not None:
        return max(1, int(workers))
    return max(1, int(os.environ.get("FREEINEQ_WORKERS", "1")))


def run_suite(name, seed=0, cells=1000, n_random=50, workers=None):
    """Run a verification suite and return its reports sorted by id.

    Parameters
    ----------
    name : str
        One of :data:`SUITES` or ``"all"``.
    seed : int
        Seeds the random admissible inputs (and Monte-Carlo runs).
    cells : int
        Grid size for random inputs; closed-form inputs use fixed grids.
    n_random : int
        Random inputs per inequality suite.
    workers : int, optional
        Thread-pool size; defaults to the ``FREEINEQ_WORKERS`` environment
        variable, else 1.
    """
    names = SUITES if name == "all" else (name,)
    jobs = []
    for suite in names:
        if suite not in SUITES:
            raise ValueError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
        rng = np.random.default_rng(np.random.SeedSequence([seed, SUITES.index(suite)]))
        jobs.extend(_suite_jobs(suite, rng, cells, n_random))
    n_workers = _workers(workers)
    if n_workers == 1:
        results = [job() for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(lambda job: job(), jobs))
    reports = []
    for out in results:
        reports.extend(out if isinstance(out, list) else [out])
    return sorted(reports, key=lambda r: r.id)


def summarize(reports):
    """Counts of passed, failed and vacuous reports."""
    counted = [r for r in reports if not r.vacuous]
    failed = [r.id for r in counted if not r.passed]
    return {
        "total": len(reports),
        "passed": len(counted) - len(failed),
        "failed": len(failed),
        "vacuous": len(reports) - len(counted),
        "failures": failed,
    }


def summary_table(reports):
    """Fixed-width text table, one row per inequality."""
    groups = {}
    for r in reports:
        groups.setdefault(r.inequality, []).append(r)
    lines = [f"{'inequality':<16}{'runs':>6}{'pass':>6}{'fail':>6}{'vacuous':>9}{'min slack':>14}"]
    for key in sorted(groups):
        rs = groups[key]
        counted = [r for r in rs if not r.vacuous]
        fails = sum(not r.passed for r in counted)
        slacks = [r.slack for r in counted]
        slack = math.nan if any(map(math.isnan, slacks)) else min(slacks, default=math.inf)
        lines.append(
            f"{key:<16}{len(rs):>6}{len(counted) - fails:>6}{fails:>6}"
            f"{len(rs) - len(counted):>9}{slack:>14.4e}"
        )
    return "\n".join(lines) + "\n"


def write_reports(reports, out_dir, config=None):
    """Write ``<inequality>.jsonl`` files, ``summary.txt`` and ``config.json``.

    Files contain no timing data, so identical inputs give identical bytes.
    """
    os.makedirs(out_dir, exist_ok=True)
    groups = {}
    for r in reports:
        groups.setdefault(r.inequality, []).append(r)
    paths = []
    for key in sorted(groups):
        text = "".join(json.dumps(r.to_dict(), sort_keys=True) + "\n" for r in groups[key])
        path = os.path.join(out_dir, f"{key}.jsonl")
        _atomic_write_text(path, text)
        paths.append(path)
    summary = summarize(reports)
    _atomic_write_text(
        os.path.join(out_dir, "summary.txt"),
        summary_table(reports) + json.dumps(summary, sort_keys=True) + "\n",
    )
    if config is not None:
        _atomic_write_text(
            os.path.join(out_dir, "config.json"), json.dumps(_jsonable(config), sort_keys=True, indent=2) + "\n"
        )
    return paths
