"""Coulomb-gas eigenvalue ensembles: Metropolis sampling and exact small-n integrals.

The joint eigenvalue density of an ensemble with potential ``Q`` at size
``n`` is proportional to

    exp(-n sum_i Q(x_i)) prod_{i<j} |x_i - x_j|^2

on the line (``kind="self-adjoint"``), on ``[-R, R]`` (``"restricted"``) or on
``[0, inf)`` (``"positive"``).  For ``"special-unitary"`` the points are
angles, ``|x_i - x_j|`` is the chord ``|2 sin((x_i - x_j) / 2)|`` and only
``n - 1`` angles are free: the last one is minus their sum, so that the
eigenvalues multiply to one.  The ``orthogonal`` flag halves both the
potential weight and the Vandermonde power.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from ._validation import DomainError, check_positive
from .measures import EmpiricalMeasure, GridMeasure, cdf_quantile
from .potentials import Potential

__all__ = [
    "KINDS",
    "EnsembleSpec",
    "ChainState",
    "SampleResult",
    "SamplerStall",
    "QuadratureError",
    "log_joint_density",
    "full_positions",
    "metropolis_log_ratio",
    "quantile_init",
    "sample",
    "gue_direct",
    "brute_normalizer",
    "brute_mean",
    "mean_eigenvalue_distribution",
    "CoulombGasSampler",
]

KINDS = ("self-adjoint", "restricted", "special-unitary", "positive")
TWO_PI = 2.0 * np.pi


class SamplerStall(RuntimeError):
    """No proposal was accepted after burn-in."""


class QuadratureError(RuntimeError):
    """The exact small-n integral did not converge."""


@dataclass(frozen=True, eq=False)
class EnsembleSpec:
    """An eigenvalue ensemble.

    Parameters
    ----------
    kind : str
        One of :data:`KINDS`.
    potential : Potential
        Must live on the circle for ``"special-unitary"``, on the half-line
        for ``"positive"`` and on the line otherwise.
    n : int
        Matrix size, at least 2.
    radius : float, optional
        Half-width ``R`` of the restricted ensemble.
    orthogonal : bool
        Use the first-power Vandermonde and the weight ``exp(-(n/2) sum Q)``.
    """

    kind: str
    potential: Potential
    n: int
    radius: float = None
    orthogonal: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown ensemble kind {self.kind!r}; expected one of {KINDS}")
        if int(self.n) != self.n or self.n < 2:
            raise DomainError("ensemble size n must be an integer >= 2")
        want = {"special-unitary": "circle", "positive": "halfline"}.get(self.kind, "real")
        if self.potential.domain != want:
            raise DomainError(f"{self.kind} ensembles need a {want} potential")
        if self.kind == "restricted":
            check_positive(self.radius, "radius")

    @property
    def beta(self):
        return 1 if self.orthogonal else 2

    @property
    def free_dim(self):
        """Number of free coordinates (``n - 1`` for the special unitary case)."""
        return self.n - 1 if self.kind == "special-unitary" else self.n

    @property
    def domain(self):
        return {"special-unitary": "circle", "positive": "halfline"}.get(self.kind, "real")


def full_positions(spec, positions):
    """Append the determined angle to free special-unitary coordinates."""
    x = np.asarray(positions, dtype=float)
    if spec.kind != "special-unitary":
        return x
    return np.concatenate([x, -x.sum(axis=-1, keepdims=True)], axis=-1)


def _pair_log(kind, diff):
    with np.errstate(divide="ignore"):
        if kind == "special-unitary":
            return np.log(np.abs(2.0 * np.sin(0.5 * diff)))
        return np.log(np.abs(diff))


def _in_domain(spec, x):
    if spec.kind == "restricted":
        return np.all(np.abs(x) <= spec.radius, axis=-1)
    if spec.kind == "positive":
        return np.all(x >= 0.0, axis=-1)
    return np.ones(x.shape[:-1], dtype=bool)


def log_joint_density(spec, positions):
    """Unnormalized log density of the free coordinates.

    Parameters
    ----------
    spec : EnsembleSpec
    positions : ndarray, shape (..., spec.free_dim)

    Returns
    -------
    float or ndarray
        ``-inf`` outside the domain or at coincident points.

    Examples
    --------
    >>> from freeineq.potentials import quadratic
    >>> log_joint_density(EnsembleSpec("self-adjoint", quadratic(1.0), 2), [0.0, 1.0])
    -1.0
    """
    x = full_positions(spec, positions)
    if x.shape[-1] != spec.n:
        raise ValueError(f"expected {spec.free_dim} free coordinates")
    weight = spec.n * (0.5 if spec.orthogonal else 1.0)
    pot = -weight * np.sum(spec.potential.value(x), axis=-1)
    i, j = np.triu_indices(spec.n, 1)
    vdm = spec.beta * np.sum(_pair_log(spec.kind, x[..., i] - x[..., j]), axis=-1)
    out = np.where(_in_domain(spec, x), pot + vdm, -np.inf)
    return float(out) if out.ndim == 0 else out


def metropolis_log_ratio(spec, current, proposal):
    """``log min(1, p(y)/p(x))`` for a symmetric proposal (``-inf`` if ``p(y) = 0``)."""
    lx, ly = log_joint_density(spec, current), log_joint_density(spec, proposal)
    if ly == -np.inf:
        return -np.inf
    return min(0.0, ly - lx)


# ------------------------------------------------------------ chain state


@dataclass(eq=False)
class ChainState:
    """Batch of Metropolis chains advanced in lockstep.

    ``positions`` has shape ``(chains, n)`` and always holds the full point
    set; for special-unitary ensembles the last column is determined.
    """

    positions: np.ndarray
    log_density: np.ndarray
    step: np.ndarray
    sweeps: int = 0
    accepted: np.ndarray = None
    proposed: int = 0

    def __post_init__(self):
        if self.accepted is None:
            self.accepted = np.zeros(self.positions.shape[0], dtype=np.int64)

    @property
    def acceptance(self):
        return self.accepted / max(self.proposed, 1)

    def reset_counts(self):
        self.accepted[:] = 0
        self.proposed = 0


@dataclass
class SampleResult:
    """Samples (sorted eigenvalue sets) and run diagnostics."""

    samples: list
    diagnostics: dict = field(default_factory=dict)

    def atoms(self):
        return np.array([s.atoms for s in self.samples])


def _equilibrium_guess(spec, cells=400):
    from .equilibrium import closed_form_equilibrium, solve_equilibrium

    pot = spec.potential
    if spec.kind == "restricted":
        window = (-spec.radius, spec.radius)
        return solve_equilibrium(pot, cells=cells, window=window, tol=1e-6).measure
    exact = closed_form_equilibrium(pot, cells=cells)
    if exact is not None:
        return exact.measure
    return solve_equilibrium(pot, cells=cells, tol=1e-6).measure


def quantile_init(spec, target=None, chains=1):
    """Start every chain at the ``(j - 1/2) / n`` quantiles of ``target``.

    Without ``target`` the equilibrium measure of the potential is used
    (closed form when known, solver otherwise).
    """
    if target is None:
        target = _equilibrium_guess(spec)
    if target.domain != spec.domain:
        raise DomainError("quantile_init target must live on the ensemble domain")
    levels = (np.arange(spec.n) + 0.5) / spec.n
    x = np.asarray(cdf_quantile(target).quantile(levels), dtype=float)
    if spec.kind == "special-unitary":
        x[-1] = -x[:-1].sum()
    if spec.kind == "restricted":
        x = np.clip(x, -spec.radius, spec.radius)
    # split exact ties so the Vandermonde factor stays finite
    if np.any(np.diff(np.sort(x)) <= 0):
        x = x + 1e-9 * np.arange(spec.n)
    pos = np.tile(x, (chains, 1))
    logd = log_joint_density(spec, pos[:, : spec.free_dim])
    spread = float(np.ptp(x)) if spec.n > 1 else 1.0
    step = np.full(chains, max(spread, 1e-3) / spec.n)
    return ChainState(pos, np.atleast_1d(logd), step)


def _reflect(spec, y):
    if spec.kind == "positive":
        return np.abs(y)
    if spec.kind == "restricted":
        r = spec.radius
        return r - np.abs(np.mod(y + r, 4.0 * r) - 2.0 * r)
    return y


def _sweep(spec, state, rngs):
    """One sequential scan over the free coordinates of every chain."""
    x = state.positions
    chains, n = x.shape
    m = spec.free_dim
    z = np.stack([g.standard_normal(m) for g in rngs])
    logu = np.log(np.stack([g.random(m) for g in rngs]))
    weight = n * (0.5 if spec.orthogonal else 1.0)
    q = spec.potential.value
    su = spec.kind == "special-unitary"
    rows = np.arange(chains)
    for i in range(m):
        old = x[:, i].copy()
        new = _reflect(spec, old + state.step * z[:, i])
        others = np.ones(n, dtype=bool)
        others[i] = False
        if su:
            # the determined angle co-moves with the free one
            last_old = x[:, -1].copy()
            last_new = last_old - (new - old)
            others[-1] = False
            moved_old = np.stack([old, last_old], axis=1)
            moved_new = np.stack([new, last_new], axis=1)
        else:
            moved_old, moved_new = old[:, None], new[:, None]
        rest = x[:, others]

        def energy(moved):
            val = -weight * np.sum(q(moved), axis=1)
            pairs = _pair_log(spec.kind, moved[:, :, None] - rest[:, None, :])
            val = val + spec.beta * pairs.sum(axis=(1, 2))
            if su:
                val = val + spec.beta * _pair_log(spec.kind, moved[:, 0] - moved[:, 1])
            return val

        delta = energy(moved_new) - energy(moved_old)
        delta = np.where(np.isnan(delta), -np.inf, delta)
        accept = logu[:, i] < delta
        idx = rows[accept]
        x[idx, i] = new[idx]
        if su:
            x[idx, -1] = last_new[idx]
        state.log_density[idx] += delta[idx]
        state.accepted += accept
    state.proposed += m
    state.sweeps += 1


def sample(
    spec,
    sweeps,
    burn_in=0,
    seed=0,
    chains=1,
    thin=1,
    init=None,
    tune_every=25,
    debug=False,
):
    """Random-walk Metropolis samples of the eigenvalue ensemble.

    Parameters
    ----------
    spec : EnsembleSpec
    sweeps : int
        Recorded sweeps per chain (every ``thin``-th is kept).
    burn_in : int
        Discarded sweeps; the per-chain step size is tuned towards an
        acceptance rate in ``[0.2, 0.5]`` during burn-in only.
    seed : int
        Master seed; chain ``k`` uses the ``k``-th spawned child sequence.
    chains : int
    init : ChainState, optional
        Defaults to :func:`quantile_init` on the equilibrium measure.
    debug : bool
        Recompute the log density after every sweep and compare with the
        incremental cache.

    Returns
    -------
    SampleResult
        Samples are ordered chain by chain, then by sweep.

    Raises
    ------
    SamplerStall
        If some chain accepts nothing after burn-in.
    """
    if sweeps < 0 or burn_in < 0 or thin < 1:
        raise ValueError("sweeps and burn_in must be >= 0 and thin >= 1")
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(chains)]
    state = quantile_init(spec, chains=chains) if init is None else init
    if state.positions.shape[0] != chains:
        raise ValueError("init has a different number of chains")
    for k in range(burn_in):
        _sweep(spec, state, rngs)
        if (k + 1) % tune_every == 0:
            rate = state.acceptance
            state.step = np.where(rate > 0.5, state.step * 1.25, state.step)
            state.step = np.where(rate < 0.2, state.step * 0.75, state.step)
            state.reset_counts()
    state.reset_counts()
    kept = [[] for _ in range(chains)]
    for k in range(sweeps):
        _sweep(spec, state, rngs)
        if debug:
            fresh = log_joint_density(spec, state.positions[:, : spec.free_dim])
            np.testing.assert_allclose(state.log_density, fresh, rtol=1e-8, atol=1e-8)
        if (k + 1) % thin == 0:
            for c in range(chains):
                kept[c].append(state.positions[c].copy())
    if sweeps > 0 and np.any(state.accepted == 0):
        raise SamplerStall("a chain accepted no proposal after burn-in; lower the step size")
    samples = [EmpiricalMeasure(p, spec.domain) for chain in kept for p in chain]
    diagnostics = {
        "acceptance": [float(a) for a in state.acceptance],
        "step": [float(s) for s in state.step],
        "sweeps": int(sweeps),
        "burn_in": int(burn_in),
        "chains": int(chains),
        "seed": int(seed),
    }
    return SampleResult(samples, diagnostics)


def gue_direct(n, rho=1.0, seed=0, rng=None):
    """Eigenvalues of the Gaussian ensemble with density ``exp(-n rho Tr A^2 / 2)``.

    Diagonal entries have variance ``1 / (n rho)``, off-diagonal real and
    imaginary parts ``1 / (2 n rho)`` each.
    """
    rho = check_positive(rho, "rho")
    rng = np.random.default_rng(seed) if rng is None else rng
    sd = 1.0 / np.sqrt(n * rho)
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    a = (g + g.conj().T) * (sd / 2.0)
    return EmpiricalMeasure(np.linalg.eigvalsh(a), "real")


# --------------------------------------------------- exact small-n integrals


def _window(spec, tail=45.0):
    if spec.kind == "restricted":
        return -spec.radius, spec.radius
    if spec.kind == "special-unitary":
        return -np.pi, np.pi
    lo_lim = 0.0 if spec.kind == "positive" else -200.0
    x = np.linspace(lo_lim, 200.0, 400001)
    weight = spec.n * (0.5 if spec.orthogonal else 1.0)
    g = -weight * spec.potential.value(x) + spec.beta * (spec.n - 1) * np.log1p(np.abs(x))
    keep = x[g >= g.max() - tail]
    lo = lo_lim if spec.kind == "positive" else keep[0] - 1.0
    return lo, keep[-1] + 1.0


def _rule(spec, nodes):
    lo, hi = _window(spec)
    if spec.kind == "special-unitary":
        t = lo + (np.arange(nodes) + 0.5) * (hi - lo) / nodes
        return t, np.full(nodes, 1.0 / nodes)
    t, w = np.polynomial.legendre.leggauss(nodes)
    return 0.5 * (hi - lo) * t + 0.5 * (hi + lo), 0.5 * (hi - lo) * w


def _tensor(spec, nodes, observable=None, chunk=1 << 18):
    t, w = _rule(spec, nodes)
    m = spec.free_dim
    total = nodes**m
    logd_parts, val_parts = [], []
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total))
        idx = np.stack(np.unravel_index(flat, (nodes,) * m), axis=-1)
        pts = t[idx]
        logd_parts.append(log_joint_density(spec, pts) + np.log(w[idx]).sum(axis=1))
        if observable is not None:
            full = full_positions(spec, pts)
            if spec.kind == "special-unitary":
                full = np.mod(full + np.pi, TWO_PI) - np.pi
            val_parts.append(np.mean(observable(full), axis=1))
    logd = np.concatenate(logd_parts)
    log_z = special.logsumexp(logd) - math.lgamma(spec.n + 1)
    if observable is None:
        return log_z, None
    vals = np.concatenate(val_parts)
    keep = np.isfinite(logd)
    probs = np.exp(logd[keep] - special.logsumexp(logd[keep]))
    return log_z, float(np.dot(probs, vals[keep]))


def _converge(spec, observable, rtol, start, max_nodes):
    if spec.free_dim > 3 or spec.n > 3:
        raise DomainError("exact normalizers are supported for n <= 3 only")
    nodes = start
    prev = _tensor(spec, nodes, observable)
    while nodes < max_nodes:
        nodes *= 2
        cur = _tensor(spec, nodes, observable)
        dz = abs(cur[0] - prev[0])
        dm = 0.0 if observable is None else abs(cur[1] - prev[1]) / (1.0 + abs(cur[1]))
        if dz <= rtol and dm <= rtol:
            return cur, nodes
        prev = cur
    raise QuadratureError(f"tensor quadrature did not reach rtol={rtol:g} with {max_nodes} nodes")


def brute_normalizer(spec, rtol=1e-6, start=24, max_nodes=192):
    """``log Z_n`` of the ensemble by tensor quadrature, for ``n <= 3``.

    ``Z_n = (1/n!) int exp(-n sum Q) prod |x_i - x_j|^beta`` against ``dx``
    (Gauss-Legendre on a window carrying all but ``e^{-45}`` of the
    weight) or against ``dtheta / 2pi`` on the ``n - 1`` free angles
    (periodic midpoint rule).  The node count doubles until ``log Z``
    changes by less than ``rtol``.
    """
    (log_z, _), _ = _converge(spec, None, rtol, start, max_nodes)
    return float(log_z)


def brute_mean(spec, observable, rtol=1e-6, start=24, max_nodes=192):
    """``log Z_n`` and ``E[(1/n) sum_i f(x_i)]`` (integral against the mean eigenvalue law)."""
    (log_z, mean), _ = _converge(spec, observable, rtol, start, max_nodes)
    return float(log_z), float(mean)


def mean_eigenvalue_distribution(samples, cells=200, a=None, b=None):
    """Histogram of all sampled points, as a grid measure.

    Parameters
    ----------
    samples : sequence of EmpiricalMeasure
    cells : int
    a, b : float, optional
        Grid window; defaults to the sample range (``[-pi, pi)`` on the
        circle, ``[0, max]`` on the half-line).
    """
    if len(samples) == 0:
        raise ValueError("need at least one sample")
    domain = samples[0].domain
    atoms = np.concatenate([s.atoms for s in samples])
    if domain == "circle":
        a, b = -np.pi, np.pi
        atoms = np.mod(atoms + np.pi, TWO_PI) - np.pi
    else:
        pad = 1e-9 * (1.0 + np.ptp(atoms))
        a = (0.0 if domain == "halfline" else atoms.min() - pad) if a is None else a
        b = atoms.max() + pad if b is None else b
    counts, _ = np.histogram(atoms, bins=cells, range=(a, b))
    return GridMeasure.from_masses(domain, a, b, counts.astype(float))


class CoulombGasSampler:
    """Estimator-style wrapper around :func:`sample`.

    Parameters follow :func:`sample`; :meth:`fit` stores ``samples_``,
    ``diagnostics_`` and ``mean_measure_``.
    """

    def __init__(self, sweeps=1000, burn_in=200, chains=1, thin=1, seed=0, cells=200):
        self.sweeps = sweeps
        self.burn_in = burn_in
        self.chains = chains
        self.thin = thin
        self.seed = seed
        self.cells = cells

    def get_params(self):
        return {k: getattr(self, k) for k in ("sweeps", "burn_in", "chains", "thin", "seed", "cells")}

    def set_params(self, **params):
        for key, value in params.items():
            if key not in self.get_params():
                raise ValueError(f"unknown parameter {key!r}")
            setattr(self, key, value)
        return self

    def fit(self, spec):
        result = sample(
            spec, self.sweeps, self.burn_in, self.seed, self.chains, self.thin
        )
        self.samples_ = result.samples
        self.diagnostics_ = result.diagnostics
        self.mean_measure_ = mean_eigenvalue_distribution(result.samples, self.cells)
        return self
