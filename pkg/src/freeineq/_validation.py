"""Small input-validation helpers shared by the public functions."""

import numbers

import numpy as np

DOMAINS = ("real", "circle", "halfline")


class DomainError(ValueError):
    """Raised when an input lies outside the domain an operation accepts."""


def check_domain(domain):
    if domain not in DOMAINS:
        raise DomainError(f"unknown domain {domain!r}; expected one of {DOMAINS}")
    return domain


def check_positive(value, name):
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value <= 0:
        raise DomainError(f"{name} must be a positive finite number, got {value!r}")
    return float(value)


def check_cells(cells, minimum=8):
    if not isinstance(cells, numbers.Integral) or cells < minimum:
        raise DomainError(f"cells must be an integer >= {minimum}, got {cells!r}")
    return int(cells)


def check_same_domain(mu, nu):
    if mu.domain != nu.domain:
        raise DomainError(f"domain mismatch: {mu.domain} vs {nu.domain}")


def check_square_hermitian(a, name="A", atol=1e-10):
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {a.shape}")
    if not np.allclose(a, a.conj().T, atol=atol * max(1.0, np.abs(a).max())):
        raise ValueError(f"{name} must be self-adjoint")
    return a


def as_float_array(x, name="x", ndim=1):
    arr = np.asarray(x, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr
