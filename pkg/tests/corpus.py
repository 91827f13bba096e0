"""Shared test densities."""

from functools import lru_cache

import numpy as np

from freeineq.measures import (
    GridMeasure,
    make_free_poisson,
    make_nu_lambda,
    make_power_density,
    make_semicircle,
    make_uniform,
    mollify,
)


def _sc(x, r, c):
    return np.sqrt(np.clip(r * r - (x - c) ** 2, 0.0, None))


@lru_cache(maxsize=None)
def line_corpus(cells=2000):
    """Ten line densities with finite ``int p^3``."""
    return {
        "semicircle-2": make_semicircle(2.0, cells),
        "semicircle-shifted": make_semicircle(1.0, cells, center=0.7),
        "semicircle-padded": make_semicircle(2.0, cells, a=-3.0, b=3.0),
        "gaussian": GridMeasure.from_function("real", -9.0, 9.0, cells, lambda x: np.exp(-x * x / 2)),
        "beta-2-2": GridMeasure.from_function("real", 0.0, 1.0, cells, lambda x: x * (1 - x)),
        "beta-3-3": GridMeasure.from_function("real", -1.0, 1.0, cells, lambda x: (1 - x * x) ** 2),
        "power-3/2": GridMeasure.from_function(
            "real", -1.0, 1.0, cells, lambda x: np.clip(1 - x * x, 0.0, None) ** 1.5
        ),
        "bimodal": GridMeasure.from_function(
            "real", -3.0, 3.0, cells, lambda x: _sc(x, 1.0, -1.5) + 0.5 * _sc(x, 1.0, 1.5)
        ),
        "mollified-uniform": mollify(make_uniform(-1.0, 1.0, cells), 0.3),
        "logistic": GridMeasure.from_function(
            "real", -30.0, 30.0, cells, lambda x: 1.0 / np.cosh(x / 2) ** 2
        ),
    }


SMOOTH_LINE = ("gaussian", "beta-2-2", "beta-3-3", "power-3/2", "mollified-uniform")


@lru_cache(maxsize=None)
def circle_corpus(cells=1024):
    von_mises = lambda k, c: lambda t: np.exp(k * np.cos(t - c))  # noqa: E731
    return {
        "nu-4": make_nu_lambda(4.0, cells),
        "nu-8-rotated": make_nu_lambda(8.0, cells, phase=1.0),
        "von-mises-1": GridMeasure.from_function("circle", -np.pi, np.pi, cells, von_mises(1.0, 0.3)),
        "von-mises-3": GridMeasure.from_function("circle", -np.pi, np.pi, cells, von_mises(3.0, -2.0)),
        "two-bumps": GridMeasure.from_function(
            "circle", -np.pi, np.pi, cells,
            lambda t: von_mises(2.0, 1.0)(t) + von_mises(4.0, -1.5)(t),
        ),
    }


@lru_cache(maxsize=None)
def halfline_corpus(cells=2000):
    return {
        "power-0": make_power_density(0.0, cells),
        "power-1": make_power_density(1.0, cells),
        "power-2": make_power_density(2.0, cells),
        "free-poisson": make_free_poisson(1.0, cells),
        "beta-like": GridMeasure.from_function("halfline", 0.0, 1.0, cells, lambda x: x * (1 - x) ** 2),
        "bump": GridMeasure.from_function(
            "halfline", 0.0, 3.0, cells,
            lambda x: np.exp(-1.0 / np.clip(1.0 - (x - 1.5) ** 2, 1e-300, None)) * (np.abs(x - 1.5) < 1),
        ),
    }
