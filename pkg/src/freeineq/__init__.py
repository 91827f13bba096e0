"""Numerical free-probability toolkit: free entropy and Fisher functionals,
equilibrium measures, Coulomb-gas samplers, 1-D optimal transport and a
verification harness for free log-Sobolev and transportation inequalities."""

__version__ = "0.1.0"
