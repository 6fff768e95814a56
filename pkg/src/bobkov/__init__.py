"""Numerical tools for the Gaussian isoperimetric and Bobkov deficits.

Submodules are imported lazily so that the command line entry point can set
thread-count environment variables before numpy loads.
"""
from __future__ import annotations

import importlib

__version__ = "0.1.0"

_EXPORTS = {
    "phi": "scalar", "Phi": "scalar", "Phi_inv": "scalar", "iso_I": "scalar",
    "gauss_hermite_rule": "quadrature", "mc_rule": "quadrature", "grid_rule": "quadrature", "integrate": "quadrature",
    "SpectralFunction": "hermite", "project": "hermite", "semigroup_spectral": "hermite",
    "evolve": "semigroup", "pt_eval": "semigroup", "pt_gradient": "semigroup", "pt_hessian": "semigroup",
    "h_chain": "semigroup",
    "deficit": "deficit", "set_deficit": "deficit", "boundary_measure_minkowski": "deficit",
    "boundary_measure_semigroup": "deficit", "ck_lower_bound": "deficit",
    "fit_phi_affine": "fitting", "fit_halfspace_set": "fitting", "rounding_gap": "fitting",
    "run_ledger": "ledger", "run_stability": "experiments",
}


def __getattr__(name):
    if name in _EXPORTS:
        return getattr(importlib.import_module(f".{_EXPORTS[name]}", __name__), name)
    raise AttributeError(f"module 'bobkov' has no attribute {name!r}")


__all__ = sorted(_EXPORTS)
