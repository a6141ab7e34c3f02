"""Report figures for wavelab run directories.

This package reads only the documented CSV outputs (energies.csv,
reduced.csv, profile.csv, translation_<j>.csv) and writes PNG images.
It never imports the simulation package.
"""
from .plots import (
    SchemaError,
    plot_energies,
    plot_iteration,
    plot_profile,
    plot_relation,
    profile_deviation,
)

__all__ = [
    "SchemaError",
    "plot_energies",
    "plot_iteration",
    "plot_profile",
    "plot_relation",
    "profile_deviation",
]
