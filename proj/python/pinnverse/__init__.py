"""Identify Hamiltonian couplings and decay rates of open qubit systems."""

from ._pinnverse import (
    FitFailure,
    IngestionError,
    IntegrationError,
    ParameterSet,
    Trajectory,
    UndefinedMetric,
    add_noise,
    evolve,
    evolve_pauli,
    fit,
    generator,
    mape,
    observable_names,
    read_csv,
    run,
    sample_parameters,
    uniform_grid,
    write_csv,
)

__all__ = [
    "FitFailure",
    "IngestionError",
    "IntegrationError",
    "ParameterSet",
    "Trajectory",
    "UndefinedMetric",
    "add_noise",
    "evolve",
    "evolve_pauli",
    "fit",
    "generator",
    "mape",
    "observable_names",
    "read_csv",
    "run",
    "sample_parameters",
    "uniform_grid",
    "write_csv",
]
