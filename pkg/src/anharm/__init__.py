"""Anharmonic oscillator levels from range-based energy minimisation."""

from anharm.model import (
    EnergySample,
    OscillatorSpec,
    UnitSystem,
    apply_n_scaling,
    build_spec,
    energy_at,
)
from anharm.oracle import OracleResult, oracle_minima
from anharm.perturbation import perturbed_compare, sensitivity, sweep
from anharm.spectrum import (
    BranchParameters,
    SpectrumTable,
    branch_parameters,
    dimensionless_coefficients,
    energy_levels,
    harmonic_reference,
    solve,
    spectrum,
)
from anharm.stationary import (
    Branch,
    StationarityPolynomial,
    build_polynomial,
    classify_and_filter,
    find_positive_real_roots,
)

__all__ = [
    "Branch",
    "BranchParameters",
    "EnergySample",
    "OracleResult",
    "OscillatorSpec",
    "SpectrumTable",
    "StationarityPolynomial",
    "UnitSystem",
    "apply_n_scaling",
    "branch_parameters",
    "build_polynomial",
    "build_spec",
    "classify_and_filter",
    "dimensionless_coefficients",
    "energy_at",
    "energy_levels",
    "find_positive_real_roots",
    "harmonic_reference",
    "oracle_minima",
    "perturbed_compare",
    "sensitivity",
    "solve",
    "spectrum",
    "sweep",
]
