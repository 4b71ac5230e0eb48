"""Loschmidt echo of periodic Ising/XY chains after a local field quench.

Three routes are provided: exact dense diagonalization (:mod:`.exact`),
the order-by-order cumulant series (:mod:`.cumulants`) and the resolvent
resummation (:mod:`.resum`).
"""
from .errors import (
    ConfigError,
    DegeneracyError,
    FitError,
    GeometryError,
    InvalidMomentumError,
    InvalidOrderError,
    InvalidSpecError,
    LoschmidtError,
    NumericError,
    PoleError,
    ResolventSingularError,
    ResourceLimitError,
    SingularModeError,
    SingularPairError,
)
from .spectral import (
    ChainSpec,
    ModeTable,
    QuenchSpec,
    SectorSelection,
    bogoliubov_angle,
    excitation_energy,
    ground_energy,
    mode_table,
    momentum_grid,
    nondegeneracy_check,
    select_sector,
    vertex_matrix,
)
from .traces import AmplitudeTrace, CumulantTerm

__version__ = "0.1.0"
