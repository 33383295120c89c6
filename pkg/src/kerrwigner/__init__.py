"""Wigner-function evolution of a single bosonic mode under self-Kerr interaction."""

from .analysis import (
    NegativityReport,
    SubPlanckReport,
    count_lobes,
    negativity_scan,
    periodicity_check,
    subplanck_metrics,
    vacuum_distance,
)
from .banded import CompressedBandMatrix, band_from_entries, band_lu_decompose, band_matvec, band_solve
from .core import (
    CartesianRaster,
    PhasePoint,
    PolarGrid,
    SimulationConfig,
    WignerField,
    coherent_wigner_init,
    config_from_profile,
    phase_space_integral,
    sample_window,
)
from .fokker_planck import assemble_operator, evolve
from .oracles import SeriesPolicy, fock_static_part, q_function, wigner_series_deriv, wigner_series_q

__version__ = "0.1.0"
