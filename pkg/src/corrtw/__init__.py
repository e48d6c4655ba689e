from corrtw.ensembles import (
    DataMatrix,
    EntryDistribution,
    Form,
    build_R,
    build_S,
    build_W,
    sample_data_matrix,
)
from corrtw.experiments import (
    ExperimentConfig,
    GreenComparisonConfig,
    run_delocalization,
    run_edge_experiment,
    run_green_comparison,
)
from corrtw.independence import run_independence_test
from corrtw.mp_law import mp_cdf, mp_density, mp_params, nonasymptotic_params
from corrtw.tracy_widom import PainleveConfig, TW1Table, load_or_solve, tw1_cdf_table

__version__ = "0.1.0"
"""Library version"""

__all__ = [
    "DataMatrix",
    "EntryDistribution",
    "ExperimentConfig",
    "Form",
    "GreenComparisonConfig",
    "PainleveConfig",
    "TW1Table",
    "build_R",
    "build_S",
    "build_W",
    "load_or_solve",
    "mp_cdf",
    "mp_density",
    "mp_params",
    "nonasymptotic_params",
    "run_delocalization",
    "run_edge_experiment",
    "run_green_comparison",
    "run_independence_test",
    "sample_data_matrix",
    "tw1_cdf_table",
]
