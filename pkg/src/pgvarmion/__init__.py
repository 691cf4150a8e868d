"""Variationally mimetic Petrov-Galerkin operator networks.

Numerics for learning steady advection-diffusion solution operators whose
branch reproduces a Petrov-Galerkin projection: quadrature, trial bases,
forcing samplers, reference solvers, a small reverse-mode MLP, the
operator models (pg-varmion, bnet, l-deeponet), training loops, and the
error-decomposition analysis suite.
"""

from .quadrature import (QuadratureRule, gauss_legendre, tensor_gauss_legendre,
                         uniform_interior_grid_2d, boundary_rule_1d,
                         boundary_rule_2d, integrate, rule_from_descriptor)
from .errors import (PgvError, InvalidArgumentError, DegenerateBasisError,
                     UnsupportedForcingError, CovarianceError, ZeroNormError,
                     NumericError, DataFormatError)
from .basis import (SineBasis1d, BoundaryLayerBasis1d, TensorSineBasis2d,
                    TransformedBasis, MassMatrix, mass_matrix, gram_schmidt,
                    project, basis_from_descriptor)
from .forcing import (ForcingSample, fourier_forcing_1d, fourier_forcing_2d,
                      grf_forcing, sample_forcing)
from .reference import (PdeConfig, solve_diffusion_1d, solve_advdiff_1d,
                        solve_advdiff_2d, solve_adjoint_for_psi)
from .network import Mlp, AdamW
from .models import PgVarmion, BNet, LDeepONet, sensor_vector
from .problems import (ProblemSetup, get_problem, PROBLEM_TAGS, MODEL_TAGS,
                       PROFILES)
from .datasets import LabeledDataset, build_dataset, load_dataset
from .training import TrainConfig, train, training_size_sweep
from .checkpoint import CheckpointRecord, save_checkpoint, load_checkpoint
from .analysis import (relative_l2_error, error_report, projection_report,
                       error_decomposition, theorem_bound_report,
                       psi_error_report, comparison_table)

__version__ = "0.1.0"

__all__ = [
    "QuadratureRule", "gauss_legendre", "tensor_gauss_legendre",
    "uniform_interior_grid_2d", "boundary_rule_1d", "boundary_rule_2d",
    "integrate", "rule_from_descriptor",
    "PgvError", "InvalidArgumentError", "DegenerateBasisError",
    "UnsupportedForcingError", "CovarianceError", "ZeroNormError",
    "NumericError", "DataFormatError",
    "SineBasis1d", "BoundaryLayerBasis1d", "TensorSineBasis2d",
    "TransformedBasis", "MassMatrix", "mass_matrix", "gram_schmidt",
    "project", "basis_from_descriptor",
    "ForcingSample", "fourier_forcing_1d", "fourier_forcing_2d",
    "grf_forcing", "sample_forcing",
    "PdeConfig", "solve_diffusion_1d", "solve_advdiff_1d", "solve_advdiff_2d",
    "solve_adjoint_for_psi",
    "Mlp", "AdamW",
    "PgVarmion", "BNet", "LDeepONet", "sensor_vector",
    "ProblemSetup", "get_problem", "PROBLEM_TAGS", "MODEL_TAGS", "PROFILES",
    "LabeledDataset", "build_dataset", "load_dataset",
    "TrainConfig", "train", "training_size_sweep",
    "CheckpointRecord", "save_checkpoint", "load_checkpoint",
    "relative_l2_error", "error_report", "projection_report",
    "error_decomposition", "theorem_bound_report", "psi_error_report",
    "comparison_table",
    "__version__",
]
