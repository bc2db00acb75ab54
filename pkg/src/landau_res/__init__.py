"""Resonances of magnetic Schroedinger operators near Landau levels."""

__version__ = "0.1.0"

from .model import (AxisGaussian, CompactBump, CompactStep, Config, ConfigError, FieldConfig, Gaussian,
                    PotentialProfile, PowerLaw, Truncation, eval_potential, load_config, make_config,
                    serialize, validate_config)
from .landau import (counting_functions, fit_counting_exponent, landau_eigenfunction, projection_kernel,
                     toeplitz_overlap, toeplitz_spectrum, weight_spectrum)
from .axis import channel_wavenumber, make_axis_grid, resolvent_matrix, split_rank_one
from .operator import (assemble_sector, bq_spectrum, det2, log_det2_physical, log_det2_total, trace_T,
                       trace_dk_A, trace_dz_T)
from .resonances import (Region, Resonance, annulus_census, count_zeros_contour, locate_resonances,
                         sector_census)
from .ssf import (breit_wigner_residual, phi_lambda, singularity_check, ssf_trace, trace_formula_check,
                  xi2_trace, xi_from_xi2)
