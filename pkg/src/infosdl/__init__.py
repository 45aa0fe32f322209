"""Dictionary learning and sparse coding for densities and SPD matrices.

Data points are reconstructed as weighted centers of dictionary atoms:
mixtures for discrete densities (the weighted KL-center) and the
symmetrized weighted KL-center for SPD matrices. Codes live on the
probability simplex and no sparsity penalty is used.
"""

from .config import FitReport, KktReport, SdlConfig, SpdFitReport
from .density import (hellinger_sq, jsd_weighted, kl_center_maxjsd, kl_divergence,
                      kl_p_divergence, mixture, shannon_entropy, smooth_density,
                      weighted_kl_center)
from .errors import (DataFormatError, DegenerateInputError, DimensionError, InvariantError,
                     NumericalError, ParameterError, SDLError)
from .features import (FeatureConfig, gradient_covariance_descriptor, image_to_pmf,
                       texture_covariance_descriptor)
from .sdl_density import (atom_gradient, code_gradient, kkt_report, learn_density,
                          objective_density, sparse_code_density, sparsity_measure)
from .sdl_spd import (atom_riemannian_gradient, learn_spd, objective_spd, reconstruct_spd,
                      sparse_code_spd, weight_gradient_spd)
from .simplex import simplex_project
from .spd import (airm_distance, exp_map, j_divergence, log_map, make_spd, spd_invsqrt,
                  spd_kmeans, spd_sqrt, symmetrized_weighted_kl_center)

__version__ = "0.1.0"
