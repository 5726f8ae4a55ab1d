"""Norm-based generalization bounds for one-hidden-layer networks over
finite groups: group convolution in space and frequency, weight sharing,
local filters, the bound formulas, and Monte-Carlo Rademacher estimation."""

from .groups import (FiniteGroup, GroupSignal, act, direct_product,
                     group_convolve, make_cyclic, make_dihedral,
                     parse_group_spec, regular_perm, translate)
from .spectral import (FourierBasis, SpectralFilter, UncertaintyReport,
                       circulant_from_filter, diagonalize_circulant,
                       filter_from_spectrum, fourier, fourier_basis,
                       inverse_fourier, support_size, uncertainty_check)
from .models import (ModelSpec, Params, Patches, Pooling, SharingBasis,
                     forward, init_params, load_model, make_circulant_basis,
                     make_contiguous_patches, pool, save_model, scores)
from .training import (TrainConfig, grad, project_norm_ball, train,
                       hinge_loss, logistic_loss)
from .bounds import (BoundInputs, BoundReport, bound_bandlimited_floor,
                     bound_for_model, bound_general_pooling, bound_locality,
                     bound_maxpool, measure_inputs, weight_share_norm)
from .rademacher import (RademacherEstimate, SolverConfig, WitnessEstimate,
                         estimate_rc, lower_bound_witness,
                         make_positive_orthant_dataset)
from .data import (Dataset, SyntheticTaskSpec, block_to_subgroup, dump_csv,
                   gen_synthetic, lift_to_group, load_csv, load_idx)

__version__ = "0.1.0"
