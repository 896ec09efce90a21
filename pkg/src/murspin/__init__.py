"""Entropic measurement uncertainty relations for spin components."""

from .infoloss import (
    INFINITE_LOSS,
    NoisyDecomposition,
    ProbVector,
    device_loss_by_states,
    device_loss_closed,
    mixed_state_bias,
    noisy_decomposition,
    relative_entropy,
    visibility,
)
from .minimize import LossReport, analytic_solution, bound_check, inner_max_min, outer_search
from .orthogonal import (
    CloningSpec,
    SpinHalfFamilyParam,
    cloning_device_loss,
    cloning_marginal,
    ordering_report,
    spinhalf_family_marginal,
    spinhalf_min_loss,
)
from .qcoeff import AngleGrid, LambdaWeights, QTable, q_closed_form, q_table, unbiased_grid
from .spin import BlochState, MagneticIndex, SpinValue, eigen_projection, spin_matrices

__version__ = "0.1.0"
