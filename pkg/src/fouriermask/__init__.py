"""Binary masks as truncated 2D Fourier series over normalized pixel coordinates."""

__version__ = "0.1.0"

from .codec import EncoderConfig, encode_mask, reconstruct, spectrum_analysis, truncate
from .fitter import FitConfig, FitResult, fit_mask, predict
from .fourier import (
    CoefficientField,
    CoordinateGrid,
    MaskRaster,
    fourier_features,
    fourier_mapping,
    make_grid,
    synthesis_gradient,
    synthesize_mask,
)
from .lattice import FrequencyLattice, build_lattice, coefficient_count
from .metrics import iou_loss, iou_loss_gradient, soft_iou
from .renderer import RefinementConfig, select_uncertain_points, subdivision_refine, uncertainty_scores
from .siren import SirenParams, init_siren, siren_backward, siren_forward
from .upsample import super_resolve, upsample_coefficients
