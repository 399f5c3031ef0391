"""Weak quantum chaos absorption in a deformed billiard.

Classical impulse-train spectra, exact truncated-basis quantum solves,
band statistics of the piston coupling and resistor-network (semi-linear)
response.
"""
__version__ = "0.1.0"

from .errors import (ConfigError, ConvergenceError, DependencyError, FitError, GeometryError,
                     InsufficientDataError, QuadratureError, SchemaError, TruncationWarning)
from .geometry import (BilliardConfig, ScaleSet, deformation_profile, derive_scales, energy_for_hbar,
                       mean_level_spacing, speed)
from .classical import (ImpulseTrain, PowerSpectrum, analytic_Cinf, analytic_low_freq, angle_diffusion,
                        first_minimum, power_spectrum, simulate)
from .quantum import CouplingMatrix, SpectrumWindow, build_F, build_U, diagonalize, rect_basis, solve
from .matrixstats import (BandProfile, Histogram, SurrogateSpec, band_profile, make_surrogate,
                          scaled_band_profile, size_histogram)
from .response import (DrivingSpec, ResponseResult, WeightFunction, algebraic_average, amplitude_window,
                       feasibility, g_factors, network_average, vrh_correct, weight_from_driving,
                       wqc_estimate)
