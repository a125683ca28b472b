"""Near-field multiuser beamforming with movable antenna subarrays.

Submodules
----------
channel      spherical-wave channel model
arrays       initial and benchmark geometries, geometry text format
digital      zero-forcing precoding and position optimization
analog       constant-modulus beamforming and position optimization
closedform   exact placements and optimality certificates for two users
harness      scenarios, Monte Carlo experiments, beam patterns, CLI
"""

from .analog import (AnalogSolution, init_phases, min_snr, min_snr_upper_bound,
                     optimal_power_allocation, optimize_analog, optimize_analog_statistical)
from .arrays import (BENCHMARK_KINDS, RegionSpec, benchmark_geometry, init_subregion_grid,
                     init_uniform_grid, load_geometry, save_geometry, subarray_offsets, validate)
from .bounds import max_min_bound
from .channel import (ArrayGeometry, UserChannel, channel_matrix, channel_vector,
                      element_positions)
from .closedform import (check_analog_condition, check_digital_condition, construct_analog_apv,
                         construct_digital_apv, decompose)
from .digital import (DigitalSolution, OptimizerConfig, optimize_digital,
                      optimize_digital_statistical, zf_min_sinr, zf_precoder)
from .estimators import AnalogBeamformer, DigitalBeamformer
from .exceptions import *  # noqa: F401,F403

__version__ = "0.1.0"
