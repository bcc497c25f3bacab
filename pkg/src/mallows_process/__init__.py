"""Simulation and exact checks for continuous-time Mallows processes on permutations.

Two regular constructions are provided: a Markov birth process on the
inversion coordinates and a construction driven by one stored uniform per
coordinate.  The supporting modules cover the static Mallows law, the
expanded hypercube of unit inversion steps, the information fraction of the
uniform construction and the goodness-of-fit tests used to validate them.
"""

from .birth import birth_rate, integrated_hazard, marginal_pmf, sample_next_jump, simulate_birth_coordinate
from .distribution import (MallowsParams, enumerate_oracle, exact_jump_time_sf, inversion_count_table,
                           normalizing_constant, pmf, sample)
from .hypercube import build_hypercube, certify_structure, generator_set, is_hypercube_edge
from .information import (InfoPath, expected_info, full_retrieval_cdf, full_retrieval_time, info_fraction,
                          limit_mgf_X, var_info_at_1)
from .perms import InversionVector, Permutation, Transposition, compose, inv_count, inv_vector, phi, phi_inv
from .process import (ProcessTrajectory, TrajectoryBatch, jump_count_at, jumping_times, simulate_process,
                      state_at, transition_edges)
from .stats import EmpiricalSample, GofReport, chi_square, erlang_cdf, ks_statistic, poisson_point_check
from .trajectory import CoordinateTrajectory
from .uniform import UniformDriver, coordinate_jump_time, level_function, simulate_uniform_coordinate

__version__ = "0.1.0"
