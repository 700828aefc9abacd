"""Oriented digital boiling with quenched column rates: simulation and exact numerics."""

from .disorder import (DisorderModel, Environment, Integrand, g_inverse, g_tail, make_atoms,
                       make_point_mass, make_power_edge, moment, sample_environment)
from .errors import (AnnulusError, ConfigError, DomainError, NumericalAlarm, OdbError,
                     PreconditionError, RegimeError)
from .fredholm import CdfTable, exact_cdf
from .limits import (LimitConstants, composite_constants, critical_values, flat_speed,
                     limit_constants, pure_tau0, regime_classify, solve_a, time_constant)
from .paths import BernoulliMatrix, brute_force_cdf, coupling_check, longest_path, sample_matrix
from .quenched import QuenchedConstants, eval_cn, sigma_derivatives, solve_un
from .rng import Stream

__version__ = "0.1.0"
