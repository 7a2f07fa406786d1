"""Impulsive Hopfield networks with delays: simulation, stability certificates and analysis."""

__version__ = "0.1.0"

from .analysis import (DecayFit, EnvelopeReport, MonitorReport, PeriodicOrbit, decay_rate_fit, deviation,
                       envelope_check, find_periodic, lyapunov_monitor, period_residual, psi_norm)
from .certify import Certificate, assess, certificate, coupling_matrix, find_alpha, find_xi, spectral_radius
from .errors import (AssumptionError, CertificateError, GridMismatchError, HistoryUnderflowError,
                     ImpnetError, KernelDivergenceError, SingularTransformError, SpecFormatError,
                     StructureError)
from .io import dump_spec, fingerprint, load_spec, loads_spec
from .kernels import Kernel, exp_moment, kernel_moments, log_moment
from .model import (ActivationSpec, BoundsReport, DelayFunction, ImpulseSchedule, NetworkSpec,
                    apriori_bounds, validate_network)
from .simulate import memory_init, simulate, simulate_transformed
from .trajectory import HistoryFunction, Trajectory
from .transform import to_impulsive, to_nonimpulsive, transformed_rhs

__all__ = [
    "ActivationSpec", "AssumptionError", "BoundsReport", "Certificate", "CertificateError", "DecayFit",
    "DelayFunction", "EnvelopeReport", "GridMismatchError", "HistoryFunction", "HistoryUnderflowError",
    "ImpnetError", "ImpulseSchedule", "Kernel", "KernelDivergenceError", "MonitorReport", "NetworkSpec",
    "PeriodicOrbit", "SingularTransformError", "SpecFormatError", "StructureError", "Trajectory",
    "apriori_bounds", "assess", "certificate", "coupling_matrix", "decay_rate_fit", "deviation",
    "dump_spec", "envelope_check", "exp_moment", "find_alpha", "find_periodic", "find_xi", "fingerprint",
    "kernel_moments", "load_spec", "loads_spec", "log_moment", "lyapunov_monitor", "memory_init",
    "period_residual", "psi_norm", "simulate", "simulate_transformed", "spectral_radius", "to_impulsive",
    "to_nonimpulsive", "transformed_rhs", "validate_network",
]
