"""Gauss-Newton quantum-inspired optimization of QUBO and PUBO problems.

The tensor-product state |phi(θ)> = ⊗_k (cos θ_k, sin θ_k) is driven toward
the ground state of a diagonal Ising Hamiltonian either by GNQA, which pulls
it toward a spectrally filtered target, or by the classical baselines in
:mod:`gnqa.optimizers`. Problems of up to ``GNQA_DESK_LIMIT`` (default 26)
variables are simulated exactly.
"""

from . import _backend
from .errors import (CalibrationFailed, DeskLimitExceeded, DimensionMismatch, GenerationTimeout,
                     GnqaError, InfeasibleSpec, KrylovBreakdown, OverlapNonpositive, ParseError,
                     RhoNotBelowLambda0, SingularJacobian, SpectrumOutOfRange,
                     UnresolvedParameter, ZeroImage)
from .gnqa import GnqaConfig, GnqaTrace, gnqa_fixed_eta_solve, gnqa_solve
from .model import (IsingHamiltonian, PuboProblem, QuboProblem, SpinPolynomial, brute_force,
                    to_ising, to_spin)
from .optimizers import (SolverConfig, SolverTrace, gradient_descent, krylov_solve,
                         modified_newton, natural_gradient)
from .problems import GeneratorSpec, generate, load, load_presets, save
from .transforms import SpectralTransform, parse_transform

__version__ = "0.1.0"
BACKEND = _backend.NAME

__all__ = [
    "BACKEND", "CalibrationFailed", "DeskLimitExceeded", "DimensionMismatch",
    "GenerationTimeout", "GeneratorSpec", "GnqaConfig", "GnqaError", "GnqaTrace",
    "InfeasibleSpec", "IsingHamiltonian", "KrylovBreakdown", "OverlapNonpositive",
    "ParseError", "PuboProblem", "QuboProblem", "RhoNotBelowLambda0", "SingularJacobian",
    "SolverConfig", "SolverTrace", "SpectralTransform", "SpectrumOutOfRange", "SpinPolynomial",
    "UnresolvedParameter", "ZeroImage", "brute_force", "generate", "gnqa_fixed_eta_solve",
    "gnqa_solve", "gradient_descent", "krylov_solve", "load", "load_presets",
    "modified_newton", "natural_gradient", "parse_transform", "save", "to_ising", "to_spin",
]
