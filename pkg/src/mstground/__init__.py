"""Multiple-scattering insertion-loss solver for cylinder arrays above a ground plane."""

from .config import SimulationConfig, load_config, preset
from .errors import (
    ConfigurationError,
    ConvergenceError,
    DomainError,
    ExtrapolationError,
    GeometryError,
    MSTError,
    SingularSystemError,
)
from .geometry import ArrayConfig, Point2, Scatterer, Scene
from .ground import (
    ConstantAdmittance,
    FreeField,
    ImpedanceGround,
    OneParameter,
    RigidGround,
    Tabulated,
    TwoParameter,
)
from .scatterers import ElasticShell, Medium, RigidCylinder
from .solver import assemble, evaluate_field, insertion_loss, simulate_point, solve
from .sweep import ILSpectrum, find_extrema, run_sweep

__version__ = "0.1.0"
