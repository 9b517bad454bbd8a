"""Motion and contact-force planning for a tool pressing and sliding on a soft surface."""

from .admm import AdmmOptions, AdmmSolver, ConstraintSets, FrictionCone
from .chain import KinematicChain, Joint, default_chain
from .contact import (
    ContactConfiguration,
    ContactForceState,
    ContactGeometry,
    MaterialParams,
)
from .ddp import (
    DdpOptions,
    DdpSolver,
    LinearDynamics,
    QuadraticCost,
    SystemDynamics,
    TrackingCost,
    TrajectoryPair,
)
from .dynamics import ControlInput, FullState, SoftContactSystem, ToolBody
from .errors import (
    ConfigError,
    DomainError,
    FitError,
    GimbalLockError,
    NotFittedError,
    PresslideError,
    SingularityError,
    SolverError,
)
from .identify import FrictionModelEstimator, YoungModulusEstimator, r_squared
from .paths import ReferencePath, Scenario, build_reference
from .simulate import ControllerGains, SimTrace, compare_traces

__version__ = "0.1.0"

__all__ = [
    "AdmmOptions",
    "AdmmSolver",
    "ConstraintSets",
    "FrictionCone",
    "KinematicChain",
    "Joint",
    "default_chain",
    "ContactConfiguration",
    "ContactForceState",
    "ContactGeometry",
    "MaterialParams",
    "DdpOptions",
    "DdpSolver",
    "LinearDynamics",
    "QuadraticCost",
    "SystemDynamics",
    "TrackingCost",
    "TrajectoryPair",
    "ControlInput",
    "FullState",
    "SoftContactSystem",
    "ToolBody",
    "ConfigError",
    "DomainError",
    "FitError",
    "GimbalLockError",
    "NotFittedError",
    "PresslideError",
    "SingularityError",
    "SolverError",
    "FrictionModelEstimator",
    "YoungModulusEstimator",
    "r_squared",
    "ReferencePath",
    "Scenario",
    "build_reference",
    "ControllerGains",
    "SimTrace",
    "compare_traces",
    "__version__",
]
