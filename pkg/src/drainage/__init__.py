"""Monte Carlo laboratory for a dependent drainage network on Z^d."""

from .analytic import IncrementLaw, gamma_exact, sigma2_exact, x_given_y, y_tail
from .dynamics import (
    PathRecord,
    SearchExceeded,
    SuccessorResult,
    check_planarity,
    path_at,
    successor,
    trace,
)
from .env import (
    DimensionError,
    HashEnvironment,
    ModelParams,
    TableEnvironment,
    is_open,
    priority_less,
    uniform_at,
)
from .geometry import Cone, LevelSlab, Trapezoid, apex, cone_size, slab_points, trapezoid_contains
from .joint import (
    CoalescenceRecord,
    IndependentPairRecord,
    JointState,
    RegenRecord,
    independent_pair,
    joint_step,
    pair_coalescence,
    run_regenerations,
    triple_collision,
)

__version__ = "0.1.0"
