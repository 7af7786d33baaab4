"""World automata: hybrid I/O automata with leveled, spatially distributed world variables."""
from .composition import IncompatibleError, close_inputs, inplace, inplace_compatible, parallel, parallel_compatible
from .execution import Execution, Trace, align_paddings, level_trace, pad, trace
from .grid import Region, SpatialGrid
from .model import (
    ActionDecl,
    ActionKind,
    Direction,
    DynamicsLaw,
    LawForm,
    TransitionRule,
    VarClass,
    VariableDecl,
    WorldAutomaton,
    level_lift,
    rename,
    validate,
)
from .refinement import implements_bounded
from .schedule import Pulse, SignalSpec, Stimulus
from .sim import SimConfig, SimResult, simulate
from .trajectory import Trajectory
from .types import Key

__version__ = "0.1.0"
