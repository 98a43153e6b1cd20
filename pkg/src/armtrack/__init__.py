"""Simulation workbench for adaptive task-space tracking controllers on a
planar two-link arm whose kinematic and dynamic parameters are both
uncertain.

The package splits into a plant/regressor layer (`model`), the controller
laws and adaptation rules (`controllers`), the fixed-step closed-loop
simulator (`sim`), run metrics and analytical property checks
(`analysis`), and flat-file experiment configs (`config`).  `cli` exposes
the `armtrack` command.
"""

from .controllers import (Gains, ControlOutput, SensorSample,
                          SingularJacobianError, controller_step)
from .model import (forward_kinematics, inverse_kinematics, jacobian,
                    jacobian_rate, kin_regressor, inertia, coriolis, gravity,
                    dyn_regressor, forward_dynamics, SingularInertiaError)
from .sim import (DesiredTrajectory, DivergenceAbort, ExperimentConfig,
                  SimLog, SimulationAbort, SingularityAbort, run_experiment)
from .analysis import RunMetrics, compute_metrics, run_property_suite
from .config import ConfigError, bundled_names, load_config

__version__ = "0.1.0"

__all__ = [
    "Gains", "ControlOutput", "SensorSample", "SingularJacobianError",
    "controller_step",
    "forward_kinematics", "inverse_kinematics", "jacobian", "jacobian_rate",
    "kin_regressor", "inertia", "coriolis", "gravity", "dyn_regressor",
    "forward_dynamics", "SingularInertiaError",
    "DesiredTrajectory", "DivergenceAbort", "ExperimentConfig", "SimLog",
    "SimulationAbort", "SingularityAbort", "run_experiment",
    "RunMetrics", "compute_metrics", "run_property_suite",
    "ConfigError", "bundled_names", "load_config",
    "__version__",
]
