"""Natural-dynamics gait synthesis for the elastic kinematic snake.

Library layout:

- params: model constants, friction constants, key-value config files
- dynamics: the reduced model (connection, mass matrix, energies, forward
  and inverse dynamics)
- fullcoords: full-coordinate cross-checks (constraint null space,
  finite-difference projection, multiplier DAE)
- integrate: adaptive embedded Runge-Kutta driver
- sim: trajectories, turning points, mode-switching gait execution
- modal: brake orbits, generators, generator intersections, switching gaits
- orbits: non-brake periodic orbits and their energy families
- efficiency: required energy, friction losses, cost of transport
- scaling: parameter-scaling laws and path-integral oracles
"""

from .dynamics import (BodyVelocity, Pose, ShapeState, bias_forces,
                       body_jacobians, forward_dynamics, inverse_dynamics,
                       local_connection, reduced_mass_matrix, spring_torque,
                       total_energy, world_velocity)
from .efficiency import (EllipticalGait, GaitEvaluation, baseline_energy,
                         compensation_torque, cot, evaluate_baseline,
                         evaluate_nbo, evaluate_nnm_gait,
                         evaluate_with_friction, friction_loss_torque,
                         switch_energy)
from .errors import (ConfigError, ConvergedToBrakeOrbit, IllConditioned,
                     NoConvergence, PathTooCoarse, SingularShape,
                     SingularityApproached, SnakeModesError, StepFailure,
                     TurningPointMissed, ZeroDisplacement)
from .modal import (BrakeOrbit, Generator, NnmGait, enumerate_nnm_gaits,
                    intersect_generators, linear_modes, shoot_brake_orbit,
                    trace_generator)
from .orbits import (OrbitFamily, PeriodicOrbit, continue_family, find_nbo,
                     find_nbo_poincare, orbit_displacement, solve_nbo)
from .params import FrictionParams, ModelParams, dump_params, load_params
from .scaling import (ParamScaling, displacement_from_path,
                      landau_half_period, scale_gait)
from .sim import (SwitchEvent, Trajectory, detect_turning_points,
                  run_switching_gait, simulate)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
