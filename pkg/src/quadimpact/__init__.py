"""Deterministic simulator for rigid and compliant quadrotors hitting a wall."""

from .contact import ContactParams, evaluate_contacts, friction_force, normal_force
from .control import (CollisionEvent, ControllerGains, RecoveryParams, Setpoint, controller,
                      detect_collision_compliant, detect_collision_rigid, recovery_setpoint)
from .dynamics_compliant import (CompliantState, bias_and_gravity, compliant_derivative,
                                 kinetic_energy, mass_matrix, potential_energy)
from .dynamics_rigid import RigidState, rigid_derivative, rigid_energy
from .engine import (ScenarioConfig, TrajectoryLog, rk4_step, run_free_flight,
                     run_slider_collision, trajectory_sample)
from .errors import (ConfigError, DegenerateThrust, GimbalLock, InvalidArmLength,
                     MultipleEpisodes, NoContact, NoStepDetected, NumericalBlowup, OutOfRange,
                     QuadImpactError, RecoveryTimeout, SingularMass, SingularMixer, Unachievable)
from .metrics import (ImpactMetrics, TrackingMetrics, compute_a_max, compute_contact_metrics,
                      compute_cor, compute_tracking_metrics, impact_metrics)
from .vehicle import (CompliantParams, RigidParams, allocate, inertia_of, mixer_compliant,
                      mixer_rigid)

__version__ = "0.1.0"
