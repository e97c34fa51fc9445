"""Exception types shared across the package."""


class SnakeModesError(Exception):
    """Base class for all package-specific errors."""


class SingularShape(SnakeModesError):
    """Shape is at or too close to the alpha1 = alpha2 coordinate singularity.

    Carries the divisor value that triggered the guard.
    """

    def __init__(self, r, q_value, guard):
        self.r = tuple(float(v) for v in r)
        self.q_value = float(q_value)
        self.guard = float(guard)
        super().__init__(
            f"singular shape r={self.r}: |Q|={abs(self.q_value):.3e} < {self.guard:.1e}"
        )


class IllConditioned(SnakeModesError):
    """Reduced mass matrix condition number exceeds the configured bound."""


class SingularityApproached(SnakeModesError):
    """Integration ran into the singularity guard band; trajectory truncated."""

    def __init__(self, t, r, q_value):
        self.t = float(t)
        self.r = tuple(float(v) for v in r)
        self.q_value = float(q_value)
        super().__init__(f"|Q| guard tripped at t={self.t:.6g}, r={self.r}")


class StepFailure(SnakeModesError):
    """Adaptive integrator could not take an acceptable step."""


class NoConvergence(SnakeModesError):
    """Newton/shooting iteration failed to reach the residual tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        self.residual = residual
        self.iterations = iterations
        super().__init__(message)


class TurningPointMissed(SnakeModesError):
    """Expected turning point not reached within the allotted time window."""


class ConvergedToBrakeOrbit(SnakeModesError):
    """Periodic-orbit solve converged, but onto a brake orbit (NNM), not an NBO."""

    def __init__(self, min_joint_speed, threshold):
        self.min_joint_speed = float(min_joint_speed)
        self.threshold = float(threshold)
        super().__init__(
            f"min joint speed {self.min_joint_speed:.3e} rad/s is below the "
            f"brake-orbit filter {self.threshold:.1e} rad/s"
        )


class ZeroDisplacement(SnakeModesError):
    """Cost of transport is undefined for nonpositive net displacement."""


class PathTooCoarse(SnakeModesError):
    """Sampled shape path has too few points for the requested quadrature."""


class ConfigError(SnakeModesError):
    """Invalid or missing entry in a key-value configuration file."""
